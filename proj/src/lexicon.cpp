#include "circamood/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "circamood/csv.hpp"
#include "circamood/error.hpp"
#include "circamood/stats.hpp"
#include "circamood/textproc.hpp"

namespace circamood {

namespace {

bool valid_mood_name(std::string_view name) {
    if (name.empty() || name.front() < 'a' || name.front() > 'z') {
        return false;
    }
    return std::all_of(name.begin(), name.end(),
                       [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; });
}

}  // namespace

RawLexicon parse_raw_lexicon(std::istream& in) {
    RawLexicon raw;
    std::string line;
    std::string current;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        std::string_view t = line;
        if (const auto hash = t.find('#'); hash != std::string_view::npos) {
            t = t.substr(0, hash);
        }
        t = csv::trim(t);
        if (t.empty()) {
            continue;
        }
        if (t.front() == '[') {
            if (t.back() != ']' || !valid_mood_name(csv::trim(t.substr(1, t.size() - 2)))) {
                throw DataError("unknown section header '" + std::string(t) + "' on lexicon line " +
                                std::to_string(line_number));
            }
            current = std::string(csv::trim(t.substr(1, t.size() - 2)));
            raw.moods[current];
            continue;
        }
        if (current.empty()) {
            throw DataError("word outside any [mood] section on lexicon line " + std::to_string(line_number));
        }
        raw.moods[current].emplace_back(t);
    }
    for (const auto& [mood, words] : raw.moods) {
        if (words.empty()) {
            raw.warnings.push_back("mood '" + mood + "' has no words");
        }
    }
    return raw;
}

RawLexicon load_raw_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open lexicon file " + path.string());
    }
    return parse_raw_lexicon(in);
}

std::vector<std::string> MoodLexicon::moods() const {
    std::vector<std::string> out;
    out.reserve(active_.size());
    for (const auto& [mood, stems] : active_) {
        out.push_back(mood);
    }
    return out;
}

const std::set<std::string>& MoodLexicon::active(const std::string& mood) const {
    const auto it = active_.find(mood);
    if (it == active_.end()) {
        throw UsageError("unknown mood '" + mood + "'");
    }
    return it->second;
}

const std::vector<Exclusion>& MoodLexicon::exclusions(const std::string& mood) const {
    static const std::vector<Exclusion> kNone;
    const auto it = exclusions_.find(mood);
    return it == exclusions_.end() ? kNone : it->second;
}

std::vector<std::string> MoodLexicon::all_stems() const {
    std::set<std::string> all;
    for (const auto& [mood, stems] : active_) {
        all.insert(stems.begin(), stems.end());
    }
    for (const auto& [mood, list] : exclusions_) {
        for (const auto& e : list) {
            all.insert(e.stem);
        }
    }
    return {all.begin(), all.end()};
}

std::size_t MoodLexicon::raw_count(const std::string& mood) const {
    const auto it = raw_counts_.find(mood);
    return it == raw_counts_.end() ? 0 : it->second;
}

void MoodLexicon::add_mood(const std::string& mood) {
    active_[mood];
}

void MoodLexicon::add_stem(const std::string& mood, std::string stem) {
    const auto& ex = exclusions(mood);
    if (std::any_of(ex.begin(), ex.end(), [&](const Exclusion& e) { return e.stem == stem; })) {
        return;
    }
    active_[mood].insert(std::move(stem));
}

void MoodLexicon::exclude(const std::string& mood, Exclusion exclusion) {
    auto& set = active_[mood];
    set.erase(exclusion.stem);
    auto& list = exclusions_[mood];
    if (std::none_of(list.begin(), list.end(), [&](const Exclusion& e) { return e.stem == exclusion.stem; })) {
        list.push_back(std::move(exclusion));
    }
}

MoodLexicon build_stemmed_lexicon(const RawLexicon& raw) {
    MoodLexicon lex;
    lex.warnings_ = raw.warnings;
    for (const auto& [mood, words] : raw.moods) {
        lex.add_mood(mood);
        lex.raw_counts_[mood] = words.size();
        for (const auto& word : words) {
            const auto tokens = tokenize(word);
            if (tokens.empty()) {
                lex.warnings_.push_back("skipping '" + word + "' in mood '" + mood + "': no letters");
                continue;
            }
            lex.add_stem(mood, porter_stem(tokens.front()));
        }
    }
    return lex;
}

ScreenResult screen_confound(std::span<const double> term_series, std::span<const double> confound_series,
                             double threshold) {
    if (term_series.size() != confound_series.size()) {
        throw UsageError("screened series must have equal length");
    }
    if (term_series.size() < 3) {
        throw UsageError("screened series need at least three values");
    }
    if (threshold < 0.0 || threshold > 1.0) {
        throw UsageError("confound threshold must lie in [0, 1]");
    }
    const auto r = try_pearson(term_series, confound_series);
    if (!r) {
        return {ScreenDecision::Keep, std::nullopt, "undetermined (constant series)"};
    }
    if (std::abs(*r) >= threshold) {
        return {ScreenDecision::Remove, r, "|r| >= " + csv::format_double(threshold)};
    }
    return {ScreenDecision::Keep, r, "|r| < " + csv::format_double(threshold)};
}

void write_exclusion_report(std::ostream& out, std::span<const ExclusionRow> rows, std::uint64_t seed) {
    out << csv::provenance_line(seed) << '\n';
    out << "mood,stem,correlation,confound_stem,decision,season\n";
    for (const auto& row : rows) {
        out << csv::escape(row.mood) << ',' << csv::escape(row.stem) << ','
            << (row.correlation ? csv::format_double(*row.correlation) : std::string("NA")) << ','
            << csv::escape(row.confound_stem) << ',' << (row.decision == ScreenDecision::Remove ? "remove" : "keep")
            << ',' << csv::escape(row.season) << '\n';
    }
}

}  // namespace circamood
