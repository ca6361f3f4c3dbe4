#include "circamood/synth.hpp"

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "circamood/csv.hpp"
#include "circamood/error.hpp"
#include "circamood/rng.hpp"
#include "circamood/textproc.hpp"

namespace circamood {

const std::vector<std::string>& default_background_vocabulary() {
    static const std::vector<std::string> words = {
        "the",   "and",    "to",    "of",     "a",     "in",    "is",    "it",     "you",   "that",
        "was",   "for",    "on",    "are",    "with",  "as",    "at",    "be",     "this",  "have",
        "from",  "or",     "one",   "had",    "by",    "word",  "but",   "not",    "what",  "all",
        "were",  "we",     "when",  "your",   "can",   "said",  "there", "use",    "an",    "each",
        "which", "she",    "do",    "how",    "their", "if",    "will",  "up",     "other", "about",
        "out",   "many",   "then",  "them",   "these", "so",    "some",  "her",    "would", "make",
        "like",  "him",    "into",  "time",   "has",   "look",  "two",   "more",   "write", "go",
        "see",   "number", "no",    "way",    "could", "people", "my",   "than",   "first", "water",
        "been",  "call",   "who",   "oil",    "its",   "now",   "find",  "long",   "down",  "day",
        "did",   "get",    "come",  "made",   "may",   "part",  "bus",   "train",  "tea",   "coffee",
        "work",  "home",   "road",  "street", "lunch", "dinner", "match", "game",  "news",  "phone",
    };
    return words;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& default_mood_terms() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> moods = {
        {"anger", {"angry", "furious", "rage", "annoyed"}},
        {"fear", {"afraid", "scared", "panic", "terror"}},
        {"joy", {"happy", "glad", "delight", "cheer"}},
        {"sadness", {"sad", "gloomy", "sorrow", "lonely"}},
    };
    return moods;
}

SynthConfig default_synth_config() {
    SynthConfig c;
    c.vocabulary = default_background_vocabulary();
    c.moods = default_mood_terms();
    return c;
}

namespace {

bool is_plain_word(const std::string& w) {
    const auto t = tokenize(w);
    return t.size() == 1 && t.front() == w;
}

}  // namespace

void validate(const SynthConfig& c) {
    if (c.n_days < 1) {
        throw UsageError("synth: n_days must be at least 1");
    }
    if (!(c.records_per_hour_mean >= 0.0) || !(c.tokens_per_record_mean >= 1.0)) {
        throw UsageError("synth: records_per_hour_mean must be >= 0 and tokens_per_record_mean >= 1");
    }
    if (!(c.amplitude >= 0.0 && c.amplitude < 1.0) || !(c.weekly_amplitude >= 0.0 && c.weekly_amplitude < 1.0)) {
        throw UsageError("synth: amplitudes must lie in [0, 1)");
    }
    if (!(c.phase_hour >= 0.0 && c.phase_hour < 24.0)) {
        throw UsageError("synth: phase_hour must lie in [0, 24)");
    }
    if (!(c.baseline_rate >= 0.0)) {
        throw UsageError("synth: baseline_rate must be non-negative");
    }
    if (c.moods.empty()) {
        throw UsageError("synth: at least one mood is required");
    }
    const double peak = static_cast<double>(c.moods.size()) * c.baseline_rate * (1.0 + c.amplitude) *
                        (1.0 + c.weekly_amplitude);
    if (peak > 1.0) {
        throw UsageError("synth: baseline_rate * (1 + amplitude) * (1 + weekly_amplitude) summed over moods exceeds 1");
    }
    if (c.vocabulary.empty() && peak < 1.0) {
        throw UsageError("synth: background vocabulary is empty");
    }
    std::set<std::string> mood_stems;
    std::set<std::string> names;
    for (const auto& [mood, terms] : c.moods) {
        if (!names.insert(mood).second) {
            throw UsageError("synth: duplicate mood '" + mood + "'");
        }
        if (terms.empty()) {
            throw UsageError("synth: mood '" + mood + "' has no terms");
        }
        for (const auto& t : terms) {
            if (!is_plain_word(t)) {
                throw UsageError("synth: mood term '" + t + "' is not a single lowercase word");
            }
            mood_stems.insert(porter_stem(t));
        }
    }
    for (const auto& w : c.vocabulary) {
        if (!is_plain_word(w)) {
            throw UsageError("synth: background word '" + w + "' is not a single lowercase word");
        }
        if (mood_stems.contains(porter_stem(w))) {
            throw UsageError("synth: background word '" + w + "' shares a stem with a mood term");
        }
    }
    absl::TimeZone tz;
    if (!absl::LoadTimeZone(c.timezone, &tz)) {
        throw UsageError("synth: unknown time zone '" + c.timezone + "'");
    }
    if (!c.start_date.ok()) {
        throw UsageError("synth: invalid start date");
    }
}

double mood_token_rate(const SynthConfig& c, std::size_t day, int hour) {
    using std::numbers::pi;
    const std::chrono::sys_days date = std::chrono::sys_days{c.start_date} + std::chrono::days{day};
    const unsigned dow = std::chrono::weekday{date}.iso_encoding() - 1;  // Monday = 0
    const double circadian = 1.0 + c.amplitude * std::cos(2.0 * pi * (hour - c.phase_hour) / 24.0);
    const double weekly = 1.0 + c.weekly_amplitude * std::cos(2.0 * pi * dow / 7.0);
    return c.baseline_rate * circadian * weekly;
}

namespace {

std::uint64_t draw_poisson(double mean, CounterRng& rng) {
    if (mean <= 0.0) {
        return 0;
    }
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(rng);
}

std::uint64_t draw_tokens(double mean, CounterRng& rng) {
    return std::max<std::uint64_t>(1, draw_poisson(mean, rng));
}

absl::Time hour_start(const SynthConfig& c, const absl::TimeZone& tz, std::size_t day, int hour) {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{c.start_date} + std::chrono::days{day}};
    const absl::CivilHour civil(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                                static_cast<unsigned>(ymd.day()), hour);
    return tz.At(civil).pre;
}

}  // namespace

SynthSummary generate_corpus(const SynthConfig& c, std::ostream& out) {
    validate(c);
    absl::TimeZone tz;
    absl::LoadTimeZone(c.timezone, &tz);
    SynthSummary summary;
    for (const auto& [mood, terms] : c.moods) {
        summary.mood_tokens[mood] = 0;
    }
    std::string text;
    for (std::size_t day = 0; day < c.n_days; ++day) {
        for (int hour = 0; hour < 24; ++hour) {
            const std::uint64_t bin = day * kHoursPerDay + static_cast<std::uint64_t>(hour);
            CounterRng rng(c.seed, StreamId::Synth, bin);
            const double rate = mood_token_rate(c, day, hour);
            const absl::Time start = hour_start(c, tz, day, hour);
            const auto n_records = draw_poisson(c.records_per_hour_mean, rng);
            for (std::uint64_t rec = 0; rec < n_records; ++rec) {
                const auto n_tokens = draw_tokens(c.tokens_per_record_mean, rng);
                text.clear();
                for (std::uint64_t t = 0; t < n_tokens; ++t) {
                    double u = rng.uniform();
                    const std::string* word = nullptr;
                    for (const auto& [mood, terms] : c.moods) {
                        if (u < rate) {
                            word = &terms[rng.below(terms.size())];
                            ++summary.mood_tokens[mood];
                            break;
                        }
                        u -= rate;
                    }
                    if (word == nullptr) {
                        word = &c.vocabulary[rng.below(c.vocabulary.size())];
                    }
                    if (!text.empty()) {
                        text.push_back(' ');
                    }
                    text += *word;
                }
                const absl::Time ts = start + absl::Seconds(static_cast<std::int64_t>(rng.below(3600)));
                nlohmann::ordered_json j;
                j["id"] = std::to_string(summary.records);
                j["created_at"] = absl::FormatTime("%Y-%m-%dT%H:%M:%SZ", ts, absl::UTCTimeZone());
                j["lat"] = c.location.lat;
                j["lon"] = c.location.lon;
                j["text"] = text;
                out << j.dump() << '\n';
                ++summary.records;
                summary.tokens += n_tokens;
            }
        }
    }
    return summary;
}

TermFrequencyMatrix simulate_matrix(const SynthConfig& c, std::string season_label) {
    validate(c);
    std::vector<std::string> stems;
    for (const auto& [mood, terms] : c.moods) {
        for (const auto& t : terms) {
            stems.push_back(porter_stem(t));
        }
    }
    TermFrequencyMatrix m(std::move(season_label), c.n_days, stems);
    std::vector<std::vector<std::size_t>> columns;
    for (const auto& [mood, terms] : c.moods) {
        auto& cols = columns.emplace_back();
        for (const auto& t : terms) {
            cols.push_back(*m.stem_column(porter_stem(t)));
        }
    }
    for (std::size_t day = 0; day < c.n_days; ++day) {
        for (int hour = 0; hour < 24; ++hour) {
            const std::size_t bin = day * kHoursPerDay + static_cast<std::size_t>(hour);
            CounterRng rng(c.seed, StreamId::Simulation, bin);
            const double rate = mood_token_rate(c, day, hour);
            const auto n_records = draw_poisson(c.records_per_hour_mean, rng);
            std::uint64_t tokens = 0;
            for (std::uint64_t r = 0; r < n_records; ++r) {
                tokens += draw_tokens(c.tokens_per_record_mean, rng);
            }
            m.add_total(bin, tokens);
            // Multinomial over (mood 1, ..., mood k, background) by
            // sequential conditional binomials, then uniform over terms.
            std::uint64_t remaining = tokens;
            double remaining_p = 1.0;
            for (const auto& cols : columns) {
                if (remaining == 0) {
                    break;
                }
                const double p = std::min(1.0, rate / remaining_p);
                const auto n_mood = std::binomial_distribution<std::uint64_t>(remaining, p)(rng);
                remaining -= n_mood;
                remaining_p -= rate;
                std::uint64_t left = n_mood;
                for (std::size_t t = 0; t < cols.size() && left > 0; ++t) {
                    const double q = 1.0 / static_cast<double>(cols.size() - t);
                    const auto n_term = t + 1 == cols.size() ? left
                                                             : std::binomial_distribution<std::uint64_t>(left, q)(rng);
                    m.add_count(bin, cols[t], n_term);
                    left -= n_term;
                }
            }
        }
    }
    return m;
}

void write_synth_summary(std::ostream& out, const SynthConfig& c, const SynthSummary& s) {
    out << csv::provenance_line(c.seed) << '\n';
    out << "metric,value\n";
    out << "records," << s.records << '\n';
    out << "tokens," << s.tokens << '\n';
    for (const auto& [mood, n] : s.mood_tokens) {
        out << "mood_tokens." << mood << ',' << n << '\n';
    }
    out << "n_days," << c.n_days << '\n';
    out << "amplitude," << csv::format_double(c.amplitude) << '\n';
    out << "phase_hour," << csv::format_double(c.phase_hour) << '\n';
    out << "weekly_amplitude," << csv::format_double(c.weekly_amplitude) << '\n';
}

}  // namespace circamood
