#include "circamood/signal.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "circamood/csv.hpp"
#include "circamood/error.hpp"
#include "circamood/parallel.hpp"

namespace circamood {

std::vector<double> relative_frequency(const TermFrequencyMatrix& m, const std::string& stem) {
    const auto col = m.stem_column(stem);
    if (!col) {
        throw UsageError("stem '" + stem + "' is not a matrix column");
    }
    std::vector<double> out(m.n_bins(), kMissing);
    for (std::size_t b = 0; b < m.n_bins(); ++b) {
        const auto total = m.total(b);
        if (total > 0) {
            out[b] = static_cast<double>(m.count(b, *col)) / static_cast<double>(total);
        }
    }
    return out;
}

Standardized standardize(std::span<const double> series) {
    std::size_t n = 0;
    double sum = 0.0;
    for (const double x : series) {
        if (!is_missing(x)) {
            sum += x;
            ++n;
        }
    }
    if (n < 2) {
        throw DataError("standardization needs at least two observed values");
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const double x : series) {
        if (!is_missing(x)) {
            ss += (x - mean) * (x - mean);
        }
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    Standardized out;
    out.values.resize(series.size());
    out.zero_variance = is_constant(series) || !(sd > 0.0);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double x = series[i];
        if (is_missing(x)) {
            out.values[i] = kMissing;
        } else {
            out.values[i] = out.zero_variance ? 0.0 : (x - mean) / sd;
        }
    }
    return out;
}

MoodScoreSeries mood_score(const TermFrequencyMatrix& m, const MoodLexicon& lex, const std::string& mood,
                           unsigned threads) {
    const auto& stems_set = lex.active(mood);
    if (stems_set.empty()) {
        throw DataError("mood '" + mood + "' has no active stems");
    }
    const std::vector<std::string> stems(stems_set.begin(), stems_set.end());
    std::size_t observed = 0;
    for (std::size_t b = 0; b < m.n_bins(); ++b) {
        observed += m.total(b) > 0 ? 1 : 0;
    }
    if (observed < 2) {
        throw DataError("season '" + m.season_label() + "' has fewer than two non-empty hourly bins");
    }

    std::vector<Standardized> z(stems.size());
    parallel_for(stems.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            z[i] = standardize(relative_frequency(m, stems[i]));
        }
    });

    MoodScoreSeries s;
    s.mood = mood;
    s.season_label = m.season_label();
    s.n_days = m.n_days();
    s.values.assign(m.n_bins(), kMissing);
    for (std::size_t i = 0; i < stems.size(); ++i) {
        s.term_flags.push_back({stems[i], z[i].zero_variance});
        s.n_terms += z[i].zero_variance ? 0 : 1;
    }
    if (s.n_terms == 0) {
        throw DataError("mood '" + mood + "' unmeasurable on this corpus (every stem has zero variance in season '" +
                        m.season_label() + "')");
    }
    for (std::size_t b = 0; b < m.n_bins(); ++b) {
        if (m.total(b) == 0) {
            continue;
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < stems.size(); ++i) {
            if (!z[i].zero_variance) {
                sum += z[i].values[b];
            }
        }
        s.values[b] = sum / static_cast<double>(s.n_terms);
    }
    return s;
}

double hourly_sem(std::span<const double> observations) {
    const std::size_t n = observations.size();
    if (n <= 1 || is_constant(observations)) {
        return 0.0;
    }
    double sum = 0.0;
    for (const double x : observations) {
        sum += x;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const double x : observations) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

CircadianProfile circadian_profile(std::span<const MoodScoreSeries> series, std::string scope) {
    if (series.empty()) {
        throw UsageError("circadian profile needs at least one series");
    }
    CircadianProfile p;
    p.mood = series.front().mood;
    p.scope = std::move(scope);
    std::size_t days = 0;
    for (const auto& s : series) {
        days += s.n_days;
    }
    if (days == 0) {
        throw DataError("circadian profile needs at least one day");
    }
    std::vector<double> obs;
    obs.reserve(days);
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        obs.clear();
        for (const auto& s : series) {
            for (std::size_t d = 0; d < s.n_days; ++d) {
                const double v = s.at(d, h);
                if (!is_missing(v)) {
                    obs.push_back(v);
                }
            }
        }
        p.n_obs[h] = obs.size();
        if (obs.empty()) {
            p.mean[h] = kMissing;
            p.sem[h] = kMissing;
            continue;
        }
        double sum = 0.0;
        for (const double v : obs) {
            sum += v;
        }
        p.mean[h] = sum / static_cast<double>(obs.size());
        p.sem[h] = hourly_sem(obs);
    }
    return p;
}

DaySeriesSet day_series(std::span<const MoodScoreSeries> series) {
    DaySeriesSet d;
    if (!series.empty()) {
        d.mood = series.front().mood;
    }
    for (const auto& s : series) {
        for (std::size_t day = 0; day < s.n_days; ++day) {
            DayVector v{};
            for (std::size_t h = 0; h < kHoursPerDay; ++h) {
                v[h] = s.at(day, h);
            }
            d.days.push_back(v);
            d.labels.push_back({s.season_label, day});
        }
    }
    return d;
}

void write_series(std::ostream& out, std::span<const MoodScoreSeries> series, std::uint64_t seed) {
    out << csv::provenance_line(seed) << '\n';
    out << "season,mood,day_index,hour,score\n";
    for (const auto& s : series) {
        for (std::size_t d = 0; d < s.n_days; ++d) {
            for (std::size_t h = 0; h < kHoursPerDay; ++h) {
                out << csv::escape(s.season_label) << ',' << csv::escape(s.mood) << ',' << d << ',' << h << ','
                    << csv::format_double(s.at(d, h)) << '\n';
            }
        }
    }
}

std::vector<MoodScoreSeries> read_series(std::istream& in) {
    std::string line;
    if (!csv::next_data_line(in, line) || csv::split_line(line) != std::vector<std::string>{
                                                                         "season", "mood", "day_index", "hour", "score"}) {
        throw DataError("series file must start with header season,mood,day_index,hour,score");
    }
    std::vector<MoodScoreSeries> out;
    std::map<std::string, std::size_t> index;
    std::vector<std::map<std::size_t, double>> cells;
    while (csv::next_data_line(in, line)) {
        const auto f = csv::split_line(line);
        if (f.size() != 5) {
            throw DataError("bad series row: " + line);
        }
        const auto day = csv::parse_uint(f[2]);
        const auto hour = csv::parse_uint(f[3]);
        const auto score = csv::parse_double(f[4]);
        if (!day || !hour || !score || *hour >= kHoursPerDay) {
            throw DataError("bad series row: " + line);
        }
        auto [it, inserted] = index.try_emplace(f[0], out.size());
        if (inserted) {
            MoodScoreSeries s;
            s.season_label = f[0];
            s.mood = f[1];
            out.push_back(std::move(s));
            cells.emplace_back();
        }
        auto& s = out[it->second];
        if (s.mood != f[1]) {
            throw DataError("series file mixes moods within season '" + f[0] + "'");
        }
        const std::size_t bin = static_cast<std::size_t>(*day) * kHoursPerDay + static_cast<std::size_t>(*hour);
        if (!cells[it->second].emplace(bin, *score).second) {
            throw DataError("duplicate series row: " + line);
        }
        s.n_days = std::max<std::size_t>(s.n_days, static_cast<std::size_t>(*day) + 1);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& s = out[i];
        s.values.assign(s.n_days * kHoursPerDay, kMissing);
        for (const auto& [bin, v] : cells[i]) {
            s.values[bin] = v;
        }
    }
    return out;
}

void write_profiles(std::ostream& out, std::span<const CircadianProfile> profiles, std::uint64_t seed) {
    out << csv::provenance_line(seed) << '\n';
    out << "mood,scope,hour,mean,sem,n_obs\n";
    for (const auto& p : profiles) {
        for (std::size_t h = 0; h < kHoursPerDay; ++h) {
            out << csv::escape(p.mood) << ',' << csv::escape(p.scope) << ',' << h << ','
                << csv::format_double(p.mean[h]) << ',' << csv::format_double(p.sem[h]) << ',' << p.n_obs[h] << '\n';
        }
    }
}

std::vector<CircadianProfile> read_profiles(std::istream& in) {
    std::string line;
    if (!csv::next_data_line(in, line) ||
        csv::split_line(line) != std::vector<std::string>{"mood", "scope", "hour", "mean", "sem", "n_obs"}) {
        throw DataError("profile file must start with header mood,scope,hour,mean,sem,n_obs");
    }
    std::vector<CircadianProfile> out;
    std::vector<std::bitset<kHoursPerDay>> seen;
    while (csv::next_data_line(in, line)) {
        const auto f = csv::split_line(line);
        if (f.size() != 6) {
            throw DataError("bad profile row: " + line);
        }
        const auto hour = csv::parse_uint(f[2]);
        const auto mean = csv::parse_double(f[3]);
        const auto sem = csv::parse_double(f[4]);
        const auto n = csv::parse_uint(f[5]);
        if (!hour || !mean || !sem || !n || *hour >= kHoursPerDay) {
            throw DataError("bad profile row: " + line);
        }
        std::size_t idx = out.size();
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (out[i].mood == f[0] && out[i].scope == f[1]) {
                idx = i;
            }
        }
        if (idx == out.size()) {
            CircadianProfile p;
            p.mood = f[0];
            p.scope = f[1];
            p.mean.fill(kMissing);
            p.sem.fill(kMissing);
            out.push_back(std::move(p));
            seen.emplace_back();
        }
        if (seen[idx].test(*hour)) {
            throw DataError("duplicate profile row: " + line);
        }
        seen[idx].set(*hour);
        out[idx].mean[*hour] = *mean;
        out[idx].sem[*hour] = *sem;
        out[idx].n_obs[*hour] = static_cast<std::size_t>(*n);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!seen[i].all()) {
            throw DataError("profile '" + out[i].mood + "/" + out[i].scope + "' lacks some hours");
        }
    }
    return out;
}

}  // namespace circamood
