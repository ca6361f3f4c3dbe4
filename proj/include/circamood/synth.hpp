#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "circamood/ingest.hpp"
#include "circamood/matrix.hpp"

namespace circamood {

/// Synthetic corpus with a known circadian (and optionally weekly) mood
/// modulation. For every mood the probability that a token is one of that
/// mood's terms is
///
///   baseline_rate * (1 + amplitude * cos(2 pi (h - phase_hour) / 24))
///                 * (1 + weekly_amplitude * cos(2 pi dow / 7))
///
/// where h is the local hour and dow the day of week (Monday = 0).
struct SynthConfig {
    std::size_t n_days = 84;
    double records_per_hour_mean = 200.0;
    double tokens_per_record_mean = 12.0;  ///< each record gets max(1, Poisson) tokens
    std::vector<std::string> vocabulary;   ///< background words
    std::vector<std::pair<std::string, std::vector<std::string>>> moods;
    double baseline_rate = 0.05;
    double amplitude = 0.0;
    double phase_hour = 9.0;
    double weekly_amplitude = 0.0;
    std::uint64_t seed = 0;
    std::chrono::year_month_day start_date{std::chrono::year{2011}, std::chrono::month{6}, std::chrono::day{6}};
    std::string timezone = "Europe/London";
    GeoPoint location{51.4545, -2.5879};
};

/// Config with the built-in background vocabulary and four moods.
[[nodiscard]] SynthConfig default_synth_config();

[[nodiscard]] const std::vector<std::string>& default_background_vocabulary();
[[nodiscard]] const std::vector<std::pair<std::string, std::vector<std::string>>>& default_mood_terms();

/// Throws UsageError when the config is unusable: rates exceeding 1 across
/// all moods, words that are not single lowercase tokens, background words
/// sharing a stem with a mood term, and so on.
void validate(const SynthConfig& c);

/// Per-mood token probability at (day, hour).
[[nodiscard]] double mood_token_rate(const SynthConfig& c, std::size_t day, int hour);

struct SynthSummary {
    std::uint64_t records = 0;
    std::uint64_t tokens = 0;
    std::map<std::string, std::uint64_t> mood_tokens;
};

/// Writes the corpus as JSON lines in (day, hour, record) order. The output
/// is a pure function of the config.
SynthSummary generate_corpus(const SynthConfig& c, std::ostream& out);

/// Draws the TermFrequencyMatrix the corpus would produce after ingest,
/// without materialising any text: per bin, the record count, token counts
/// and per-term counts are sampled from the same distributions
/// (Poisson records, max(1, Poisson) tokens, multinomial term choice).
/// Columns are the stems of every mood term.
[[nodiscard]] TermFrequencyMatrix simulate_matrix(const SynthConfig& c, std::string season_label = "synthetic");

/// `metric,value` rows: the config and the generated counts.
void write_synth_summary(std::ostream& out, const SynthConfig& c, const SynthSummary& s);

}  // namespace circamood
