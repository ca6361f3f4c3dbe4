#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "circamood/lexicon.hpp"
#include "circamood/matrix.hpp"
#include "circamood/stats.hpp"

namespace circamood {

/// count / total per bin; missing where the bin holds no tokens. Throws
/// UsageError for a stem that is not a matrix column.
[[nodiscard]] std::vector<double> relative_frequency(const TermFrequencyMatrix& m, const std::string& stem);

struct Standardized {
    std::vector<double> values;
    bool zero_variance = false;
};

/// z-scores over the non-missing entries (sample sd, divisor n - 1), summing
/// left to right. A constant series maps to zeros and is flagged. Throws
/// DataError with fewer than two non-missing values.
[[nodiscard]] Standardized standardize(std::span<const double> series);

struct TermFlag {
    std::string stem;
    bool zero_variance = false;
};

/// Standardized mood score per bin, day-major (index day * 24 + hour).
struct MoodScoreSeries {
    std::string mood;
    std::string season_label;
    std::size_t n_days = 0;
    std::vector<double> values;
    std::size_t n_terms = 0;
    std::vector<TermFlag> term_flags;

    [[nodiscard]] double at(std::size_t day, std::size_t hour) const { return values[day * kHoursPerDay + hour]; }
};

/// Average over the mood's active stems of each stem's standardized relative
/// frequency. Stems are processed in sorted order and averaged in that
/// order; zero-variance stems are left out of the average and of n_terms.
/// Throws DataError when every stem is zero-variance or the matrix has fewer
/// than two non-empty bins.
[[nodiscard]] MoodScoreSeries mood_score(const TermFrequencyMatrix& m, const MoodLexicon& lex,
                                         const std::string& mood, unsigned threads = 1);

struct CircadianProfile {
    std::string mood;
    std::string scope;
    std::array<double, kHoursPerDay> mean{};
    std::array<double, kHoursPerDay> sem{};
    std::array<std::size_t, kHoursPerDay> n_obs{};
};

/// Sample sd / sqrt(n); zero for a single observation.
[[nodiscard]] double hourly_sem(std::span<const double> observations);

/// Hour-of-day means and standard errors over every day of every series
/// given (seasons are concatenated, never re-standardized). Hours with no
/// observation get a NaN mean and sem.
[[nodiscard]] CircadianProfile circadian_profile(std::span<const MoodScoreSeries> series, std::string scope);

/// Day vectors of the given series, concatenated in order.
[[nodiscard]] DaySeriesSet day_series(std::span<const MoodScoreSeries> series);

/// `season,mood,day_index,hour,score` with NA for missing.
void write_series(std::ostream& out, std::span<const MoodScoreSeries> series, std::uint64_t seed);
/// Reads a series file back; one MoodScoreSeries per season in file order.
[[nodiscard]] std::vector<MoodScoreSeries> read_series(std::istream& in);

/// `mood,scope,hour,mean,sem,n_obs`
void write_profiles(std::ostream& out, std::span<const CircadianProfile> profiles, std::uint64_t seed);
[[nodiscard]] std::vector<CircadianProfile> read_profiles(std::istream& in);

}  // namespace circamood
