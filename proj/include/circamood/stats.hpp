#pragma once

#include <array>
#include <bitset>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "circamood/error.hpp"
#include "circamood/matrix.hpp"

namespace circamood {

/// Missing values are quiet NaNs throughout the signal and stats layers.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
[[nodiscard]] inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// True when every non-missing value is identical (vacuously for none).
/// Exact comparison: a floating-point mean of equal values need not equal
/// them, so variance-based tests can miss constancy.
[[nodiscard]] bool is_constant(std::span<const double> values) noexcept;

/// Thrown when a correlation is undefined (fewer than three complete pairs
/// or a constant side).
class UndefinedCorrelation : public DataError {
public:
    using DataError::DataError;
};

/// Product-moment correlation over the indices where neither value is NaN.
/// Two-pass (means first), summed in index order.
[[nodiscard]] std::optional<double> try_pearson(std::span<const double> x, std::span<const double> y);
[[nodiscard]] double pearson(std::span<const double> x, std::span<const double> y);

using DayVector = std::array<double, kHoursPerDay>;

struct DayLabel {
    std::string season;
    std::size_t day_index = 0;
};

/// Day-by-day 24-hour mood scores (NaN = missing).
struct DaySeriesSet {
    std::string mood;
    std::vector<DayVector> days;
    std::vector<DayLabel> labels;
};

/// Concatenates the days in order into one hourly series.
[[nodiscard]] std::vector<double> hourly_values(const DaySeriesSet& d);

/// Non-empty subset of hours 0..23.
class HourSet {
public:
    HourSet() = default;
    explicit HourSet(std::initializer_list<int> hours);

    /// Comma-separated items, each either a single hour `H` or a range
    /// `A-B` covering the clock span A:00 to B:00, i.e. hours A..B-1. B may
    /// be 24, and B < A wraps past midnight (`22-2` is 22, 23, 0, 1).
    /// Throws UsageError on malformed input or an empty result.
    [[nodiscard]] static HourSet parse(std::string_view text);

    [[nodiscard]] bool contains(int hour) const { return hour >= 0 && hour < 24 && bits_.test(static_cast<std::size_t>(hour)); }
    [[nodiscard]] bool empty() const { return bits_.none(); }
    [[nodiscard]] std::vector<int> hours() const;
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const HourSet&, const HourSet&) = default;

private:
    std::bitset<kHoursPerDay> bits_;
};

enum class TestKind { Tcp, Tmd, Tpt, Acf };

[[nodiscard]] std::string_view test_name(TestKind kind);

struct TestReport {
    TestKind test = TestKind::Tcp;
    std::string mood;
    std::string scope;
    std::optional<double> statistic;  ///< c for TCP, mean difference for TMD, none for TPT
    std::uint64_t exceedances = 0;    ///< k in p = k / iterations
    std::uint64_t iterations = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<double> trace;  ///< per-iteration statistic, filled on request

    [[nodiscard]] double p_value() const {
        return iterations == 0 ? 1.0 : static_cast<double>(exceedances) / static_cast<double>(iterations);
    }
};

/// `test,mood,scope,statistic,p_value,iterations,seed,params` with params
/// written as `key=value` pairs joined by ';'.
void write_report(std::ostream& out, const TestReport& r);
void write_trace(std::ostream& out, const TestReport& r);

struct PairwiseCorrelation {
    double mean = 0.0;
    std::size_t pairs_used = 0;
    std::size_t pairs_skipped = 0;
};

/// Mean Pearson correlation over all unordered day pairs; pairs whose
/// correlation is undefined are skipped and counted. Throws DataError when
/// no pair is usable.
[[nodiscard]] PairwiseCorrelation mean_pairwise_day_correlation(const DaySeriesSet& d);

struct TcpOptions {
    std::uint64_t permutations = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool keep_trace = false;
};

/// Circadian permutation test. Each iteration shuffles the 24 values of every
/// day independently (missing entries move with the rest) and recomputes the
/// mean pairwise correlation r_i; p = #{r_i >= c} / permutations.
[[nodiscard]] TestReport tcp_test(const DaySeriesSet& d, const TcpOptions& options);

/// Day indices drawn uniformly with replacement from substream
/// (seed, bootstrap, iteration).
[[nodiscard]] std::vector<std::size_t> bootstrap_indices(std::size_t n_days, std::uint64_t seed,
                                                         std::uint64_t iteration);

/// Per-hour mean over the chosen days, ignoring missing values; NaN where
/// every chosen day is missing.
[[nodiscard]] DayVector average_days(const DaySeriesSet& d, std::span<const std::size_t> indices);

[[nodiscard]] DayVector bootstrap_mean_series(const DaySeriesSet& d, std::uint64_t seed, std::uint64_t iteration);

struct BootstrapOptions {
    std::uint64_t bootstraps = 10000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool keep_trace = false;
};

/// Mood-score difference test: p = #{score(hb) >= score(ha)} / B over
/// bootstrap average days. A bootstrap where either score is undefined is
/// redrawn from the same substream; more than 10% redraws is a DataError.
[[nodiscard]] TestReport tmd_test(const DaySeriesSet& d, const HourSet& ha, const HourSet& hb,
                                  const BootstrapOptions& options);

enum class ExtremumMode { Max, Min };

/// Peak/trough timing test: p = #{extremum hour not in hc} / B. Tied
/// extrema count as reached if any of them is in hc.
[[nodiscard]] TestReport tpt_test(const DaySeriesSet& d, const HourSet& hc, ExtremumMode mode,
                                  const BootstrapOptions& options);

struct AcfPoint {
    std::size_t lag = 0;
    double r = 0.0;  ///< NaN when undefined at this lag
    std::size_t n_effective = 0;
    double bound = 0.0;  ///< NaN when n_effective < 2
};

/// Lagged self-correlation for lags 1..max_lag with pairwise deletion of
/// missing values. Requires series.size() >= max_lag + 3.
[[nodiscard]] std::vector<AcfPoint> autocorrelation(std::span<const double> series, std::size_t max_lag = 168);

/// Two-sided 95% white-noise bound, 1.96 / sqrt(n).
[[nodiscard]] double acf_confidence_bound(std::size_t n_effective);

/// `mood,scope,lag,r,bound,n_effective`
void write_acf(std::ostream& out, std::string_view mood, std::string_view scope, std::span<const AcfPoint> acf,
               std::uint64_t seed);

}  // namespace circamood
