#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <sstream>

#include "circamood/error.hpp"
#include "circamood/rng.hpp"
#include "circamood/stats.hpp"
#include "test_support.hpp"

using namespace circamood;
using circamood::testing::noise_days;
using circamood::testing::repeated_days;

namespace {

constexpr double NA = kMissing;

/// Textbook two-pass Pearson with pairwise deletion; nullopt if undefined.
std::optional<double> naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isnan(x[i]) && !std::isnan(y[i])) {
            a.push_back(x[i]);
            b.push_back(y[i]);
        }
    }
    if (a.size() < 3) return std::nullopt;
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
    double sab = 0;
    double saa = 0;
    double sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0 || sbb == 0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> vec(const DayVector& d) { return {d.begin(), d.end()}; }

std::optional<double> naive_mean_pairwise(const std::vector<DayVector>& days) {
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < days.size(); ++i) {
        for (std::size_t j = i + 1; j < days.size(); ++j) {
            if (const auto r = naive_pearson(vec(days[i]), vec(days[j]))) {
                sum += *r;
                ++n;
            }
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

DayVector peaked_at(std::size_t hour) {
    DayVector d;
    for (std::size_t h = 0; h < 24; ++h) {
        d[h] = std::cos(2 * M_PI * (static_cast<double>(h) - static_cast<double>(hour)) / 24.0);
    }
    return d;
}

}  // namespace

TEST(Pearson, Examples) {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{1, 2, 4, 3};
    const std::vector<double> neg{-1, -2, -3, -4};
    EXPECT_NEAR(pearson(x, x), 1.0, 1e-15);
    EXPECT_NEAR(pearson(x, neg), -1.0, 1e-15);
    EXPECT_NEAR(pearson(x, y), 0.8, 1e-9);
}

TEST(Pearson, UndefinedCases) {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> c{2, 2, 2, 2};
    const std::vector<double> sparse{1, NA, NA, 4};
    EXPECT_THROW((void)pearson(x, c), UndefinedCorrelation);
    EXPECT_THROW((void)pearson(x, sparse), UndefinedCorrelation);
    EXPECT_FALSE(try_pearson(x, c));
    const std::vector<double> three{1, 2, 3};
    EXPECT_THROW((void)pearson(x, three), UsageError);
}

TEST(Pearson, PairwiseDeletionMatchesNaive) {
    std::mt19937_64 gen(31);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> x(40);
        std::vector<double> y(40);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = u(gen) < 0.1 ? NA : z(gen);
            y[i] = u(gen) < 0.1 ? NA : 0.5 * x[i] + z(gen);
        }
        const auto want = naive_pearson(x, y);
        const auto got = try_pearson(x, y);
        ASSERT_EQ(want.has_value(), got.has_value());
        if (want) {
            ASSERT_NEAR(*got, *want, 1e-12);
        }
    }
}

TEST(HourSet, ParseHalfOpenRanges) {
    EXPECT_EQ(HourSet::parse("8-12").hours(), (std::vector<int>{8, 9, 10, 11}));
    EXPECT_EQ(HourSet::parse("20-24").hours(), (std::vector<int>{20, 21, 22, 23}));
    EXPECT_EQ(HourSet::parse("20-24,2-5").hours(), (std::vector<int>{2, 3, 4, 20, 21, 22, 23}));
    EXPECT_EQ(HourSet::parse("22-2").hours(), (std::vector<int>{0, 1, 22, 23}));
    EXPECT_EQ(HourSet::parse("9").hours(), (std::vector<int>{9}));
    EXPECT_EQ(HourSet::parse(" 9 , 15 ").hours(), (std::vector<int>{9, 15}));
    EXPECT_EQ(HourSet::parse("0-24").hours().size(), 24U);
}

TEST(HourSet, RejectsMalformed) {
    for (const char* bad : {"", "8-8", "25", "-3", "8-", "a-b", "3-25", "24", "1,,2"}) {
        EXPECT_THROW((void)HourSet::parse(bad), UsageError) << bad;
    }
}

TEST(HourSet, ToStringRoundTrips) {
    for (const char* text : {"8-12", "20-24,2-5", "22-2", "9", "0-24", "1,3,5"}) {
        const auto s = HourSet::parse(text);
        EXPECT_EQ(HourSet::parse(s.to_string()), s) << text;
    }
    EXPECT_EQ(HourSet::parse("22-2").to_string(), "0-2,22-24");
}

TEST(MeanPairwise, IdenticalAndNegatedDays) {
    EXPECT_NEAR(mean_pairwise_day_correlation(repeated_days(peaked_at(9), 5)).mean, 1.0, 1e-12);
    auto d = repeated_days(peaked_at(9), 2);
    for (auto& v : d.days[1]) v = -v;
    EXPECT_NEAR(mean_pairwise_day_correlation(d).mean, -1.0, 1e-12);
}

TEST(MeanPairwise, FourDaysMatchBruteForce) {
    const auto d = noise_days(4, 77);
    const auto got = mean_pairwise_day_correlation(d);
    EXPECT_EQ(got.pairs_used, 6U);
    EXPECT_NEAR(got.mean, *naive_mean_pairwise(d.days), 1e-12);
}

TEST(MeanPairwise, SkipsUndefinedPairs) {
    auto d = noise_days(4, 5);
    d.days[2].fill(1.0);
    const auto got = mean_pairwise_day_correlation(d);
    EXPECT_EQ(got.pairs_used, 3U);
    EXPECT_EQ(got.pairs_skipped, 3U);
    EXPECT_NEAR(got.mean, *naive_mean_pairwise(d.days), 1e-12);
    DaySeriesSet flat = repeated_days(DayVector{}, 3);
    EXPECT_THROW((void)mean_pairwise_day_correlation(flat), DataError);
}

TEST(Tcp, IdenticalDaysAreSignificant) {
    const auto r = tcp_test(repeated_days(peaked_at(9), 84), {1000, 1, 1, false});
    ASSERT_TRUE(r.statistic);
    EXPECT_NEAR(*r.statistic, 1.0, 1e-12);
    EXPECT_LE(r.p_value(), 0.005);
    EXPECT_EQ(r.iterations, 1000U);
}

TEST(Tcp, RejectsTooFewPermutations) {
    EXPECT_THROW((void)tcp_test(noise_days(5, 1), {99, 1, 1, false}), UsageError);
}

namespace {

/// Recomputes every permuted statistic from the public RNG contract and a
/// naive pairwise correlation.
void expect_trace_matches_oracle(const DaySeriesSet& d, std::uint64_t seed) {
    const auto report = tcp_test(d, {200, seed, 2, true});
    ASSERT_EQ(report.trace.size(), 200U);
    std::uint64_t k = 0;
    for (std::uint64_t it = 0; it < 200; ++it) {
        CounterRng rng(seed, StreamId::Permutation, it);
        std::vector<DayVector> shuffled(d.days.size());
        for (std::size_t i = 0; i < d.days.size(); ++i) {
            std::array<std::uint8_t, 24> perm{};
            std::iota(perm.begin(), perm.end(), std::uint8_t{0});
            shuffle(perm.begin(), perm.end(), rng);
            for (std::size_t h = 0; h < 24; ++h) shuffled[i][h] = d.days[i][perm[h]];
        }
        const auto want = naive_mean_pairwise(shuffled);
        ASSERT_TRUE(want);
        ASSERT_NEAR(report.trace[it], *want, 1e-12) << "iteration " << it;
        k += report.trace[it] >= *report.statistic ? 1 : 0;
    }
    EXPECT_EQ(report.exceedances, k);
    EXPECT_NEAR(*report.statistic, *naive_mean_pairwise(d.days), 1e-12);
}

}  // namespace

TEST(Tcp, CompleteDataMatchesOracle) { expect_trace_matches_oracle(noise_days(12, 3), 42); }

TEST(Tcp, MissingDataMatchesOracle) {
    auto d = noise_days(12, 4);
    d.days[0][3] = NA;
    d.days[5][17] = NA;
    d.days[5][18] = NA;
    expect_trace_matches_oracle(d, 43);
}

TEST(Tcp, ThreadCountDoesNotChangeReport) {
    auto d = noise_days(30, 9);
    for (std::size_t i = 0; i < d.days.size(); ++i) {
        for (std::size_t h = 0; h < 24; ++h) d.days[i][h] += peaked_at(9)[h] * 0.3;
    }
    const auto one = tcp_test(d, {500, 7, 1, true});
    const auto eight = tcp_test(d, {500, 7, 8, true});
    EXPECT_EQ(one.exceedances, eight.exceedances);
    EXPECT_EQ(std::memcmp(one.trace.data(), eight.trace.data(), one.trace.size() * sizeof(double)), 0);
}

TEST(Tcp, AffineInvariance) {
    const auto d = noise_days(20, 12);
    auto t = d;
    for (auto& day : t.days) {
        for (auto& v : day) v = 3.5 * v - 2.0;
    }
    const auto a = tcp_test(d, {300, 5, 1, true});
    const auto b = tcp_test(t, {300, 5, 1, true});
    EXPECT_NEAR(*a.statistic, *b.statistic, 1e-12);
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        ASSERT_NEAR(a.trace[i], b.trace[i], 1e-12);
    }
}

TEST(Bootstrap, SingleAndIdenticalDays) {
    const auto one = repeated_days(peaked_at(4), 1);
    for (std::uint64_t it = 0; it < 5; ++it) {
        EXPECT_EQ(bootstrap_mean_series(one, 99, it), one.days[0]);
    }
    const auto same = repeated_days(peaked_at(4), 10);
    const auto avg = bootstrap_mean_series(same, 3, 0);
    for (std::size_t h = 0; h < 24; ++h) EXPECT_NEAR(avg[h], same.days[0][h], 1e-15);
}

TEST(Bootstrap, UniqueDayFractionNearAnalyticValue) {
    double sum = 0;
    for (std::uint64_t it = 0; it < 10000; ++it) {
        auto idx = bootstrap_indices(84, 2024, it);
        std::sort(idx.begin(), idx.end());
        sum += static_cast<double>(std::unique(idx.begin(), idx.end()) - idx.begin()) / 84.0;
    }
    EXPECT_NEAR(sum / 10000.0, 1.0 - std::pow(83.0 / 84.0, 84.0), 0.005);
}

TEST(Bootstrap, AverageIgnoresMissing) {
    auto d = noise_days(2, 1);
    d.days[0][0] = NA;
    d.days[1][0] = NA;
    d.days[1][1] = NA;
    const std::vector<std::size_t> idx{0, 1, 1};
    const auto avg = average_days(d, idx);
    EXPECT_TRUE(is_missing(avg[0]));
    EXPECT_EQ(avg[1], d.days[0][1]);
    EXPECT_NEAR(avg[2], (d.days[0][2] + 2 * d.days[1][2]) / 3.0, 1e-15);
}

TEST(Tmd, DeterministicOrdering) {
    DayVector day{};
    for (const int h : {8, 9, 10, 11}) day[static_cast<std::size_t>(h)] = 1.0;
    auto d = repeated_days(day, 10);
    const auto r = tmd_test(d, HourSet::parse("8-12"), HourSet::parse("20-24"), {1000, 1, 1, false});
    EXPECT_EQ(r.p_value(), 0.0);
    EXPECT_EQ(*r.statistic, 1.0);
    const auto rev = tmd_test(d, HourSet::parse("20-24"), HourSet::parse("8-12"), {1000, 1, 1, false});
    EXPECT_EQ(rev.p_value(), 1.0);
}

TEST(Tmd, EqualSetsGivePOne) {
    const auto h = HourSet::parse("8-12");
    const auto r = tmd_test(noise_days(20, 3), h, h, {1000, 5, 2, false});
    EXPECT_EQ(r.p_value(), 1.0);
    EXPECT_EQ(r.exceedances, 1000U);
}

TEST(Tmd, SwappedSetsSumToAtLeastOne) {
    const auto d = noise_days(15, 8);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto a = HourSet::parse("6-10");
        const auto b = HourSet::parse("14-18");
        const auto ab = tmd_test(d, a, b, {1000, seed, 1, false});
        const auto ba = tmd_test(d, b, a, {1000, seed, 1, false});
        EXPECT_GE(ab.p_value() + ba.p_value(), 1.0);
    }
}

TEST(Tmd, RedrawsAndTooManyDiscards) {
    // Hour 3 is observed on a single day out of 20: about 36% of bootstraps
    // miss it entirely, far more than the 10% budget.
    auto d = noise_days(20, 6);
    for (std::size_t i = 1; i < d.days.size(); ++i) d.days[i][3] = NA;
    EXPECT_THROW((void)tmd_test(d, HourSet::parse("3"), HourSet::parse("5"), {1000, 1, 1, false}), DataError);
    // Missing on one day out of 20 only: rare discards are redrawn.
    auto e = noise_days(20, 6);
    e.days[0][3] = NA;
    const auto r = tmd_test(e, HourSet::parse("3"), HourSet::parse("5"), {1000, 1, 1, false});
    EXPECT_EQ(r.iterations, 1000U);
}

TEST(Tmd, RejectsFewBootstrapsAndThreadInvariant) {
    const auto d = noise_days(12, 2);
    EXPECT_THROW((void)tmd_test(d, HourSet::parse("1"), HourSet::parse("2"), {999, 1, 1, false}), UsageError);
    const auto one = tmd_test(d, HourSet::parse("1-5"), HourSet::parse("9-12"), {2000, 4, 1, true});
    const auto many = tmd_test(d, HourSet::parse("1-5"), HourSet::parse("9-12"), {2000, 4, 8, true});
    EXPECT_EQ(one.exceedances, many.exceedances);
    EXPECT_EQ(one.trace, many.trace);
    EXPECT_EQ(*one.statistic, *many.statistic);
}

TEST(Tpt, UniquePeak) {
    const auto d = repeated_days(peaked_at(9), 10);
    EXPECT_EQ(tpt_test(d, HourSet::parse("9"), ExtremumMode::Max, {1000, 1, 1, false}).p_value(), 0.0);
    EXPECT_EQ(tpt_test(d, HourSet::parse("15"), ExtremumMode::Max, {1000, 1, 1, false}).p_value(), 1.0);
    EXPECT_EQ(tpt_test(d, HourSet::parse("21"), ExtremumMode::Min, {1000, 1, 1, false}).p_value(), 0.0);
}

TEST(Tpt, TiedExtremaCountAsReached) {
    DayVector day{};
    day[4] = 1.0;
    day[16] = 1.0;
    const auto d = repeated_days(day, 5);
    EXPECT_EQ(tpt_test(d, HourSet::parse("16"), ExtremumMode::Max, {1000, 1, 1, false}).p_value(), 0.0);
    const auto r = tpt_test(d, HourSet::parse("4"), ExtremumMode::Max, {1000, 1, 1, true});
    EXPECT_EQ(r.p_value(), 0.0);
    EXPECT_EQ(r.trace.front(), 4.0);
}

TEST(Report, CsvLayout) {
    TestReport r;
    r.test = TestKind::Tmd;
    r.mood = "fear";
    r.scope = "aggregate";
    r.statistic = 0.25;
    r.exceedances = 3;
    r.iterations = 1000;
    r.seed = 9;
    r.params = {{"ha", "8-12"}, {"hb", "20-24"}};
    std::ostringstream out;
    write_report(out, r);
    EXPECT_EQ(out.str(),
              "# circamood 0.1.0 seed=9\n"
              "test,mood,scope,statistic,p_value,iterations,seed,params\n"
              "tmd,fear,aggregate,0.25,0.003,1000,9,ha=8-12;hb=20-24\n");
}

TEST(Acf, CosineSeries) {
    std::vector<double> s(2016);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::cos(2 * M_PI * static_cast<double>(i) / 24.0);
    const auto acf = autocorrelation(s, 168);
    ASSERT_EQ(acf.size(), 168U);
    EXPECT_EQ(acf[23].lag, 24U);
    EXPECT_GE(acf[23].r, 0.999);
    EXPECT_LE(acf[11].r, -0.999);
    std::size_t best = 12;
    for (std::size_t lag = 12; lag <= 36; ++lag) {
        if (acf[lag - 1].r > acf[best - 1].r) best = lag;
    }
    EXPECT_EQ(best, 24U);
}

TEST(Acf, WhiteNoiseMostlyInsideBounds) {
    std::mt19937_64 gen(101);
    std::normal_distribution<double> z;
    std::vector<double> s(2016);
    for (auto& v : s) v = z(gen);
    const auto acf = autocorrelation(s, 168);
    std::size_t inside = 0;
    for (const auto& p : acf) inside += std::abs(p.r) < p.bound ? 1 : 0;
    EXPECT_GE(static_cast<double>(inside), 0.9 * 168.0);
}

TEST(Acf, MatchesShiftedCopyOracle) {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u;
    std::vector<double> s(300);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = u(gen) < 0.05 ? NA : std::sin(0.3 * i) + z(gen);
    const auto acf = autocorrelation(s, 50);
    for (const auto& p : acf) {
        const std::vector<double> head(s.begin(), s.end() - static_cast<long>(p.lag));
        const std::vector<double> tail(s.begin() + static_cast<long>(p.lag), s.end());
        const auto want = naive_pearson(head, tail);
        ASSERT_TRUE(want);
        ASSERT_NEAR(p.r, *want, 1e-12);
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < head.size(); ++i) pairs += !std::isnan(head[i]) && !std::isnan(tail[i]);
        ASSERT_EQ(p.n_effective, pairs);
        ASSERT_EQ(p.bound, 1.96 / std::sqrt(static_cast<double>(pairs)));
    }
}

TEST(Acf, LengthAndBounds) {
    const std::vector<double> s(170, 1.0);
    EXPECT_THROW((void)autocorrelation(s, 168), DataError);
    const auto flat = autocorrelation(std::vector<double>(171, 1.0), 168);
    EXPECT_TRUE(is_missing(flat[0].r));
    EXPECT_NEAR(acf_confidence_bound(10000), 0.0196, 1e-15);
    EXPECT_NEAR(acf_confidence_bound(4), 0.98, 1e-15);
    for (std::size_t n = 2; n < 500; ++n) EXPECT_LT(acf_confidence_bound(n + 1), acf_confidence_bound(n));
    EXPECT_THROW((void)acf_confidence_bound(1), UsageError);
}

TEST(CounterRng, SubstreamsAreIndependentOfConsumptionOrder) {
    CounterRng a(5, StreamId::Bootstrap, 17);
    CounterRng b(5, StreamId::Bootstrap, 17);
    std::vector<std::uint64_t> first;
    for (int i = 0; i < 100; ++i) first.push_back(a());
    for (int i = 0; i < 100; ++i) ASSERT_EQ(b(), first[static_cast<std::size_t>(i)]);
    CounterRng c(5, StreamId::Permutation, 17);
    EXPECT_NE(c(), first[0]);
    CounterRng d(5, StreamId::Bootstrap, 18);
    EXPECT_NE(d(), first[0]);
}

TEST(CounterRng, BelowIsRoughlyUniform) {
    CounterRng rng(1, StreamId::Simulation, 0);
    std::array<int, 7> hist{};
    for (int i = 0; i < 70000; ++i) ++hist[rng.below(7)];
    for (const int h : hist) EXPECT_NEAR(h, 10000, 500);
}
