#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "circamood/error.hpp"
#include "circamood/ingest.hpp"
#include "circamood/lexicon.hpp"
#include "circamood/signal.hpp"
#include "circamood/synth.hpp"
#include "circamood/textproc.hpp"

using namespace circamood;

namespace {

/// Upper 1% point of chi-square with 23 degrees of freedom (41.6384).
constexpr double kChi2Df23Alpha01 = 41.638;

MoodLexicon lexicon_for(const SynthConfig& c) {
    MoodLexicon lex;
    for (const auto& [mood, terms] : c.moods) {
        lex.add_mood(mood);
        for (const auto& t : terms) lex.add_stem(mood, porter_stem(t));
    }
    return lex;
}

IngestOptions ingest_options_for(const SynthConfig& c, std::vector<std::string> stems) {
    IngestOptions o;
    o.centres = {{"origin", c.location}};
    const auto end = std::chrono::sys_days{c.start_date} + std::chrono::days{static_cast<long>(c.n_days) - 1};
    o.windows = {SeasonWindow{"synthetic", c.start_date, std::chrono::year_month_day{end}, c.timezone}};
    o.stems = std::move(stems);
    o.threads = 2;
    return o;
}

}  // namespace

TEST(SynthConfig, Validation) {
    auto c = default_synth_config();
    EXPECT_NO_THROW(validate(c));
    c.baseline_rate = 0.2;
    c.amplitude = 0.5;
    EXPECT_THROW(validate(c), UsageError);
    c = default_synth_config();
    c.amplitude = 1.0;
    EXPECT_THROW(validate(c), UsageError);
    c = default_synth_config();
    c.vocabulary.push_back("happiness");
    EXPECT_THROW(validate(c), UsageError);
    c = default_synth_config();
    c.moods[0].second.push_back("two words");
    EXPECT_THROW(validate(c), UsageError);
    c = default_synth_config();
    c.timezone = "Nowhere/Special";
    EXPECT_THROW(validate(c), UsageError);
}

TEST(SynthConfig, RateFormula) {
    auto c = default_synth_config();
    c.amplitude = 0.5;
    c.weekly_amplitude = 0.2;
    c.phase_hour = 9;
    // 2011-06-06 is a Monday, day-of-week 0.
    EXPECT_NEAR(mood_token_rate(c, 0, 9), 0.05 * 1.5 * 1.2, 1e-15);
    EXPECT_NEAR(mood_token_rate(c, 0, 21), 0.05 * 0.5 * 1.2, 1e-15);
    EXPECT_NEAR(mood_token_rate(c, 7, 9), mood_token_rate(c, 0, 9), 1e-15);
    EXPECT_NEAR(mood_token_rate(c, 1, 3), 0.05 * (1 + 0.5 * std::cos(-M_PI / 2)) * (1 + 0.2 * std::cos(2 * M_PI / 7)),
                1e-15);
}

TEST(GenerateCorpus, ByteIdenticalForSameSeed) {
    auto c = default_synth_config();
    c.n_days = 3;
    c.records_per_hour_mean = 20;
    c.seed = 77;
    std::ostringstream a;
    std::ostringstream b;
    (void)generate_corpus(c, a);
    (void)generate_corpus(c, b);
    EXPECT_EQ(a.str(), b.str());
    c.seed = 78;
    std::ostringstream other;
    (void)generate_corpus(c, other);
    EXPECT_NE(a.str(), other.str());
}

TEST(GenerateCorpus, RoundTripBookkeepingAndPeak) {
    auto c = default_synth_config();
    c.amplitude = 0.5;
    c.phase_hour = 9;
    c.seed = 2011;
    std::ostringstream corpus;
    const auto summary = generate_corpus(c, corpus);

    const double expected_per_bin = c.records_per_hour_mean * c.tokens_per_record_mean;
    const double per_bin = static_cast<double>(summary.tokens) / static_cast<double>(c.n_days * 24);
    EXPECT_NEAR(per_bin / expected_per_bin, 1.0, 0.05);

    const auto lex = lexicon_for(c);
    const auto result = ingest_text(corpus.str(), ingest_options_for(c, lex.all_stems()));
    EXPECT_EQ(result.stats.parse_errors, 0U);
    EXPECT_EQ(result.stats.outside_radius, 0U);
    EXPECT_EQ(result.stats.no_coordinates, 0U);
    EXPECT_EQ(result.stats.outside_window, 0U);
    EXPECT_EQ(result.stats.binned, summary.records);
    EXPECT_EQ(result.stats.tokens, summary.tokens);
    const auto& m = result.matrices.at(0);
    std::uint64_t total = 0;
    for (std::size_t b = 0; b < m.n_bins(); ++b) total += m.total(b);
    EXPECT_EQ(total, summary.tokens);
    for (const auto& [mood, terms] : c.moods) {
        std::uint64_t hits = 0;
        for (const auto& stem : lex.active(mood)) {
            const auto col = *m.stem_column(stem);
            for (std::size_t b = 0; b < m.n_bins(); ++b) hits += m.count(b, col);
        }
        EXPECT_EQ(hits, summary.mood_tokens.at(mood)) << mood;

        const auto s = mood_score(m, lex, mood);
        const auto p = circadian_profile(std::span(&s, 1), "synthetic");
        const auto peak = std::max_element(p.mean.begin(), p.mean.end()) - p.mean.begin();
        EXPECT_GE(peak, 8) << mood;
        EXPECT_LE(peak, 10) << mood;
        // Neighbouring hours differ by about one noise sd, so the exact argmax is not
        // stable; the fitted first-harmonic phase is.
        double sc = 0.0;
        double ss = 0.0;
        for (std::size_t h = 0; h < p.mean.size(); ++h) {
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(h) / 24.0;
            sc += p.mean[h] * std::cos(theta);
            ss += p.mean[h] * std::sin(theta);
        }
        double phase = std::atan2(ss, sc) * 24.0 / (2.0 * std::numbers::pi);
        if (phase < 0.0) phase += 24.0;
        EXPECT_NEAR(phase, 9.0, 0.5) << mood;
    }
}

TEST(SimulateMatrix, NullCorpusIsFlatAcrossHours) {
    auto c = default_synth_config();
    c.amplitude = 0.0;
    std::size_t passes = 0;
    std::size_t trials = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        c.seed = seed;
        const auto m = simulate_matrix(c);
        std::array<double, 24> totals{};
        for (std::size_t b = 0; b < m.n_bins(); ++b) totals[b % 24] += static_cast<double>(m.total(b));
        const double grand = std::accumulate(totals.begin(), totals.end(), 0.0);
        for (std::size_t col = 0; col < m.stems().size(); ++col) {
            std::array<double, 24> counts{};
            for (std::size_t b = 0; b < m.n_bins(); ++b) counts[b % 24] += static_cast<double>(m.count(b, col));
            const double all = std::accumulate(counts.begin(), counts.end(), 0.0);
            double chi2 = 0;
            for (std::size_t h = 0; h < 24; ++h) {
                const double e = totals[h] * all / grand;
                chi2 += (counts[h] - e) * (counts[h] - e) / e;
            }
            passes += chi2 < kChi2Df23Alpha01 ? 1 : 0;
            ++trials;
        }
    }
    EXPECT_GE(static_cast<double>(passes), 0.95 * static_cast<double>(trials));
}

TEST(SimulateMatrix, MatchesCorpusVolumeAndIsDeterministic) {
    auto c = default_synth_config();
    c.n_days = 14;
    c.seed = 5;
    const auto a = simulate_matrix(c);
    EXPECT_EQ(a, simulate_matrix(c));
    std::uint64_t total = 0;
    for (std::size_t b = 0; b < a.n_bins(); ++b) total += a.total(b);
    const double per_bin = static_cast<double>(total) / static_cast<double>(a.n_bins());
    EXPECT_NEAR(per_bin / (c.records_per_hour_mean * c.tokens_per_record_mean), 1.0, 0.02);
    EXPECT_NO_THROW(a.validate());
    EXPECT_EQ(a.stems().size(), 16U);
}

TEST(SynthSummary, Rows) {
    auto c = default_synth_config();
    c.n_days = 2;
    c.records_per_hour_mean = 5;
    std::ostringstream corpus;
    const auto s = generate_corpus(c, corpus);
    std::ostringstream out;
    write_synth_summary(out, c, s);
    EXPECT_NE(out.str().find("metric,value\nrecords," + std::to_string(s.records) + "\n"), std::string::npos);
}
