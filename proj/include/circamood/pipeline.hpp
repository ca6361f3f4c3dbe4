#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "circamood/ingest.hpp"
#include "circamood/lexicon.hpp"
#include "circamood/signal.hpp"
#include "circamood/stats.hpp"

namespace circamood {

/// A (mood, term, confound) triple to screen; words are stemmed before use.
struct ConfoundPair {
    std::string mood;
    std::string term;
    std::string confound;
};

/// Parses `mood:term:confound`.
[[nodiscard]] ConfoundPair parse_confound(std::string_view text);

struct RunConfig {
    std::filesystem::path centres;
    std::filesystem::path lexicon;
    std::vector<SeasonWindow> seasons;
    std::string timezone = "Europe/London";
    double radius_km = 10.0;
    std::uint64_t tcp_permutations = 1000;
    std::uint64_t bootstraps = 10000;
    std::uint64_t seed = 1;
    std::filesystem::path out = "out";
    RecordFormat format = RecordFormat::JsonLines;
    std::vector<ConfoundPair> confounds;
    double confound_threshold = kDefaultConfoundThreshold;
    unsigned threads = 1;
};

enum class Stage { Ingest, Score, Analyze };

/// Checks that the files a stage reads exist and numeric settings are in
/// range. Throws UsageError.
void validate(const RunConfig& c, Stage stage);

/// Holds `<dir>/.lock` for its lifetime; a second holder fails with
/// DataError until the first is gone.
class OutputLock {
public:
    explicit OutputLock(const std::filesystem::path& dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    std::filesystem::path path_;
};

/// Stemmed lexicon plus the columns the term matrices must carry.
struct PreparedLexicon {
    MoodLexicon lexicon;
    std::vector<std::string> columns;
};

[[nodiscard]] PreparedLexicon prepare_lexicon(const RunConfig& c);

[[nodiscard]] std::filesystem::path matrix_path(const RunConfig& c, const std::string& season);
[[nodiscard]] std::filesystem::path series_path(const RunConfig& c, const std::string& mood);
[[nodiscard]] std::filesystem::path profile_path(const RunConfig& c, const std::string& mood);

/// Ingests the inputs into out/matrix_<season>.csv and out/ingest_stats.csv.
/// Throws DataError for no records, no records in any window, or too many
/// parse failures.
IngestStats cmd_ingest(const RunConfig& c, std::span<const std::filesystem::path> inputs, std::ostream& log);

struct ScoreSummary {
    std::vector<std::string> scored_moods;
    std::vector<std::string> warnings;
    std::vector<ExclusionRow> exclusions;
};

/// Reads the season matrices and writes out/series_<mood>.csv,
/// out/profile_<mood>.csv (one profile per season, plus "aggregate" when
/// there are several),
/// out/score_summary.csv and, when confounds are configured,
/// out/exclusions.csv. Unmeasurable moods become warnings.
ScoreSummary cmd_score(const RunConfig& c, std::ostream& log);

struct AnalyzeRequest {
    TestKind test = TestKind::Tcp;
    std::vector<std::string> moods;  ///< empty: every mood with a series file
    std::string scope = "aggregate";
    std::optional<HourSet> ha;
    std::optional<HourSet> hb;
    std::optional<HourSet> hc;
    ExtremumMode mode = ExtremumMode::Max;
    std::optional<std::uint64_t> iterations;  ///< overrides the config count
    std::size_t max_lag = 168;
    bool trace = false;
};

struct AcfResult {
    std::string mood;
    std::string scope;
    std::vector<AcfPoint> points;
};

struct AnalyzeOutcome {
    std::vector<TestReport> reports;
    std::vector<AcfResult> acf;
};

/// Runs the requested test per mood on the chosen scope (a season label or
/// "aggregate", which concatenates every season in file order) and writes
/// report_<test>_<mood>_<scope>.csv, trace_... on request, or
/// acf_<mood>_<scope>.csv.
AnalyzeOutcome cmd_analyze(const RunConfig& c, const AnalyzeRequest& request, std::ostream& log);

/// Standalone SVG: one polyline per profile scope over hours 0-23 with a
/// translucent mean +/- sem band, legend and title.
void render_profile_svg(std::span<const CircadianProfile> profiles, std::ostream& out);
void render_profile_svg(const std::filesystem::path& profile_file, const std::filesystem::path& out_path);

}  // namespace circamood
