#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace circamood {

/// Word lists as read from a lexicon file: order kept, duplicates kept.
struct RawLexicon {
    std::map<std::string, std::vector<std::string>> moods;
    std::vector<std::string> warnings;
};

/// Lexicon file format: `[mood]` section headers (lowercase letters, digits
/// and underscores), one word per line, `#` starts a comment, blank lines
/// ignored. Any other bracketed line is an error.
[[nodiscard]] RawLexicon parse_raw_lexicon(std::istream& in);
[[nodiscard]] RawLexicon load_raw_lexicon(const std::filesystem::path& path);

struct Exclusion {
    std::string stem;
    std::string reason;
    std::optional<double> correlation;
    std::string confound_stem;
};

/// Per-mood stem sets plus the stems screened out of each mood.
class MoodLexicon {
public:
    [[nodiscard]] std::vector<std::string> moods() const;
    [[nodiscard]] bool has_mood(const std::string& mood) const { return active_.contains(mood); }

    /// Stems currently scored for mood. Throws UsageError for an unknown mood.
    [[nodiscard]] const std::set<std::string>& active(const std::string& mood) const;
    [[nodiscard]] const std::vector<Exclusion>& exclusions(const std::string& mood) const;

    /// Union of active and excluded stems over every mood.
    [[nodiscard]] std::vector<std::string> all_stems() const;

    /// Raw words read for the mood, before stemming and deduplication.
    [[nodiscard]] std::size_t raw_count(const std::string& mood) const;

    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    void add_stem(const std::string& mood, std::string stem);
    void add_mood(const std::string& mood);
    /// Moves stem from the active set to the exclusion list.
    void exclude(const std::string& mood, Exclusion exclusion);

private:
    friend MoodLexicon build_stemmed_lexicon(const RawLexicon& raw);

    std::map<std::string, std::set<std::string>> active_;
    std::map<std::string, std::vector<Exclusion>> exclusions_;
    std::map<std::string, std::size_t> raw_counts_;
    std::vector<std::string> warnings_;
};

/// Stems every word (first token of tokenize(word)) and deduplicates per mood.
/// Words that tokenize to nothing are skipped with a warning.
[[nodiscard]] MoodLexicon build_stemmed_lexicon(const RawLexicon& raw);

enum class ScreenDecision { Keep, Remove };

struct ScreenResult {
    ScreenDecision decision = ScreenDecision::Keep;
    std::optional<double> correlation;  ///< empty when undetermined
    std::string note;
};

inline constexpr double kDefaultConfoundThreshold = 0.85;

/// Decides whether a term tracks a confound closely enough to be removed:
/// remove iff |pearson r| >= threshold. A constant series leaves the
/// decision undetermined and the term is kept. Missing values (NaN) are
/// deleted pairwise.
[[nodiscard]] ScreenResult screen_confound(std::span<const double> term_series,
                                           std::span<const double> confound_series,
                                           double threshold = kDefaultConfoundThreshold);

struct ExclusionRow {
    std::string mood;
    std::string stem;
    std::optional<double> correlation;
    std::string confound_stem;
    ScreenDecision decision = ScreenDecision::Keep;
    std::string season;
};

/// `mood,stem,correlation,confound_stem,decision,season`
void write_exclusion_report(std::ostream& out, std::span<const ExclusionRow> rows, std::uint64_t seed);

}  // namespace circamood
