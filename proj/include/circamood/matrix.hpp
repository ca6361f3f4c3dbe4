#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace circamood {

inline constexpr std::size_t kHoursPerDay = 24;

/// Per-bin stem counts and per-bin token totals for one season. Bins are
/// numbered day_index * 24 + hour; stems are kept sorted so that column
/// order, and everything derived from it, is canonical.
class TermFrequencyMatrix {
public:
    TermFrequencyMatrix() = default;
    TermFrequencyMatrix(std::string season_label, std::size_t n_days, std::vector<std::string> stems);

    [[nodiscard]] const std::string& season_label() const noexcept { return season_label_; }
    [[nodiscard]] std::size_t n_days() const noexcept { return n_days_; }
    [[nodiscard]] std::size_t n_bins() const noexcept { return n_days_ * kHoursPerDay; }
    [[nodiscard]] const std::vector<std::string>& stems() const noexcept { return stems_; }
    [[nodiscard]] std::optional<std::size_t> stem_column(std::string_view stem) const;

    [[nodiscard]] std::uint64_t count(std::size_t bin, std::size_t column) const {
        return counts_[bin * stems_.size() + column];
    }
    [[nodiscard]] std::uint64_t total(std::size_t bin) const { return totals_[bin]; }

    void add_count(std::size_t bin, std::size_t column, std::uint64_t n) {
        counts_[bin * stems_.size() + column] += n;
    }
    void add_total(std::size_t bin, std::uint64_t n) { totals_[bin] += n; }

    /// Adds another matrix with the same shape bin by bin.
    void merge(const TermFrequencyMatrix& other);

    /// Every count and total multiplied by factor.
    [[nodiscard]] TermFrequencyMatrix scaled(std::uint64_t factor) const;

    /// Throws DataError if some count exceeds its bin total.
    void validate() const;

    friend bool operator==(const TermFrequencyMatrix&, const TermFrequencyMatrix&) = default;

private:
    std::string season_label_;
    std::size_t n_days_ = 0;
    std::vector<std::string> stems_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> totals_;
};

/// Wide CSV: a provenance comment, a "# season=... n_days=..." line, then
/// `day_index,hour,total,<stem>...` with one row per bin.
void write_matrix(std::ostream& out, const TermFrequencyMatrix& m, std::uint64_t seed);
[[nodiscard]] TermFrequencyMatrix read_matrix(std::istream& in);

}  // namespace circamood
