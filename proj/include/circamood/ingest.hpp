#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <absl/time/time.h>

#include "circamood/matrix.hpp"

namespace circamood {

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// One ingested message. Coordinates are either both present or absent.
struct TweetRecord {
    std::string id;
    std::chrono::sys_seconds timestamp{};
    std::optional<GeoPoint> coords;
    std::string text;
};

struct UrbanCentre {
    std::string name;
    GeoPoint location;
};

enum class RecordFormat {
    JsonLines,  ///< {"id":..,"created_at":..,"lat":..,"lon":..,"text":..} per line
    Csv,        ///< header `id,created_at,lat,lon,text`, then one record per line
};

[[nodiscard]] RecordFormat parse_record_format(std::string_view name);

struct RecordError {
    std::size_t line = 0;
    std::string reason;
};

using ParseResult = std::variant<TweetRecord, RecordError>;

/// Parses one record line. Never throws on bad input: malformed lines come
/// back as RecordError so callers can count and skip them.
[[nodiscard]] ParseResult parse_record(std::string_view line, RecordFormat format, std::size_t line_number = 0);

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance on a sphere of radius 6371 km.
[[nodiscard]] double haversine_km(GeoPoint a, GeoPoint b) noexcept;

/// True iff the record has coordinates within radius_km (inclusive) of at
/// least one centre.
[[nodiscard]] bool within_centres(const TweetRecord& r, std::span<const UrbanCentre> centres,
                                  double radius_km = 10.0);

/// Reads `name,lat,lon` lines ('#' comments and blank lines allowed).
[[nodiscard]] std::vector<UrbanCentre> load_centres(const std::filesystem::path& path);
[[nodiscard]] std::vector<UrbanCentre> parse_centres(std::istream& in);

struct BinKey {
    std::string season_label;
    std::size_t day_index = 0;
    int hour = 0;  ///< local hour of day, 0..23

    friend bool operator==(const BinKey&, const BinKey&) = default;
};

/// A labelled run of whole local calendar days, inclusive at both ends, in
/// one IANA time zone.
class SeasonWindow {
public:
    /// Throws UsageError for an unknown zone, reversed dates or a window
    /// shorter than two days.
    SeasonWindow(std::string label, std::chrono::year_month_day start, std::chrono::year_month_day end,
                 std::string timezone = "Europe/London");

    [[nodiscard]] const std::string& label() const noexcept { return label_; }
    [[nodiscard]] std::chrono::year_month_day start() const noexcept { return start_; }
    [[nodiscard]] std::chrono::year_month_day end() const noexcept { return end_; }
    [[nodiscard]] const std::string& timezone() const noexcept { return timezone_name_; }
    [[nodiscard]] std::size_t n_days() const noexcept { return n_days_; }
    [[nodiscard]] const absl::TimeZone& zone() const noexcept { return zone_; }

    [[nodiscard]] bool overlaps(const SeasonWindow& other) const noexcept;

private:
    std::string label_;
    std::chrono::year_month_day start_;
    std::chrono::year_month_day end_;
    std::string timezone_name_;
    absl::TimeZone zone_;
    std::size_t n_days_ = 0;
};

/// Parses `label:YYYY-MM-DD:YYYY-MM-DD[:Zone/Name]`.
[[nodiscard]] SeasonWindow parse_season(std::string_view text, std::string_view default_timezone = "Europe/London");

[[nodiscard]] std::chrono::year_month_day parse_date(std::string_view text);

/// Maps a UTC instant to its local (day, hour) bin in w, converting the
/// instant directly so DST transitions need no special casing. Instants
/// whose local date falls outside the window give nullopt.
[[nodiscard]] std::optional<BinKey> assign_bin(std::chrono::sys_seconds t, const SeasonWindow& w);

struct IngestStats {
    std::uint64_t lines_read = 0;      ///< non-blank record lines (CSV header excluded)
    std::uint64_t parsed = 0;
    std::uint64_t parse_errors = 0;
    std::uint64_t no_coordinates = 0;
    std::uint64_t outside_radius = 0;
    std::uint64_t geo_accepted = 0;
    std::uint64_t outside_window = 0;
    std::uint64_t binned = 0;
    std::uint64_t tokens = 0;
    std::vector<RecordError> error_samples;  ///< first few parse errors by line

    void merge(const IngestStats& other);
};

void write_ingest_stats(std::ostream& out, const IngestStats& s, std::uint64_t seed);

struct IngestOptions {
    RecordFormat format = RecordFormat::JsonLines;
    std::vector<UrbanCentre> centres;
    double radius_km = 10.0;
    std::vector<SeasonWindow> windows;
    std::vector<std::string> stems;  ///< matrix columns
    unsigned threads = 1;
    double max_error_fraction = 0.5;
};

struct IngestResult {
    IngestStats stats;
    std::vector<TermFrequencyMatrix> matrices;  ///< one per window, in window order
};

/// Parses, geo-filters, bins, tokenizes and stems every record, producing a
/// TermFrequencyMatrix per window. Work is split into line shards whose
/// partial counts are summed, so the result is independent of thread count.
/// Throws DataError when more than max_error_fraction of a file's lines fail
/// to parse.
[[nodiscard]] IngestResult ingest_text(std::string_view contents, const IngestOptions& options,
                                       std::string_view source_name = "<input>");
[[nodiscard]] IngestResult ingest_files(std::span<const std::filesystem::path> paths, const IngestOptions& options);

}  // namespace circamood
