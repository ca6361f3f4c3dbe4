#include "circamood/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <absl/time/civil_time.h>
#include <nlohmann/json.hpp>

#include "circamood/csv.hpp"
#include "circamood/error.hpp"
#include "circamood/parallel.hpp"
#include "circamood/textproc.hpp"

namespace circamood {

namespace {

constexpr std::size_t kMaxErrorSamples = 20;

bool valid_coords(GeoPoint p) {
    return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

std::optional<std::chrono::sys_seconds> parse_timestamp(std::string_view text) {
    static const char* const kFormats[] = {
        absl::RFC3339_full,               // 2011-06-06T08:30:00Z, 2011-06-06T09:30:00+01:00
        "%Y-%m-%d%ET%H:%M:%E*S%z",        // +0100
        "%Y-%m-%d %H:%M:%E*S%Ez",         // space separator
        "%a %b %d %H:%M:%S %z %Y",        // Mon Jun 06 08:30:00 +0000 2011
    };
    const std::string s(csv::trim(text));
    for (const char* fmt : kFormats) {
        absl::Time t;
        std::string err;
        if (absl::ParseTime(fmt, s, &t, &err)) {
            return std::chrono::sys_seconds{std::chrono::seconds{absl::ToUnixSeconds(t)}};
        }
    }
    return std::nullopt;
}

RecordError error_at(std::size_t line, std::string reason) {
    return RecordError{line, std::move(reason)};
}

ParseResult finish_record(std::size_t line_number, std::string id, std::optional<std::string_view> created_at,
                          std::optional<double> lat, std::optional<double> lon, std::optional<std::string> text) {
    if (!created_at || csv::trim(*created_at).empty()) {
        return error_at(line_number, "missing timestamp");
    }
    if (!text) {
        return error_at(line_number, "missing text");
    }
    if (lat.has_value() != lon.has_value()) {
        return error_at(line_number, "incomplete coordinates");
    }
    const auto ts = parse_timestamp(*created_at);
    if (!ts) {
        return error_at(line_number, "invalid timestamp '" + std::string(*created_at) + "'");
    }
    TweetRecord r;
    r.id = std::move(id);
    r.timestamp = *ts;
    if (lat) {
        const GeoPoint p{*lat, *lon};
        if (!valid_coords(p)) {
            return error_at(line_number, "coordinates out of range");
        }
        r.coords = p;
    }
    r.text = std::move(*text);
    return r;
}

ParseResult parse_json_record(std::string_view line, std::size_t line_number) {
    nlohmann::json j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        return error_at(line_number, "malformed record: not a JSON object");
    }
    std::string id;
    if (auto it = j.find("id"); it != j.end()) {
        if (it->is_string()) {
            id = it->get<std::string>();
        } else if (it->is_number_integer()) {
            id = it->dump();
        } else if (!it->is_null()) {
            return error_at(line_number, "malformed record: id must be a string");
        }
    }
    std::optional<std::string> created_at;
    if (auto it = j.find("created_at"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) {
            return error_at(line_number, "malformed record: created_at must be a string");
        }
        created_at = it->get<std::string>();
    }
    auto coordinate = [&](const char* key, std::optional<double>& out) -> bool {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            return true;
        }
        if (!it->is_number()) {
            return false;
        }
        out = it->get<double>();
        return true;
    };
    std::optional<double> lat;
    std::optional<double> lon;
    if (!coordinate("lat", lat) || !coordinate("lon", lon)) {
        return error_at(line_number, "malformed record: coordinates must be numbers");
    }
    std::optional<std::string> text;
    if (auto it = j.find("text"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) {
            return error_at(line_number, "malformed record: text must be a string");
        }
        text = it->get<std::string>();
    }
    return finish_record(line_number, std::move(id),
                         created_at ? std::optional<std::string_view>(*created_at) : std::nullopt, lat, lon,
                         std::move(text));
}

ParseResult parse_csv_record(std::string_view line, std::size_t line_number) {
    std::vector<std::string> f;
    try {
        f = csv::split_line(line);
    } catch (const DataError& e) {
        return error_at(line_number, std::string("malformed record: ") + e.what());
    }
    if (f.size() != 5) {
        return error_at(line_number, "malformed record: expected 5 fields, got " + std::to_string(f.size()));
    }
    auto coordinate = [](const std::string& s, std::optional<double>& out) -> bool {
        if (csv::trim(s).empty()) {
            return true;
        }
        const auto v = csv::parse_double(s);
        if (!v || std::isnan(*v)) {
            return false;
        }
        out = *v;
        return true;
    };
    std::optional<double> lat;
    std::optional<double> lon;
    if (!coordinate(f[2], lat) || !coordinate(f[3], lon)) {
        return error_at(line_number, "malformed record: coordinates must be numbers");
    }
    std::optional<std::string_view> created_at;
    if (!csv::trim(f[1]).empty()) {
        created_at = f[1];
    }
    // An empty text field is indistinguishable from a missing one in CSV.
    std::optional<std::string> text;
    if (!f[4].empty()) {
        text = f[4];
    }
    return finish_record(line_number, f[0], created_at, lat, lon, std::move(text));
}

absl::CivilDay to_civil(std::chrono::year_month_day d) {
    return absl::CivilDay(static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                          static_cast<unsigned>(d.day()));
}

}  // namespace

RecordFormat parse_record_format(std::string_view name) {
    if (name == "jsonl" || name == "json") {
        return RecordFormat::JsonLines;
    }
    if (name == "csv") {
        return RecordFormat::Csv;
    }
    throw UsageError("unknown record format '" + std::string(name) + "' (expected jsonl or csv)");
}

ParseResult parse_record(std::string_view line, RecordFormat format, std::size_t line_number) {
    if (line.find('\t') != std::string_view::npos && format == RecordFormat::JsonLines) {
        return error_at(line_number, "malformed record: tab character");
    }
    return format == RecordFormat::JsonLines ? parse_json_record(line, line_number)
                                             : parse_csv_record(line, line_number);
}

double haversine_km(GeoPoint a, GeoPoint b) noexcept {
    constexpr double kRad = std::numbers::pi / 180.0;
    const double dlat = (b.lat - a.lat) * kRad;
    const double dlon = (b.lon - a.lon) * kRad;
    const double s = std::sin(dlat / 2);
    const double t = std::sin(dlon / 2);
    const double h = s * s + std::cos(a.lat * kRad) * std::cos(b.lat * kRad) * t * t;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

bool within_centres(const TweetRecord& r, std::span<const UrbanCentre> centres, double radius_km) {
    if (!(radius_km > 0.0)) {
        throw UsageError("radius must be positive");
    }
    if (!r.coords) {
        return false;
    }
    return std::any_of(centres.begin(), centres.end(),
                       [&](const UrbanCentre& c) { return haversine_km(*r.coords, c.location) <= radius_km; });
}

std::vector<UrbanCentre> parse_centres(std::istream& in) {
    std::vector<UrbanCentre> centres;
    std::unordered_set<std::string> names;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto t = csv::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto f = csv::split_line(t);
        const auto where = " on centres line " + std::to_string(line_number);
        if (f.size() != 3) {
            throw DataError("expected name,lat,lon" + where);
        }
        const auto lat = csv::parse_double(f[1]);
        const auto lon = csv::parse_double(f[2]);
        if (!lat || !lon || std::isnan(*lat) || std::isnan(*lon)) {
            throw DataError("bad coordinates" + where);
        }
        UrbanCentre c{std::string(csv::trim(f[0])), {*lat, *lon}};
        if (c.name.empty()) {
            throw DataError("empty centre name" + where);
        }
        if (!valid_coords(c.location)) {
            throw DataError("coordinates out of range" + where);
        }
        if (!names.insert(c.name).second) {
            throw DataError("duplicate centre '" + c.name + "'" + where);
        }
        centres.push_back(std::move(c));
    }
    return centres;
}

std::vector<UrbanCentre> load_centres(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open centres file " + path.string());
    }
    return parse_centres(in);
}

SeasonWindow::SeasonWindow(std::string label, std::chrono::year_month_day start, std::chrono::year_month_day end,
                           std::string timezone)
    : label_(std::move(label)), start_(start), end_(end), timezone_name_(std::move(timezone)) {
    if (label_.empty()) {
        throw UsageError("season label must not be empty");
    }
    if (!start_.ok() || !end_.ok()) {
        throw UsageError("season '" + label_ + "' has an invalid date");
    }
    if (!absl::LoadTimeZone(timezone_name_, &zone_)) {
        throw UsageError("unknown time zone '" + timezone_name_ + "'");
    }
    const auto days = (std::chrono::sys_days{end_} - std::chrono::sys_days{start_}).count() + 1;
    if (days < 2) {
        throw UsageError("season '" + label_ + "' must span at least two days");
    }
    n_days_ = static_cast<std::size_t>(days);
}

bool SeasonWindow::overlaps(const SeasonWindow& other) const noexcept {
    using std::chrono::sys_days;
    return sys_days{start_} <= sys_days{other.end_} && sys_days{other.start_} <= sys_days{end_};
}

std::chrono::year_month_day parse_date(std::string_view text) {
    absl::CivilDay day;
    if (!absl::ParseCivilTime(std::string(csv::trim(text)), &day)) {
        throw UsageError("bad date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    }
    return std::chrono::year_month_day{std::chrono::year{static_cast<int>(day.year())},
                                       std::chrono::month{static_cast<unsigned>(day.month())},
                                       std::chrono::day{static_cast<unsigned>(day.day())}};
}

SeasonWindow parse_season(std::string_view text, std::string_view default_timezone) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    // The zone itself may not contain ':', so split on the first three.
    for (int i = 0; i < 3; ++i) {
        const auto colon = text.find(':', pos);
        if (colon == std::string_view::npos) {
            break;
        }
        parts.emplace_back(text.substr(pos, colon - pos));
        pos = colon + 1;
    }
    parts.emplace_back(text.substr(pos));
    if (parts.size() != 3 && parts.size() != 4) {
        throw UsageError("bad season '" + std::string(text) + "' (expected label:YYYY-MM-DD:YYYY-MM-DD[:Zone])");
    }
    const std::string zone = parts.size() == 4 ? parts[3] : std::string(default_timezone);
    return SeasonWindow(parts[0], parse_date(parts[1]), parse_date(parts[2]), zone);
}

std::optional<BinKey> assign_bin(std::chrono::sys_seconds t, const SeasonWindow& w) {
    const absl::Time instant = absl::FromUnixSeconds(t.time_since_epoch().count());
    const absl::CivilSecond local = absl::ToCivilSecond(instant, w.zone());
    const absl::CivilDay day(local);
    const auto offset = day - to_civil(w.start());
    if (offset < 0 || static_cast<std::size_t>(offset) >= w.n_days()) {
        return std::nullopt;
    }
    return BinKey{w.label(), static_cast<std::size_t>(offset), local.hour()};
}

void IngestStats::merge(const IngestStats& other) {
    lines_read += other.lines_read;
    parsed += other.parsed;
    parse_errors += other.parse_errors;
    no_coordinates += other.no_coordinates;
    outside_radius += other.outside_radius;
    geo_accepted += other.geo_accepted;
    outside_window += other.outside_window;
    binned += other.binned;
    tokens += other.tokens;
    error_samples.insert(error_samples.end(), other.error_samples.begin(), other.error_samples.end());
    std::stable_sort(error_samples.begin(), error_samples.end(),
                     [](const RecordError& a, const RecordError& b) { return a.line < b.line; });
    if (error_samples.size() > kMaxErrorSamples) {
        error_samples.resize(kMaxErrorSamples);
    }
}

void write_ingest_stats(std::ostream& out, const IngestStats& s, std::uint64_t seed) {
    out << csv::provenance_line(seed) << '\n';
    out << "metric,value\n";
    out << "lines_read," << s.lines_read << '\n';
    out << "parsed," << s.parsed << '\n';
    out << "parse_errors," << s.parse_errors << '\n';
    out << "no_coordinates," << s.no_coordinates << '\n';
    out << "outside_radius," << s.outside_radius << '\n';
    out << "geo_accepted," << s.geo_accepted << '\n';
    out << "outside_window," << s.outside_window << '\n';
    out << "binned," << s.binned << '\n';
    out << "tokens," << s.tokens << '\n';
}

namespace {

struct NumberedLine {
    std::size_t number;
    std::string_view text;
};

struct ShardState {
    IngestStats stats;
    std::vector<TermFrequencyMatrix> matrices;
    std::unordered_map<std::string, int> column_cache;  // token -> column, -1 if not a lexicon stem
};

void process_record(const TweetRecord& r, const IngestOptions& opt, const TermFrequencyMatrix& shape,
                    ShardState& state) {
    if (!opt.centres.empty()) {
        if (!r.coords) {
            ++state.stats.no_coordinates;
            return;
        }
        if (!within_centres(r, opt.centres, opt.radius_km)) {
            ++state.stats.outside_radius;
            return;
        }
    }
    ++state.stats.geo_accepted;
    for (std::size_t w = 0; w < opt.windows.size(); ++w) {
        const auto key = assign_bin(r.timestamp, opt.windows[w]);
        if (!key) {
            continue;
        }
        ++state.stats.binned;
        auto& m = state.matrices[w];
        const std::size_t bin = key->day_index * kHoursPerDay + static_cast<std::size_t>(key->hour);
        std::uint64_t n_tokens = 0;
        for_each_token(r.text, [&](std::string_view token) {
            ++n_tokens;
            auto it = state.column_cache.find(std::string(token));
            if (it == state.column_cache.end()) {
                const auto col = shape.stem_column(porter_stem(token));
                it = state.column_cache.emplace(std::string(token), col ? static_cast<int>(*col) : -1).first;
            }
            if (it->second >= 0) {
                m.add_count(bin, static_cast<std::size_t>(it->second), 1);
            }
        });
        m.add_total(bin, n_tokens);
        state.stats.tokens += n_tokens;
        return;
    }
    ++state.stats.outside_window;
}

}  // namespace

IngestResult ingest_text(std::string_view contents, const IngestOptions& options, std::string_view source_name) {
    if (options.windows.empty()) {
        throw UsageError("no season windows configured");
    }
    for (std::size_t a = 0; a < options.windows.size(); ++a) {
        for (std::size_t b = a + 1; b < options.windows.size(); ++b) {
            if (options.windows[a].overlaps(options.windows[b])) {
                throw UsageError("season windows '" + options.windows[a].label() + "' and '" +
                                 options.windows[b].label() + "' overlap");
            }
        }
    }

    std::vector<NumberedLine> lines;
    std::size_t number = 0;
    bool header_pending = options.format == RecordFormat::Csv;
    std::size_t pos = 0;
    while (pos <= contents.size()) {
        auto nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = contents.size();
        }
        std::string_view line = contents.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        ++number;
        pos = nl + 1;
        if (csv::trim(line).empty()) {
            continue;
        }
        if (header_pending) {
            header_pending = false;
            const auto header = csv::split_line(line);
            const std::vector<std::string> expected{"id", "created_at", "lat", "lon", "text"};
            if (header != expected) {
                throw DataError(std::string(source_name) + ": CSV header must be id,created_at,lat,lon,text");
            }
            continue;
        }
        lines.push_back({number, line});
    }

    std::vector<TermFrequencyMatrix> shapes;
    for (const auto& w : options.windows) {
        shapes.emplace_back(w.label(), w.n_days(), options.stems);
    }

    const unsigned threads = std::max(1U, options.threads);
    const std::size_t n_shards = std::min<std::size_t>(threads, std::max<std::size_t>(lines.size(), 1));
    std::vector<ShardState> shards(n_shards);
    for (auto& s : shards) {
        s.matrices = shapes;
    }
    parallel_for(n_shards, threads, [&](std::size_t shard_begin, std::size_t shard_end) {
        for (std::size_t shard = shard_begin; shard < shard_end; ++shard) {
            const std::size_t begin = lines.size() * shard / n_shards;
            const std::size_t end = lines.size() * (shard + 1) / n_shards;
            ShardState& state = shards[shard];
            for (std::size_t i = begin; i < end; ++i) {
                ++state.stats.lines_read;
                auto parsed = parse_record(lines[i].text, options.format, lines[i].number);
                if (auto* err = std::get_if<RecordError>(&parsed)) {
                    ++state.stats.parse_errors;
                    if (state.stats.error_samples.size() < kMaxErrorSamples) {
                        state.stats.error_samples.push_back(std::move(*err));
                    }
                    continue;
                }
                ++state.stats.parsed;
                process_record(std::get<TweetRecord>(parsed), options, shapes.front(), state);
            }
        }
    });

    IngestResult result;
    result.matrices = std::move(shapes);
    for (auto& s : shards) {
        result.stats.merge(s.stats);
        for (std::size_t w = 0; w < result.matrices.size(); ++w) {
            result.matrices[w].merge(s.matrices[w]);
        }
    }
    const auto& st = result.stats;
    if (st.lines_read > 0 &&
        static_cast<double>(st.parse_errors) > options.max_error_fraction * static_cast<double>(st.lines_read)) {
        std::ostringstream msg;
        msg << source_name << ": " << st.parse_errors << " of " << st.lines_read
            << " lines failed to parse (wrong --format?)";
        if (!st.error_samples.empty()) {
            msg << "; first: line " << st.error_samples.front().line << ": " << st.error_samples.front().reason;
        }
        throw DataError(msg.str());
    }
    return result;
}

IngestResult ingest_files(std::span<const std::filesystem::path> paths, const IngestOptions& options) {
    IngestResult total;
    bool first = true;
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw DataError("cannot open input " + path.string());
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        auto part = ingest_text(buf.str(), options, path.string());
        if (first) {
            total = std::move(part);
            first = false;
            continue;
        }
        total.stats.merge(part.stats);
        for (std::size_t w = 0; w < total.matrices.size(); ++w) {
            total.matrices[w].merge(part.matrices[w]);
        }
    }
    return total;
}

}  // namespace circamood
