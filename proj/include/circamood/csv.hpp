#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace circamood::csv {

/// Splits one comma-separated line. Fields may be double-quoted, with ""
/// standing for a literal quote inside a quoted field. Throws DataError on
/// an unterminated quote.
[[nodiscard]] std::vector<std::string> split_line(std::string_view line);

/// Quotes a field when it contains a comma, quote or line break.
[[nodiscard]] std::string escape(std::string_view field);

/// Shortest round-trip decimal form; NaN is written as "NA".
[[nodiscard]] std::string format_double(double value);

/// Parses a decimal number; "NA" parses as NaN. Returns nullopt on junk.
[[nodiscard]] std::optional<double> parse_double(std::string_view text);

[[nodiscard]] std::optional<std::uint64_t> parse_uint(std::string_view text);

/// Header comment carried by every file the tools write.
[[nodiscard]] std::string provenance_line(std::uint64_t seed);

/// Reads the next line that is neither blank nor a '#' comment.
bool next_data_line(std::istream& in, std::string& line);

[[nodiscard]] std::string_view trim(std::string_view s);

}  // namespace circamood::csv
