#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace survfuse::csv {

using Row = std::vector<std::string>;

/// Splits one line on commas. Double-quoted fields may contain commas and
/// escaped quotes (""). Surrounding whitespace is trimmed from unquoted fields.
Row split_line(std::string_view line);

struct Table {
  Row header;
  std::vector<Row> rows;
  /// 1-based line number of each row in the source file.
  std::vector<std::size_t> line_numbers;

  /// Index of `name` in the header, if present.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Reads a header + rows file. Blank lines are skipped; a UTF-8 BOM is dropped.
Table read_file(const std::filesystem::path& path);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape_field(std::string_view field);

std::optional<double> parse_double(std::string_view cell);
/// Accepts 1/0, true/false, yes/no, y/n (case-insensitive).
std::optional<bool> parse_bool(std::string_view cell);

}  // namespace survfuse::csv
