#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace commute::csv {

/// Splits on `delim`, stripping one pair of surrounding double quotes per field.
/// No embedded-delimiter quoting.
std::vector<std::string_view> split(std::string_view line, char delim = ',');

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

/// Line-by-line reader over a plain or gzip-compressed file (chosen by ".gz").
class LineReader {
 public:
  /// Throws ConfigError when the file cannot be opened.
  explicit LineReader(const std::filesystem::path& path);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  /// Next line without its terminator; false at end of input.
  bool next(std::string& line);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// A small, fully loaded CSV table with named columns.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index; throws ConfigError naming the file when absent.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;

  std::string source;
};

/// Loads a headered CSV. Throws ConfigError if unreadable and DataError on a
/// row with the wrong field count.
Table read_table(const std::filesystem::path& path, char delim = ',');

}  // namespace commute::csv
