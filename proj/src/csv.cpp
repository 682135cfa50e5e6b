#include "commute/csv.hpp"

#include <charconv>
#include <fstream>

#include <zlib.h>

#include "commute/error.hpp"

namespace commute::csv {

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    std::string_view field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
      field = field.substr(1, field.size() - 2);
    }
    out.push_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

namespace {
std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}
}  // namespace

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct LineReader::Impl {
  std::ifstream plain;
  gzFile gz = nullptr;
  std::string pending;
  bool gz_eof = false;

  ~Impl() {
    if (gz != nullptr) gzclose(gz);
  }
};

LineReader::LineReader(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  if (path.extension() == ".gz") {
    impl_->gz = gzopen(path.c_str(), "rb");
    if (impl_->gz == nullptr) throw ConfigError("cannot open " + path.string());
    gzbuffer(impl_->gz, 1 << 17);
  } else {
    impl_->plain.open(path, std::ios::binary);
    if (!impl_->plain) throw ConfigError("cannot open " + path.string());
  }
}

LineReader::~LineReader() = default;

bool LineReader::next(std::string& line) {
  if (impl_->gz == nullptr) {
    if (!std::getline(impl_->plain, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  line.clear();
  char buf[4096];
  while (true) {
    if (gzgets(impl_->gz, buf, sizeof buf) == nullptr) {
      int err = 0;
      gzerror(impl_->gz, &err);
      if (err != Z_OK && err != Z_STREAM_END) throw DataError("corrupt gzip stream");
      if (line.empty()) return false;
      break;
    }
    line.append(buf);
    if (!line.empty() && line.back() == '\n') {
      line.pop_back();
      break;
    }
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
  if (auto c = find_column(name)) return *c;
  throw ConfigError(source + ": missing column '" + std::string(name) + "'");
}

Table read_table(const std::filesystem::path& path, char delim) {
  LineReader reader(path);
  Table table;
  table.source = path.string();
  std::string line;
  if (!reader.next(line)) return table;
  for (auto f : split(line, delim)) table.header.emplace_back(trim(f));
  std::size_t line_no = 1;
  while (reader.next(line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line, delim);
    if (fields.size() != table.header.size()) {
      throw DataError(table.source + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    auto& row = table.rows.emplace_back();
    row.reserve(fields.size());
    for (auto f : fields) row.emplace_back(trim(f));
  }
  return table;
}

}  // namespace commute::csv
