#include "commute/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include "commute/csv.hpp"
#include "commute/error.hpp"
#include "commute/parallel.hpp"

namespace commute {

std::int64_t IngestReport::rejected_total() const {
  std::int64_t total = 0;
  for (const auto& [reason, count] : rejected) total += count;
  return total;
}

namespace {

struct ColumnMap {
  std::size_t device, lat, lon, time, width;
};

ColumnMap map_columns(std::string_view header, const PingSchema& schema) {
  auto names = csv::split(header, schema.delimiter);
  auto find = [&](const std::string& want) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      std::string_view n = names[i];
      while (!n.empty() && (n.back() == '\r' || n.back() == ' ')) n.remove_suffix(1);
      while (!n.empty() && n.front() == ' ') n.remove_prefix(1);
      if (n == want) return i;
    }
    throw ConfigError("ping input is missing required column '" + want + "'");
  };
  return {find(schema.device_column), find(schema.lat_column), find(schema.lon_column),
          find(schema.time_column), names.size()};
}

// Orders trajectories by device id and each one by (time, lat, lon), dropping
// exact duplicates. Returns the number dropped.
std::int64_t sort_and_dedupe(std::vector<Trajectory>& trajectories, int workers) {
  std::sort(trajectories.begin(), trajectories.end(),
            [](const Trajectory& a, const Trajectory& b) { return a.device_id < b.device_id; });
  std::vector<std::int64_t> dups(trajectories.size(), 0);
  parallel_for(trajectories.size(), workers, [&](std::size_t i) {
    auto& fixes = trajectories[i].fixes;
    std::sort(fixes.begin(), fixes.end(), [](const Fix& a, const Fix& b) {
      return std::tie(a.t, a.location.lat, a.location.lon) <
             std::tie(b.t, b.location.lat, b.location.lon);
    });
    const auto before = fixes.size();
    fixes.erase(std::unique(fixes.begin(), fixes.end()), fixes.end());
    dups[i] = static_cast<std::int64_t>(before - fixes.size());
  });
  return std::accumulate(dups.begin(), dups.end(), std::int64_t{0});
}

using NextLine = std::function<bool(std::string&)>;

IngestResult parse_lines(const NextLine& next_line, const PingSchema& schema, int workers) {
  IngestResult result;
  IngestReport& report = result.report;
  std::string line;
  if (!next_line(line)) return result;
  const ColumnMap cols = map_columns(line, schema);

  std::unordered_map<std::string, std::size_t> index;
  std::vector<Trajectory> trajectories;
  auto reject = [&](const char* reason) { ++report.rejected[reason]; };

  while (next_line(line)) {
    if (line.empty()) continue;
    ++report.rows;
    const auto fields = csv::split(line, schema.delimiter);
    if (fields.size() != cols.width) {
      reject(reject_reason::kMalformedRow);
      continue;
    }
    const auto lat = csv::parse_double(fields[cols.lat]);
    const auto lon = csv::parse_double(fields[cols.lon]);
    const auto ts = csv::parse_double(fields[cols.time]);
    if (!lat || !lon || !ts || !std::isfinite(*ts)) {
      reject(reject_reason::kBadNumber);
      continue;
    }
    const GeoPoint p{*lat, *lon};
    if (!is_valid(p)) {
      reject(reject_reason::kOutOfRange);
      continue;
    }
    const std::string_view device = fields[cols.device];
    if (device.empty()) {
      reject(reject_reason::kEmptyDevice);
      continue;
    }
    const auto t = static_cast<EpochSeconds>(std::floor(*ts));
    if (schema.window && !schema.window->contains(t)) {
      reject(reject_reason::kOutsideWindow);
      continue;
    }
    auto [it, inserted] = index.try_emplace(std::string(device), trajectories.size());
    if (inserted) trajectories.push_back(Trajectory{it->first, {}});
    trajectories[it->second].fixes.push_back(Fix{p, t});
  }

  const std::int64_t dup_total = sort_and_dedupe(trajectories, workers);
  if (dup_total > 0) report.rejected[reject_reason::kDuplicate] += dup_total;
  for (const auto& tr : trajectories) report.accepted += static_cast<std::int64_t>(tr.fixes.size());
  result.trajectories = std::move(trajectories);
  return result;
}

}  // namespace

IngestResult parse_pings(std::istream& in, const PingSchema& schema, int workers) {
  return parse_lines(
      [&](std::string& line) {
        if (!std::getline(in, line)) return false;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      },
      schema, workers);
}

IngestResult parse_pings_file(const std::filesystem::path& path, const PingSchema& schema,
                              int workers) {
  csv::LineReader reader(path);
  return parse_lines([&](std::string& line) { return reader.next(line); }, schema, workers);
}

std::vector<Trajectory> build_trajectories(std::vector<Ping> pings, int workers,
                                           std::int64_t* duplicates) {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Trajectory> trajectories;
  for (auto& p : pings) {
    auto [it, inserted] = index.try_emplace(p.device_id, trajectories.size());
    if (inserted) trajectories.push_back(Trajectory{p.device_id, {}});
    trajectories[it->second].fixes.push_back(Fix{p.location, p.timestamp_utc});
  }
  const std::int64_t dup_total = sort_and_dedupe(trajectories, workers);
  if (duplicates != nullptr) *duplicates = dup_total;
  return trajectories;
}

}  // namespace commute
