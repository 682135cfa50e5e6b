#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "commute/geo.hpp"
#include "commute/time.hpp"

namespace commute {

struct Ping {
  std::string device_id;
  GeoPoint location;
  EpochSeconds timestamp_utc = 0;
};

/// A ping without its device id; trajectories own the id once.
struct Fix {
  GeoPoint location;
  EpochSeconds t = 0;

  friend bool operator==(const Fix&, const Fix&) = default;
};

struct Trajectory {
  std::string device_id;
  std::vector<Fix> fixes;  // ascending by time
};

struct PingSchema {
  char delimiter = ',';
  std::string device_column = "device_id";
  std::string lat_column = "latitude";
  std::string lon_column = "longitude";
  std::string time_column = "timestamp";
  /// When set, pings outside the window are rejected.
  std::optional<ObservationWindow> window;
};

namespace reject_reason {
inline constexpr const char* kMalformedRow = "malformed row";
inline constexpr const char* kBadNumber = "unparseable number";
inline constexpr const char* kOutOfRange = "coordinate out of range";
inline constexpr const char* kEmptyDevice = "empty device id";
inline constexpr const char* kOutsideWindow = "outside observation window";
inline constexpr const char* kDuplicate = "duplicate record";
}  // namespace reject_reason

struct IngestReport {
  std::int64_t rows = 0;
  std::int64_t accepted = 0;
  std::map<std::string, std::int64_t> rejected;  // reason -> count

  std::int64_t rejected_total() const;
};

struct IngestResult {
  std::vector<Trajectory> trajectories;  // ascending by device id
  IngestReport report;
};

/// Reads a headered delimited ping stream. Malformed rows are counted, never
/// fatal; a missing required column throws ConfigError. Per-device sorting and
/// deduplication is spread over `workers` threads.
IngestResult parse_pings(std::istream& in, const PingSchema& schema, int workers = 1);

/// Same, from a file; ".gz" files are decompressed transparently.
/// Throws ConfigError when the file cannot be opened.
IngestResult parse_pings_file(const std::filesystem::path& path, const PingSchema& schema,
                              int workers = 1);

/// Groups already-validated pings into sorted, deduplicated trajectories.
/// Returns the number of duplicates dropped through `duplicates` when given.
std::vector<Trajectory> build_trajectories(std::vector<Ping> pings, int workers = 1,
                                           std::int64_t* duplicates = nullptr);

}  // namespace commute
