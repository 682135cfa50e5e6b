#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "commute/ingest.hpp"
#include "commute/places.hpp"
#include "commute/routing.hpp"
#include "commute/stays.hpp"
#include "commute/synth.hpp"
#include "commute/validation.hpp"

namespace commute {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
  bool is_path = false;
  bool echoed = true;  // execution-only keys stay out of config.resolved
};

/// Every recognized key with its default.
const std::vector<ConfigKey>& config_keys();

/// Flat key = value settings. Files may group keys under [section] headers,
/// which prefix the keys inside them ("[stay]" + "time_threshold_s" ->
/// "stay.time_threshold_s"). '#' starts a comment; values may be quoted.
class Config {
 public:
  /// All keys at their defaults.
  Config();

  /// Relative path values are resolved against the file's directory.
  /// Throws ConfigError for unknown keys or syntax errors (with line number).
  void load_file(const std::filesystem::path& path);
  /// "key=value". Throws ConfigError for unknown keys.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::optional<std::filesystem::path> get_path(const std::string& key) const;

  /// Sorted "key = value" lines for every echoed key.
  std::string echo() const;

 private:
  std::map<std::string, std::string> values_;
};

struct RoutingSettings {
  std::string backend = "none";  // none | offline | external
  std::vector<TravelMode> modes{TravelMode::car, TravelMode::transit};
  OfflineRouteParams offline;
  HttpRouteConfig http;
  RouteAllOptions batch;
  std::string cache_file = "route_cache.csv";
};

/// Typed, validated view of a Config.
struct PipelineConfig {
  std::optional<std::filesystem::path> pings, tracts, city, reference, truth;
  std::string tract_id_property = "GEOID";
  PingSchema schema;
  absl::CivilDay window_first{2017, 8, 1};
  absl::CivilDay window_last{2017, 8, 15};
  std::string timezone = "America/Chicago";

  StayParams stay;
  HomeRules home;
  WorkRules work;
  std::vector<int> sensitivity_exponents{2, 3};
  double commute_radius_m = 800.0;
  double min_tract_fraction = 0.5;
  int grid_resolution = 200;
  PairSelection pair_selection = PairSelection::union_nonzero;
  RoutingSettings routing;
  double histogram_bin_s = 300.0;
  std::vector<std::int64_t> sweep_time_thresholds{600, 900, 1200, 1800};
  std::vector<int> sweep_exponents{1, 2, 3};
  SynthConfig synth;
  double recovery_tolerance_m = 250.0;
  std::int64_t recovery_min_night_pings = 5;

  int workers = 1;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError for non-positive thresholds and malformed values.
  static PipelineConfig from(const Config& config);
  ObservationWindow window() const;
};

}  // namespace commute
