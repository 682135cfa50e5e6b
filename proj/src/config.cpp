#include "commute/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "commute/csv.hpp"
#include "commute/error.hpp"

namespace commute {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"input.pings", "", "ping CSV (optionally .gz)", true},
      {"input.tracts", "", "tract GeoJSON FeatureCollection", true},
      {"input.city", "", "city boundary GeoJSON FeatureCollection", true},
      {"input.reference", "", "reference flow CSV origin_tract,dest_tract,trips[,stderr]", true},
      {"input.truth", "", "synthetic truth_agents.csv; enables the recovery report", true},
      {"input.tract_id_property", "GEOID", "feature property holding the tract id"},
      {"ingest.delimiter", ",", "ping file delimiter (single character)"},
      {"ingest.col_device", "device_id", "device id column"},
      {"ingest.col_lat", "latitude", "latitude column"},
      {"ingest.col_lon", "longitude", "longitude column"},
      {"ingest.col_time", "timestamp", "UTC epoch seconds column"},
      {"window.start_date", "2017-08-01", "first local date of the observation window"},
      {"window.end_date", "2017-08-15", "last local date (inclusive)"},
      {"window.timezone", "America/Chicago", "IANA timezone for all wall-clock rules"},
      {"stay.time_threshold_s", "900", "minimum stay duration"},
      {"stay.dist_threshold_m", "250", "stay radius"},
      {"stay.radius_mode", "anchor", "anchor | pairwise"},
      {"region.linkage_m", "250", "complete-linkage cut distance"},
      {"home.night_start", "20:00", "night window start (local)"},
      {"home.night_end", "05:00", "night window end (local)"},
      {"home.min_night_s", "10800", "minimum night overlap of a home stay"},
      {"home.long_stay_s", "86400", "stays strictly longer than this qualify as home stays"},
      {"work.start", "08:00", "earliest work arrival (local)"},
      {"work.end", "18:00", "work arrivals must be before this (local)"},
      {"work.walking_m", "800", "candidates closer to home are dismissed"},
      {"work.min_visits", "2", "candidates with fewer visits are dismissed"},
      {"work.exponent", "1", "score = n^exponent * d"},
      {"work.sensitivity_exponents", "2,3", "exponents compared against 1 in the funnel report"},
      {"trips.radius_m", "800", "stay within this distance of work counts as a commute day"},
      {"tracts.min_fraction", "0.5", "minimum tract area fraction inside the city"},
      {"tracts.grid_resolution", "200", "area-fraction sampling lattice size"},
      {"validate.pair_selection", "union_nonzero", "union_nonzero | intersection_nonzero | ref_support"},
      {"routing.backend", "offline", "none | offline | external"},
      {"routing.modes", "car,transit", "travel modes to route"},
      {"routing.endpoint", "", "external routing endpoint URL"},
      {"routing.api_key_env", "ROUTING_API_KEY", "environment variable holding the API key"},
      {"routing.timeout_s", "10", "per-request timeout"},
      {"routing.max_attempts", "3", "attempts per request before recording a failure"},
      {"routing.rate_limit_per_s", "5", "max external request starts per second (0 = unlimited)"},
      {"routing.concurrency", "4", "max in-flight external requests"},
      {"routing.departure", "08:00", "weekday morning-peak departure time sent to the backend"},
      {"routing.detour_factor", "1.4", "offline: route length / great-circle length"},
      {"routing.car_speed_mps", "12.5", "offline car speed"},
      {"routing.transit_speed_mps", "6.0", "offline transit speed"},
      {"routing.car_overhead_s", "0", "offline fixed car overhead"},
      {"routing.transit_overhead_s", "600", "offline fixed transit overhead"},
      {"routing.cache", "route_cache.csv", "route cache file name inside the output directory"},
      {"summary.bin_width_s", "300", "commute duration histogram bin width"},
      {"sweep.time_thresholds_s", "600,900,1200,1800", "stay time thresholds swept by `sweep`"},
      {"sweep.exponents", "1,2,3", "work exponents swept by `sweep`"},
      {"synth.agents", "100", "synthetic agent count"},
      {"synth.grid_rows", "10", "tract grid rows"},
      {"synth.grid_cols", "10", "tract grid columns"},
      {"synth.tract_size_m", "2000", "tract edge length"},
      {"synth.origin_lat", "29.65", "grid south-west corner latitude"},
      {"synth.origin_lon", "-95.55", "grid south-west corner longitude"},
      {"synth.ping_interval_s", "300", "mean ping interval"},
      {"synth.ping_jitter_s", "120", "uniform +- jitter on the ping interval"},
      {"synth.noise_sigma_m", "30", "GPS noise standard deviation per axis"},
      {"synth.p_commute", "0.8", "probability of commuting on a weekday"},
      {"synth.p_night_dropout", "0.05", "probability an agent emits no night pings"},
      {"synth.p_weekend_errand", "0.5", "probability of a weekend errand per weekend day"},
      {"synth.min_home_work_m", "1500", "minimum planted home-work distance"},
      {"recovery.tolerance_m", "250", "home/work recovery tolerance"},
      {"recovery.min_night_pings", "5", "agents with fewer night pings are unrecoverable"},
      {"run.seed", "42", "random seed"},
      {"run.workers", "1", "worker threads (0 = hardware concurrency)", false, false},
      {"run.output_dir", "out", "artifact directory", true, false},
  };
  return keys;
}

namespace {

const ConfigKey& find_key(const std::string& name) {
  const auto& keys = config_keys();
  const auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == name; });
  if (it == keys.end()) throw ConfigError("unknown config key '" + name + "'");
  return *it;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

}  // namespace

Config::Config() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  const auto base = std::filesystem::absolute(path).parent_path();
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    std::string value = unquote(trim(line.substr(eq + 1)));
    try {
      if (find_key(key).is_path && !value.empty() && std::filesystem::path(value).is_relative()) {
        value = (base / value).lexically_normal().string();
      }
      set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), unquote(trim(assignment.substr(eq + 1))));
}

void Config::set(const std::string& key, const std::string& value) {
  find_key(key);
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  find_key(key);
  return values_.at(key);
}

double Config::get_double(const std::string& key) const {
  const auto v = csv::parse_double(get(key));
  if (!v) throw ConfigError(key + ": expected a number, got '" + get(key) + "'");
  return *v;
}

std::int64_t Config::get_int(const std::string& key) const {
  const auto v = csv::parse_int(get(key));
  if (!v) throw ConfigError(key + ": expected an integer, got '" + get(key) + "'");
  return *v;
}

bool Config::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  for (auto item : csv::split(get(key), ',')) {
    std::string s = trim(std::string(item));
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

std::optional<std::filesystem::path> Config::get_path(const std::string& key) const {
  const auto& v = get(key);
  if (v.empty()) return std::nullopt;
  return std::filesystem::path(v);
}

std::string Config::echo() const {
  std::ostringstream out;
  for (const auto& [key, value] : values_) {
    if (!find_key(key).echoed) continue;
    out << key << " = " << value << '\n';
  }
  return out.str();
}

namespace {

void require_positive(double v, const char* key) {
  if (!(v > 0.0)) throw ConfigError(std::string(key) + " must be positive");
}

}  // namespace

PipelineConfig PipelineConfig::from(const Config& c) {
  PipelineConfig p;
  p.pings = c.get_path("input.pings");
  p.tracts = c.get_path("input.tracts");
  p.city = c.get_path("input.city");
  p.reference = c.get_path("input.reference");
  p.truth = c.get_path("input.truth");
  p.tract_id_property = c.get("input.tract_id_property");

  const auto& delim = c.get("ingest.delimiter");
  if (delim.size() != 1 && delim != "\\t") throw ConfigError("ingest.delimiter must be one character");
  p.schema.delimiter = delim == "\\t" ? '\t' : delim[0];
  p.schema.device_column = c.get("ingest.col_device");
  p.schema.lat_column = c.get("ingest.col_lat");
  p.schema.lon_column = c.get("ingest.col_lon");
  p.schema.time_column = c.get("ingest.col_time");

  p.window_first = parse_date(c.get("window.start_date"));
  p.window_last = parse_date(c.get("window.end_date"));
  p.timezone = c.get("window.timezone");
  TimeZone::load(p.timezone);
  if (p.window_last < p.window_first) throw ConfigError("window.end_date is before window.start_date");

  p.stay.time_threshold_s = c.get_int("stay.time_threshold_s");
  p.stay.dist_threshold_m = c.get_double("stay.dist_threshold_m");
  const auto& mode = c.get("stay.radius_mode");
  if (mode == "anchor") {
    p.stay.mode = RadiusMode::anchor;
  } else if (mode == "pairwise") {
    p.stay.mode = RadiusMode::pairwise;
  } else {
    throw ConfigError("stay.radius_mode must be anchor or pairwise");
  }
  require_positive(static_cast<double>(p.stay.time_threshold_s), "stay.time_threshold_s");
  require_positive(p.stay.dist_threshold_m, "stay.dist_threshold_m");

  const double linkage = c.get_double("region.linkage_m");
  require_positive(linkage, "region.linkage_m");
  p.home.linkage_m = linkage;
  p.work.linkage_m = linkage;
  p.home.night = {parse_clock(c.get("home.night_start")), parse_clock(c.get("home.night_end"))};
  p.home.min_night_overlap_s = c.get_int("home.min_night_s");
  p.home.long_stay_s = c.get_int("home.long_stay_s");
  require_positive(static_cast<double>(p.home.min_night_overlap_s), "home.min_night_s");
  require_positive(static_cast<double>(p.home.long_stay_s), "home.long_stay_s");

  p.work.hours = {parse_clock(c.get("work.start")), parse_clock(c.get("work.end"))};
  p.work.walking_distance_m = c.get_double("work.walking_m");
  p.work.min_visits = static_cast<int>(c.get_int("work.min_visits"));
  p.work.exponent = static_cast<int>(c.get_int("work.exponent"));
  require_positive(p.work.walking_distance_m, "work.walking_m");
  require_positive(p.work.min_visits, "work.min_visits");
  require_positive(p.work.exponent, "work.exponent");
  p.sensitivity_exponents.clear();
  for (const auto& e : c.get_list("work.sensitivity_exponents")) {
    const auto v = csv::parse_int(e);
    if (!v || *v < 1) throw ConfigError("work.sensitivity_exponents must be positive integers");
    p.sensitivity_exponents.push_back(static_cast<int>(*v));
  }

  p.commute_radius_m = c.get_double("trips.radius_m");
  require_positive(p.commute_radius_m, "trips.radius_m");
  p.min_tract_fraction = c.get_double("tracts.min_fraction");
  require_positive(p.min_tract_fraction, "tracts.min_fraction");
  p.grid_resolution = static_cast<int>(c.get_int("tracts.grid_resolution"));
  if (p.grid_resolution < 10) throw ConfigError("tracts.grid_resolution must be >= 10");
  p.pair_selection = parse_pair_selection(c.get("validate.pair_selection"));

  p.routing.backend = c.get("routing.backend");
  if (p.routing.backend != "none" && p.routing.backend != "offline" && p.routing.backend != "external") {
    throw ConfigError("routing.backend must be none, offline or external");
  }
  p.routing.modes.clear();
  for (const auto& m : c.get_list("routing.modes")) p.routing.modes.push_back(parse_travel_mode(m));
  p.routing.http.endpoint = c.get("routing.endpoint");
  p.routing.http.api_key_env = c.get("routing.api_key_env");
  p.routing.http.timeout_s = c.get_double("routing.timeout_s");
  p.routing.http.max_attempts = static_cast<int>(c.get_int("routing.max_attempts"));
  p.routing.http.departure = format_clock(parse_clock(c.get("routing.departure")));
  p.routing.batch.rate_limit_per_s = c.get_double("routing.rate_limit_per_s");
  p.routing.batch.concurrency = static_cast<int>(c.get_int("routing.concurrency"));
  p.routing.offline.detour_factor = c.get_double("routing.detour_factor");
  p.routing.offline.car_speed_mps = c.get_double("routing.car_speed_mps");
  p.routing.offline.transit_speed_mps = c.get_double("routing.transit_speed_mps");
  p.routing.offline.car_overhead_s = c.get_double("routing.car_overhead_s");
  p.routing.offline.transit_overhead_s = c.get_double("routing.transit_overhead_s");
  p.routing.cache_file = c.get("routing.cache");
  if (p.routing.backend == "external" && p.routing.http.endpoint.empty()) {
    throw ConfigError("routing.backend = external needs routing.endpoint");
  }

  p.histogram_bin_s = c.get_double("summary.bin_width_s");
  require_positive(p.histogram_bin_s, "summary.bin_width_s");
  p.sweep_time_thresholds.clear();
  for (const auto& v : c.get_list("sweep.time_thresholds_s")) {
    const auto t = csv::parse_int(v);
    if (!t || *t <= 0) throw ConfigError("sweep.time_thresholds_s must be positive integers");
    p.sweep_time_thresholds.push_back(*t);
  }
  p.sweep_exponents.clear();
  for (const auto& v : c.get_list("sweep.exponents")) {
    const auto e = csv::parse_int(v);
    if (!e || *e < 1) throw ConfigError("sweep.exponents must be positive integers");
    p.sweep_exponents.push_back(static_cast<int>(*e));
  }

  auto& s = p.synth;
  s.agent_count = static_cast<int>(c.get_int("synth.agents"));
  s.first_day = p.window_first;
  s.last_day = p.window_last;
  s.timezone = p.timezone;
  s.grid.rows = static_cast<int>(c.get_int("synth.grid_rows"));
  s.grid.cols = static_cast<int>(c.get_int("synth.grid_cols"));
  s.grid.tract_size_m = c.get_double("synth.tract_size_m");
  s.grid.origin = {c.get_double("synth.origin_lat"), c.get_double("synth.origin_lon")};
  s.ping_interval_s = c.get_double("synth.ping_interval_s");
  s.ping_jitter_s = c.get_double("synth.ping_jitter_s");
  s.noise_sigma_m = c.get_double("synth.noise_sigma_m");
  s.p_commute = c.get_double("synth.p_commute");
  s.p_night_dropout = c.get_double("synth.p_night_dropout");
  s.p_weekend_errand = c.get_double("synth.p_weekend_errand");
  s.min_home_work_m = c.get_double("synth.min_home_work_m");
  s.seed = static_cast<std::uint64_t>(c.get_int("run.seed"));
  s.validate();

  p.recovery_tolerance_m = c.get_double("recovery.tolerance_m");
  p.recovery_min_night_pings = c.get_int("recovery.min_night_pings");

  p.workers = static_cast<int>(c.get_int("run.workers"));
  if (p.workers < 0) throw ConfigError("run.workers must be >= 0");
  p.output_dir = c.get("run.output_dir");
  return p;
}

ObservationWindow PipelineConfig::window() const {
  return ObservationWindow::from_local_dates(window_first, window_last, TimeZone::load(timezone));
}

}  // namespace commute
