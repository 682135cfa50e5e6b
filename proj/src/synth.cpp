#include "commute/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "commute/csv.hpp"
#include "commute/error.hpp"
#include "commute/parallel.hpp"
#include "commute/validation.hpp"

namespace commute {
namespace {

constexpr double kMetersPerDegree = kEarthRadiusM * std::numbers::pi / 180.0;
constexpr int kNightStart = 20 * 3600;
constexpr int kNightEnd = 5 * 3600;
// Planted places stay this far from every tract edge so their tract is unambiguous.
constexpr double kEdgeMarginM = 100.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double round7(double v) { return std::round(v * 1e7) / 1e7; }

bool is_weekend(absl::CivilDay d) {
  const auto w = absl::GetWeekday(d);
  return w == absl::Weekday::saturday || w == absl::Weekday::sunday;
}

struct Presence {
  EpochSeconds begin;
  EpochSeconds end;
  GeoPoint where;
};

class AgentBuilder {
 public:
  AgentBuilder(const SynthConfig& cfg, const TimeZone& tz, const ObservationWindow& window, int index)
      : cfg_(cfg), tz_(tz), window_(window), rng_(splitmix64(cfg.seed ^ splitmix64(index + 1))) {}

  GeoPoint uniform_point() {
    const auto& g = cfg_.grid;
    std::uniform_int_distribution<int> u_row(0, g.rows - 1);
    std::uniform_int_distribution<int> u_col(0, g.cols - 1);
    const int row = u_row(rng_);
    const int col = u_col(rng_);
    const double margin_lat = kEdgeMarginM / kMetersPerDegree;
    const double margin_lon = margin_lat * g.lon_step() / g.lat_step();
    const double south = g.origin.lat + row * g.lat_step();
    const double west = g.origin.lon + col * g.lon_step();
    std::uniform_real_distribution<double> u_lat(south + margin_lat, south + g.lat_step() - margin_lat);
    std::uniform_real_distribution<double> u_lon(west + margin_lon, west + g.lon_step() - margin_lon);
    const double lat = u_lat(rng_);
    return GeoPoint{lat, u_lon(rng_)};
  }

  void build(AgentTruth& truth, Trajectory& trajectory) {
    truth.home = uniform_point();
    int attempts = 0;
    do {
      if (++attempts > 10000) throw ConfigError("cannot place a workplace far enough from home");
      truth.work = uniform_point();
    } while (haversine_distance(truth.home, truth.work) < cfg_.min_home_work_m);
    truth.home_tract = cfg_.grid.tract_of(truth.home);
    truth.work_tract = cfg_.grid.tract_of(truth.work);
    truth.night_dropout = bernoulli(cfg_.p_night_dropout);

    std::vector<Presence> schedule;
    auto at = [&](absl::CivilDay d, int hour) {
      return absl::ToUnixSeconds(absl::FromCivil(absl::CivilSecond(d) + hour * 3600, tz_.zone()));
    };
    for (absl::CivilDay d = cfg_.first_day; d <= cfg_.last_day; ++d) {
      if (!is_weekend(d)) {
        if (bernoulli(cfg_.p_commute)) {
          truth.commuted_days.push_back(d);
          schedule.push_back({at(d, 0), at(d, 7), truth.home});
          schedule.push_back({at(d, 9), at(d, 17), truth.work});
          schedule.push_back({at(d, 20), at(d, 24), truth.home});
          continue;
        }
      } else if (bernoulli(cfg_.p_weekend_errand)) {
        const GeoPoint errand = uniform_point();
        schedule.push_back({at(d, 0), at(d, 10), truth.home});
        schedule.push_back({at(d, 11), at(d, 14), errand});
        schedule.push_back({at(d, 15), at(d, 24), truth.home});
        continue;
      }
      schedule.push_back({at(d, 0), at(d, 24), truth.home});
    }

    trajectory.device_id = truth.agent_id;
    std::uniform_real_distribution<double> jitter(-cfg_.ping_jitter_s, cfg_.ping_jitter_s);
    std::uniform_real_distribution<double> phase(0.0, cfg_.ping_interval_s);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double sigma_lat = cfg_.noise_sigma_m / kMetersPerDegree;
    const double sigma_lon = sigma_lat * cfg_.grid.lon_step() / cfg_.grid.lat_step();
    for (const auto& p : schedule) {
      for (double t = static_cast<double>(p.begin) + phase(rng_); t < static_cast<double>(p.end);
           t += std::max(1.0, cfg_.ping_interval_s + jitter(rng_))) {
        const auto ts = static_cast<EpochSeconds>(t);
        const double dlat = noise(rng_) * sigma_lat;
        const double dlon = noise(rng_) * sigma_lon;
        if (!window_.contains(ts)) continue;
        const int sod = to_local(ts, tz_).seconds_of_day();
        const bool night = sod >= kNightStart || sod < kNightEnd;
        if (night && truth.night_dropout) continue;
        if (night) ++truth.night_pings;
        trajectory.fixes.push_back(Fix{{round7(p.where.lat + dlat), round7(p.where.lon + dlon)}, ts});
      }
    }
  }

 private:
  bool bernoulli(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

  const SynthConfig& cfg_;
  const TimeZone& tz_;
  const ObservationWindow& window_;
  std::mt19937_64 rng_;
};

std::string format_day(absl::CivilDay d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", static_cast<int>(d.year()), d.month(), d.day());
  return buf;
}

std::string fixed7(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.7f", v);
  return buf;
}

nlohmann::json polygon_json(const Polygon& poly) {
  nlohmann::json ring = nlohmann::json::array();
  for (const auto& p : poly.exterior) ring.push_back({p.lon, p.lat});
  ring.push_back({poly.exterior.front().lon, poly.exterior.front().lat});
  return {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({ring})}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

double TractGrid::lat_step() const { return tract_size_m / kMetersPerDegree; }

double TractGrid::lon_step() const {
  return tract_size_m / (kMetersPerDegree * std::cos(origin.lat * std::numbers::pi / 180.0));
}

std::string TractGrid::tract_id(int row, int col) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "T%02d%02d", row, col);
  return buf;
}

std::string TractGrid::tract_of(const GeoPoint& p) const {
  const int row = static_cast<int>(std::floor((p.lat - origin.lat) / lat_step()));
  const int col = static_cast<int>(std::floor((p.lon - origin.lon) / lon_step()));
  if (row < 0 || row >= rows || col < 0 || col >= cols) return {};
  return tract_id(row, col);
}

std::vector<GeoFeature> TractGrid::tracts() const {
  std::vector<GeoFeature> out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double lat0 = origin.lat + r * lat_step();
      const double lon0 = origin.lon + c * lon_step();
      out.push_back(GeoFeature{tract_id(r, c),
                               {make_rectangle(lat0, lon0, lat0 + lat_step(), lon0 + lon_step())}});
    }
  }
  return out;
}

MultiPolygon TractGrid::boundary() const {
  return {make_rectangle(origin.lat, origin.lon, origin.lat + rows * lat_step(), origin.lon + cols * lon_step())};
}

void SynthConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
  };
  prob(p_commute, "p_commute");
  prob(p_night_dropout, "p_night_dropout");
  prob(p_weekend_errand, "p_weekend_errand");
  if (agent_count < 0) throw ConfigError("agent_count must be >= 0");
  if (!(noise_sigma_m >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  if (!(ping_interval_s > 0.0) || !(ping_jitter_s >= 0.0) || ping_jitter_s >= ping_interval_s) {
    throw ConfigError("need ping_interval_s > ping_jitter_s >= 0");
  }
  if (grid.rows < 1 || grid.cols < 1 || !(grid.tract_size_m > 4 * kEdgeMarginM)) {
    throw ConfigError("bad tract grid: need rows, cols >= 1 and tract_size_m > " + std::to_string(4 * kEdgeMarginM));
  }
  const double usable_h = grid.rows * grid.tract_size_m - 2 * kEdgeMarginM;
  const double usable_w = grid.cols * grid.tract_size_m - 2 * kEdgeMarginM;
  // A home at the grid center must still have room for a workplace.
  if (std::hypot(usable_h, usable_w) / 2.0 < min_home_work_m * 1.2) {
    throw ConfigError("tract grid too small to place workplaces " + std::to_string(min_home_work_m) +
                      " m from homes");
  }
  if (last_day < first_day) throw ConfigError("synthetic window end precedes start");
}

ObservationWindow SynthConfig::window() const {
  return ObservationWindow::from_local_dates(first_day, last_day, TimeZone::load(timezone));
}

std::string agent_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "agent_%06d", index);
  return buf;
}

ODMatrix planted_od(std::span<const AgentTruth> agents, int weekday_count) {
  ODMatrix od;
  for (const auto& a : agents) {
    if (a.commuted_days.empty() || a.home_tract.empty() || a.work_tract.empty()) continue;
    od.cells[{a.home_tract, a.work_tract}] += avg_daily_trips(static_cast<int>(a.commuted_days.size()), weekday_count);
  }
  return od;
}

SynthWorld generate(const SynthConfig& config, int workers) {
  config.validate();
  const TimeZone tz = TimeZone::load(config.timezone);
  const ObservationWindow window = config.window();
  SynthWorld world;
  world.truth.weekday_count = window.weekday_count();
  world.truth.agents.resize(config.agent_count);
  world.trajectories.resize(config.agent_count);
  parallel_for(static_cast<std::size_t>(config.agent_count), workers, [&](std::size_t i) {
    auto& truth = world.truth.agents[i];
    truth.agent_id = agent_id(static_cast<int>(i));
    AgentBuilder(config, tz, window, static_cast<int>(i)).build(truth, world.trajectories[i]);
  });
  world.truth.planted_od = planted_od(world.truth.agents, world.truth.weekday_count);
  return world;
}

void write_world(const SynthWorld& world, const SynthConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "pings.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + (dir / "pings.csv").string());
    out << "device_id,latitude,longitude,timestamp\n";
    std::string line;
    for (const auto& tr : world.trajectories) {
      for (const auto& f : tr.fixes) {
        line.clear();
        line += tr.device_id;
        line += ',';
        line += fixed7(f.location.lat);
        line += ',';
        line += fixed7(f.location.lon);
        line += ',';
        line += std::to_string(f.t);
        line += '\n';
        out << line;
      }
    }
  }

  nlohmann::json tracts = {{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
  for (const auto& f : config.grid.tracts()) {
    tracts["features"].push_back(
        {{"type", "Feature"}, {"properties", {{"GEOID", f.id}}}, {"geometry", polygon_json(f.geometry.front())}});
  }
  write_text(dir / "tracts.geojson", tracts.dump(1) + "\n");
  nlohmann::json city = {{"type", "FeatureCollection"},
                         {"features",
                          {{{"type", "Feature"},
                            {"properties", {{"name", "synthetic city"}}},
                            {"geometry", polygon_json(config.grid.boundary().front())}}}}};
  write_text(dir / "city.geojson", city.dump(1) + "\n");

  std::string agents = "agent_id,home_lat,home_lon,work_lat,work_lon,home_tract,work_tract,night_dropout,night_pings,commuted_days\n";
  for (const auto& a : world.truth.agents) {
    std::string days;
    for (const auto& d : a.commuted_days) {
      if (!days.empty()) days += ';';
      days += format_day(d);
    }
    agents += a.agent_id + "," + csv::format_double(a.home.lat) + "," + csv::format_double(a.home.lon) + "," +
              csv::format_double(a.work.lat) + "," + csv::format_double(a.work.lon) + "," + a.home_tract + "," +
              a.work_tract + "," + (a.night_dropout ? "1" : "0") + "," + std::to_string(a.night_pings) + "," +
              days + "\n";
  }
  write_text(dir / "truth_agents.csv", agents);

  std::string od = "origin_tract,dest_tract,avg_daily_trips\n";
  for (const auto& [pair, trips] : world.truth.planted_od.cells) {
    od += pair.first + "," + pair.second + "," + csv::format_double(trips) + "\n";
  }
  write_text(dir / "truth_od.csv", od);
}

std::vector<AgentTruth> load_truth_agents(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const auto c_id = table.column("agent_id");
  const auto c_hlat = table.column("home_lat");
  const auto c_hlon = table.column("home_lon");
  const auto c_wlat = table.column("work_lat");
  const auto c_wlon = table.column("work_lon");
  const auto c_ht = table.column("home_tract");
  const auto c_wt = table.column("work_tract");
  const auto c_drop = table.column("night_dropout");
  const auto c_np = table.column("night_pings");
  const auto c_days = table.column("commuted_days");
  std::vector<AgentTruth> out;
  for (const auto& row : table.rows) {
    AgentTruth a;
    a.agent_id = row[c_id];
    auto num = [&](std::size_t c) {
      const auto v = csv::parse_double(row[c]);
      if (!v) throw DataError(table.source + ": bad number for agent " + a.agent_id);
      return *v;
    };
    a.home = {num(c_hlat), num(c_hlon)};
    a.work = {num(c_wlat), num(c_wlon)};
    a.home_tract = row[c_ht];
    a.work_tract = row[c_wt];
    a.night_dropout = row[c_drop] == "1";
    a.night_pings = static_cast<std::int64_t>(num(c_np));
    for (auto d : csv::split(row[c_days], ';')) {
      if (!d.empty()) a.commuted_days.push_back(parse_date(std::string(d)));
    }
    out.push_back(std::move(a));
  }
  return out;
}

RecoveryReport score_recovery(const GroundTruth& truth, std::span<const PlaceProfile> profiles,
                              std::span<const CommuterRecord> commuters, const ODMatrix& estimated_od,
                              const RecoveryOptions& options) {
  std::unordered_map<std::string, const PlaceProfile*> by_id;
  std::unordered_map<std::string, const AgentTruth*> truth_ids;
  for (const auto& a : truth.agents) truth_ids[a.agent_id] = &a;
  for (const auto& p : profiles) {
    if (!truth_ids.contains(p.device_id)) throw DataError("device " + p.device_id + " is not a planted agent");
    by_id[p.device_id] = &p;
  }
  std::unordered_map<std::string, const CommuterRecord*> commuter_by_id;
  for (const auto& c : commuters) {
    if (!truth_ids.contains(c.device_id)) throw DataError("device " + c.device_id + " is not a planted agent");
    commuter_by_id[c.device_id] = &c;
  }

  RecoveryReport report;
  double day_error_sum = 0.0;
  std::int64_t day_error_n = 0;
  for (const auto& a : truth.agents) {
    AgentRecovery r;
    r.agent_id = a.agent_id;
    r.eligible = a.night_pings >= options.min_night_pings;
    r.planted_days = static_cast<int>(a.commuted_days.size());
    ++report.agents;
    if (r.eligible) ++report.eligible;
    const auto it = by_id.find(a.agent_id);
    if (it != by_id.end()) {
      const PlaceProfile& p = *it->second;
      if (p.home) r.home_error_m = haversine_distance(p.home->centroid, a.home);
      if (p.work) r.work_error_m = haversine_distance(p.work->centroid, a.work);
    }
    if (const auto c = commuter_by_id.find(a.agent_id); c != commuter_by_id.end()) {
      r.estimated_days = c->second->commute_days;
    }
    const bool home_ok = r.eligible && r.home_error_m && *r.home_error_m <= options.tolerance_m;
    const bool work_ok = home_ok && r.work_error_m && *r.work_error_m <= options.tolerance_m;
    if (home_ok) ++report.home_recovered;
    if (work_ok) {
      ++report.work_recovered;
      day_error_sum += std::abs(r.estimated_days - r.planted_days);
      ++day_error_n;
    }
    report.per_agent.push_back(std::move(r));
  }
  report.unrecoverable = report.agents - report.eligible;
  report.home_rate = report.eligible > 0 ? static_cast<double>(report.home_recovered) / report.eligible : 0.0;
  report.work_rate =
      report.home_recovered > 0 ? static_cast<double>(report.work_recovered) / report.home_recovered : 0.0;
  report.commute_day_mae = day_error_n > 0 ? day_error_sum / static_cast<double>(day_error_n) : 0.0;

  FlowReference planted;
  planted.trips = truth.planted_od.cells;
  try {
    const auto v = compare_od(estimated_od, planted, PairSelection::union_nonzero);
    if (v.correlation) report.od_r = v.correlation->r;
  } catch (const DataError&) {
  }
  return report;
}

}  // namespace commute
