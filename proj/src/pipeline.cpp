#include "commute/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "commute/csv.hpp"
#include "commute/error.hpp"
#include "commute/parallel.hpp"
#include "commute/synth.hpp"

namespace commute {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- kernels ----------------------------------------------------------------------

std::vector<DeviceStays> extract_all(std::span<const Trajectory> trajectories, const StayParams& params,
                                     int workers) {
  std::vector<DeviceStays> out(trajectories.size());
  parallel_for(trajectories.size(), workers, [&](std::size_t i) {
    out[i].device_id = trajectories[i].device_id;
    out[i].stays = extract_stay_points(trajectories[i].fixes, params);
  });
  return out;
}

std::vector<PlaceProfile> infer_all(std::span<DeviceStays> devices, const TimeZone& tz, const HomeRules& home,
                                    const WorkRules& work, int workers) {
  std::vector<PlaceProfile> out(devices.size());
  parallel_for(devices.size(), workers, [&](std::size_t i) {
    out[i] = infer_places(devices[i].device_id, devices[i].stays, tz, home, work);
    devices[i].home = out[i].home;
  });
  return out;
}

std::vector<CommuterRecord> make_commuters(std::span<const PlaceProfile> profiles,
                                           const std::map<std::string, std::vector<StayPoint>>& stays_by_device,
                                           const ObservationWindow& window, double radius_m) {
  static const std::vector<StayPoint> kNone;
  std::vector<CommuterRecord> out;
  for (const auto& p : profiles) {
    if (!p.is_commuter()) continue;
    const auto it = stays_by_device.find(p.device_id);
    const auto& stays = it == stays_by_device.end() ? kNone : it->second;
    CommuterRecord c;
    c.device_id = p.device_id;
    c.home = p.home->centroid;
    c.work = p.work->centroid;
    c.weekday_count = window.weekday_count();
    c.commute_days = count_commute_days(stays, c.work, radius_m, window);
    c.avg_daily_trips = avg_daily_trips(c.commute_days, c.weekday_count);
    out.push_back(std::move(c));
  }
  return out;
}

// ---- artifact I/O ---------------------------------------------------------------

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::string fmt(double v) { return csv::format_double(v); }

double need_double(const csv::Table& t, const std::vector<std::string>& row, std::size_t col) {
  const auto v = csv::parse_double(row[col]);
  if (!v) throw DataError(t.source + ": bad number '" + row[col] + "' in column " + t.header[col]);
  return *v;
}

std::int64_t need_int(const csv::Table& t, const std::vector<std::string>& row, std::size_t col) {
  const auto v = csv::parse_int(row[col]);
  if (!v) throw DataError(t.source + ": bad integer '" + row[col] + "' in column " + t.header[col]);
  return *v;
}

fs::path require_input(const fs::path& path, const std::string& stage, const std::string& hint) {
  if (!fs::exists(path)) {
    throw ConfigError(stage + ": missing input " + path.string() + " (" + hint + ")");
  }
  return path;
}

fs::path require_setting(const std::optional<fs::path>& path, const std::string& stage, const std::string& key) {
  if (!path) throw ConfigError(stage + ": set " + key + " (config file or --set " + key + "=...)");
  return require_input(*path, stage, "configured by " + key);
}

void write_json(const fs::path& path, const json& doc) { open_out(path) << doc.dump(2) << '\n'; }

}  // namespace

void write_stays_csv(const fs::path& path, std::span<const DeviceStays> devices) {
  auto out = open_out(path);
  out << "device_id,lat,lon,arrival_utc,departure_utc,member_count\n";
  for (const auto& d : devices) {
    for (const auto& s : d.stays) {
      out << d.device_id << ',' << fmt(s.centroid.lat) << ',' << fmt(s.centroid.lon) << ',' << s.arrival_utc << ','
          << s.departure_utc << ',' << s.member_count << '\n';
    }
  }
}

std::map<std::string, std::vector<StayPoint>> read_stays_csv(const fs::path& path) {
  const auto t = csv::read_table(path);
  const auto c_dev = t.column("device_id");
  const auto c_lat = t.column("lat");
  const auto c_lon = t.column("lon");
  const auto c_arr = t.column("arrival_utc");
  const auto c_dep = t.column("departure_utc");
  const auto c_cnt = t.column("member_count");
  std::map<std::string, std::vector<StayPoint>> out;
  for (const auto& row : t.rows) {
    StayPoint s;
    s.centroid = {need_double(t, row, c_lat), need_double(t, row, c_lon)};
    s.arrival_utc = need_int(t, row, c_arr);
    s.departure_utc = need_int(t, row, c_dep);
    s.member_count = static_cast<int>(need_int(t, row, c_cnt));
    if (!is_valid(s.centroid) || s.departure_utc < s.arrival_utc) {
      throw DataError(t.source + ": invalid stay for device " + row[c_dev]);
    }
    out[row[c_dev]].push_back(s);
  }
  for (auto& [dev, stays] : out) {
    std::stable_sort(stays.begin(), stays.end(),
                     [](const StayPoint& a, const StayPoint& b) { return a.arrival_utc < b.arrival_utc; });
  }
  return out;
}

void write_places_csv(const fs::path& path, std::span<const PlaceProfile> profiles) {
  auto out = open_out(path);
  out << "device_id,home_lat,home_lon,work_lat,work_lon,n,d\n";
  for (const auto& p : profiles) {
    if (!p.home) continue;
    out << p.device_id << ',' << fmt(p.home->centroid.lat) << ',' << fmt(p.home->centroid.lon) << ',';
    if (p.work) {
      out << fmt(p.work->centroid.lat) << ',' << fmt(p.work->centroid.lon) << ',' << p.work_visit_count << ','
          << fmt(*p.home_work_distance_m) << '\n';
    } else {
      out << ",,,\n";
    }
  }
}

PlacesFile read_places_csv(const fs::path& path) {
  const auto t = csv::read_table(path);
  const auto c_dev = t.column("device_id");
  const auto c_hlat = t.column("home_lat");
  const auto c_hlon = t.column("home_lon");
  const auto c_wlat = t.column("work_lat");
  const auto c_wlon = t.column("work_lon");
  const auto c_n = t.find_column("n");
  const auto c_d = t.find_column("d");
  const auto c_avg = t.find_column("avg_daily_trips");
  PlacesFile out;
  for (const auto& row : t.rows) {
    PlaceProfile p;
    p.device_id = row[c_dev];
    StayRegion home;
    home.centroid = {need_double(t, row, c_hlat), need_double(t, row, c_hlon)};
    if (!is_valid(home.centroid)) throw DataError(t.source + ": invalid home for " + p.device_id);
    p.home = home;
    if (!row[c_wlat].empty() || !row[c_wlon].empty()) {
      StayRegion work;
      work.centroid = {need_double(t, row, c_wlat), need_double(t, row, c_wlon)};
      if (!is_valid(work.centroid)) throw DataError(t.source + ": invalid work for " + p.device_id);
      p.work = work;
      p.home_work_distance_m = c_d && !row[*c_d].empty() ? need_double(t, row, *c_d)
                                                         : haversine_distance(home.centroid, work.centroid);
      p.work_visit_count = c_n && !row[*c_n].empty() ? static_cast<int>(need_int(t, row, *c_n)) : 0;
      if (c_avg && !row[*c_avg].empty()) out.avg_daily_trips[p.device_id] = need_double(t, row, *c_avg);
    }
    out.profiles.push_back(std::move(p));
  }
  return out;
}

void write_od_csv(const fs::path& path, const ODMatrix& od) {
  auto out = open_out(path);
  out << "origin_tract,dest_tract,avg_daily_trips\n";
  for (const auto& [pair, trips] : od.cells) out << pair.first << ',' << pair.second << ',' << fmt(trips) << '\n';
}

ODMatrix read_od_csv(const fs::path& path) {
  const auto t = csv::read_table(path);
  const auto c_o = t.column("origin_tract");
  const auto c_d = t.column("dest_tract");
  const auto c_v = t.column("avg_daily_trips");
  ODMatrix od;
  for (const auto& row : t.rows) od.cells[{row[c_o], row[c_d]}] += need_double(t, row, c_v);
  return od;
}

void write_commuters_csv(const fs::path& path, std::span<const CommuterRecord> commuters) {
  auto out = open_out(path);
  out << "device_id,home_lat,home_lon,work_lat,work_lon,home_tract,work_tract,commute_days,weekday_count,"
         "avg_daily_trips\n";
  for (const auto& c : commuters) {
    out << c.device_id << ',' << fmt(c.home.lat) << ',' << fmt(c.home.lon) << ',' << fmt(c.work.lat) << ','
        << fmt(c.work.lon) << ',' << c.home_tract << ',' << c.work_tract << ',' << c.commute_days << ','
        << c.weekday_count << ',' << fmt(c.avg_daily_trips) << '\n';
  }
}

std::vector<CommuterRecord> read_commuters_csv(const fs::path& path) {
  const auto t = csv::read_table(path);
  const auto c_dev = t.column("device_id");
  const auto c_hlat = t.column("home_lat");
  const auto c_hlon = t.column("home_lon");
  const auto c_wlat = t.column("work_lat");
  const auto c_wlon = t.column("work_lon");
  const auto c_ht = t.column("home_tract");
  const auto c_wt = t.column("work_tract");
  const auto c_days = t.column("commute_days");
  const auto c_wd = t.column("weekday_count");
  const auto c_avg = t.column("avg_daily_trips");
  std::vector<CommuterRecord> out;
  for (const auto& row : t.rows) {
    CommuterRecord c;
    c.device_id = row[c_dev];
    c.home = {need_double(t, row, c_hlat), need_double(t, row, c_hlon)};
    c.work = {need_double(t, row, c_wlat), need_double(t, row, c_wlon)};
    c.home_tract = row[c_ht];
    c.work_tract = row[c_wt];
    c.commute_days = static_cast<int>(need_int(t, row, c_days));
    c.weekday_count = static_cast<int>(need_int(t, row, c_wd));
    c.avg_daily_trips = need_double(t, row, c_avg);
    out.push_back(std::move(c));
  }
  return out;
}

ArtifactSet::ArtifactSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

ArtifactSet::~ArtifactSet() {
  if (committed_) return;
  for (const auto& name : names_) {
    std::error_code ec;
    const auto partial = dir_ / (name + ".partial");
    if (fs::exists(partial, ec)) fs::rename(partial, dir_ / (name + ".quarantine"), ec);
  }
}

fs::path ArtifactSet::stage(const std::string& name) {
  names_.push_back(name);
  return dir_ / (name + ".partial");
}

void ArtifactSet::write(const std::string& name, const std::string& content) { open_out(stage(name)) << content; }

void ArtifactSet::commit() {
  for (const auto& name : names_) {
    const auto partial = dir_ / (name + ".partial");
    if (fs::exists(partial)) fs::rename(partial, dir_ / name);
    std::error_code ec;
    fs::remove(dir_ / (name + ".quarantine"), ec);
  }
  committed_ = true;
}

// ---- stages -----------------------------------------------------------------------

namespace {

json funnel_json(const FunnelReport& f, const std::map<int, double>& sensitivity) {
  json sens = json::object();
  for (const auto& [p, frac] : sensitivity) sens[std::to_string(p)] = frac;
  return {{"total_users", f.total_users},
          {"users_with_home", f.users_with_home},
          {"users_with_home_and_work", f.users_with_home_and_work},
          {"home_of_total", f.home_of_total()},
          {"commuters_of_total", f.commuters_of_total()},
          {"commuters_of_home", f.commuters_of_home()},
          {"work_sensitivity_vs_exponent_1", sens}};
}

std::vector<CommuterRecord> commuters_for_od(const PipelineConfig& cfg, const PlacesFile& places,
                                             const ObservationWindow& window) {
  const fs::path stays_path = cfg.output_dir / "stays.csv";
  std::size_t commuters = 0;
  for (const auto& p : places.profiles) commuters += p.is_commuter() ? 1 : 0;
  if (places.avg_daily_trips.size() == commuters && (commuters > 0 || !fs::exists(stays_path))) {
    std::vector<CommuterRecord> out;
    for (const auto& p : places.profiles) {
      if (!p.is_commuter()) continue;
      CommuterRecord c;
      c.device_id = p.device_id;
      c.home = p.home->centroid;
      c.work = p.work->centroid;
      c.weekday_count = window.weekday_count();
      c.avg_daily_trips = places.avg_daily_trips.at(p.device_id);
      c.commute_days = static_cast<int>(std::lround(c.avg_daily_trips * c.weekday_count));
      out.push_back(std::move(c));
    }
    return out;
  }
  require_input(stays_path, "build-od", "run `extract-stays` first, or give places.csv an avg_daily_trips column");
  return make_commuters(places.profiles, read_stays_csv(stays_path), window, cfg.commute_radius_m);
}

ODResult od_from_commuters(const PipelineConfig& cfg, std::span<const CommuterRecord> commuters,
                           std::vector<TractGeometry>* tracts_out) {
  const auto tracts_path = require_setting(cfg.tracts, "build-od", "input.tracts");
  const auto city_path = require_setting(cfg.city, "build-od", "input.city");
  auto tracts = load_and_filter_tracts(tracts_path, city_path, cfg.min_tract_fraction, cfg.tract_id_property,
                                       cfg.grid_resolution, cfg.workers);
  auto result = build_od(commuters, tracts);
  if (tracts_out) *tracts_out = std::move(tracts);
  return result;
}

json correlation_json(const std::optional<Correlation>& c) {
  if (!c) return nullptr;
  return {{"pearson_r", c->r}, {"p_value", c->p_value}, {"n", c->n}};
}

}  // namespace

void run_extract_stays(const PipelineConfig& cfg) {
  const auto pings = require_setting(cfg.pings, "extract-stays", "input.pings");
  PingSchema schema = cfg.schema;
  schema.window = cfg.window();
  const auto ingest = parse_pings_file(pings, schema, cfg.workers);
  const auto devices = extract_all(ingest.trajectories, cfg.stay, cfg.workers);

  ArtifactSet artifacts(cfg.output_dir);
  write_stays_csv(artifacts.stage("stays.csv"), devices);
  std::string dev = "device_id,pings,stay_points\n";
  for (std::size_t i = 0; i < devices.size(); ++i) {
    dev += devices[i].device_id + "," + std::to_string(ingest.trajectories[i].fixes.size()) + "," +
           std::to_string(devices[i].stays.size()) + "\n";
  }
  artifacts.write("devices.csv", dev);
  std::int64_t stay_total = 0;
  for (const auto& d : devices) stay_total += static_cast<std::int64_t>(d.stays.size());
  json report = {{"rows", ingest.report.rows},
                 {"accepted", ingest.report.accepted},
                 {"rejected", ingest.report.rejected},
                 {"rejected_total", ingest.report.rejected_total()},
                 {"devices", devices.size()},
                 {"stay_points", stay_total},
                 {"weekday_count", schema.window->weekday_count()}};
  write_json(artifacts.stage("ingest_report.json"), report);
  artifacts.commit();
}

void run_infer_places(const PipelineConfig& cfg) {
  const auto stays_path = require_input(cfg.output_dir / "stays.csv", "infer-places", "run `extract-stays` first");
  auto stays_by_device = read_stays_csv(stays_path);
  std::set<std::string> ids;
  for (const auto& [id, stays] : stays_by_device) ids.insert(id);
  if (const auto devices_path = cfg.output_dir / "devices.csv"; fs::exists(devices_path)) {
    const auto t = csv::read_table(devices_path);
    const auto c = t.column("device_id");
    for (const auto& row : t.rows) ids.insert(row[c]);
  }
  std::vector<DeviceStays> devices;
  for (const auto& id : ids) {
    auto it = stays_by_device.find(id);
    devices.push_back(DeviceStays{id, it == stays_by_device.end() ? std::vector<StayPoint>{} : std::move(it->second), {}});
  }
  const TimeZone tz = TimeZone::load(cfg.timezone);
  const auto profiles = infer_all(devices, tz, cfg.home, cfg.work, cfg.workers);
  const auto funnel = make_funnel(static_cast<std::int64_t>(devices.size()), profiles);
  const auto sensitivity = work_sensitivity(devices, tz, cfg.work, cfg.sensitivity_exponents, cfg.workers);

  ArtifactSet artifacts(cfg.output_dir);
  write_places_csv(artifacts.stage("places.csv"), profiles);
  write_json(artifacts.stage("funnel.json"), funnel_json(funnel, sensitivity));
  artifacts.commit();
}

void run_build_od(const PipelineConfig& cfg) {
  const auto places_path = require_input(cfg.output_dir / "places.csv", "build-od", "run `infer-places` first");
  const auto places = read_places_csv(places_path);
  const auto window = cfg.window();
  auto commuters = commuters_for_od(cfg, places, window);
  std::vector<TractGeometry> tracts;
  const auto result = od_from_commuters(cfg, commuters, &tracts);

  std::map<std::string, const CommuterRecord*> assigned;
  for (const auto& c : result.assigned) assigned[c.device_id] = &c;
  for (auto& c : commuters) {
    if (const auto it = assigned.find(c.device_id); it != assigned.end()) {
      c.home_tract = it->second->home_tract;
      c.work_tract = it->second->work_tract;
    }
  }

  ArtifactSet artifacts(cfg.output_dir);
  std::string tract_csv = "tract_id,area_fraction_in_city,included\n";
  std::int64_t included = 0;
  for (const auto& t : tracts) {
    tract_csv += t.tract_id + "," + fmt(t.area_fraction_in_city) + "," + (t.included ? "1" : "0") + "\n";
    included += t.included ? 1 : 0;
  }
  artifacts.write("tracts.csv", tract_csv);
  write_commuters_csv(artifacts.stage("commuters.csv"), commuters);
  write_od_csv(artifacts.stage("od.csv"), result.od);
  json report = {{"commuters", commuters.size()},
                 {"assigned", result.assigned.size()},
                 {"excluded_home_outside", result.excluded.home_outside},
                 {"excluded_work_outside", result.excluded.work_outside},
                 {"od_pairs", result.od.cells.size()},
                 {"od_total_trips", result.od.total()},
                 {"tracts", tracts.size()},
                 {"tracts_included", included},
                 {"weekday_count", window.weekday_count()}};
  write_json(artifacts.stage("od_report.json"), report);
  artifacts.commit();
}

void run_validate(const PipelineConfig& cfg) {
  const auto od_path = require_input(cfg.output_dir / "od.csv", "validate", "run `build-od` first");
  const auto ref_path = require_setting(cfg.reference, "validate", "input.reference");
  const auto gps = read_od_csv(od_path);
  const auto ref = load_flow_reference(ref_path);
  const auto report = compare_od(gps, ref, cfg.pair_selection);

  json deciles = json::array();
  for (const auto& d : report.deciles) {
    deciles.push_back({{"decile", d.decile},
                       {"ref_min", d.ref_min},
                       {"ref_max", d.ref_max},
                       {"n", d.n},
                       {"pearson_r", d.r ? json(*d.r) : json(nullptr)}});
  }
  json modes = json::object();
  for (auto m : {PairSelection::union_nonzero, PairSelection::intersection_nonzero, PairSelection::ref_support}) {
    try {
      const auto r = compare_od(gps, ref, m);
      modes[to_string(m)] = correlation_json(r.correlation);
    } catch (const DataError& e) {
      modes[to_string(m)] = {{"error", e.what()}};
    }
  }
  json doc = {{"pair_selection", to_string(report.mode)},
              {"n_pairs", report.n_pairs},
              {"correlation", correlation_json(report.correlation)},
              {"deciles_by_reference_flow", deciles},
              {"all_pair_selections", modes}};

  ArtifactSet artifacts(cfg.output_dir);
  write_json(artifacts.stage("validation.json"), doc);
  std::string scatter = "origin_tract,dest_tract,gps_trips,ref_trips,ref_stderr\n";
  for (const auto& row : report.scatter) {
    scatter += row.pair.first + "," + row.pair.second + "," + fmt(row.gps_trips) + "," + fmt(row.ref_trips) + "," +
               (row.ref_stderr ? fmt(*row.ref_stderr) : std::string()) + "\n";
  }
  artifacts.write("scatter.csv", scatter);
  artifacts.commit();
}

void run_route_stats(const PipelineConfig& cfg) {
  const auto commuters_path =
      require_input(cfg.output_dir / "commuters.csv", "route-stats", "run `build-od` first");
  const auto commuters = read_commuters_csv(commuters_path);
  std::unique_ptr<RouteBackend> backend;
  if (cfg.routing.backend == "offline") {
    backend = std::make_unique<OfflineRouter>(cfg.routing.offline);
  } else if (cfg.routing.backend == "external") {
    backend = std::make_unique<HttpRouter>(cfg.routing.http);
  } else {
    throw ConfigError("route-stats: routing.backend is none; set it to offline or external");
  }
  std::vector<CommuteEndpoints> endpoints;
  for (const auto& c : commuters) endpoints.push_back({c.device_id, c.home, c.work});
  RouteCache cache(cfg.output_dir / cfg.routing.cache_file);
  for (const auto& w : cache.warnings()) std::cerr << "warning: " << w << '\n';
  RouteAllOptions batch_options = cfg.routing.batch;
  if (cfg.routing.backend == "offline") batch_options.rate_limit_per_s = 0;  // local estimates need no throttle
  const auto batch = route_all(endpoints, cfg.routing.modes, *backend, cache, batch_options);

  std::vector<RoutedTrip> trips;
  std::map<TravelMode, std::pair<std::int64_t, std::int64_t>> routable;  // routable, requested
  std::string routes = "device_id,mode,distance_m,duration_s,source,routable\n";
  for (const auto& r : batch.routes) {
    const auto& e = r.estimate;
    routes += r.device_id + "," + to_string(e.mode) + "," + fmt(e.distance_m) + "," + fmt(e.duration_s) + "," +
              (e.source == RouteSource::external ? "external" : "offline") + "," + (e.routable ? "1" : "0") + "\n";
    auto& counts = routable[e.mode];
    ++counts.second;
    if (e.routable) {
      ++counts.first;
      trips.push_back({e.mode, e.distance_m, e.duration_s});
    }
  }
  std::string failures = "device_id,mode,message\n";
  for (const auto& f : batch.failures) {
    failures += f.device_id + "," + to_string(f.mode) + ",\"" + f.message + "\"\n";
    ++routable[f.mode].second;
  }
  const auto summary = commute_summary(trips, cfg.histogram_bin_s);

  json doc = json::object();
  std::string histogram = "mode,bin_start_s,bin_end_s,count\n";
  for (TravelMode mode : cfg.routing.modes) {
    const auto& counts = routable[mode];
    json m = {{"requested", counts.second},
              {"routable", counts.first},
              {"routable_fraction", counts.second > 0 ? static_cast<double>(counts.first) / counts.second : 0.0}};
    if (const auto it = summary.find(mode); it != summary.end()) {
      const auto& s = it->second;
      m["duration_min"] = {{"mean", s.duration_s.mean / 60.0},
                           {"median", s.duration_s.median / 60.0},
                           {"p90", s.duration_s.p90 / 60.0}};
      m["distance_km"] = {{"mean", s.distance_m.mean / 1000.0},
                          {"median", s.distance_m.median / 1000.0},
                          {"p90", s.distance_m.p90 / 1000.0}};
      for (std::size_t b = 0; b < s.duration_histogram.size(); ++b) {
        histogram += to_string(mode) + "," + fmt(b * s.bin_width_s) + "," + fmt((b + 1) * s.bin_width_s) + "," +
                     std::to_string(s.duration_histogram[b]) + "\n";
      }
    }
    doc[to_string(mode)] = m;
  }
  doc["backend"] = cfg.routing.backend;
  doc["failures"] = batch.failures.size();

  ArtifactSet artifacts(cfg.output_dir);
  artifacts.write("routes.csv", routes);
  artifacts.write("route_failures.csv", failures);
  artifacts.write("duration_histogram.csv", histogram);
  write_json(artifacts.stage("commute_summary.json"), doc);
  artifacts.commit();
}

namespace {

void run_recovery(const PipelineConfig& cfg) {
  const auto truth_path = require_setting(cfg.truth, "recovery", "input.truth");
  GroundTruth truth;
  truth.agents = load_truth_agents(truth_path);
  truth.weekday_count = cfg.window().weekday_count();
  truth.planted_od = planted_od(truth.agents, truth.weekday_count);
  const auto places = read_places_csv(require_input(cfg.output_dir / "places.csv", "recovery", "run infer-places"));
  const auto commuters =
      read_commuters_csv(require_input(cfg.output_dir / "commuters.csv", "recovery", "run build-od"));
  const auto od = read_od_csv(require_input(cfg.output_dir / "od.csv", "recovery", "run build-od"));
  const auto r = score_recovery(truth, places.profiles, commuters, od,
                                RecoveryOptions{cfg.recovery_tolerance_m, cfg.recovery_min_night_pings});
  json doc = {{"agents", r.agents},
              {"eligible_agents", r.eligible},
              {"unrecoverable_agents", r.unrecoverable},
              {"home_recovered", r.home_recovered},
              {"work_recovered", r.work_recovered},
              {"home_recovery_rate", r.home_rate},
              {"work_recovery_rate_given_home", r.work_rate},
              {"commute_day_mae", r.commute_day_mae},
              {"od_pearson_r", r.od_r ? json(*r.od_r) : json(nullptr)},
              {"tolerance_m", cfg.recovery_tolerance_m},
              {"min_night_pings", cfg.recovery_min_night_pings}};
  ArtifactSet artifacts(cfg.output_dir);
  write_json(artifacts.stage("recovery.json"), doc);
  std::string agents = "agent_id,eligible,home_error_m,work_error_m,planted_days,estimated_days\n";
  for (const auto& a : r.per_agent) {
    agents += a.agent_id + "," + (a.eligible ? "1" : "0") + "," + (a.home_error_m ? fmt(*a.home_error_m) : "") + "," +
              (a.work_error_m ? fmt(*a.work_error_m) : "") + "," + std::to_string(a.planted_days) + "," +
              std::to_string(a.estimated_days) + "\n";
  }
  artifacts.write("recovery_agents.csv", agents);
  artifacts.commit();
}

}  // namespace

void run_synth(const PipelineConfig& cfg) {
  const auto world = generate(cfg.synth, cfg.workers);
  const fs::path staging = cfg.output_dir / ".synth.staging";
  fs::remove_all(staging);
  ArtifactSet artifacts(cfg.output_dir);
  write_world(world, cfg.synth, staging);
  for (const auto& name : {"pings.csv", "tracts.geojson", "city.geojson", "truth_agents.csv", "truth_od.csv"}) {
    fs::rename(staging / name, artifacts.stage(name));
  }
  fs::remove_all(staging);
  std::ostringstream conf;
  conf << "# synthetic world inputs; paths are relative to this file\n"
       << "input.pings = pings.csv\n"
       << "input.tracts = tracts.geojson\n"
       << "input.city = city.geojson\n"
       << "input.reference = truth_od.csv\n"
       << "input.truth = truth_agents.csv\n"
       << "window.start_date = " << cfg.synth.first_day << "\n"
       << "window.end_date = " << cfg.synth.last_day << "\n"
       << "window.timezone = " << cfg.synth.timezone << "\n";
  artifacts.write("world.conf", conf.str());
  artifacts.commit();
}

void run_sweep(const PipelineConfig& cfg) {
  const auto pings = require_setting(cfg.pings, "sweep", "input.pings");
  const auto window = cfg.window();
  PingSchema schema = cfg.schema;
  schema.window = window;
  const auto ingest = parse_pings_file(pings, schema, cfg.workers);
  std::optional<FlowReference> reference;
  if (cfg.reference) reference = load_flow_reference(require_setting(cfg.reference, "sweep", "input.reference"));
  std::optional<std::vector<TractGeometry>> tracts;
  if (cfg.tracts && cfg.city) {
    tracts = load_and_filter_tracts(require_setting(cfg.tracts, "sweep", "input.tracts"),
                                    require_setting(cfg.city, "sweep", "input.city"), cfg.min_tract_fraction,
                                    cfg.tract_id_property, cfg.grid_resolution, cfg.workers);
  }

  std::string table = "time_threshold_s,exponent,users,stay_points,users_with_home,commuters,od_pairs,od_total,pearson_r\n";
  for (const auto threshold : cfg.sweep_time_thresholds) {
    StayParams stay = cfg.stay;
    stay.time_threshold_s = threshold;
    auto devices = extract_all(ingest.trajectories, stay, cfg.workers);
    std::int64_t stay_total = 0;
    std::map<std::string, std::vector<StayPoint>> by_device;
    for (const auto& d : devices) {
      stay_total += static_cast<std::int64_t>(d.stays.size());
      by_device[d.device_id] = d.stays;
    }
    for (const int exponent : cfg.sweep_exponents) {
      WorkRules work = cfg.work;
      work.exponent = exponent;
      const auto profiles = infer_all(devices, window.tz(), cfg.home, work, cfg.workers);
      const auto funnel = make_funnel(static_cast<std::int64_t>(devices.size()), profiles);
      std::string od_pairs;
      std::string od_total;
      std::string r;
      if (tracts) {
        const auto commuters = make_commuters(profiles, by_device, window, cfg.commute_radius_m);
        const auto od = build_od(commuters, *tracts).od;
        od_pairs = std::to_string(od.cells.size());
        od_total = fmt(od.total());
        if (reference) {
          try {
            if (const auto c = compare_od(od, *reference, cfg.pair_selection).correlation) r = fmt(c->r);
          } catch (const DataError&) {
          }
        }
      }
      table += std::to_string(threshold) + "," + std::to_string(exponent) + "," + std::to_string(funnel.total_users) +
               "," + std::to_string(stay_total) + "," + std::to_string(funnel.users_with_home) + "," +
               std::to_string(funnel.users_with_home_and_work) + "," + od_pairs + "," + od_total + "," + r + "\n";
    }
  }
  ArtifactSet artifacts(cfg.output_dir);
  artifacts.write("sweep.csv", table);
  artifacts.commit();
}

void run_all(const PipelineConfig& cfg) {
  run_extract_stays(cfg);
  run_infer_places(cfg);
  run_build_od(cfg);
  if (cfg.reference) run_validate(cfg);
  if (cfg.routing.backend != "none") run_route_stats(cfg);
  if (cfg.truth) run_recovery(cfg);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

void run(const std::string& subcommand, const Config& config) {
  const auto cfg = PipelineConfig::from(config);
  fs::create_directories(cfg.output_dir);
  if (subcommand == "extract-stays") {
    run_extract_stays(cfg);
  } else if (subcommand == "infer-places") {
    run_infer_places(cfg);
  } else if (subcommand == "build-od") {
    run_build_od(cfg);
  } else if (subcommand == "validate") {
    run_validate(cfg);
  } else if (subcommand == "route-stats") {
    run_route_stats(cfg);
  } else if (subcommand == "synth") {
    run_synth(cfg);
  } else if (subcommand == "sweep") {
    run_sweep(cfg);
  } else if (subcommand == "all") {
    run_all(cfg);
  } else {
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  }

  open_out(cfg.output_dir / "config.resolved") << config.echo();
  json artifacts = json::array();
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(cfg.output_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name == "run_manifest.json") continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    artifacts.push_back({{"path", f.filename().string()}, {"sha256", sha256_file(f)}, {"bytes", fs::file_size(f)}});
  }
  write_json(cfg.output_dir / "run_manifest.json", {{"subcommand", subcommand}, {"artifacts", artifacts}});
}

}  // namespace commute
