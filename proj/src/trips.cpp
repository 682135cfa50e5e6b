#include "commute/trips.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "commute/error.hpp"
#include "commute/parallel.hpp"

namespace commute {

int count_commute_days(std::span<const StayPoint> stays, const GeoPoint& work, double radius_m,
                       const ObservationWindow& window) {
  std::set<absl::CivilDay> days;
  for (const auto& s : stays) {
    if (!window.contains(s.arrival_utc)) continue;
    if (haversine_distance(s.centroid, work) > radius_m) continue;
    const LocalTime arrival = to_local(s.arrival_utc, window.tz());
    if (arrival.is_weekday()) days.insert(arrival.date);
  }
  return static_cast<int>(days.size());
}

double avg_daily_trips(int commute_days, int weekday_count) {
  if (weekday_count <= 0) throw ConfigError("observation window contains no weekdays");
  return static_cast<double>(commute_days) / static_cast<double>(weekday_count);
}

namespace {

using nlohmann::json;

Ring parse_ring(const json& coords, const std::string& id) {
  if (!coords.is_array()) throw GeometryError("feature " + id + ": ring is not an array");
  Ring ring;
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw GeometryError("feature " + id + ": bad position");
    }
    ring.push_back(GeoPoint{pos[1].get<double>(), pos[0].get<double>()});
  }
  if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
  return ring;
}

Polygon parse_polygon(const json& rings, const std::string& id) {
  if (!rings.is_array() || rings.empty()) throw GeometryError("feature " + id + ": empty polygon");
  Polygon poly;
  poly.exterior = parse_ring(rings[0], id);
  for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(parse_ring(rings[i], id));
  return poly;
}

MultiPolygon parse_geometry(const json& geom, const std::string& id) {
  if (!geom.is_object() || !geom.contains("type") || !geom.contains("coordinates")) {
    throw GeometryError("feature " + id + ": missing geometry");
  }
  const auto type = geom["type"].get<std::string>();
  MultiPolygon shape;
  if (type == "Polygon") {
    shape.push_back(parse_polygon(geom["coordinates"], id));
  } else if (type == "MultiPolygon") {
    for (const auto& rings : geom["coordinates"]) shape.push_back(parse_polygon(rings, id));
  } else {
    throw GeometryError("feature " + id + ": unsupported geometry type " + type);
  }
  try {
    validate(shape);
  } catch (const GeometryError& e) {
    throw GeometryError("feature " + id + ": " + e.what());
  }
  return shape;
}

}  // namespace

std::vector<GeoFeature> load_geojson_features(const std::filesystem::path& path,
                                              const std::string& id_property) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  std::vector<json> features;
  if (doc.value("type", "") == "FeatureCollection") {
    features = doc.at("features").get<std::vector<json>>();
  } else if (doc.value("type", "") == "Feature") {
    features.push_back(doc);
  } else {
    throw ConfigError(path.string() + ": expected a GeoJSON FeatureCollection");
  }
  std::vector<GeoFeature> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    std::string id = "#" + std::to_string(i);
    if (f.contains("properties") && f["properties"].is_object() && f["properties"].contains(id_property)) {
      const auto& v = f["properties"][id_property];
      id = v.is_string() ? v.get<std::string>() : v.dump();
    }
    out.push_back(GeoFeature{id, parse_geometry(f.value("geometry", json{}), id)});
  }
  return out;
}

std::vector<TractGeometry> filter_tracts(std::vector<GeoFeature> tracts, const MultiPolygon& city,
                                         double min_fraction, int grid_resolution, int workers) {
  std::vector<TractGeometry> out(tracts.size());
  parallel_for(tracts.size(), workers, [&](std::size_t i) {
    auto& t = out[i];
    t.tract_id = std::move(tracts[i].id);
    t.geometry = std::move(tracts[i].geometry);
    t.bounds = bounding_box(t.geometry);
    try {
      t.area_fraction_in_city = area_fraction_inside(t.geometry, city, grid_resolution);
    } catch (const DegenerateGeometryError& e) {
      throw DegenerateGeometryError("tract " + t.tract_id + ": " + e.what());
    }
    t.included = t.area_fraction_in_city >= min_fraction;
  });
  return out;
}

std::vector<TractGeometry> load_and_filter_tracts(const std::filesystem::path& tract_file,
                                                  const std::filesystem::path& city_file,
                                                  double min_fraction, const std::string& id_property,
                                                  int grid_resolution, int workers) {
  auto tracts = load_geojson_features(tract_file, id_property);
  MultiPolygon city;
  for (auto& f : load_geojson_features(city_file, id_property)) {
    for (auto& poly : f.geometry) city.push_back(std::move(poly));
  }
  if (city.empty()) throw ConfigError(city_file.string() + ": no city boundary polygons");
  return filter_tracts(std::move(tracts), city, min_fraction, grid_resolution, workers);
}

double ODMatrix::total() const {
  double sum = 0.0;
  for (const auto& [pair, trips] : cells) sum += trips;
  return sum;
}

TractLocator::TractLocator(std::span<const TractGeometry> tracts) : tracts_(tracts) {
  for (std::size_t i = 0; i < tracts.size(); ++i) {
    if (tracts[i].included) included_.push_back(i);
  }
}

std::ptrdiff_t TractLocator::locate(const GeoPoint& p) const {
  std::ptrdiff_t found = -1;
  for (std::size_t i : included_) {
    const auto& t = tracts_[i];
    if (!t.bounds.contains(p) || !point_in_polygon(p, t.geometry)) continue;
    if (found >= 0) {
      throw DataError("point (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) +
                      ") lies in overlapping tracts " + tracts_[found].tract_id + " and " + t.tract_id);
    }
    found = static_cast<std::ptrdiff_t>(i);
  }
  return found;
}

ODResult build_od(std::span<const CommuterRecord> commuters, std::span<const TractGeometry> tracts) {
  ODResult result;
  const TractLocator locator(tracts);
  for (const auto& c : commuters) {
    const auto home = locator.locate(c.home);
    if (home < 0) {
      ++result.excluded.home_outside;
      continue;
    }
    const auto work = locator.locate(c.work);
    if (work < 0) {
      ++result.excluded.work_outside;
      continue;
    }
    CommuterRecord assigned = c;
    assigned.home_tract = tracts[home].tract_id;
    assigned.work_tract = tracts[work].tract_id;
    if (assigned.avg_daily_trips > 0.0) {
      result.od.cells[{assigned.home_tract, assigned.work_tract}] += assigned.avg_daily_trips;
    }
    result.assigned.push_back(std::move(assigned));
  }
  return result;
}

}  // namespace commute
