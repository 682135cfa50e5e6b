#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "commute/geo.hpp"
#include "commute/stays.hpp"
#include "commute/time.hpp"

namespace commute {

/// Distinct local weekdays inside the window with at least one stay (dated by
/// its local arrival) whose centroid lies within radius_m of work.
int count_commute_days(std::span<const StayPoint> stays, const GeoPoint& work, double radius_m,
                       const ObservationWindow& window);

/// commute_days / weekday_count. Throws ConfigError when weekday_count <= 0.
double avg_daily_trips(int commute_days, int weekday_count);

struct TractGeometry {
  std::string tract_id;
  MultiPolygon geometry;
  BoundingBox bounds{};
  double area_fraction_in_city = 0.0;
  bool included = false;
};

/// Polygon / MultiPolygon features of a GeoJSON FeatureCollection.
struct GeoFeature {
  std::string id;  // value of the id property, or "#<index>" when absent
  MultiPolygon geometry;
};

/// Throws ConfigError if unreadable and GeometryError (naming the feature)
/// for invalid geometry.
std::vector<GeoFeature> load_geojson_features(const std::filesystem::path& path,
                                              const std::string& id_property = "GEOID");

/// Annotates every tract with the fraction of its area inside the city
/// (union of all city features) and marks it included when >= min_fraction.
std::vector<TractGeometry> filter_tracts(std::vector<GeoFeature> tracts, const MultiPolygon& city,
                                         double min_fraction = 0.5, int grid_resolution = 200,
                                         int workers = 1);

std::vector<TractGeometry> load_and_filter_tracts(const std::filesystem::path& tract_file,
                                                  const std::filesystem::path& city_file,
                                                  double min_fraction = 0.5,
                                                  const std::string& id_property = "GEOID",
                                                  int grid_resolution = 200, int workers = 1);

struct CommuterRecord {
  std::string device_id;
  GeoPoint home;
  GeoPoint work;
  int commute_days = 0;
  int weekday_count = 0;
  double avg_daily_trips = 0.0;
  std::string home_tract;  // filled by build_od
  std::string work_tract;
};

using TractPair = std::pair<std::string, std::string>;

/// Sparse origin-destination table; iteration is lexicographic by (origin, dest).
struct ODMatrix {
  std::map<TractPair, double> cells;

  double total() const;
};

struct ODExclusions {
  std::int64_t home_outside = 0;  // home in no included tract
  std::int64_t work_outside = 0;  // work in no included tract (home inside)
  std::int64_t total() const { return home_outside + work_outside; }
};

struct ODResult {
  ODMatrix od;
  ODExclusions excluded;
  std::vector<CommuterRecord> assigned;  // commuters that contributed, tracts filled in
};

/// Index of the single included tract containing p, or -1. Throws DataError
/// naming both tracts when p lies in two included tracts.
class TractLocator {
 public:
  explicit TractLocator(std::span<const TractGeometry> tracts);
  std::ptrdiff_t locate(const GeoPoint& p) const;

 private:
  std::span<const TractGeometry> tracts_;
  std::vector<std::size_t> included_;
};

/// Assigns home and work to included tracts and sums avg_daily_trips per cell.
/// Zero-valued cells are omitted.
ODResult build_od(std::span<const CommuterRecord> commuters, std::span<const TractGeometry> tracts);

}  // namespace commute
