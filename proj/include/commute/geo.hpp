#pragma once

#include <span>
#include <vector>

namespace commute {

/// Mean Earth radius (IUGG), meters.
inline constexpr double kEarthRadiusM = 6371008.8;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// True when lat in [-90, 90], lon in [-180, 180] and neither is NaN.
bool is_valid(const GeoPoint& p);

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double haversine_distance(const GeoPoint& a, const GeoPoint& b);

/// Arithmetic mean of latitudes and longitudes. Empty input yields {0, 0}.
GeoPoint mean_point(std::span<const GeoPoint> points);

/// Closed ring; the closing vertex is implicit and must not be repeated.
using Ring = std::vector<GeoPoint>;

struct BoundingBox {
  double min_lat, min_lon, max_lat, max_lon;

  bool contains(const GeoPoint& p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
};

struct Polygon {
  Ring exterior;
  std::vector<Ring> holes;
};

/// A union of polygons; containment means containment in any part.
using MultiPolygon = std::vector<Polygon>;

/// Throws GeometryError when a ring has fewer than three distinct vertices,
/// invalid coordinates, or self-intersects.
void validate(const Polygon& poly);
void validate(const MultiPolygon& shape);

BoundingBox bounding_box(const Polygon& poly);
BoundingBox bounding_box(const MultiPolygon& shape);

/// Even-odd containment in planar (lon, lat) space. Points on an edge count as
/// inside, including points on a hole's edge.
bool point_in_polygon(const GeoPoint& p, const Polygon& poly);
bool point_in_polygon(const GeoPoint& p, const MultiPolygon& shape);

/// Fraction of the subject's area that lies inside the container, estimated on a
/// grid_resolution x grid_resolution lattice of cell centers over the subject's
/// bounding box. Throws DegenerateGeometryError when no sample lands in the
/// subject and ConfigError when grid_resolution < 10.
double area_fraction_inside(const MultiPolygon& subject, const MultiPolygon& container,
                            int grid_resolution = 200);
double area_fraction_inside(const Polygon& subject, const Polygon& container,
                            int grid_resolution = 200);

/// Axis-aligned rectangle as a polygon, counter-clockwise from the south-west corner.
Polygon make_rectangle(double min_lat, double min_lon, double max_lat, double max_lon);

}  // namespace commute
