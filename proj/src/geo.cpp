#include "commute/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "commute/error.hpp"

namespace commute {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
// Tolerance (in squared-degree cross-product units) for "point lies on edge".
constexpr double kEdgeEps = 1e-14;

enum class RingSide { Outside, Inside, Boundary };

double cross(const GeoPoint& o, const GeoPoint& a, const GeoPoint& b) {
  return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

bool within_segment_box(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
         p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat);
}

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  return std::abs(cross(a, b, p)) <= kEdgeEps && within_segment_box(p, a, b);
}

RingSide classify(const GeoPoint& p, const Ring& ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const GeoPoint& a = ring[j];
    const GeoPoint& b = ring[i];
    if (on_segment(p, a, b)) return RingSide::Boundary;
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
      if (p.lon < x) inside = !inside;
    }
  }
  return inside ? RingSide::Inside : RingSide::Outside;
}

int orientation(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c) {
  const double v = cross(a, b, c);
  if (std::abs(v) <= kEdgeEps) return 0;
  return v > 0 ? 1 : -1;
}

bool segments_intersect(const GeoPoint& p1, const GeoPoint& p2, const GeoPoint& q1,
                        const GeoPoint& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  if (o1 == 0 && within_segment_box(q1, p1, p2)) return true;
  if (o2 == 0 && within_segment_box(q2, p1, p2)) return true;
  if (o3 == 0 && within_segment_box(p1, q1, q2)) return true;
  if (o4 == 0 && within_segment_box(p2, q1, q2)) return true;
  return false;
}

void validate_ring(const Ring& ring, const char* what) {
  if (ring.size() < 3) {
    throw GeometryError(std::string(what) + " ring has fewer than 3 vertices");
  }
  for (const auto& p : ring) {
    if (!is_valid(p)) throw GeometryError(std::string(what) + " ring has an invalid coordinate");
  }
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (ring[i] == ring[(i + 1) % n]) {
      throw GeometryError(std::string(what) + " ring repeats a vertex");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const GeoPoint& a1 = ring[i];
    const GeoPoint& a2 = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      // Edges sharing a vertex are adjacent, not intersecting.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(a1, a2, ring[j], ring[(j + 1) % n])) {
        throw GeometryError(std::string(what) + " ring self-intersects");
      }
    }
  }
  if (n == 3 && orientation(ring[0], ring[1], ring[2]) == 0) {
    throw GeometryError(std::string(what) + " ring is degenerate (collinear)");
  }
}

}  // namespace

bool is_valid(const GeoPoint& p) {
  return !std::isnan(p.lat) && !std::isnan(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double sin_dphi = std::sin((phi2 - phi1) / 2.0);
  const double sin_dlambda = std::sin((b.lon - a.lon) * kDegToRad / 2.0);
  const double h = sin_dphi * sin_dphi + std::cos(phi1) * std::cos(phi2) * sin_dlambda * sin_dlambda;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

GeoPoint mean_point(std::span<const GeoPoint> points) {
  if (points.empty()) return {};
  double lat = 0.0;
  double lon = 0.0;
  for (const auto& p : points) {
    lat += p.lat;
    lon += p.lon;
  }
  const auto n = static_cast<double>(points.size());
  return {lat / n, lon / n};
}

void validate(const Polygon& poly) {
  validate_ring(poly.exterior, "exterior");
  for (const auto& hole : poly.holes) validate_ring(hole, "hole");
}

void validate(const MultiPolygon& shape) {
  if (shape.empty()) throw GeometryError("empty multipolygon");
  for (const auto& poly : shape) validate(poly);
}

BoundingBox bounding_box(const Polygon& poly) {
  BoundingBox box{90.0, 180.0, -90.0, -180.0};
  for (const auto& p : poly.exterior) {
    box.min_lat = std::min(box.min_lat, p.lat);
    box.max_lat = std::max(box.max_lat, p.lat);
    box.min_lon = std::min(box.min_lon, p.lon);
    box.max_lon = std::max(box.max_lon, p.lon);
  }
  return box;
}

BoundingBox bounding_box(const MultiPolygon& shape) {
  BoundingBox box{90.0, 180.0, -90.0, -180.0};
  for (const auto& poly : shape) {
    const BoundingBox b = bounding_box(poly);
    box.min_lat = std::min(box.min_lat, b.min_lat);
    box.max_lat = std::max(box.max_lat, b.max_lat);
    box.min_lon = std::min(box.min_lon, b.min_lon);
    box.max_lon = std::max(box.max_lon, b.max_lon);
  }
  return box;
}

bool point_in_polygon(const GeoPoint& p, const Polygon& poly) {
  switch (classify(p, poly.exterior)) {
    case RingSide::Outside:
      return false;
    case RingSide::Boundary:
      return true;
    case RingSide::Inside:
      break;
  }
  for (const auto& hole : poly.holes) {
    if (classify(p, hole) == RingSide::Inside) return false;
  }
  return true;
}

bool point_in_polygon(const GeoPoint& p, const MultiPolygon& shape) {
  return std::any_of(shape.begin(), shape.end(),
                     [&](const Polygon& poly) { return point_in_polygon(p, poly); });
}

double area_fraction_inside(const MultiPolygon& subject, const MultiPolygon& container,
                            int grid_resolution) {
  if (grid_resolution < 10) throw ConfigError("grid_resolution must be >= 10");
  if (subject.empty()) throw DegenerateGeometryError("empty subject geometry");
  const BoundingBox box = bounding_box(subject);
  if (!(box.max_lat > box.min_lat) || !(box.max_lon > box.min_lon)) {
    throw DegenerateGeometryError("subject geometry has zero-area bounds");
  }
  const BoundingBox cbox = bounding_box(container);
  const double dlat = (box.max_lat - box.min_lat) / grid_resolution;
  const double dlon = (box.max_lon - box.min_lon) / grid_resolution;
  long in_subject = 0;
  long in_both = 0;
  for (int r = 0; r < grid_resolution; ++r) {
    const double lat = box.min_lat + (r + 0.5) * dlat;
    for (int c = 0; c < grid_resolution; ++c) {
      const GeoPoint p{lat, box.min_lon + (c + 0.5) * dlon};
      if (!point_in_polygon(p, subject)) continue;
      ++in_subject;
      if (cbox.contains(p) && point_in_polygon(p, container)) ++in_both;
    }
  }
  if (in_subject == 0) throw DegenerateGeometryError("subject polygon has no sampled interior");
  return static_cast<double>(in_both) / static_cast<double>(in_subject);
}

double area_fraction_inside(const Polygon& subject, const Polygon& container,
                            int grid_resolution) {
  return area_fraction_inside(MultiPolygon{subject}, MultiPolygon{container}, grid_resolution);
}

Polygon make_rectangle(double min_lat, double min_lon, double max_lat, double max_lon) {
  return Polygon{{{min_lat, min_lon}, {min_lat, max_lon}, {max_lat, max_lon}, {max_lat, min_lon}},
                 {}};
}

}  // namespace commute
