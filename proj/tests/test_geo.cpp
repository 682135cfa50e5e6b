#include <doctest.h>

#include <random>

#include "commute/error.hpp"
#include "commute/geo.hpp"
#include "oracles.hpp"

using namespace commute;

TEST_CASE("haversine: one degree of longitude on the equator") {
  const double d = haversine_distance({0, 0}, {0, 1});
  CHECK(d == doctest::Approx(111195.08).epsilon(1e-5));
  CHECK(std::abs(d - kEarthRadiusM * M_PI / 180.0) < 1e-6);
}

TEST_CASE("haversine: identity and symmetry") {
  const GeoPoint a{29.76, -95.37}, b{29.70, -95.40};
  CHECK(haversine_distance(a, a) == 0.0);
  CHECK(haversine_distance(a, b) == haversine_distance(b, a));
  CHECK(haversine_distance(a, b) > 0.0);
}

TEST_CASE("haversine: metric on random triples and agrees with the vector oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lat(-80, 80), lon(-180, 180), small(-0.2, 0.2);
  for (int k = 0; k < 2000; ++k) {
    const GeoPoint a{lat(rng), lon(rng)};
    const GeoPoint b = k % 2 ? GeoPoint{a.lat + small(rng), a.lon + small(rng)} : GeoPoint{lat(rng), lon(rng)};
    const GeoPoint c{lat(rng), lon(rng)};
    const double ab = haversine_distance(a, b), bc = haversine_distance(b, c), ac = haversine_distance(a, c);
    CHECK(ac <= (ab + bc) * (1 + 1e-9));
    CHECK(ab == doctest::Approx(oracle::great_circle_m(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("is_valid rejects out-of-range and NaN") {
  CHECK(is_valid({90, 180}));
  CHECK_FALSE(is_valid({90.1, 0}));
  CHECK_FALSE(is_valid({0, -180.5}));
  CHECK_FALSE(is_valid({std::nan(""), 0}));
}

TEST_CASE("point_in_polygon: square with a hole, boundary counts as inside") {
  Polygon sq = make_rectangle(0, 0, 10, 10);
  sq.holes.push_back(make_rectangle(4, 4, 6, 6).exterior);
  CHECK(point_in_polygon({1, 1}, sq));
  CHECK_FALSE(point_in_polygon({5, 5}, sq));
  CHECK_FALSE(point_in_polygon({11, 5}, sq));
  CHECK(point_in_polygon({0, 5}, sq));   // exterior edge
  CHECK(point_in_polygon({10, 10}, sq)); // vertex
  CHECK(point_in_polygon({4, 5}, sq));   // hole edge
}

TEST_CASE("point_in_polygon: multipolygon containment is any part") {
  MultiPolygon parts{make_rectangle(0, 0, 1, 1), make_rectangle(2, 2, 3, 3)};
  CHECK(point_in_polygon({0.5, 0.5}, parts));
  CHECK(point_in_polygon({2.5, 2.5}, parts));
  CHECK_FALSE(point_in_polygon({1.5, 1.5}, parts));
}

TEST_CASE("point_in_polygon agrees with the winding-number oracle off the boundary") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  int checked = 0;
  for (int poly_i = 0; poly_i < 200; ++poly_i) {
    // Random star-shaped (hence simple) polygon around the origin.
    const int n = 3 + static_cast<int>(u(rng) * 20);
    std::vector<double> angles;
    for (int k = 0; k < n; ++k) angles.push_back(u(rng) * 2 * M_PI);
    std::sort(angles.begin(), angles.end());
    Polygon poly;
    for (double a : angles) {
      const double r = 0.2 + u(rng);
      poly.exterior.push_back({r * std::sin(a), r * std::cos(a)});
    }
    if (u(rng) < 0.3) poly.holes.push_back(make_rectangle(-0.05, -0.05, 0.05, 0.05).exterior);
    for (int q = 0; q < 200; ++q) {
      const GeoPoint p{u(rng) * 2.6 - 1.3, u(rng) * 2.6 - 1.3};
      CHECK(point_in_polygon(p, poly) == oracle::inside_by_winding(p, poly));
      ++checked;
    }
  }
  CHECK(checked == 40000);
}

TEST_CASE("validate rejects degenerate and self-intersecting rings") {
  Polygon few;
  few.exterior = {{0, 0}, {1, 1}};
  CHECK_THROWS_AS(validate(few), GeometryError);
  Polygon bowtie;
  bowtie.exterior = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  CHECK_THROWS_AS(validate(bowtie), GeometryError);
  Polygon repeated;
  repeated.exterior = {{0, 0}, {0, 0}, {1, 0}, {1, 1}};
  CHECK_THROWS_AS(validate(repeated), GeometryError);
  Polygon flat;
  flat.exterior = {{0, 0}, {1, 1}, {2, 2}};
  CHECK_THROWS_AS(validate(flat), GeometryError);
  Polygon bad_coord = make_rectangle(0, 0, 1, 1);
  bad_coord.exterior[1].lat = 95;
  CHECK_THROWS_AS(validate(bad_coord), GeometryError);
  CHECK_NOTHROW(validate(make_rectangle(29, -95, 30, -94)));
}

TEST_CASE("area_fraction_inside: analytic rectangle overlaps") {
  CHECK(area_fraction_inside(make_rectangle(0, 0, 1, 1), make_rectangle(-1, -1, 2, 2)) == 1.0);
  CHECK(area_fraction_inside(make_rectangle(0, 0, 1, 1), make_rectangle(5, 5, 6, 6)) == 0.0);
  CHECK(area_fraction_inside(make_rectangle(0, 0, 1, 1), make_rectangle(0, 0.5, 1, 2)) == 0.5);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 200; ++k) {
    oracle::Rect s{u(rng), u(rng), 0, 0}, c{u(rng) * 0.8, u(rng) * 0.8, 0, 0};
    s.max_lat = s.min_lat + 0.05 + u(rng);
    s.max_lon = s.min_lon + 0.05 + u(rng);
    c.max_lat = c.min_lat + 0.05 + u(rng);
    c.max_lon = c.min_lon + 0.05 + u(rng);
    const double got = area_fraction_inside(make_rectangle(s.min_lat, s.min_lon, s.max_lat, s.max_lon),
                                            make_rectangle(c.min_lat, c.min_lon, c.max_lat, c.max_lon), 200);
    CHECK(std::abs(got - oracle::rect_overlap_fraction(s, c)) <= 2.0 / 200);
  }
}

TEST_CASE("area_fraction_inside: errors") {
  CHECK_THROWS_AS(area_fraction_inside(make_rectangle(0, 0, 1, 1), make_rectangle(0, 0, 1, 1), 5), ConfigError);
  Polygon flat;
  flat.exterior = {{0, 0}, {0, 1}, {0, 2}};
  CHECK_THROWS_AS(area_fraction_inside(flat, make_rectangle(0, 0, 1, 1), 10), DegenerateGeometryError);
  CHECK_THROWS_AS(area_fraction_inside(MultiPolygon{}, MultiPolygon{make_rectangle(0, 0, 1, 1)}),
                  DegenerateGeometryError);
}
