#include <doctest.h>

#include <random>

#include "commute/error.hpp"
#include "commute/regions.hpp"
#include "commute/stays.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace commute;
using testutil::offset;

namespace {

const GeoPoint kBase{29.76, -95.37};

std::vector<Fix> random_trajectory(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Fix> out;
  GeoPoint here = kBase;
  std::int64_t t = 1501600000;
  for (int k = 0; k < n; ++k) {
    if (u(rng) < 0.15) here = offset(kBase, (u(rng) - 0.5) * 3000, (u(rng) - 0.5) * 3000);
    out.push_back({offset(here, (u(rng) - 0.5) * 300, (u(rng) - 0.5) * 300), t});
    t += 30 + static_cast<std::int64_t>(u(rng) * 600);
  }
  return out;
}

}  // namespace

TEST_CASE("extract_stay_points: fixtures") {
  CHECK(extract_stay_points(std::vector<Fix>{}, {}).empty());

  std::vector<Fix> same;
  for (int k = 0; k < 10; ++k) same.push_back({kBase, 1000 + k * 800});
  auto s = extract_stay_points(same, {250, 1200});
  REQUIRE(s.size() == 1);
  CHECK(haversine_distance(s[0].centroid, kBase) < 1e-6);
  CHECK(s[0].arrival_utc == 1000);
  CHECK(s[0].departure_utc == 1000 + 9 * 800);

  std::vector<Fix> five;
  for (int k = 0; k < 5; ++k) five.push_back({offset(kBase, k * 10.0, 0), k * 600});
  five.push_back({offset(kBase, 1000, 0), 3000});
  s = extract_stay_points(five, {250, 1200});
  REQUIRE(s.size() == 1);
  CHECK(s[0].member_count == 5);
  CHECK(s[0].centroid.lat == doctest::Approx(offset(kBase, 20, 0).lat).epsilon(1e-12));

  for (auto& f : five) f.t /= 4;  // 10 minutes total
  CHECK(extract_stay_points(five, {250, 1200}).empty());

  CHECK_THROWS_AS(extract_stay_points(five, {0, 900}), ConfigError);
  CHECK_THROWS_AS(extract_stay_points(five, {250, 0}), ConfigError);
}

TEST_CASE("extract_stay_points: a failed anchor advances by one ping") {
  // p0 is within 250 m of p1 but not of the rest; p1 anchors the real stay.
  std::vector<Fix> traj{{offset(kBase, 0, 0), 0}, {offset(kBase, 0, 200), 60}};
  for (int k = 0; k < 6; ++k) traj.push_back({offset(kBase, 0, 400), 120 + k * 600});
  const auto s = extract_stay_points(traj, {250, 900});
  REQUIRE(s.size() == 1);
  CHECK(s[0].arrival_utc == 60);
  CHECK(s[0].member_count == 7);
  CHECK(s[0].first_index == 1);
}

TEST_CASE("extract_stay_points: pairwise mode bounds the diameter") {
  // Every ping is within 200 m of the first, but the outer two are 400 m apart.
  const std::vector<Fix> traj{{kBase, 0}, {offset(kBase, 0, 200), 400}, {offset(kBase, 0, -200), 800}};
  const auto anchor = extract_stay_points(traj, {250, 600, RadiusMode::anchor});
  REQUIRE(anchor.size() == 1);
  CHECK(anchor[0].member_count == 3);
  CHECK(extract_stay_points(traj, {250, 600, RadiusMode::pairwise}).empty());
}

TEST_CASE("extract_stay_points matches the pseudocode oracle and its invariants") {
  std::mt19937_64 rng(99);
  for (int inst = 0; inst < 300; ++inst) {
    const auto traj = random_trajectory(rng, 1 + static_cast<int>(rng() % 50));
    const StayParams params{250, 900};
    const auto got = extract_stay_points(traj, params);
    const auto want = oracle::stay_points(traj, 250, 900);
    REQUIRE(got.size() == want.size());
    std::size_t prev_end = 0;
    for (std::size_t k = 0; k < got.size(); ++k) {
      CHECK(got[k].arrival_utc == want[k].arrival);
      CHECK(got[k].departure_utc == want[k].departure);
      CHECK(got[k].member_count == want[k].members);
      CHECK(got[k].first_index == want[k].anchor);
      CHECK(std::abs(got[k].centroid.lat - want[k].lat) < 1e-12);
      CHECK(std::abs(got[k].centroid.lon - want[k].lon) < 1e-12);
      CHECK(got[k].duration() >= 900);
      CHECK(got[k].first_index >= prev_end);  // disjoint, in order
      prev_end = got[k].first_index + got[k].member_count;
      for (std::size_t m = got[k].first_index; m < prev_end; ++m) {
        CHECK(haversine_distance(traj[got[k].first_index].location, traj[m].location) <= 250);
      }
    }
  }
}

TEST_CASE("stay count is non-increasing in the time threshold on dwell/travel trajectories") {
  std::mt19937_64 rng(123);
  for (int inst = 0; inst < 2000; ++inst) {
    const auto traj = testutil::dwell_travel_trajectory(rng, 1 + static_cast<int>(rng() % 50), 30.0);
    std::size_t last = SIZE_MAX;
    for (std::int64_t T : {60, 300, 600, 900, 1200, 1800, 2700, 3600}) {
      const auto count = extract_stay_points(traj, {250, T}).size();
      CHECK(count <= last);
      last = count;
    }
  }
}

TEST_CASE("anchor scan is not monotone in the time threshold on adversarial scatter") {
  // Seven pings scattered inside a 400 m box. At T = 100 s the first anchor
  // qualifies and swallows p0..p2; at T = 200 s it fails, the anchor steps to
  // p1, and the remaining pings split into three stays.
  const std::vector<std::pair<double, double>> east_north{{0, 50},    {150, 150}, {300, 200}, {400, 200},
                                                          {300, 300}, {150, 150}, {150, 0}};
  const std::vector<std::int64_t> t{0, 100, 500, 900, 1600, 2400, 2700};
  std::vector<Fix> traj;
  for (std::size_t k = 0; k < t.size(); ++k) traj.push_back({offset(kBase, east_north[k].second, east_north[k].first), t[k]});
  CHECK(extract_stay_points(traj, {250, 100}).size() == 2);
  CHECK(extract_stay_points(traj, {250, 200}).size() == 3);
  CHECK(oracle::stay_points(traj, 250, 200).size() == 3);
}

TEST_CASE("cluster_regions: fixtures") {
  const auto one = cluster_regions(std::vector<StayPoint>{testutil::stay_at(kBase, 0, 1000)});
  REQUIRE(one.size() == 1);
  CHECK(one[0].visit_count() == 1);

  auto pair = [](double meters) {
    return cluster_regions(std::vector<StayPoint>{testutil::stay_at(kBase, 0, 10),
                                                  testutil::stay_at(offset(kBase, 0, meters), 20, 30)});
  };
  CHECK(pair(100).size() == 1);
  CHECK(pair(300).size() == 2);

  const std::vector<GeoPoint> line{kBase, offset(kBase, 0, 200), offset(kBase, 0, 400)};
  CHECK(complete_linkage_labels(line, 250) == std::vector<int>{0, 0, 1});
  CHECK(cluster_regions(std::vector<StayPoint>{}).empty());
}

TEST_CASE("complete linkage matches the brute-force oracle with its postconditions") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int inst = 0; inst < 60; ++inst) {
    const int n = 1 + static_cast<int>(rng() % 120);
    const double spread = 300 + u(rng) * 2500;
    std::vector<GeoPoint> pts;
    for (int k = 0; k < n; ++k) pts.push_back(offset(kBase, u(rng) * spread, u(rng) * spread));
    const auto labels = complete_linkage_labels(pts, 250);
    const auto want = oracle::complete_linkage_partition(
        n, 250, [&](int a, int b) { return haversine_distance(pts[a], pts[b]); });
    CHECK(oracle::partition_from_labels(labels) == want);
    // Partition: labels 0..k-1, first appearance in order.
    int next = 0;
    for (int l : labels) {
      CHECK(l <= next);
      if (l == next) ++next;
    }
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (labels[a] == labels[b]) CHECK(haversine_distance(pts[a], pts[b]) <= 250);
  }
}

TEST_CASE("cluster_regions: region sizes are robust to input shuffling") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  int eligible = 0, changed = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 2 + static_cast<int>(rng() % 40);
    std::vector<GeoPoint> pts;
    for (int k = 0; k < 3; ++k) {
      const auto centre = offset(kBase, u(rng) * 5000, u(rng) * 5000);
      for (int m = 0; m < n / 3 + 1; ++m) pts.push_back(offset(centre, (u(rng) - 0.5) * 150, (u(rng) - 0.5) * 150));
    }
    bool near_threshold = false;
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b)
        near_threshold |= std::abs(haversine_distance(pts[a], pts[b]) - 250) < 1e-6;
    if (near_threshold) continue;
    ++eligible;
    auto sizes = [](const std::vector<int>& labels) {
      std::map<int, int> count;
      for (int l : labels) ++count[l];
      std::multiset<int> out;
      for (auto& [l, c] : count) out.insert(c);
      return out;
    };
    auto shuffled = pts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    if (sizes(complete_linkage_labels(pts, 250)) != sizes(complete_linkage_labels(shuffled, 250))) ++changed;
  }
  CHECK(eligible > 100);
  CHECK(changed < 0.01 * eligible + 1e-9);
}
