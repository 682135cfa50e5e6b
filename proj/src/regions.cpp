#include "commute/regions.hpp"

#include <algorithm>
#include <limits>

#include <Eigen/Dense>

#include "commute/error.hpp"

namespace commute {

EpochSeconds StayRegion::first_arrival() const {
  EpochSeconds first = std::numeric_limits<EpochSeconds>::max();
  for (const auto& s : members) first = std::min(first, s.arrival_utc);
  return first;
}

std::vector<int> complete_linkage_labels(std::span<const GeoPoint> points, double threshold_m) {
  if (!(threshold_m > 0.0)) throw ConfigError("linkage threshold must be positive");
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n == 0) return {};

  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dist(i, j) = dist(j, i) = haversine_distance(points[i], points[j]);
    }
  }

  // Slot k holds the cluster whose smallest member is k; merged clusters keep
  // the lower slot, so slot order is the tie-break order.
  std::vector<Eigen::Index> parent(n);
  for (Eigen::Index i = 0; i < n; ++i) parent[i] = i;
  std::vector<Eigen::Index> active(n);
  for (Eigen::Index i = 0; i < n; ++i) active[i] = i;

  while (active.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_a = 0;
    std::size_t best_b = 0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const Eigen::Index ia = active[a];
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const double d = dist(ia, active[b]);
        if (d < best) {
          best = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best > threshold_m) break;
    const Eigen::Index keep = active[best_a];
    const Eigen::Index drop = active[best_b];
    // Complete linkage: Lance-Williams update is the elementwise max.
    dist.col(keep) = dist.col(keep).cwiseMax(dist.col(drop));
    dist.row(keep) = dist.col(keep).transpose();
    parent[drop] = keep;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
  }

  std::vector<int> slot_label(n, -1);
  for (std::size_t k = 0; k < active.size(); ++k) slot_label[active[k]] = static_cast<int>(k);
  std::vector<int> labels(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index root = i;
    while (parent[root] != root) root = parent[root];
    labels[i] = slot_label[root];
  }
  return labels;
}

std::vector<StayRegion> cluster_regions(std::span<const StayPoint> stays, double linkage_threshold_m) {
  std::vector<GeoPoint> centroids;
  centroids.reserve(stays.size());
  for (const auto& s : stays) centroids.push_back(s.centroid);
  const auto labels = complete_linkage_labels(centroids, linkage_threshold_m);

  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<StayRegion> regions(k);
  std::vector<std::vector<GeoPoint>> member_points(k);
  for (std::size_t i = 0; i < stays.size(); ++i) {
    regions[labels[i]].members.push_back(stays[i]);
    member_points[labels[i]].push_back(stays[i].centroid);
  }
  for (int r = 0; r < k; ++r) regions[r].centroid = mean_point(member_points[r]);
  return regions;
}

}  // namespace commute
