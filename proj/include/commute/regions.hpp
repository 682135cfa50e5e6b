#pragma once

#include <span>
#include <vector>

#include "commute/geo.hpp"
#include "commute/stays.hpp"

namespace commute {

/// A complete-linkage cluster of one device's stay points.
struct StayRegion {
  GeoPoint centroid;               // mean of member centroids
  std::vector<StayPoint> members;  // in input order

  int visit_count() const { return static_cast<int>(members.size()); }
  EpochSeconds first_arrival() const;
};

/// Cluster label for each point (labels are 0..k-1, numbered by each cluster's
/// smallest member index). Agglomerates singletons, always merging the pair of
/// clusters with the smallest complete-linkage (max pairwise haversine)
/// distance, while that distance is <= threshold_m. Ties go to the
/// lexicographically smallest (lower, higher) cluster index, where a cluster's
/// index is its smallest member index.
std::vector<int> complete_linkage_labels(std::span<const GeoPoint> points, double threshold_m);

/// Stay regions ordered by their smallest member index.
std::vector<StayRegion> cluster_regions(std::span<const StayPoint> stays, double linkage_threshold_m = 250.0);

}  // namespace commute
