#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "commute/geo.hpp"
#include "commute/ingest.hpp"
#include "commute/time.hpp"

namespace commute {

/// A stationary episode: a contiguous run of pings near an anchor ping that
/// lasts at least the time threshold.
struct StayPoint {
  GeoPoint centroid;
  EpochSeconds arrival_utc = 0;
  EpochSeconds departure_utc = 0;
  int member_count = 1;
  /// Index of the first (anchor) member in the source trajectory. Not persisted.
  std::size_t first_index = 0;

  EpochSeconds duration() const { return departure_utc - arrival_utc; }
};

enum class RadiusMode {
  /// Every member within the radius of the group's first ping.
  anchor,
  /// Every pair of members within the radius (diameter semantics).
  pairwise,
};

struct StayParams {
  double dist_threshold_m = 250.0;
  std::int64_t time_threshold_s = 900;
  RadiusMode mode = RadiusMode::anchor;
};

/// Anchor scan over a time-ordered trajectory. From anchor i, extend j while
/// p_j stays within the radius; if the group i..j-1 spans at least the time
/// threshold it becomes a stay point and scanning resumes at j, otherwise the
/// anchor moves to i+1. Throws ConfigError for non-positive thresholds.
std::vector<StayPoint> extract_stay_points(std::span<const Fix> trajectory, const StayParams& params);

}  // namespace commute
