#include "commute/stays.hpp"

#include "commute/error.hpp"

namespace commute {
namespace {

std::size_t group_end_anchor(std::span<const Fix> tr, std::size_t i, double radius) {
  std::size_t j = i + 1;
  while (j < tr.size() && haversine_distance(tr[i].location, tr[j].location) <= radius) ++j;
  return j;
}

std::size_t group_end_pairwise(std::span<const Fix> tr, std::size_t i, double radius) {
  std::size_t j = i + 1;
  for (; j < tr.size(); ++j) {
    bool fits = true;
    for (std::size_t k = i; k < j && fits; ++k) {
      fits = haversine_distance(tr[k].location, tr[j].location) <= radius;
    }
    if (!fits) break;
  }
  return j;
}

}  // namespace

std::vector<StayPoint> extract_stay_points(std::span<const Fix> trajectory, const StayParams& params) {
  if (!(params.dist_threshold_m > 0.0) || params.time_threshold_s <= 0) {
    throw ConfigError("stay thresholds must be positive");
  }
  std::vector<StayPoint> stays;
  const std::size_t n = trajectory.size();
  std::size_t i = 0;
  while (i < n) {
    const std::size_t j = params.mode == RadiusMode::anchor
                              ? group_end_anchor(trajectory, i, params.dist_threshold_m)
                              : group_end_pairwise(trajectory, i, params.dist_threshold_m);
    if (trajectory[j - 1].t - trajectory[i].t >= params.time_threshold_s) {
      double lat = 0.0;
      double lon = 0.0;
      for (std::size_t k = i; k < j; ++k) {
        lat += trajectory[k].location.lat;
        lon += trajectory[k].location.lon;
      }
      const auto count = static_cast<double>(j - i);
      stays.push_back(StayPoint{{lat / count, lon / count},
                                trajectory[i].t,
                                trajectory[j - 1].t,
                                static_cast<int>(j - i),
                                i});
      i = j;
    } else {
      ++i;
    }
  }
  return stays;
}

}  // namespace commute
