#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "commute/regions.hpp"
#include "commute/stays.hpp"
#include "commute/time.hpp"

namespace commute {

/// A daily recurring local wall-clock window [start, end); wraps past midnight
/// when start > end.
struct DailyWindow {
  int start_s = 20 * 3600;
  int end_s = 5 * 3600;
};

struct HomeRules {
  DailyWindow night{20 * 3600, 5 * 3600};
  std::int64_t min_night_overlap_s = 3 * 3600;
  std::int64_t long_stay_s = 24 * 3600;  // strictly longer qualifies
  double linkage_m = 250.0;
};

struct WorkRules {
  DailyWindow hours{8 * 3600, 18 * 3600};
  double walking_distance_m = 800.0;
  int min_visits = 2;
  int exponent = 1;
  double linkage_m = 250.0;
};

/// Seconds of [arrival, departure] (local wall clock) falling inside the daily
/// window, summed over every day the stay touches.
std::int64_t night_overlap(const StayPoint& stay, const TimeZone& tz,
                           const DailyWindow& window = DailyWindow{});

/// Same, on local civil-second coordinates.
std::int64_t window_overlap(std::int64_t local_begin, std::int64_t local_end, const DailyWindow& window);

/// Which home criterion admitted a stay.
struct HomeCandidate {
  StayPoint stay;
  std::int64_t night_overlap_s = 0;
  bool by_night = false;
  bool by_long_stay = false;
};

/// Stays passing the night-overlap or long-stay filter, in input order.
std::vector<HomeCandidate> home_candidates(std::span<const StayPoint> stays, const TimeZone& tz,
                                           const HomeRules& rules = {});

/// Most-visited region among clustered home candidates; ties go to the region
/// with the earliest first arrival.
std::optional<StayRegion> detect_home(std::span<const StayPoint> stays, const TimeZone& tz,
                                      const HomeRules& rules = {});

struct WorkCandidate {
  StayRegion region;
  int visits = 0;          // n
  double distance_m = 0;   // d, to the home centroid
};

/// Work score n^p * d.
double work_score(int visits, double distance_m, int exponent);

/// Stays arriving on a local Monday-Friday within the work hours, in input order.
std::vector<StayPoint> work_hour_stays(std::span<const StayPoint> stays, const TimeZone& tz,
                                       const WorkRules& rules = {});

/// Clusters work-hour stays into candidates with n and d filled in (no dismissal).
std::vector<WorkCandidate> work_candidates(std::span<const StayPoint> stays, const StayRegion& home,
                                           const TimeZone& tz, const WorkRules& rules = {});

/// Dismisses candidates with d < walking distance or n < min_visits, then takes
/// argmax n^p * d; ties go to larger n, then earlier first arrival.
std::optional<WorkCandidate> pick_work(std::span<const WorkCandidate> candidates, const WorkRules& rules = {});

std::optional<WorkCandidate> detect_work(std::span<const StayPoint> stays, const StayRegion& home,
                                         const TimeZone& tz, const WorkRules& rules = {});

struct PlaceProfile {
  std::string device_id;
  std::optional<StayRegion> home;
  std::optional<StayRegion> work;
  std::optional<double> home_work_distance_m;  // d
  int work_visit_count = 0;                    // n
  int score_exponent_used = 1;

  bool is_commuter() const { return home.has_value() && work.has_value(); }
};

PlaceProfile infer_places(const std::string& device_id, std::span<const StayPoint> stays,
                          const TimeZone& tz, const HomeRules& home_rules = {},
                          const WorkRules& work_rules = {});

struct FunnelReport {
  std::int64_t total_users = 0;
  std::int64_t users_with_home = 0;
  std::int64_t users_with_home_and_work = 0;

  double home_of_total() const;
  double commuters_of_total() const;
  double commuters_of_home() const;
};

FunnelReport make_funnel(std::int64_t total_users, std::span<const PlaceProfile> profiles);

struct DeviceStays {
  std::string device_id;
  std::vector<StayPoint> stays;
  std::optional<StayRegion> home;
};

/// For each exponent in `exponents`, the fraction of devices (with a home) whose
/// selected work region centroid moves by more than 1 m relative to p = 1, or
/// whose presence of a work region changes.
std::map<int, double> work_sensitivity(std::span<const DeviceStays> devices, const TimeZone& tz,
                                       const WorkRules& rules = {},
                                       std::span<const int> exponents = std::span<const int>{},
                                       int workers = 1);

}  // namespace commute
