#include "commute/places.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "commute/parallel.hpp"

namespace commute {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

bool in_daily_window(int second_of_day, const DailyWindow& w) {
  if (w.start_s <= w.end_s) return second_of_day >= w.start_s && second_of_day < w.end_s;
  return second_of_day >= w.start_s || second_of_day < w.end_s;
}

}  // namespace

std::int64_t window_overlap(std::int64_t local_begin, std::int64_t local_end, const DailyWindow& window) {
  if (local_end <= local_begin || window.start_s == window.end_s) return 0;
  const std::int64_t span = window.start_s < window.end_s
                                ? window.end_s - window.start_s
                                : kSecondsPerDay - window.start_s + window.end_s;
  std::int64_t total = 0;
  // A wrapped window starting on day d-1 can reach into day d.
  for (std::int64_t day = floor_div(local_begin, kSecondsPerDay) - 1;
       day <= floor_div(local_end, kSecondsPerDay); ++day) {
    const std::int64_t seg_begin = day * kSecondsPerDay + window.start_s;
    const std::int64_t seg_end = seg_begin + span;
    const std::int64_t lo = std::max(seg_begin, local_begin);
    const std::int64_t hi = std::min(seg_end, local_end);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

std::int64_t night_overlap(const StayPoint& stay, const TimeZone& tz, const DailyWindow& window) {
  return window_overlap(local_civil_seconds(stay.arrival_utc, tz),
                        local_civil_seconds(stay.departure_utc, tz), window);
}

std::vector<HomeCandidate> home_candidates(std::span<const StayPoint> stays, const TimeZone& tz,
                                           const HomeRules& rules) {
  std::vector<HomeCandidate> out;
  for (const auto& s : stays) {
    HomeCandidate c{s, night_overlap(s, tz, rules.night), false, false};
    c.by_night = c.night_overlap_s >= rules.min_night_overlap_s;
    c.by_long_stay = s.duration() > rules.long_stay_s;
    if (c.by_night || c.by_long_stay) out.push_back(c);
  }
  return out;
}

std::optional<StayRegion> detect_home(std::span<const StayPoint> stays, const TimeZone& tz,
                                      const HomeRules& rules) {
  std::vector<StayPoint> survivors;
  for (const auto& c : home_candidates(stays, tz, rules)) survivors.push_back(c.stay);
  if (survivors.empty()) return std::nullopt;
  auto regions = cluster_regions(survivors, rules.linkage_m);
  std::size_t best = 0;
  for (std::size_t r = 1; r < regions.size(); ++r) {
    const int n = regions[r].visit_count();
    const int best_n = regions[best].visit_count();
    if (n > best_n || (n == best_n && regions[r].first_arrival() < regions[best].first_arrival())) {
      best = r;
    }
  }
  return std::move(regions[best]);
}

double work_score(int visits, double distance_m, int exponent) {
  return std::pow(static_cast<double>(visits), exponent) * distance_m;
}

std::vector<StayPoint> work_hour_stays(std::span<const StayPoint> stays, const TimeZone& tz,
                                       const WorkRules& rules) {
  std::vector<StayPoint> out;
  for (const auto& s : stays) {
    const LocalTime arrival = to_local(s.arrival_utc, tz);
    if (arrival.is_weekday() && in_daily_window(arrival.seconds_of_day(), rules.hours)) out.push_back(s);
  }
  return out;
}

std::vector<WorkCandidate> work_candidates(std::span<const StayPoint> stays, const StayRegion& home,
                                           const TimeZone& tz, const WorkRules& rules) {
  const auto filtered = work_hour_stays(stays, tz, rules);
  std::vector<WorkCandidate> out;
  for (auto& region : cluster_regions(filtered, rules.linkage_m)) {
    const int n = region.visit_count();
    const double d = haversine_distance(region.centroid, home.centroid);
    out.push_back(WorkCandidate{std::move(region), n, d});
  }
  return out;
}

std::optional<WorkCandidate> pick_work(std::span<const WorkCandidate> candidates, const WorkRules& rules) {
  const WorkCandidate* best = nullptr;
  double best_score = 0.0;
  for (const auto& c : candidates) {
    if (c.distance_m < rules.walking_distance_m || c.visits < rules.min_visits) continue;
    const double score = work_score(c.visits, c.distance_m, rules.exponent);
    bool better = best == nullptr || score > best_score;
    if (!better && score == best_score) {
      better = c.visits > best->visits ||
               (c.visits == best->visits && c.region.first_arrival() < best->region.first_arrival());
    }
    if (better) {
      best = &c;
      best_score = score;
    }
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

std::optional<WorkCandidate> detect_work(std::span<const StayPoint> stays, const StayRegion& home,
                                         const TimeZone& tz, const WorkRules& rules) {
  const auto candidates = work_candidates(stays, home, tz, rules);
  return pick_work(candidates, rules);
}

PlaceProfile infer_places(const std::string& device_id, std::span<const StayPoint> stays,
                          const TimeZone& tz, const HomeRules& home_rules, const WorkRules& work_rules) {
  PlaceProfile profile;
  profile.device_id = device_id;
  profile.score_exponent_used = work_rules.exponent;
  profile.home = detect_home(stays, tz, home_rules);
  if (!profile.home) return profile;
  if (auto work = detect_work(stays, *profile.home, tz, work_rules)) {
    profile.home_work_distance_m = work->distance_m;
    profile.work_visit_count = work->visits;
    profile.work = std::move(work->region);
  }
  return profile;
}

double FunnelReport::home_of_total() const {
  return total_users > 0 ? static_cast<double>(users_with_home) / total_users : 0.0;
}
double FunnelReport::commuters_of_total() const {
  return total_users > 0 ? static_cast<double>(users_with_home_and_work) / total_users : 0.0;
}
double FunnelReport::commuters_of_home() const {
  return users_with_home > 0 ? static_cast<double>(users_with_home_and_work) / users_with_home : 0.0;
}

FunnelReport make_funnel(std::int64_t total_users, std::span<const PlaceProfile> profiles) {
  FunnelReport f;
  f.total_users = total_users;
  for (const auto& p : profiles) {
    if (p.home) ++f.users_with_home;
    if (p.is_commuter()) ++f.users_with_home_and_work;
  }
  return f;
}

std::map<int, double> work_sensitivity(std::span<const DeviceStays> devices, const TimeZone& tz,
                                       const WorkRules& rules, std::span<const int> exponents,
                                       int workers) {
  static constexpr std::array<int, 2> kDefaultExponents{2, 3};
  if (exponents.empty()) exponents = kDefaultExponents;
  std::vector<std::vector<char>> differs(devices.size(), std::vector<char>(exponents.size(), 0));
  std::vector<char> eligible(devices.size(), 0);
  parallel_for(devices.size(), workers, [&](std::size_t i) {
    const auto& dev = devices[i];
    if (!dev.home) return;
    eligible[i] = 1;
    const auto candidates = work_candidates(dev.stays, *dev.home, tz, rules);
    WorkRules base = rules;
    base.exponent = 1;
    const auto reference = pick_work(candidates, base);
    for (std::size_t e = 0; e < exponents.size(); ++e) {
      WorkRules alt = rules;
      alt.exponent = exponents[e];
      const auto other = pick_work(candidates, alt);
      if (reference.has_value() != other.has_value()) {
        differs[i][e] = 1;
      } else if (reference &&
                 haversine_distance(reference->region.centroid, other->region.centroid) > 1.0) {
        differs[i][e] = 1;
      }
    }
  });
  std::int64_t total = 0;
  for (char e : eligible) total += e;
  std::map<int, double> out;
  for (std::size_t e = 0; e < exponents.size(); ++e) {
    std::int64_t count = 0;
    for (const auto& d : differs) count += d[e];
    out[exponents[e]] = total > 0 ? static_cast<double>(count) / static_cast<double>(total) : 0.0;
  }
  return out;
}

}  // namespace commute
