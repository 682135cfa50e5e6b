#pragma once

#include <cstdint>
#include <string>

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

namespace commute {

/// Seconds since the Unix epoch, UTC.
using EpochSeconds = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

/// An IANA timezone loaded from the system zoneinfo database.
class TimeZone {
 public:
  /// Throws ConfigError for an unknown identifier.
  static TimeZone load(const std::string& name);

  const std::string& name() const { return name_; }
  const absl::TimeZone& zone() const { return zone_; }

 private:
  TimeZone(std::string name, absl::TimeZone zone) : name_(std::move(name)), zone_(zone) {}

  std::string name_;
  absl::TimeZone zone_;
};

/// Wall-clock view of an instant in some zone.
struct LocalTime {
  absl::CivilDay date;
  int hour = 0;
  int minute = 0;
  int second = 0;
  absl::Weekday weekday = absl::Weekday::monday;

  bool is_weekday() const {
    return weekday != absl::Weekday::saturday && weekday != absl::Weekday::sunday;
  }
  int seconds_of_day() const { return hour * 3600 + minute * 60 + second; }
};

LocalTime to_local(EpochSeconds utc, const TimeZone& tz);

/// Local wall-clock seconds counted from 1970-01-01 00:00 local. Differences of
/// these values measure wall-clock spans, not elapsed time.
std::int64_t local_civil_seconds(EpochSeconds utc, const TimeZone& tz);

/// Parses "YYYY-MM-DD". Throws ConfigError.
absl::CivilDay parse_date(const std::string& text);
/// Parses "HH:MM" into seconds of day in [0, 86400]. Throws ConfigError.
int parse_clock(const std::string& text);
std::string format_clock(int seconds_of_day);

/// Half-open UTC interval [start_utc, end_utc) interpreted in a local timezone.
class ObservationWindow {
 public:
  ObservationWindow(EpochSeconds start_utc, EpochSeconds end_utc, TimeZone tz);

  /// Window covering the local calendar days first..last inclusive.
  static ObservationWindow from_local_dates(absl::CivilDay first, absl::CivilDay last, TimeZone tz);

  EpochSeconds start_utc() const { return start_; }
  EpochSeconds end_utc() const { return end_; }
  const TimeZone& tz() const { return tz_; }
  bool contains(EpochSeconds t) const { return t >= start_ && t < end_; }

  /// Local Monday-Friday dates intersecting the window.
  int weekday_count() const { return weekday_count_; }

 private:
  EpochSeconds start_;
  EpochSeconds end_;
  TimeZone tz_;
  int weekday_count_ = 0;
};

}  // namespace commute
