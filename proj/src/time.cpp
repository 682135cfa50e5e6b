#include "commute/time.hpp"

#include <charconv>
#include <cstdio>

#include "commute/error.hpp"

namespace commute {

TimeZone TimeZone::load(const std::string& name) {
  absl::TimeZone zone;
  if (name.empty() || !absl::LoadTimeZone(name, &zone)) {
    throw ConfigError("unknown timezone '" + name + "'");
  }
  return TimeZone(name, zone);
}

LocalTime to_local(EpochSeconds utc, const TimeZone& tz) {
  const absl::CivilSecond cs = absl::ToCivilSecond(absl::FromUnixSeconds(utc), tz.zone());
  LocalTime lt;
  lt.date = absl::CivilDay(cs);
  lt.hour = cs.hour();
  lt.minute = cs.minute();
  lt.second = cs.second();
  lt.weekday = absl::GetWeekday(cs);
  return lt;
}

std::int64_t local_civil_seconds(EpochSeconds utc, const TimeZone& tz) {
  const absl::CivilSecond cs = absl::ToCivilSecond(absl::FromUnixSeconds(utc), tz.zone());
  return cs - absl::CivilSecond(1970, 1, 1, 0, 0, 0);
}

absl::CivilDay parse_date(const std::string& text) {
  absl::CivilDay day;
  if (!absl::ParseCivilTime(text, &day)) throw ConfigError("bad date '" + text + "', want YYYY-MM-DD");
  return day;
}

int parse_clock(const std::string& text) {
  int h = -1;
  int m = -1;
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("bad clock time '" + text + "', want HH:MM");
  const char* b = text.data();
  const char* e = b + text.size();
  auto r1 = std::from_chars(b, b + colon, h);
  auto r2 = std::from_chars(b + colon + 1, e, m);
  if (r1.ec != std::errc() || r1.ptr != b + colon || r2.ec != std::errc() || r2.ptr != e ||
      h < 0 || h > 24 || m < 0 || m > 59 || (h == 24 && m != 0)) {
    throw ConfigError("bad clock time '" + text + "', want HH:MM");
  }
  return h * 3600 + m * 60;
}

std::string format_clock(int seconds_of_day) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", seconds_of_day / 3600, (seconds_of_day / 60) % 60);
  return buf;
}

ObservationWindow::ObservationWindow(EpochSeconds start_utc, EpochSeconds end_utc, TimeZone tz)
    : start_(start_utc), end_(end_utc), tz_(std::move(tz)) {
  if (start_ >= end_) throw ConfigError("observation window start must precede end");
  const absl::CivilDay first = to_local(start_, tz_).date;
  const absl::CivilDay last = to_local(end_ - 1, tz_).date;
  for (absl::CivilDay d = first; d <= last; ++d) {
    const absl::Weekday w = absl::GetWeekday(d);
    if (w != absl::Weekday::saturday && w != absl::Weekday::sunday) ++weekday_count_;
  }
}

ObservationWindow ObservationWindow::from_local_dates(absl::CivilDay first, absl::CivilDay last,
                                                      TimeZone tz) {
  if (last < first) throw ConfigError("observation window end date precedes start date");
  const auto start = absl::ToUnixSeconds(absl::FromCivil(absl::CivilSecond(first), tz.zone()));
  const auto end = absl::ToUnixSeconds(absl::FromCivil(absl::CivilSecond(last + 1), tz.zone()));
  return ObservationWindow(start, end, std::move(tz));
}

}  // namespace commute
