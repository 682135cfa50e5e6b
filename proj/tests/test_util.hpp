#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <absl/time/time.h>

#include "commute/geo.hpp"
#include "commute/ingest.hpp"
#include "commute/stays.hpp"
#include "commute/time.hpp"

namespace testutil {

/// A fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("commute_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& path, const std::string& content) {
  std::ofstream(path, std::ios::binary) << content;
}

/// UTC epoch seconds of a local wall-clock time.
inline commute::EpochSeconds local_epoch(const commute::TimeZone& tz, int y, int m, int d, int hh, int mm = 0) {
  return absl::ToUnixSeconds(absl::FromCivil(absl::CivilSecond(y, m, d, hh, mm, 0), tz.zone()));
}

/// Point offset from `origin` by meters north and east.
inline commute::GeoPoint offset(const commute::GeoPoint& origin, double north_m, double east_m) {
  const double m_per_deg = commute::kEarthRadiusM * M_PI / 180.0;
  return {origin.lat + north_m / m_per_deg,
          origin.lon + east_m / (m_per_deg * std::cos(origin.lat * M_PI / 180.0))};
}

inline commute::StayPoint stay_at(const commute::GeoPoint& where, commute::EpochSeconds arrival,
                                  commute::EpochSeconds departure) {
  commute::StayPoint s;
  s.centroid = where;
  s.arrival_utc = arrival;
  s.departure_utc = departure;
  s.member_count = 2;
  return s;
}

/// Dwell-and-travel trajectory of n pings: dwells of 1-12 pings scattered with
/// Gaussian noise `sigma_m` around a place, joined by 0-2 in-transit pings.
inline std::vector<commute::Fix> dwell_travel_trajectory(std::mt19937_64& rng, int n, double sigma_m,
                                                         const commute::GeoPoint& base = {29.76, -95.37}) {
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> noise(0, sigma_m);
  std::vector<commute::Fix> out;
  commute::EpochSeconds t = 1501600000;
  commute::GeoPoint place = offset(base, u(rng) * 5000, u(rng) * 5000);
  while (static_cast<int>(out.size()) < n) {
    const int dwell = 1 + static_cast<int>(rng() % 12);
    for (int k = 0; k < dwell && static_cast<int>(out.size()) < n; ++k) {
      out.push_back({offset(place, noise(rng), noise(rng)), t});
      t += 60 + static_cast<commute::EpochSeconds>(rng() % 540);
    }
    const commute::GeoPoint next = offset(base, u(rng) * 5000, u(rng) * 5000);
    const int transit = static_cast<int>(rng() % 3);
    for (int k = 1; k <= transit && static_cast<int>(out.size()) < n; ++k) {
      const double f = static_cast<double>(k) / (transit + 1);
      out.push_back({{place.lat + f * (next.lat - place.lat), place.lon + f * (next.lon - place.lon)}, t});
      t += 60 + static_cast<commute::EpochSeconds>(rng() % 240);
    }
    place = next;
  }
  return out;
}

}  // namespace testutil
