#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "commute/geo.hpp"

namespace commute {

enum class TravelMode { car, transit };

std::string to_string(TravelMode mode);
/// Throws ConfigError for anything but "car" / "transit".
TravelMode parse_travel_mode(const std::string& name);

enum class RouteSource { external, offline };

struct RouteEstimate {
  TravelMode mode = TravelMode::car;
  double distance_m = 0.0;
  double duration_s = 0.0;
  RouteSource source = RouteSource::offline;
  bool routable = true;

  friend bool operator==(const RouteEstimate&, const RouteEstimate&) = default;
};

/// Per-request failure (transport gave up, malformed response). Never fatal to a batch.
class RouteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RouteBackend {
 public:
  virtual ~RouteBackend() = default;
  /// Throws RouteError on failure.
  virtual RouteEstimate route(const GeoPoint& origin, const GeoPoint& dest, TravelMode mode) = 0;
  virtual RouteSource source() const = 0;
};

/// Great-circle distance times a detour factor at a fixed per-mode speed plus
/// a fixed per-mode overhead. These defaults are placeholders, not measured values.
struct OfflineRouteParams {
  double detour_factor = 1.4;
  double car_speed_mps = 12.5;
  double transit_speed_mps = 6.0;
  double car_overhead_s = 0.0;
  double transit_overhead_s = 600.0;
};

class OfflineRouter final : public RouteBackend {
 public:
  explicit OfflineRouter(OfflineRouteParams params = {});
  RouteEstimate route(const GeoPoint& origin, const GeoPoint& dest, TravelMode mode) override;
  RouteSource source() const override { return RouteSource::offline; }

 private:
  OfflineRouteParams params_;
};

/// Backend-neutral HTTP contract:
///   GET <endpoint>?origin=<lat>,<lon>&destination=<lat>,<lon>&mode=<car|transit>&departure=<HH:MM>
///   header X-Api-Key: <value of api_key_env>, when set
/// Response body: {"routable": bool, "distance_m": number, "duration_s": number}.
/// A response with "routable": false needs no distance or duration.
struct HttpRouteConfig {
  std::string endpoint;  // e.g. http://localhost:8080/route
  std::string api_key_env = "ROUTING_API_KEY";
  double timeout_s = 10.0;
  int max_attempts = 3;
  double initial_backoff_s = 0.2;  // doubled after each failed attempt
  std::string departure = "08:00";
};

class HttpRouter final : public RouteBackend {
 public:
  /// Throws ConfigError for an unparseable endpoint.
  explicit HttpRouter(HttpRouteConfig config);
  ~HttpRouter() override;
  RouteEstimate route(const GeoPoint& origin, const GeoPoint& dest, TravelMode mode) override;
  RouteSource source() const override { return RouteSource::external; }

  /// Response parsing, exposed for tests. Throws RouteError.
  static RouteEstimate parse_response(const std::string& body, TravelMode mode);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Cache key: coordinates rounded to 5 decimals plus mode.
struct RouteKey {
  std::string origin;  // "lat,lon" at 5 decimals
  std::string dest;
  TravelMode mode = TravelMode::car;

  static RouteKey make(const GeoPoint& origin, const GeoPoint& dest, TravelMode mode);
  auto operator<=>(const RouteKey&) const = default;
};

/// Append-only CSV cache: olat,olon,dlat,dlon,mode,distance_m,duration_s,routable.
/// A file with malformed lines is rewritten from its valid lines and a warning
/// is recorded.
class RouteCache {
 public:
  RouteCache() = default;  // in-memory only
  explicit RouteCache(std::filesystem::path path);

  std::optional<RouteEstimate> find(const RouteKey& key) const;
  void insert(const RouteKey& key, const RouteEstimate& estimate);
  std::size_t size() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::optional<std::filesystem::path> path_;
  std::map<RouteKey, RouteEstimate> entries_;
  std::vector<std::string> warnings_;
  mutable std::mutex mutex_;
};

struct CommuteEndpoints {
  std::string device_id;
  GeoPoint home;
  GeoPoint work;
};

struct RouteRecord {
  std::string device_id;
  RouteEstimate estimate;
};

struct RouteFailure {
  std::string device_id;
  TravelMode mode = TravelMode::car;
  std::string message;
};

struct RouteBatch {
  std::vector<RouteRecord> routes;      // by (device order, mode order)
  std::vector<RouteFailure> failures;
  std::int64_t backend_requests = 0;    // distinct keys sent to the backend
  std::int64_t cache_hits = 0;
};

struct RouteAllOptions {
  int concurrency = 4;
  double rate_limit_per_s = 0.0;  // 0 = unlimited
};

/// Routes every commuter for every mode, deduplicating identical rounded
/// (origin, dest, mode) requests and consulting the cache first.
RouteBatch route_all(std::span<const CommuteEndpoints> commuters, std::span<const TravelMode> modes,
                     RouteBackend& backend, RouteCache& cache, const RouteAllOptions& options = {});

}  // namespace commute
