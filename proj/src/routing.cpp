#include "commute/routing.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "commute/csv.hpp"
#include "commute/error.hpp"
#include "commute/parallel.hpp"

namespace commute {

std::string to_string(TravelMode mode) { return mode == TravelMode::car ? "car" : "transit"; }

TravelMode parse_travel_mode(const std::string& name) {
  if (name == "car") return TravelMode::car;
  if (name == "transit") return TravelMode::transit;
  throw ConfigError("unknown travel mode '" + name + "'");
}

OfflineRouter::OfflineRouter(OfflineRouteParams params) : params_(params) {
  if (!(params_.detour_factor >= 1.0) || !(params_.car_speed_mps > 0.0) ||
      !(params_.transit_speed_mps > 0.0) || params_.car_overhead_s < 0.0 ||
      params_.transit_overhead_s < 0.0) {
    throw ConfigError("offline routing needs detour >= 1, positive speeds, non-negative overheads");
  }
}

RouteEstimate OfflineRouter::route(const GeoPoint& origin, const GeoPoint& dest, TravelMode mode) {
  const double distance = haversine_distance(origin, dest) * params_.detour_factor;
  const bool car = mode == TravelMode::car;
  const double speed = car ? params_.car_speed_mps : params_.transit_speed_mps;
  const double overhead = car ? params_.car_overhead_s : params_.transit_overhead_s;
  return RouteEstimate{mode, distance, distance / speed + overhead, RouteSource::offline, true};
}

struct HttpRouter::Impl {
  HttpRouteConfig config;
  std::string host;  // scheme://host:port
  std::string path;
  std::string api_key;
};

HttpRouter::HttpRouter(HttpRouteConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  const std::string& url = impl_->config.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("routing endpoint needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  impl_->host = url.substr(0, path_start);
  impl_->path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (const char* key = std::getenv(impl_->config.api_key_env.c_str())) impl_->api_key = key;
  if (impl_->config.max_attempts < 1) throw ConfigError("routing max_attempts must be >= 1");
}

HttpRouter::~HttpRouter() = default;

RouteEstimate HttpRouter::parse_response(const std::string& body, TravelMode mode) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw RouteError("malformed routing response: not JSON");
  }
  if (!doc.is_object() || !doc.contains("routable") || !doc["routable"].is_boolean()) {
    throw RouteError("malformed routing response: missing 'routable'");
  }
  RouteEstimate est;
  est.mode = mode;
  est.source = RouteSource::external;
  est.routable = doc["routable"].get<bool>();
  if (!est.routable) return est;
  if (!doc.contains("distance_m") || !doc["distance_m"].is_number() || !doc.contains("duration_s") ||
      !doc["duration_s"].is_number()) {
    throw RouteError("malformed routing response: missing distance_m/duration_s");
  }
  est.distance_m = doc["distance_m"].get<double>();
  est.duration_s = doc["duration_s"].get<double>();
  if (!(est.distance_m >= 0.0) || !(est.duration_s >= 0.0)) {
    throw RouteError("malformed routing response: negative distance or duration");
  }
  return est;
}

namespace {
std::string format_coord(const GeoPoint& p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.5f,%.5f", p.lat, p.lon);
  return buf;
}
}  // namespace

RouteEstimate HttpRouter::route(const GeoPoint& origin, const GeoPoint& dest, TravelMode mode) {
  const auto& cfg = impl_->config;
  httplib::Params params{{"origin", format_coord(origin)},
                         {"destination", format_coord(dest)},
                         {"mode", to_string(mode)},
                         {"departure", cfg.departure}};
  httplib::Headers headers;
  if (!impl_->api_key.empty()) headers.emplace("X-Api-Key", impl_->api_key);
  const auto timeout = std::chrono::duration<double>(cfg.timeout_s);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);

  std::string last_error;
  double backoff = cfg.initial_backoff_s;
  for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
    httplib::Client client(impl_->host);
    client.set_connection_timeout(timeout_us);
    client.set_read_timeout(timeout_us);
    auto res = client.Get(impl_->path, params, headers);
    if (res && res->status == 200) return parse_response(res->body, mode);
    if (res && res->status >= 400 && res->status < 500 && res->status != 429) {
      throw RouteError("routing request rejected with HTTP " + std::to_string(res->status));
    }
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (attempt < cfg.max_attempts) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
  }
  throw RouteError("routing request failed after " + std::to_string(cfg.max_attempts) +
                   " attempts: " + last_error);
}

RouteKey RouteKey::make(const GeoPoint& origin, const GeoPoint& dest, TravelMode mode) {
  return RouteKey{format_coord(origin), format_coord(dest), mode};
}

namespace {

std::string cache_line(const RouteKey& key, const RouteEstimate& est) {
  return key.origin + "," + key.dest + "," + to_string(est.mode) + "," +
         csv::format_double(est.distance_m) + "," + csv::format_double(est.duration_s) + "," +
         (est.routable ? "1" : "0");
}

constexpr const char* kCacheHeader = "olat,olon,dlat,dlon,mode,distance_m,duration_s,routable";

}  // namespace

RouteCache::RouteCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_);
  if (!in) return;
  std::string line;
  std::size_t bad = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      if (line == kCacheHeader) continue;
      ++bad;
      continue;
    }
    if (line.empty()) continue;
    const auto f = csv::split(line);
    std::optional<double> dist;
    std::optional<double> dur;
    bool ok = f.size() == 8 && (f[4] == "car" || f[4] == "transit") && (f[7] == "0" || f[7] == "1");
    if (ok) {
      ok = csv::parse_double(f[0]) && csv::parse_double(f[1]) && csv::parse_double(f[2]) &&
           csv::parse_double(f[3]);
      dist = csv::parse_double(f[5]);
      dur = csv::parse_double(f[6]);
      ok = ok && dist && dur;
    }
    if (!ok) {
      ++bad;
      continue;
    }
    const TravelMode mode = parse_travel_mode(std::string(f[4]));
    RouteKey key{std::string(f[0]) + "," + std::string(f[1]), std::string(f[2]) + "," + std::string(f[3]), mode};
    entries_[key] = RouteEstimate{mode, *dist, *dur, RouteSource::external, f[7] == "1"};
  }
  in.close();
  if (bad > 0) {
    warnings_.push_back("route cache " + path_->string() + " had " + std::to_string(bad) +
                        " corrupt line(s); rebuilt from " + std::to_string(entries_.size()) +
                        " valid entries");
    std::ofstream out(*path_, std::ios::trunc);
    out << kCacheHeader << '\n';
    for (const auto& [key, est] : entries_) out << cache_line(key, est) << '\n';
  }
}

std::optional<RouteEstimate> RouteCache::find(const RouteKey& key) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void RouteCache::insert(const RouteKey& key, const RouteEstimate& estimate) {
  std::lock_guard lock(mutex_);
  entries_[key] = estimate;
  if (!path_) return;
  const bool fresh = !std::filesystem::exists(*path_) || std::filesystem::file_size(*path_) == 0;
  std::ofstream out(*path_, std::ios::app);
  if (!out) throw ConfigError("cannot write route cache " + path_->string());
  if (fresh) out << kCacheHeader << '\n';
  out << cache_line(key, estimate) << '\n';
}

std::size_t RouteCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

namespace {

/// Spaces request starts at least 1/rate seconds apart.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second) : per_second_(per_second) {}

  void acquire() {
    if (per_second_ <= 0.0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_);
      next_ = slot + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                         std::chrono::duration<double>(1.0 / per_second_));
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  double per_second_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

}  // namespace

RouteBatch route_all(std::span<const CommuteEndpoints> commuters, std::span<const TravelMode> modes,
                     RouteBackend& backend, RouteCache& cache, const RouteAllOptions& options) {
  RouteBatch batch;
  struct Request {
    RouteKey key;
    GeoPoint origin;
    GeoPoint dest;
  };
  std::map<RouteKey, std::size_t> request_index;
  std::vector<Request> requests;
  for (const auto& c : commuters) {
    for (TravelMode mode : modes) {
      auto key = RouteKey::make(c.home, c.work, mode);
      if (request_index.contains(key)) continue;
      request_index.emplace(key, requests.size());
      requests.push_back(Request{std::move(key), c.home, c.work});
    }
  }

  std::vector<std::optional<RouteEstimate>> results(requests.size());
  std::vector<std::string> errors(requests.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (auto hit = cache.find(requests[i].key)) {
      hit->source = backend.source();
      results[i] = *hit;
      ++batch.cache_hits;
    } else {
      pending.push_back(i);
    }
  }

  RateLimiter limiter(options.rate_limit_per_s);
  parallel_for(pending.size(), std::max(1, options.concurrency), [&](std::size_t k) {
    const std::size_t i = pending[k];
    limiter.acquire();
    try {
      results[i] = backend.route(requests[i].origin, requests[i].dest, requests[i].key.mode);
    } catch (const RouteError& e) {
      errors[i] = e.what();
    }
  });
  batch.backend_requests = static_cast<std::int64_t>(pending.size());
  for (std::size_t i : pending) {
    if (results[i]) cache.insert(requests[i].key, *results[i]);
  }

  for (const auto& c : commuters) {
    for (TravelMode mode : modes) {
      const std::size_t i = request_index.at(RouteKey::make(c.home, c.work, mode));
      if (results[i]) {
        batch.routes.push_back(RouteRecord{c.device_id, *results[i]});
      } else {
        batch.failures.push_back(RouteFailure{c.device_id, mode, errors[i]});
      }
    }
  }
  return batch;
}

}  // namespace commute
