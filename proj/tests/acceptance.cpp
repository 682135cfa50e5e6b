// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.
#include <sys/resource.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "commute/pipeline.hpp"
#include "commute/regions.hpp"
#include "commute/synth.hpp"
#include "commute/validation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace commute;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) out[e.path().filename().string()] = testutil::slurp(e.path());
  }
  return out;
}

Config synth_config(const fs::path& out, int agents) {
  Config c;
  c.set("synth.agents", std::to_string(agents));
  c.set("run.output_dir", out.string());
  return c;
}

Config world_config(const fs::path& world) {
  Config c;
  c.load_file(world / "world.conf");
  return c;
}

// 1. Synthetic end-to-end recovery.
Outcome end_to_end() {
  testutil::TempDir dir;
  const auto start = std::chrono::steady_clock::now();
  auto synth = synth_config(dir / "world", 1000);
  synth.set("synth.ping_interval_s", "300");
  synth.set("synth.ping_jitter_s", "120");
  synth.set("synth.noise_sigma_m", "30");
  synth.set("synth.p_commute", "0.8");
  synth.set("run.seed", "42");
  run("synth", synth);
  auto cfg = world_config(dir / "world");
  cfg.set("run.output_dir", (dir / "out").string());
  run("all", cfg);
  const double elapsed = seconds_since(start);

  const auto rec = nlohmann::json::parse(testutil::slurp(dir / "out" / "recovery.json"));
  const auto weekdays = nlohmann::json::parse(testutil::slurp(dir / "out" / "od_report.json"))["weekday_count"];
  const double home = rec["home_recovery_rate"], work = rec["work_recovery_rate_given_home"];
  const double r = rec["od_pearson_r"].is_null() ? -2.0 : rec["od_pearson_r"].get<double>();
  const bool pass = home >= 0.95 && work >= 0.90 && r >= 0.95 && elapsed <= 60.0 && weekdays == 11;
  return {pass, fmt("1000 agents, %d weekdays, %d eligible: home %.4f (>= 0.95), work %.4f (>= 0.90), "
                    "OD r %.4f (>= 0.95, union_nonzero), %.1f s (<= 60 s)",
                    weekdays.get<int>(), rec["eligible_agents"].get<int>(), home, work, r, elapsed)};
}

// 2. Complete-linkage clustering vs the brute-force oracle.
Outcome clustering_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  const GeoPoint base{29.76, -95.37};
  int matched = 0, max_n = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const int n = 1 + static_cast<int>(rng() % 200);
    max_n = std::max(max_n, n);
    const double spread = 200 + u(rng) * 3000;
    std::vector<StayPoint> stays;
    for (int k = 0; k < n; ++k) {
      stays.push_back(testutil::stay_at(testutil::offset(base, u(rng) * spread, u(rng) * spread), k, k));
    }
    std::vector<int> labels(n, -1);
    const auto regions = cluster_regions(stays, 250);
    for (std::size_t r = 0; r < regions.size(); ++r)
      for (const auto& m : regions[r].members) labels[m.arrival_utc] = static_cast<int>(r);
    const auto want = oracle::complete_linkage_partition(
        n, 250, [&](int a, int b) { return haversine_distance(stays[a].centroid, stays[b].centroid); });
    if (std::find(labels.begin(), labels.end(), -1) == labels.end() && oracle::partition_from_labels(labels) == want) {
      ++matched;
    }
  }
  return {matched == 100, fmt("%d/100 random instances (n <= %d) partition-identical to the O(n^3) oracle", matched, max_n)};
}

// 3. Stay extraction vs the pseudocode oracle, plus threshold monotonicity.
Outcome stay_oracle() {
  std::mt19937_64 rng(77);
  int matched = 0, monotone = 0, scatter_matched = 0;
  auto same = [](const std::vector<Fix>& traj, std::int64_t T) {
    const auto got = extract_stay_points(traj, {250, T});
    const auto want = oracle::stay_points(traj, 250, T);
    if (got.size() != want.size()) return false;
    for (std::size_t k = 0; k < got.size(); ++k) {
      if (got[k].arrival_utc != want[k].arrival || got[k].departure_utc != want[k].departure ||
          got[k].member_count != want[k].members || got[k].first_index != want[k].anchor ||
          std::abs(got[k].centroid.lat - want[k].lat) > 1e-12 || std::abs(got[k].centroid.lon - want[k].lon) > 1e-12) {
        return false;
      }
    }
    return true;
  };
  for (int inst = 0; inst < 100; ++inst) {
    const auto traj = testutil::dwell_travel_trajectory(rng, 1 + static_cast<int>(rng() % 50), 30.0);
    bool ok = true, mono = true;
    std::size_t last = SIZE_MAX;
    for (std::int64_t T : {60, 300, 600, 900, 1200, 1800, 2700, 3600}) {
      ok = ok && same(traj, T);
      const auto count = extract_stay_points(traj, {250, T}).size();
      mono = mono && count <= last;
      last = count;
    }
    matched += ok;
    monotone += mono;
  }
  // Oracle equality also on pure scatter, where dwell structure is absent.
  std::uniform_real_distribution<double> u(0, 1);
  for (int inst = 0; inst < 100; ++inst) {
    std::vector<Fix> traj;
    std::int64_t t = 0;
    const int n = 1 + static_cast<int>(rng() % 50);
    for (int k = 0; k < n; ++k) {
      traj.push_back({testutil::offset({29.76, -95.37}, u(rng) * 400, u(rng) * 400), t});
      t += 30 + static_cast<std::int64_t>(u(rng) * 600);
    }
    scatter_matched += same(traj, 900);
  }
  return {matched == 100 && monotone == 100 && scatter_matched == 100,
          fmt("dwell/travel trajectories (n <= 50, sigma 30 m): %d/100 oracle-identical at 8 thresholds, "
              "%d/100 monotone; scatter trajectories: %d/100 oracle-identical",
              matched, monotone, scatter_matched)};
}

// 4. Pearson vs the two-pass oracle and the p-value sanity check.
Outcome statistics() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 1);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + rng() % 5000;
    std::vector<double> x(n), y(n);
    const double rho = g(rng), scale = std::exp(g(rng) * 3);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = g(rng) * scale + 10;
      y[i] = rho * x[i] + g(rng);
    }
    worst = std::max(worst, std::abs(pearson(x, y).r - oracle::pearson_two_pass(x, y)));
  }
  const double p = correlation_p_value(0.61, 500);
  return {worst <= 1e-12 && p < 1e-4,
          fmt("max |r - oracle| over 1000 pairs = %.2e (<= 1e-12); p(n=500, r=0.61) = %.3e (< 1e-4)", worst, p)};
}

// 5. Work-exponent sensitivity on the default synthetic population.
Outcome sensitivity() {
  double worst = 0;
  std::string detail;
  for (int agents : {100, 1000}) {
    SynthConfig cfg;
    cfg.agent_count = agents;
    const auto world = generate(cfg);
    auto devices = extract_all(world.trajectories, StayParams{});
    infer_all(devices, cfg.window().tz(), HomeRules{}, WorkRules{});
    const std::vector<int> exps{2, 3};
    const auto s = work_sensitivity(devices, cfg.window().tz(), WorkRules{}, exps);
    worst = std::max({worst, s.at(2), s.at(3)});
    detail += fmt("%s%d agents: p=2 %.4f, p=3 %.4f", detail.empty() ? "" : "; ", agents, s.at(2), s.at(3));
  }
  return {worst <= 0.02, detail + " (<= 0.02)"};
}

// 6. Area fraction vs analytic rectangle overlap, and the exact-half rule.
Outcome geometry() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  const int res = 200;
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    oracle::Rect s{29.6 + u(rng) * 0.1, -95.5 + u(rng) * 0.1, 0, 0};
    s.max_lat = s.min_lat + 0.005 + u(rng) * 0.05;
    s.max_lon = s.min_lon + 0.005 + u(rng) * 0.05;
    oracle::Rect c{s.min_lat + (u(rng) - 0.5) * 0.06, s.min_lon + (u(rng) - 0.5) * 0.06, 0, 0};
    c.max_lat = c.min_lat + 0.005 + u(rng) * 0.06;
    c.max_lon = c.min_lon + 0.005 + u(rng) * 0.06;
    const double got = area_fraction_inside(make_rectangle(s.min_lat, s.min_lon, s.max_lat, s.max_lon),
                                            make_rectangle(c.min_lat, c.min_lon, c.max_lat, c.max_lon), res);
    worst = std::max(worst, std::abs(got - oracle::rect_overlap_fraction(s, c)));
  }
  // Square tract with exactly its western half inside the city.
  GeoFeature half{"half", {make_rectangle(29.70, -95.40, 29.72, -95.38)}};
  const MultiPolygon city{make_rectangle(29.60, -95.50, 29.80, -95.39)};
  const auto tracts = filter_tracts({half}, city, 0.5, res);
  const double frac = tracts[0].area_fraction_in_city;
  const bool half_ok = tracts[0].included && std::abs(frac - 0.5) <= 2.0 / res;
  return {worst <= 2.0 / res && half_ok,
          fmt("max error over 50 rectangle pairs %.4f (<= %.4f); exact-half tract fraction %.4f, included=%s",
              worst, 2.0 / res, frac, tracts[0].included ? "yes" : "no")};
}

// 7. Throughput and memory for extract-stays + infer-places on 10M pings.
Outcome throughput() {
  testutil::TempDir dir;
  run("synth", synth_config(dir / "world", 2800));
  std::vector<double> times;
  std::vector<std::string> digests;
  for (int workers : {1, 4, 8}) {
    Config c = world_config(dir / "world");
    c.set("run.workers", std::to_string(workers));
    c.set("run.output_dir", (dir / ("w" + std::to_string(workers))).string());
    const auto start = std::chrono::steady_clock::now();
    run("extract-stays", c);
    run("infer-places", c);
    times.push_back(seconds_since(start));
    const auto out = dir / ("w" + std::to_string(workers));
    digests.push_back(sha256_file(out / "stays.csv") + sha256_file(out / "places.csv") + sha256_file(out / "funnel.json"));
  }
  const auto ingest = nlohmann::json::parse(testutil::slurp(dir / "w1" / "ingest_report.json"));
  const auto pings = ingest["accepted"].get<std::size_t>();
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  const double peak_gib = usage.ru_maxrss / (1024.0 * 1024.0);
  const bool identical = digests[0] == digests[1] && digests[1] == digests[2];
  const double slowest = *std::max_element(times.begin(), times.end());
  return {pings >= 10'000'000 && slowest <= 300.0 && peak_gib <= 4.0 && identical,
          fmt("%zu pings from CSV; wall %.1f / %.1f / %.1f s at 1 / 4 / 8 workers (<= 300 s); peak RSS %.2f GiB "
              "(<= 4); outputs identical across workers: %s; hardware threads: %u",
              pings, times[0], times[1], times[2], peak_gib, identical ? "yes" : "no",
              std::thread::hardware_concurrency())};
}

// 8. Byte-identical `all` artifacts across runs and worker counts.
Outcome determinism() {
  testutil::TempDir dir;
  run("synth", synth_config(dir / "world", 300));
  std::vector<std::map<std::string, std::string>> sets;
  for (const auto& [name, workers] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 1}, {"c", 4}, {"d", 8}}) {
    Config c = world_config(dir / "world");
    c.set("run.workers", std::to_string(workers));
    c.set("run.output_dir", (dir / name).string());
    run("all", c);
    sets.push_back(read_dir(dir / name));
  }
  const bool same = sets[0] == sets[1] && sets[0] == sets[2] && sets[0] == sets[3];
  return {same && sets[0].size() > 10,
          fmt("4 runs of `all` (workers 1, 1, 4, 8) over %zu artifacts: %s", sets[0].size(),
              same ? "byte-identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 end-to-end synthetic recovery", end_to_end},
      {"AC2 clustering oracle", clustering_oracle},
      {"AC3 stay-point oracle and monotonicity", stay_oracle},
      {"AC4 statistics", statistics},
      {"AC5 work-exponent sensitivity", sensitivity},
      {"AC6 geometry", geometry},
      {"AC7 throughput", throughput},
      {"AC8 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
