#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "commute/geo.hpp"
#include "commute/ingest.hpp"
#include "commute/places.hpp"
#include "commute/trips.hpp"
#include "commute/time.hpp"

namespace commute {

/// Square tract grid anchored at its south-west corner.
struct TractGrid {
  int rows = 10;
  int cols = 10;
  double tract_size_m = 2000.0;
  GeoPoint origin{29.65, -95.55};

  double lat_step() const;
  double lon_step() const;
  /// Tract id "T<row:2><col:2>", e.g. "T0307".
  std::string tract_id(int row, int col) const;
  /// Tract containing p, or empty when outside the grid.
  std::string tract_of(const GeoPoint& p) const;
  std::vector<GeoFeature> tracts() const;
  MultiPolygon boundary() const;
};

struct SynthConfig {
  int agent_count = 100;
  absl::CivilDay first_day{2017, 8, 1};
  absl::CivilDay last_day{2017, 8, 15};
  std::string timezone = "America/Chicago";
  TractGrid grid;
  double ping_interval_s = 300.0;
  double ping_jitter_s = 120.0;  // uniform +- jitter
  double noise_sigma_m = 30.0;
  double p_commute = 0.8;        // per weekday
  double p_night_dropout = 0.05; // agent emits no pings during 20:00-05:00
  double p_weekend_errand = 0.5; // per weekend day
  double min_home_work_m = 1500.0;
  std::uint64_t seed = 42;

  /// Throws ConfigError for out-of-range probabilities or infeasible geometry.
  void validate() const;
  ObservationWindow window() const;
};

struct AgentTruth {
  std::string agent_id;
  GeoPoint home;
  GeoPoint work;
  std::string home_tract;
  std::string work_tract;
  std::vector<absl::CivilDay> commuted_days;  // local weekdays
  bool night_dropout = false;
  std::int64_t night_pings = 0;  // pings with local time in 20:00-05:00
};

struct GroundTruth {
  std::vector<AgentTruth> agents;  // ascending agent id
  int weekday_count = 0;
  ODMatrix planted_od;
};

struct SynthWorld {
  std::vector<Trajectory> trajectories;  // one per agent, ascending id
  GroundTruth truth;
};

/// Deterministic for a fixed config: each agent draws from its own RNG stream
/// seeded from (seed, agent index), so `workers` never changes the result.
SynthWorld generate(const SynthConfig& config, int workers = 1);

/// Agent id for index i: "agent_000123".
std::string agent_id(int index);

/// Sums commuted-days / weekday_count per (home tract, work tract).
ODMatrix planted_od(std::span<const AgentTruth> agents, int weekday_count);

/// Files: pings.csv, tracts.geojson, city.geojson, truth_agents.csv, truth_od.csv.
void write_world(const SynthWorld& world, const SynthConfig& config, const std::filesystem::path& dir);

/// Reads truth_agents.csv.
std::vector<AgentTruth> load_truth_agents(const std::filesystem::path& path);

struct AgentRecovery {
  std::string agent_id;
  bool eligible = false;  // >= min_night_pings
  std::optional<double> home_error_m;
  std::optional<double> work_error_m;
  int planted_days = 0;
  int estimated_days = 0;
};

struct RecoveryReport {
  std::int64_t agents = 0;
  std::int64_t eligible = 0;       // enough night pings to be recoverable
  std::int64_t unrecoverable = 0;  // agents - eligible
  std::int64_t home_recovered = 0; // eligible agents with home within tolerance
  std::int64_t work_recovered = 0; // of home-recovered agents, work within tolerance
  double home_rate = 0.0;          // home_recovered / eligible
  double work_rate = 0.0;          // work_recovered / home_recovered
  double commute_day_mae = 0.0;    // over agents with home and work recovered
  std::optional<double> od_r;      // planted vs estimated OD, union of nonzero pairs
  std::vector<AgentRecovery> per_agent;
};

struct RecoveryOptions {
  double tolerance_m = 250.0;
  std::int64_t min_night_pings = 5;
};

/// Compares pipeline outputs against the planted truth. Throws DataError when a
/// profile names a device that is not a planted agent.
RecoveryReport score_recovery(const GroundTruth& truth, std::span<const PlaceProfile> profiles,
                              std::span<const CommuterRecord> commuters, const ODMatrix& estimated_od,
                              const RecoveryOptions& options = {});

}  // namespace commute
