#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "commute/config.hpp"
#include "commute/ingest.hpp"
#include "commute/places.hpp"
#include "commute/trips.hpp"

namespace commute {

// ---- in-memory stage kernels -------------------------------------------------

/// Stay points for every trajectory, in trajectory order.
std::vector<DeviceStays> extract_all(std::span<const Trajectory> trajectories, const StayParams& params,
                                     int workers = 1);

/// Home/work profiles for every device; also fills DeviceStays::home.
std::vector<PlaceProfile> infer_all(std::span<DeviceStays> devices, const TimeZone& tz,
                                    const HomeRules& home, const WorkRules& work, int workers = 1);

/// One record per commuter profile, with commute days counted from that
/// device's stays. `stays_by_device` is keyed by device id.
std::vector<CommuterRecord> make_commuters(std::span<const PlaceProfile> profiles,
                                           const std::map<std::string, std::vector<StayPoint>>& stays_by_device,
                                           const ObservationWindow& window, double radius_m);

// ---- artifact I/O -------------------------------------------------------------

void write_stays_csv(const std::filesystem::path& path, std::span<const DeviceStays> devices);
std::map<std::string, std::vector<StayPoint>> read_stays_csv(const std::filesystem::path& path);

void write_places_csv(const std::filesystem::path& path, std::span<const PlaceProfile> profiles);
/// Places with their optional avg_daily_trips column, when present.
struct PlacesFile {
  std::vector<PlaceProfile> profiles;
  std::map<std::string, double> avg_daily_trips;
};
PlacesFile read_places_csv(const std::filesystem::path& path);

void write_od_csv(const std::filesystem::path& path, const ODMatrix& od);
ODMatrix read_od_csv(const std::filesystem::path& path);

void write_commuters_csv(const std::filesystem::path& path, std::span<const CommuterRecord> commuters);
std::vector<CommuterRecord> read_commuters_csv(const std::filesystem::path& path);

/// Collects a stage's outputs as "<name>.partial" files. commit() renames them
/// into place; an uncommitted set renames them to "<name>.quarantine" on
/// destruction so a failed stage never clobbers good artifacts.
class ArtifactSet {
 public:
  explicit ArtifactSet(std::filesystem::path dir);
  ~ArtifactSet();
  ArtifactSet(const ArtifactSet&) = delete;
  ArtifactSet& operator=(const ArtifactSet&) = delete;

  /// Path to write `name` to before commit.
  std::filesystem::path stage(const std::string& name);
  void write(const std::string& name, const std::string& content);
  void commit();

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
  bool committed_ = false;
};

// ---- subcommands ----------------------------------------------------------------

void run_extract_stays(const PipelineConfig& cfg);
void run_infer_places(const PipelineConfig& cfg);
void run_build_od(const PipelineConfig& cfg);
void run_validate(const PipelineConfig& cfg);
void run_route_stats(const PipelineConfig& cfg);
/// Writes the synthetic world plus world.conf pointing at it.
void run_synth(const PipelineConfig& cfg);
void run_sweep(const PipelineConfig& cfg);
/// extract-stays, infer-places, build-od, then validate / route-stats /
/// recovery when their inputs are configured.
void run_all(const PipelineConfig& cfg);

/// Dispatches a subcommand, then writes config.resolved and run_manifest.json.
/// Throws ConfigError for an unknown subcommand.
void run(const std::string& subcommand, const Config& config);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace commute
