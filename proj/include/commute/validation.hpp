#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "commute/routing.hpp"
#include "commute/trips.hpp"

namespace commute {

struct Correlation {
  double r = 0.0;
  double p_value = 1.0;  // two-sided, Student-t with n-2 degrees of freedom
  std::size_t n = 0;
};

/// Sample Pearson correlation. Throws DataError for mismatched sizes, n < 2, or
/// a constant vector.
Correlation pearson(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value of the t statistic for a correlation r over n pairs.
double correlation_p_value(double r, std::size_t n);

struct FlowReference {
  std::map<TractPair, double> trips;
  std::map<TractPair, double> stderrs;  // optional column
};

/// Reads origin_tract,dest_tract,trips[,stderr]. Throws DataError on negative
/// or unparseable values.
FlowReference load_flow_reference(const std::filesystem::path& path);

enum class PairSelection { union_nonzero, intersection_nonzero, ref_support };

std::string to_string(PairSelection mode);
/// Throws ConfigError for unknown names.
PairSelection parse_pair_selection(const std::string& name);

struct ScatterRow {
  TractPair pair;
  double gps_trips = 0.0;
  double ref_trips = 0.0;
  std::optional<double> ref_stderr;
};

struct DecileStratum {
  int decile = 0;  // 1..10, by ascending reference flow
  double ref_min = 0.0;
  double ref_max = 0.0;
  std::size_t n = 0;
  std::optional<double> r;  // absent when undefined (n < 2 or constant)
};

struct ValidationReport {
  PairSelection mode = PairSelection::union_nonzero;
  std::optional<Correlation> correlation;  // absent when undefined
  std::size_t n_pairs = 0;
  std::vector<ScatterRow> scatter;  // lexicographic by pair
  std::vector<DecileStratum> deciles;
};

/// Pairs gps and reference cells per the selection mode (missing cells read as
/// zero) and correlates them. Throws DataError for an empty pair set.
ValidationReport compare_od(const ODMatrix& gps, const FlowReference& ref,
                            PairSelection mode = PairSelection::union_nonzero);

struct RoutedTrip {
  TravelMode mode = TravelMode::car;
  double distance_m = 0.0;
  double duration_s = 0.0;
};

struct Distribution {
  double mean = 0.0;
  double median = 0.0;
  double p90 = 0.0;
};

struct ModeSummary {
  std::size_t count = 0;
  Distribution duration_s;
  Distribution distance_m;
  double bin_width_s = 300.0;
  std::vector<std::int64_t> duration_histogram;  // bin k covers [k*w, (k+1)*w)
};

/// Linear-interpolation percentile (q in [0, 1]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

/// Per-mode duration/distance statistics over routable trips.
std::map<TravelMode, ModeSummary> commute_summary(std::span<const RoutedTrip> trips,
                                                  double bin_width_s = 300.0);

}  // namespace commute
