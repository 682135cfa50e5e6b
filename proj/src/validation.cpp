#include "commute/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "commute/csv.hpp"
#include "commute/error.hpp"

namespace commute {

double correlation_p_value(double r, std::size_t n) {
  if (n <= 2) return 1.0;
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: vectors differ in length");
  if (x.size() < 2) throw DataError("pearson: need at least two pairs");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (constant(x) || constant(y)) throw DataError("pearson: correlation undefined for a constant vector");

  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::Map<const Eigen::ArrayXd> xs(x.data(), n);
  const Eigen::Map<const Eigen::ArrayXd> ys(y.data(), n);
  const Eigen::ArrayXd dx = xs - xs.mean();
  const Eigen::ArrayXd dy = ys - ys.mean();
  double r = (dx * dy).sum() / std::sqrt(dx.square().sum() * dy.square().sum());
  r = std::clamp(r, -1.0, 1.0);
  return Correlation{r, correlation_p_value(r, x.size()), x.size()};
}

FlowReference load_flow_reference(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const auto origin = table.column("origin_tract");
  const auto dest = table.column("dest_tract");
  // Also accepts the OD artifact's own column name.
  const auto trips = table.find_column("trips") ? table.column("trips") : table.column("avg_daily_trips");
  const auto stderr_col = table.find_column("stderr");
  FlowReference ref;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const auto value = csv::parse_double(row[trips]);
    if (!value || *value < 0.0) {
      throw DataError(table.source + ": row " + std::to_string(i + 2) + ": trips must be a non-negative number");
    }
    const TractPair pair{row[origin], row[dest]};
    ref.trips[pair] += *value;
    if (stderr_col && !row[*stderr_col].empty()) {
      const auto se = csv::parse_double(row[*stderr_col]);
      if (!se || *se < 0.0) {
        throw DataError(table.source + ": row " + std::to_string(i + 2) + ": bad stderr");
      }
      ref.stderrs[pair] = *se;
    }
  }
  return ref;
}

std::string to_string(PairSelection mode) {
  switch (mode) {
    case PairSelection::union_nonzero:
      return "union_nonzero";
    case PairSelection::intersection_nonzero:
      return "intersection_nonzero";
    case PairSelection::ref_support:
      return "ref_support";
  }
  return "?";
}

PairSelection parse_pair_selection(const std::string& name) {
  for (auto m : {PairSelection::union_nonzero, PairSelection::intersection_nonzero, PairSelection::ref_support}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown pair selection '" + name + "'");
}

namespace {

std::optional<Correlation> try_pearson(std::span<const double> x, std::span<const double> y) {
  try {
    return pearson(x, y);
  } catch (const DataError&) {
    return std::nullopt;
  }
}

}  // namespace

ValidationReport compare_od(const ODMatrix& gps, const FlowReference& ref, PairSelection mode) {
  auto lookup = [](const std::map<TractPair, double>& m, const TractPair& k) {
    const auto it = m.find(k);
    return it == m.end() ? 0.0 : it->second;
  };
  std::map<TractPair, char> keys;
  for (const auto& [k, v] : gps.cells) {
    if (v > 0.0) keys[k] = 1;
  }
  for (const auto& [k, v] : ref.trips) {
    if (v > 0.0) keys[k] = 1;
  }

  ValidationReport report;
  report.mode = mode;
  for (const auto& [k, unused] : keys) {
    const double g = lookup(gps.cells, k);
    const double r = lookup(ref.trips, k);
    bool keep = false;
    switch (mode) {
      case PairSelection::union_nonzero:
        keep = g > 0.0 || r > 0.0;
        break;
      case PairSelection::intersection_nonzero:
        keep = g > 0.0 && r > 0.0;
        break;
      case PairSelection::ref_support:
        keep = r > 0.0;
        break;
    }
    if (!keep) continue;
    ScatterRow row{k, g, r, std::nullopt};
    if (const auto se = ref.stderrs.find(k); se != ref.stderrs.end()) row.ref_stderr = se->second;
    report.scatter.push_back(std::move(row));
  }
  if (report.scatter.empty()) throw DataError("compare_od: empty pair set under " + to_string(mode));
  report.n_pairs = report.scatter.size();

  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& row : report.scatter) {
    xs.push_back(row.gps_trips);
    ys.push_back(row.ref_trips);
  }
  report.correlation = try_pearson(xs, ys);

  // Deciles of equal pair count by ascending reference flow.
  std::vector<std::size_t> order(report.scatter.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.scatter[a].ref_trips < report.scatter[b].ref_trips;
  });
  const std::size_t n = order.size();
  for (int d = 0; d < 10; ++d) {
    const std::size_t lo = n * d / 10;
    const std::size_t hi = n * (d + 1) / 10;
    if (hi <= lo) continue;
    std::vector<double> gx;
    std::vector<double> ry;
    for (std::size_t k = lo; k < hi; ++k) {
      gx.push_back(report.scatter[order[k]].gps_trips);
      ry.push_back(report.scatter[order[k]].ref_trips);
    }
    DecileStratum s;
    s.decile = d + 1;
    s.ref_min = ry.front();
    s.ref_max = ry.back();
    s.n = hi - lo;
    if (const auto c = try_pearson(gx, ry)) s.r = c->r;
    report.deciles.push_back(s);
  }
  return report;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {
Distribution describe(const std::vector<double>& v) {
  const Eigen::Map<const Eigen::ArrayXd> a(v.data(), static_cast<Eigen::Index>(v.size()));
  return Distribution{a.mean(), percentile(v, 0.5), percentile(v, 0.9)};
}
}  // namespace

std::map<TravelMode, ModeSummary> commute_summary(std::span<const RoutedTrip> trips, double bin_width_s) {
  if (!(bin_width_s > 0.0)) throw ConfigError("histogram bin width must be positive");
  std::map<TravelMode, std::vector<const RoutedTrip*>> by_mode;
  for (const auto& t : trips) by_mode[t.mode].push_back(&t);
  std::map<TravelMode, ModeSummary> out;
  for (const auto& [mode, list] : by_mode) {
    std::vector<double> durations;
    std::vector<double> distances;
    for (const auto* t : list) {
      durations.push_back(t->duration_s);
      distances.push_back(t->distance_m);
    }
    ModeSummary s;
    s.count = list.size();
    s.duration_s = describe(durations);
    s.distance_m = describe(distances);
    s.bin_width_s = bin_width_s;
    for (double d : durations) {
      const auto bin = static_cast<std::size_t>(std::floor(d / bin_width_s));
      if (s.duration_histogram.size() <= bin) s.duration_histogram.resize(bin + 1, 0);
      ++s.duration_histogram[bin];
    }
    out.emplace(mode, std::move(s));
  }
  return out;
}

}  // namespace commute
