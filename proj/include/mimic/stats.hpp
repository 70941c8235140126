#ifndef MIMIC_STATS_HPP
#define MIMIC_STATS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "mimic/family.hpp"
#include "mimic/path.hpp"

namespace mimic {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> v) {
  MeanSe r;
  r.n = v.size();
  if (v.empty()) return r;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  r.mean = m;
  r.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  r.se = r.sd / std::sqrt(static_cast<double>(v.size()));
  return r;
}

/// Asymptotic Kolmogorov-Smirnov critical value at level 1%.
inline double ks_critical(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

/// sup |F_n - F| for a cdf that may have atoms: both one-sided limits are
/// compared at every sample point.
inline double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size();) {
    std::size_t j = i;
    while (j < xs.size() && xs[j] == xs[i]) ++j;
    const double f_left = cdf(std::nextafter(xs[i], -kInf));
    const double f_right = cdf(xs[i]);
    d = std::max({d, std::abs(static_cast<double>(i) / n - f_left), std::abs(static_cast<double>(j) / n - f_right)});
    i = j;
  }
  return d;
}

struct CheckpointStats {
  double t = 0.0;
  double ks = 0.0;
  double ks_critical = 0.0;
  bool ks_pass = false;
  MeanSe value;              ///< X_t
  double mean_z = 0.0;       ///< (mean - mu_bar) / se
  MeanSe increment;          ///< X_T - X_t
  double max_bin_z = 0.0;    ///< largest |conditional mean / se| over bins of X_t
};

struct SimReport {
  std::vector<CheckpointStats> checkpoints;
  MeanSe jumps;
  std::size_t max_jumps = 0;
  [[nodiscard]] bool ks_pass() const {
    return std::all_of(checkpoints.begin(), checkpoints.end(), [](const auto& c) { return c.ks_pass; });
  }
};

/// KS distance to mu_t, mean drift and martingale increment tests at each
/// checkpoint. The increment test splits X_t into `bins` equal-count bins.
inline SimReport marginal_report(std::span<const PathSkeleton> paths, const MarginalFamily& f,
                                 std::span<const double> checkpoints, double T, std::size_t bins = 10) {
  SimReport rep;
  std::vector<double> counts;
  counts.reserve(paths.size());
  for (const auto& p : paths) {
    counts.push_back(static_cast<double>(p.jumps.size()));
    rep.max_jumps = std::max(rep.max_jumps, p.jumps.size());
  }
  rep.jumps = mean_se(counts);

  std::vector<double> terminal;
  terminal.reserve(paths.size());
  for (const auto& p : paths) terminal.push_back(p.value_at(T));
  for (double t : checkpoints) {
    CheckpointStats c;
    c.t = t;
    std::vector<double> xs, inc;
    xs.reserve(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
      xs.push_back(paths[i].value_at(t));
      inc.push_back(terminal[i] - xs.back());
    }
    c.ks = ks_distance(xs, [&](double x) { return f.cdf(t, x); });
    c.ks_critical = ks_critical(xs.size());
    c.ks_pass = c.ks < c.ks_critical;
    c.value = mean_se(xs);
    c.mean_z = c.value.se > 0.0 ? (c.value.mean - f.mean()) / c.value.se : 0.0;
    c.increment = mean_se(inc);

    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t lo = b * order.size() / bins, hi = (b + 1) * order.size() / bins;
      std::vector<double> part;
      for (std::size_t k = lo; k < hi; ++k) part.push_back(inc[order[k]]);
      const MeanSe m = mean_se(part);
      if (m.se > 0.0) c.max_bin_z = std::max(c.max_bin_z, std::abs(m.mean) / m.se);
    }
    rep.checkpoints.push_back(c);
  }
  return rep;
}

}  // namespace mimic

#endif  // MIMIC_STATS_HPP
