#ifndef MIMIC_HEDGE_HPP
#define MIMIC_HEDGE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <span>
#include <thread>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/numerics.hpp"
#include "mimic/path.hpp"
#include "mimic/psi_theta.hpp"
#include "mimic/registry.hpp"
#include "mimic/stats.hpp"

namespace mimic {

/// Terms of TV(Z) >= psi(T, Z_T) - psi(t0, Z_t0) - int psi_dot du - int theta dZ.
struct HedgeDecomposition {
  double terminal = 0.0;    ///< psi(T, Z_T)
  double initial = 0.0;     ///< psi(t0, Z_t0)
  double time_decay = 0.0;  ///< int psi_dot(u, Z_u) du
  double trading = 0.0;     ///< sum theta(s, Z_s-) dZ_s
  double rhs = 0.0;
  double tv = 0.0;
  double slack = 0.0;  ///< tv - rhs; a sum of L_s(Z_s-, Z_s) >= 0
};

/// Largest jump count treated as a finite-variation path.
inline constexpr std::size_t kMaxHedgeJumps = 10'000'000;

/// Sub-hedge terms of a piecewise-constant path on [path.t0, T]. The trading
/// integrand is the left limit theta(s, Z_s-); the time integral runs over
/// each constancy interval at the frozen value.
inline HedgeDecomposition subhedge_eval(const PathSkeleton& path, const DualFunctions& duals, double T) {
  if (!std::isfinite(path.t0) || !std::isfinite(path.x0) || !std::isfinite(T) || T < path.t0)
    throw NonFiniteVariationInput("path must start at a finite point no later than T");
  if (path.jumps.size() > kMaxHedgeJumps)
    throw NonFiniteVariationInput("path has more than " + std::to_string(kMaxHedgeJumps) + " jumps");
  HedgeDecomposition h;
  double t = path.t0, x = path.x0;
  for (const auto& j : path.jumps) {
    if (!std::isfinite(j.time) || !std::isfinite(j.value) || !(j.time > t) || j.time > T)
      throw NonFiniteVariationInput("jump times must increase within (t0, T] with finite values");
    h.time_decay += duals.time_integral(x, t, j.time);
    h.trading += duals.theta(j.time, x) * (j.value - x);
    h.tv += std::abs(j.value - x);
    t = j.time;
    x = j.value;
  }
  h.time_decay += duals.time_integral(x, t, T);
  h.terminal = duals.psi(T, x);
  h.initial = duals.psi(path.t0, path.x0);
  h.rhs = h.terminal - h.initial - h.time_decay - h.trading;
  h.slack = h.tv - h.rhs;
  if (!std::isfinite(h.tv)) throw NonFiniteVariationInput("path total variation is not finite");
  return h;
}

struct HedgeReport {
  std::size_t n_paths = 0;
  double min_slack = 0.0;
  std::size_t violations = 0;  ///< paths with slack below -tolerance
  double tolerance = 1e-6;
  MeanSe slack;
  MeanSe rhs;
  MeanSe tv;
  [[nodiscard]] bool pass() const { return violations == 0; }
};

/// Evaluates every path; deterministic for any thread count.
inline HedgeReport certify_ensemble(std::span<const PathSkeleton> paths, const DualFunctions& duals, double T,
                                    double tolerance = 1e-6, unsigned threads = 1) {
  std::vector<HedgeDecomposition> out(paths.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < out.size();) out[i] = subhedge_eval(paths[i], duals, T);
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(paths.size(), 1))));
  std::vector<std::jthread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  pool.clear();

  HedgeReport r;
  r.n_paths = paths.size();
  r.tolerance = tolerance;
  r.min_slack = kInf;
  std::vector<double> slack, rhs, tv;
  for (const auto& h : out) {
    slack.push_back(h.slack);
    rhs.push_back(h.rhs);
    tv.push_back(h.tv);
    r.min_slack = std::min(r.min_slack, h.slack);
    if (h.slack < -tolerance) ++r.violations;
  }
  if (out.empty()) r.min_slack = 0.0;
  r.slack = mean_se(slack);
  r.rhs = mean_se(rhs);
  r.tv = mean_se(tv);
  return r;
}

/// min over an n x n grid on [-w, w]^2 of |y - x| + Psi(x) + Theta(x)(y - x) - Psi(y)
/// for the uniform profile; nonnegative when the pointwise dual inequality holds.
inline double uniform_dual_grid_min(std::size_t n = 500, double w = 3.0) {
  const SelfSimilarDuals duals(make_family("uniform"));
  const auto xs = linspace(-w, w, n);
  double m = kInf;
  for (double x : xs)
    for (double y : xs) m = std::min(m, duals.unit().L(x, y));
  return m;
}

}  // namespace mimic

#endif  // MIMIC_HEDGE_HPP
