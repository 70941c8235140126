#ifndef MIMIC_PUSHFORWARD_HPP
#define MIMIC_PUSHFORWARD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "mimic/family.hpp"
#include "mimic/hp.hpp"
#include "mimic/kernel.hpp"
#include "mimic/numerics.hpp"

namespace mimic {

namespace detail {

// Cumulative mass of lambda on (-inf, y].
inline double lambda_cdf(const DecompositionMeasure& lambda, double y) { return lambda.mass_below(y, true); }

}  // namespace detail

/// L1 distance between the pushforward of gamma_t through binomial kernels
/// and lambda_t, on `bins` cells spanning lambda's support (the outer two
/// cells are unbounded).
///
/// Both target maps are non-increasing, so {x : a(x) <= y} = [a^{-1}(y), r)
/// and the pushed cdf at y is an integral of p_down gamma over that ray. The
/// inverse is found by bisection, the integrals by composite Gauss-Legendre.
/// `swap_weights` exchanges p_up and p_down: a negative control, since the
/// swapped kernels are no longer martingales.
inline double pushforward_check_binomial(const MarginalFamily& f, double t,
                                         const std::function<HkTargets(double)>& targets,
                                         std::size_t bins = 2000, std::size_t cells = 2000,
                                         bool swap_weights = false) {
  const Decomposition dec = f.decompose(t);
  const auto [llo, lhi] = dec.lambda.hull();
  const Interval e = f.gamma_support(t);
  const auto xs = linspace(e.lo, e.hi, cells + 1);

  auto p_down_density = [&](double x) {
    const auto [a, b] = targets(x);
    return (swap_weights ? x - a : b - x) / (b - a) * dec.gamma.continuous_density(x);
  };
  auto p_up_density = [&](double x) {
    const auto [a, b] = targets(x);
    return (swap_weights ? b - x : x - a) / (b - a) * dec.gamma.continuous_density(x);
  };
  // Suffix sums: mass of [xs[i], r) for each part.
  std::vector<double> down(cells + 1, 0.0), up(cells + 1, 0.0);
  for (std::size_t i = cells; i-- > 0;) {
    down[i] = down[i + 1] + gauss_legendre(p_down_density, xs[i], xs[i + 1]);
    up[i] = up[i + 1] + gauss_legendre(p_up_density, xs[i], xs[i + 1]);
  }
  auto ray_mass = [&](const std::vector<double>& suffix, const auto& density, double x0) {
    if (x0 <= e.lo) return suffix[0];
    if (x0 >= e.hi) return 0.0;
    const auto it = std::upper_bound(xs.begin(), xs.end(), x0);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    return suffix[i] + gauss_legendre(density, x0, xs[i]);
  };
  auto pushed_cdf = [&](double y) {
    const double xa = bisect_first_true([&](double x) { return targets(x).a <= y; }, e.lo, e.hi, 1e-14);
    const double xb = bisect_first_true([&](double x) { return targets(x).b <= y; }, e.lo, e.hi, 1e-14);
    const bool all_a = targets(std::nextafter(e.lo, e.hi)).a <= y;
    const bool all_b = targets(std::nextafter(e.lo, e.hi)).b <= y;
    const bool none_a = !(targets(std::nextafter(e.hi, e.lo)).a <= y);
    const bool none_b = !(targets(std::nextafter(e.hi, e.lo)).b <= y);
    const double md = none_a ? 0.0 : ray_mass(down, p_down_density, all_a ? e.lo : xa);
    const double mu = none_b ? 0.0 : ray_mass(up, p_up_density, all_b ? e.lo : xb);
    return md + mu;
  };

  const auto edges = linspace(llo, lhi, bins + 1);
  double l1 = 0.0, prev_push = 0.0, prev_lambda = 0.0;
  for (std::size_t k = 1; k < bins; ++k) {
    const double push = pushed_cdf(edges[k]);
    const double lam = detail::lambda_cdf(dec.lambda, edges[k]);
    l1 += std::abs((push - prev_push) - (lam - prev_lambda));
    prev_push = push;
    prev_lambda = lam;
  }
  l1 += std::abs((down[0] + up[0] - prev_push) - (dec.lambda.mass() - prev_lambda));
  return l1;
}

/// Bin edges at the midpoints between grid points, grouped `group` cells at
/// a time; atoms placed on grid points never sit on an edge.
inline std::vector<double> voronoi_edges(std::span<const double> grid, std::size_t group = 1, double scale = 1.0) {
  std::vector<double> edges;
  for (std::size_t i = 1; i < grid.size(); i += group) edges.push_back(scale * 0.5 * (grid[i - 1] + grid[i]));
  return edges;
}

/// L1 distance between the pushforward of gamma_t through general kernels
/// and lambda_t on the cells delimited by `edges` (outer cells unbounded).
inline double pushforward_check_general(const MarginalFamily& f, double t,
                                        const std::function<GeneralKernel(double)>& kernel,
                                        const std::vector<double>& edges, std::size_t cells = 400) {
  const Decomposition dec = f.decompose(t);
  const std::size_t nb = edges.size() + 1;
  std::vector<double> pushed(nb, 0.0);
  auto add = [&](double x, double weight) {
    const GeneralKernel k = kernel(x);
    double prev = 0.0;
    for (std::size_t j = 0; j < edges.size(); ++j) {
      const double c = k.lower_tail(edges[j]);
      pushed[j] += weight * (c - prev);
      prev = c;
    }
    pushed[nb - 1] += weight * (1.0 - prev);
  };
  for (const auto& p : dec.gamma.pieces()) {
    const auto xs = linspace(p.lo, p.hi, cells + 1);
    for (std::size_t i = 0; i < cells; ++i) {
      const double h = 0.5 * (xs[i + 1] - xs[i]), c = 0.5 * (xs[i] + xs[i + 1]);
      for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
        const double x = c + h * kGlNodes[k];
        add(x, h * kGlWeights[k] * p.density(x));
      }
    }
  }
  for (const auto& a : dec.gamma.atoms()) add(a.location, a.mass);

  double l1 = 0.0, prev = 0.0;
  for (std::size_t j = 0; j < edges.size(); ++j) {
    const double c = detail::lambda_cdf(dec.lambda, edges[j]);
    l1 += std::abs(pushed[j] - (c - prev));
    prev = c;
  }
  l1 += std::abs(pushed[nb - 1] - (dec.lambda.mass() - prev));
  return l1;
}

}  // namespace mimic

#endif  // MIMIC_PUSHFORWARD_HPP
