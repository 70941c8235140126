#ifndef MIMIC_VARIATION_HPP
#define MIMIC_VARIATION_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/family.hpp"
#include "mimic/hk.hpp"
#include "mimic/path.hpp"
#include "mimic/psi_theta.hpp"
#include "mimic/stats.hpp"

namespace mimic {

/// int psi_t d(lambda_t - gamma_t): the time-t density of the lower bound.
inline double psi_flow(const MarginalFamily& f, double t, const std::function<double(double)>& psi) {
  const Decomposition d = f.decompose(t);
  return d.lambda.integrate(psi, 1e-11) - d.gamma.integrate(psi, 1e-11);
}

/// 2 int gamma_t(dx) (b - x)(x - a) / (b - a): expected absolute jump size
/// per unit time under the binomial kernels.
inline double jump_flow(const MarginalFamily& f, double t, const std::function<HkTargets(double)>& targets) {
  const Decomposition d = f.decompose(t);
  return 2.0 * d.gamma.integrate(
                   [&](double x) {
                     const auto [a, b] = targets(x);
                     return (b - x) * (x - a) / (b - a);
                   },
                   1e-11);
}

namespace detail {

// int_eps^T g(t) dt with t = s^2: integrable t^(alpha - 1) singularities at
// zero become polynomial in s. Composite 8-point Gauss-Legendre.
inline double time_quadrature(const std::function<double(double)>& g, double eps, double T, std::size_t panels) {
  const auto s = linspace(std::sqrt(eps), std::sqrt(T), panels + 1);
  double total = 0.0;
  for (std::size_t i = 0; i < panels; ++i)
    total += gauss_legendre([&](double v) { return 2.0 * v * g(v * v); }, s[i], s[i + 1]);
  return total;
}

inline void check_interval(const MarginalFamily& f, double eps, double T) {
  if (!(T >= eps) || eps < 0.0) throw ConfigError("need 0 <= eps <= T");
  if (!f.dispersion()) throw NoDispersion(f.name() + " does not satisfy the dispersion assumption");
  if (eps == 0.0 && !f.scaling_exponent())
    throw ConfigError(f.name() + ": eps = 0 is only supported for self-similar families");
}

}  // namespace detail

/// Lower bound on the expected total variation over [eps, T] of any
/// martingale with marginals mu_t: int_eps^T dt int psi_t dq_t. Self-similar
/// families reduce to ((T^alpha - eps^alpha) / alpha) int Psi dq_1.
inline double tv_lower_bound(FamilyPtr f, double eps, double T, std::size_t panels = 8) {
  detail::check_interval(*f, eps, T);
  if (T == eps) return 0.0;
  if (const auto alpha = f->scaling_exponent()) {
    const SelfSimilarDuals duals(f);
    const double unit = psi_flow(*f, 1.0, [&](double x) { return duals.unit().psi(x); });
    return (std::pow(T, *alpha) - std::pow(eps, *alpha)) / *alpha * unit;
  }
  return detail::time_quadrature(
      [&](double t) {
        const PsiThetaTable tb = build_psi_theta(f, t, f->mean());
        return psi_flow(*f, t, [&](double x) { return tb.psi(x); });
      },
      eps, T, panels);
}

/// Expected total variation of the binomial-kernel process over [eps, T],
/// integrated in time without using self-similarity.
inline double attained_tv(FamilyPtr f, double eps, double T, std::size_t panels = 8) {
  detail::check_interval(*f, eps, T);
  if (T == eps) return 0.0;
  if (f->scaling_exponent()) {
    const HkTable table(f, 801);
    return detail::time_quadrature(
        [&](double t) { return jump_flow(*f, t, [&](double x) { return table.targets(t, x); }); }, eps, T, panels);
  }
  return detail::time_quadrature(
      [&](double t) {
        const TargetCurves curves(f, t);
        return jump_flow(*f, t, [&](double x) { return curves(x); });
      },
      eps, T, panels);
}

struct BrownianConstant {
  double C = 0.0;         ///< 2 int Psi zeta_Z
  double C_jumps = 0.0;   ///< same constant from the expected jump sizes
  double C_upper = 0.0;   ///< sqrt(32 / pi) e^{-1/2}
};

/// V^[0,T] = C sqrt(T) for the Gaussian marginals, by two routes.
inline BrownianConstant brownian_constant() {
  const FamilyPtr g = make_family("gaussian");
  const SelfSimilarDuals duals(g);
  const HkTable table(g, 801);
  BrownianConstant c;
  c.C = 2.0 * psi_flow(*g, 1.0, [&](double x) { return duals.unit().psi(x); });
  c.C_jumps = 2.0 * jump_flow(*g, 1.0, [&](double x) { return table.targets(1.0, x); });
  c.C_upper = std::sqrt(32.0 / std::numbers::pi) * std::exp(-0.5);
  return c;
}

struct JConstant {
  double J = 0.0;          ///< max of the four edge expressions
  double grid_sup = 0.0;   ///< sup |Psi - y Psi'| over a grid, for comparison
  double theta_sup = 0.0;  ///< sup |Theta| over the same grid
};

/// J = sup_y |Psi(y) - y Psi'(y)| from the shape of Psi, which bounds
/// psi_dot by alpha t^(alpha-1) J.
inline JConstant j_constant(const SelfSimilarDuals& duals, double grid_half_width = 20.0, std::size_t n = 4001) {
  const PsiThetaTable& u = duals.unit();
  const double l = u.central().lo, r = u.central().hi;
  // theta and Psi' enter as limits from inside E.
  const double li = std::nextafter(l, r), ri = std::nextafter(r, l);
  JConstant j;
  j.J = std::max({u.psi(l) + (u.theta(li) + 1.0) * std::abs(l), u.psi(r) + (1.0 - u.theta(ri)) * r,
                  u.psi_prime(li) * l - u.psi(l), u.psi_prime(ri) * r - u.psi(r)});
  for (double y : linspace(-grid_half_width, grid_half_width, n)) {
    j.grid_sup = std::max(j.grid_sup, std::abs(u.psi(y) - y * u.psi_prime(y)));
    j.theta_sup = std::max(j.theta_sup, std::abs(u.theta(y)));
  }
  return j;
}

struct TVEstimate {
  double estimate = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  double bound = 0.0;
};

inline TVEstimate expected_tv_mc(std::span<const PathSkeleton> paths, double bound = 0.0) {
  std::vector<double> tv;
  tv.reserve(paths.size());
  for (const auto& p : paths) tv.push_back(path_tv(p));
  const MeanSe m = mean_se(tv);
  return {m.mean, m.se, m.n, bound};
}

}  // namespace mimic

#endif  // MIMIC_VARIATION_HPP
