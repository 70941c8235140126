#ifndef MIMIC_FAMILY_HPP
#define MIMIC_FAMILY_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/measure.hpp"
#include "mimic/numerics.hpp"

namespace mimic {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] bool contains(double x) const { return x > lo && x < hi; }
  [[nodiscard]] double width() const { return hi - lo; }
};

/// Mass-leaving / mass-arriving parts of the marginal flow at a fixed time.
struct Decomposition {
  DecompositionMeasure gamma;
  DecompositionMeasure lambda;
};

/// Binomial targets a < x < b for the minimal-variation kernel.
struct HkTargets {
  double a = 0.0;
  double b = 0.0;
};

/// A family of marginal laws mu_t, increasing in convex order, described in
/// closed form. Implementations are immutable and safe to share between
/// threads.
///
/// Notation: rho is the density of the absolutely continuous part of mu_t,
/// U(t, x) = E|X_t - x| the potential, Q = dU/dt / 2, and the jump rate
/// R_t(x) = gamma_t(dx) / mu_t(dx).
class MarginalFamily {
 public:
  virtual ~MarginalFamily() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual double mean() const = 0;
  [[nodiscard]] virtual double variance(double t) const = 0;

  [[nodiscard]] virtual double density(double t, double x) const = 0;
  [[nodiscard]] virtual double cdf(double t, double x) const = 0;
  [[nodiscard]] virtual double potential(double t, double x) const = 0;
  [[nodiscard]] virtual double q(double t, double x) const = 0;
  /// dQ/dx.
  [[nodiscard]] virtual double q_prime(double t, double x) const = 0;

  /// Time derivative of the density. Defined for regular families and for
  /// the absolutely continuous part of the others.
  [[nodiscard]] virtual double density_rate(double t, double x) const {
    (void)t;
    (void)x;
    throw UnsupportedFamily(name() + ": density_rate not available");
  }

  /// Jump intensity at state x; zero off the support of gamma_t. Never throws.
  [[nodiscard]] virtual double rate(double t, double x) const = 0;
  [[nodiscard]] virtual double rate_bound(double t) const = 0;

  /// Smallest intervals carrying mu_t, lambda_t and gamma_t.
  [[nodiscard]] virtual Interval support(double t) const = 0;
  [[nodiscard]] virtual Interval lambda_support(double t) const = 0;
  [[nodiscard]] virtual Interval gamma_support(double t) const = 0;

  /// Atoms of mu_t itself (not of lambda/gamma).
  [[nodiscard]] virtual std::vector<Atom> atoms(double t) const {
    (void)t;
    return {};
  }

  [[nodiscard]] virtual Decomposition decompose(double t) const = 0;

  /// U in C^{1,2}: density and its time derivative exist and are continuous.
  [[nodiscard]] virtual bool regular() const = 0;
  /// Mass leaves a central interval E_t and arrives outside it.
  [[nodiscard]] virtual bool dispersion() const = 0;

  /// Exponent alpha when mu_t is the law of t^alpha Z.
  [[nodiscard]] virtual std::optional<double> scaling_exponent() const { return std::nullopt; }

  /// Closed-form binomial targets, for families where they are known
  /// without solving the first-order conditions.
  [[nodiscard]] virtual std::optional<HkTargets> closed_form_targets(double t, double x) const {
    (void)t;
    (void)x;
    return std::nullopt;
  }

  /// Generalized inverse of the cdf: inf{x : F(x) >= u}.
  [[nodiscard]] virtual double quantile(double t, double u) const {
    const Interval s = integration_range(t);
    double lo = s.lo, hi = s.hi;
    while (cdf(t, lo) >= u) lo -= (hi - lo);
    while (cdf(t, hi) < u) hi += (hi - lo);
    return bisect_first_true([&](double x) { return cdf(t, x) >= u; }, lo, hi, 1e-12);
  }

  /// Finite interval outside which mu_t carries negligible mass: the support
  /// itself when bounded, mean +- 10 standard deviations otherwise.
  [[nodiscard]] virtual Interval integration_range(double t) const {
    const Interval s = support(t);
    const double sd = std::sqrt(variance(t));
    return {std::isfinite(s.lo) ? s.lo : std::max(s.lo, mean() - 10.0 * sd),
            std::isfinite(s.hi) ? s.hi : std::min(s.hi, mean() + 10.0 * sd)};
  }

  /// Total mass and first moment of mu_t by quadrature (atoms exact). The
  /// range is split at quantiles so that long tails stay resolvable.
  [[nodiscard]] std::pair<double, double> mass_and_mean(double t) const {
    const Interval r = integration_range(t);
    const auto gs = gamma_support(t);
    std::vector<double> splits{gs.lo, gs.hi, mean()};
    for (double u : {1e-8, 1e-4, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1 - 1e-4, 1 - 1e-8})
      splits.push_back(quantile(t, u));
    double m0 = integrate([&](double x) { return density(t, x); }, r.lo, r.hi, 1e-12, splits);
    double m1 = integrate([&](double x) { return x * density(t, x); }, r.lo, r.hi, 1e-12, splits);
    for (const auto& a : atoms(t)) {
      m0 += a.mass;
      m1 += a.mass * a.location;
    }
    return {m0, m1};
  }
};

using FamilyPtr = std::shared_ptr<const MarginalFamily>;

/// Jump rate R_t(x). Throws QueryOutsideSupport when x carries no mass at t.
inline double eval_rate(const MarginalFamily& family, double t, double x) {
  bool in_support = family.density(t, x) > 0.0;
  for (const auto& a : family.atoms(t)) in_support = in_support || (a.location == x && a.mass > 0);
  if (!in_support)
    throw QueryOutsideSupport(family.name() + ": x = " + std::to_string(x) +
                              " is not in the support at t = " + std::to_string(t));
  return family.rate(t, x);
}

inline double eval_Q(const MarginalFamily& family, double t, double x) { return family.q(t, x); }

inline Decomposition decompose(const MarginalFamily& family, double t) { return family.decompose(t); }

struct ConvexOrderReport {
  double max_violation = 0.0;   ///< largest decrease of U in t on the grid
  double max_mass_error = 0.0;  ///< |mass - 1|
  double max_mean_error = 0.0;  ///< |mean - mu_bar|
  std::size_t violations = 0;   ///< grid cells with a decrease above 1e-12
};

/// Grid check that U(t, x) is non-decreasing in t and that mass and mean are
/// preserved.
inline ConvexOrderReport check_convex_order(const MarginalFamily& family,
                                            std::span<const double> t_grid,
                                            std::span<const double> x_grid) {
  ConvexOrderReport rep;
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
    for (double x : x_grid) {
      const double drop = family.potential(t_grid[i], x) - family.potential(t_grid[i + 1], x);
      rep.max_violation = std::max(rep.max_violation, drop);
      if (drop > 1e-12) ++rep.violations;
    }
  }
  for (double t : t_grid) {
    const auto [m0, m1] = family.mass_and_mean(t);
    rep.max_mass_error = std::max(rep.max_mass_error, std::abs(m0 - 1.0));
    rep.max_mean_error = std::max(rep.max_mean_error, std::abs(m1 - family.mean()));
  }
  return rep;
}

/// Decomposition of a regular family with dispersion: gamma = rho_dot^- on
/// E_t, lambda = rho_dot^+ on the two outer pieces. Cumulative masses come
/// from dQ/dx, which vanishes at the outer support ends.
inline Decomposition regular_decomposition(const MarginalFamily& f, double t) {
  const Interval range = f.integration_range(t);
  const Interval e = f.gamma_support(t);
  const double qp_l = f.q_prime(t, e.lo);
  const double qp_r = f.q_prime(t, e.hi);
  const double qp_lo = f.q_prime(t, range.lo);
  auto pos = [&f, t](double x) { return std::max(f.density_rate(t, x), 0.0); };
  auto neg = [&f, t](double x) { return std::max(-f.density_rate(t, x), 0.0); };
  std::vector<DensityPiece> gamma{
      {e.lo, e.hi, neg, [&f, t, qp_l](double x) { return qp_l - f.q_prime(t, x); }}};
  std::vector<DensityPiece> lambda{
      {range.lo, e.lo, pos, [&f, t, qp_lo](double x) { return f.q_prime(t, x) - qp_lo; }},
      {e.hi, range.hi, pos, [&f, t, qp_r](double x) { return f.q_prime(t, x) - qp_r; }}};
  return {DecompositionMeasure(std::move(gamma), {}), DecompositionMeasure(std::move(lambda), {})};
}

}  // namespace mimic

#endif  // MIMIC_FAMILY_HPP
