#ifndef MIMIC_FAMILIES_HPP
#define MIMIC_FAMILIES_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mimic/family.hpp"

namespace mimic {

/// Marginals of Brownian motion: mu_t = N(0, t).
class GaussianFamily final : public MarginalFamily {
 public:
  [[nodiscard]] std::string name() const override { return "gaussian"; }
  [[nodiscard]] double mean() const override { return 0.0; }
  [[nodiscard]] double variance(double t) const override { return t; }

  [[nodiscard]] double density(double t, double x) const override {
    const double s = std::sqrt(t);
    return normal_pdf(x / s) / s;
  }
  [[nodiscard]] double cdf(double t, double x) const override { return normal_cdf(x / std::sqrt(t)); }
  [[nodiscard]] double potential(double t, double x) const override {
    const double s = std::sqrt(t);
    const double z = x / s;
    return 2.0 * s * (normal_pdf(z) + z * normal_cdf(z) - 0.5 * z);
  }
  [[nodiscard]] double q(double t, double x) const override { return 0.5 * density(t, x); }
  [[nodiscard]] double q_prime(double t, double x) const override {
    return -x * density(t, x) / (2.0 * t);
  }
  [[nodiscard]] double density_rate(double t, double x) const override {
    return density(t, x) * (x * x - t) / (2.0 * t * t);
  }
  [[nodiscard]] double rate(double t, double x) const override {
    return std::max(t - x * x, 0.0) / (2.0 * t * t);
  }
  [[nodiscard]] double rate_bound(double t) const override { return 1.0 / (2.0 * t); }

  [[nodiscard]] Interval support(double) const override { return {-kInf, kInf}; }
  [[nodiscard]] Interval lambda_support(double) const override { return {-kInf, kInf}; }
  [[nodiscard]] Interval gamma_support(double t) const override {
    const double s = std::sqrt(t);
    return {-s, s};
  }

  [[nodiscard]] Decomposition decompose(double t) const override { return regular_decomposition(*this, t); }
  [[nodiscard]] bool regular() const override { return true; }
  [[nodiscard]] bool dispersion() const override { return true; }
  [[nodiscard]] std::optional<double> scaling_exponent() const override { return 0.5; }
};

/// Marginals of exponential Brownian motion exp(W_t - t/2); mean 1.
///
/// Evaluated in log space: the density carries an x^{-3/2} factor.
class ExpBrownianFamily final : public MarginalFamily {
 public:
  [[nodiscard]] std::string name() const override { return "exp-brownian"; }
  [[nodiscard]] double mean() const override { return 1.0; }
  [[nodiscard]] double variance(double t) const override { return std::expm1(t); }

  [[nodiscard]] double density(double t, double x) const override {
    if (!(x > 0.0)) return 0.0;
    return std::exp(log_density(t, std::log(x)));
  }
  [[nodiscard]] double cdf(double t, double x) const override {
    if (!(x > 0.0)) return 0.0;
    return normal_cdf((std::log(x) + 0.5 * t) / std::sqrt(t));
  }
  [[nodiscard]] double quantile(double t, double u) const override {
    // Bisection in log space keeps relative precision near zero.
    const double s = std::sqrt(t);
    const double ly = bisect_first_true(
        [&](double l) { return normal_cdf((l + 0.5 * t) / s) >= u; }, -0.5 * t - 40.0 * s,
        -0.5 * t + 40.0 * s, 1e-13);
    return std::exp(ly);
  }
  [[nodiscard]] double potential(double t, double x) const override {
    if (!(x > 0.0)) return 1.0 - x;
    const double s = std::sqrt(t);
    const double l = std::log(x);
    return 2.0 * normal_cdf(-l / s + 0.5 * s) - 2.0 * x * normal_cdf(-l / s - 0.5 * s) + x;
  }
  [[nodiscard]] double q(double t, double x) const override {
    if (!(x > 0.0)) return 0.0;
    const double l = std::log(x);
    return 0.5 * std::exp(2.0 * l + log_density(t, l));
  }
  [[nodiscard]] double q_prime(double t, double x) const override {
    if (!(x > 0.0)) return 0.0;
    const double l = std::log(x);
    return 0.5 * std::exp(l + log_density(t, l)) * (0.5 - l / t);
  }
  [[nodiscard]] double density_rate(double t, double x) const override {
    if (!(x > 0.0)) return 0.0;
    const double l = std::log(x);
    return density(t, x) / (2.0 * t * t) * (l * l - t - 0.25 * t * t);
  }
  [[nodiscard]] double rate(double t, double x) const override {
    if (!(x > 0.0)) return 0.0;
    const double l = std::log(x);
    return std::max(0.125 + 0.5 / t - l * l / (2.0 * t * t), 0.0);
  }
  [[nodiscard]] double rate_bound(double t) const override { return 0.5 / t + 0.125; }

  [[nodiscard]] Interval support(double) const override { return {0.0, kInf}; }
  [[nodiscard]] Interval lambda_support(double) const override { return {0.0, kInf}; }
  [[nodiscard]] Interval gamma_support(double t) const override {
    const double w = std::sqrt(t + 0.25 * t * t);
    return {std::exp(-w), std::exp(w)};
  }
  /// Twelve log-standard deviations: mean +- 10 sd misses the heavy right tail.
  [[nodiscard]] Interval integration_range(double t) const override {
    return {0.0, std::exp(-0.5 * t + 12.0 * std::sqrt(t))};
  }

  /// The lambda tails span many decades; they are cut into pieces of equal
  /// log-width so each quadrature sees a well-scaled integrand.
  [[nodiscard]] Decomposition decompose(double t) const override {
    Decomposition d = regular_decomposition(*this, t);
    const Interval e = gamma_support(t);
    const double step = std::sqrt(t);
    std::vector<double> cuts{0.0};
    for (double l = std::log(e.lo) - 14.0 * step; l < std::log(e.lo) - 0.5 * step; l += step)
      cuts.push_back(std::exp(l));
    cuts.push_back(e.lo);
    cuts.push_back(e.hi);
    const double top = integration_range(t).hi;
    for (double x = e.hi * std::exp(step); x < top; x *= std::exp(step)) cuts.push_back(x);
    cuts.push_back(top);
    std::vector<DensityPiece> pieces;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i] == e.lo) continue;
      const double base = q_prime(t, cuts[i]);
      pieces.push_back({cuts[i], cuts[i + 1], d.lambda.pieces().front().density,
                        [this, t, base](double x) { return q_prime(t, x) - base; }});
    }
    d.lambda = DecompositionMeasure(std::move(pieces), {});
    return d;
  }
  [[nodiscard]] bool regular() const override { return true; }
  [[nodiscard]] bool dispersion() const override { return true; }

 private:
  static double log_density(double t, double l) {
    return -1.5 * l - 0.5 * std::log(2.0 * std::numbers::pi * t) - l * l / (2.0 * t) - 0.125 * t;
  }
};

/// mu_t = U[-t, t]. gamma_t has a density, lambda_t is two atoms at +-t.
class UniformFamily final : public MarginalFamily {
 public:
  [[nodiscard]] std::string name() const override { return "uniform"; }
  [[nodiscard]] double mean() const override { return 0.0; }
  [[nodiscard]] double variance(double t) const override { return t * t / 3.0; }

  [[nodiscard]] double density(double t, double x) const override {
    return (x > -t && x < t) ? 0.5 / t : 0.0;
  }
  [[nodiscard]] double cdf(double t, double x) const override {
    return std::clamp((x + t) / (2.0 * t), 0.0, 1.0);
  }
  [[nodiscard]] double quantile(double t, double u) const override { return t * (2.0 * u - 1.0); }
  [[nodiscard]] double potential(double t, double x) const override {
    return (x > -t && x < t) ? (t * t + x * x) / (2.0 * t) : std::abs(x);
  }
  [[nodiscard]] double q(double t, double x) const override {
    return (x > -t && x < t) ? (t * t - x * x) / (4.0 * t * t) : 0.0;
  }
  [[nodiscard]] double q_prime(double t, double x) const override {
    return (x > -t && x < t) ? -x / (2.0 * t * t) : 0.0;
  }
  /// Absolutely continuous part only; the atoms of lambda_t are not included.
  [[nodiscard]] double density_rate(double t, double x) const override {
    return (x > -t && x < t) ? -0.5 / (t * t) : 0.0;
  }
  [[nodiscard]] double rate(double t, double x) const override {
    return (x > -t && x < t) ? 1.0 / t : 0.0;
  }
  [[nodiscard]] double rate_bound(double t) const override { return 1.0 / t; }

  [[nodiscard]] Interval support(double t) const override { return {-t, t}; }
  [[nodiscard]] Interval lambda_support(double t) const override { return {-t, t}; }
  [[nodiscard]] Interval gamma_support(double t) const override { return {-t, t}; }

  [[nodiscard]] Decomposition decompose(double t) const override {
    std::vector<DensityPiece> g{{-t, t, [t](double) { return 0.5 / (t * t); },
                                 [t](double x) { return (x + t) * 0.5 / (t * t); }}};
    std::vector<Atom> l{{-t, 0.5 / t}, {t, 0.5 / t}};
    return {DecompositionMeasure(std::move(g), {}), DecompositionMeasure({}, std::move(l))};
  }
  [[nodiscard]] bool regular() const override { return false; }
  [[nodiscard]] bool dispersion() const override { return true; }
  [[nodiscard]] std::optional<double> scaling_exponent() const override { return 1.0; }
  [[nodiscard]] std::optional<HkTargets> closed_form_targets(double t, double) const override {
    return HkTargets{-t, t};
  }
};

/// mu_t = e^{-t} delta_0 + (1 - e^{-t}) U[-1, 1]: mass leaves the atom at
/// zero at rate one and spreads uniformly.
class AtomMixtureFamily final : public MarginalFamily {
 public:
  [[nodiscard]] std::string name() const override { return "atom-mix"; }
  [[nodiscard]] double mean() const override { return 0.0; }
  [[nodiscard]] double variance(double t) const override { return -std::expm1(-t) / 3.0; }

  [[nodiscard]] double density(double t, double x) const override {
    return (x > -1.0 && x < 1.0) ? -0.5 * std::expm1(-t) : 0.0;
  }
  [[nodiscard]] double cdf(double t, double x) const override {
    const double w = -std::expm1(-t);
    double c = w * std::clamp((x + 1.0) / 2.0, 0.0, 1.0);
    if (x >= 0.0) c += std::exp(-t);
    return c;
  }
  [[nodiscard]] double quantile(double t, double u) const override {
    const double w = -std::expm1(-t);
    const double below = 0.5 * w;
    if (u <= below) return 2.0 * u / w - 1.0;
    if (u <= below + std::exp(-t)) return 0.0;
    return 2.0 * (u - std::exp(-t)) / w - 1.0;
  }
  [[nodiscard]] std::vector<Atom> atoms(double t) const override { return {{0.0, std::exp(-t)}}; }
  [[nodiscard]] double potential(double t, double x) const override {
    if (x <= -1.0 || x >= 1.0) return std::abs(x);
    return 0.5 * (1.0 + x * x) * (-std::expm1(-t)) + std::exp(-t) * std::abs(x);
  }
  [[nodiscard]] double q(double t, double x) const override {
    if (x <= -1.0 || x >= 1.0) return 0.0;
    const double d = 1.0 - std::abs(x);
    return 0.25 * std::exp(-t) * d * d;
  }
  [[nodiscard]] double q_prime(double t, double x) const override {
    if (x <= -1.0 || x >= 1.0) return 0.0;
    const double sgn = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
    return -0.5 * std::exp(-t) * (1.0 - std::abs(x)) * sgn;
  }
  [[nodiscard]] double density_rate(double t, double x) const override {
    return (x > -1.0 && x < 1.0) ? 0.5 * std::exp(-t) : 0.0;
  }
  [[nodiscard]] double rate(double, double x) const override { return x == 0.0 ? 1.0 : 0.0; }
  [[nodiscard]] double rate_bound(double) const override { return 1.0; }

  [[nodiscard]] Interval support(double) const override { return {-1.0, 1.0}; }
  [[nodiscard]] Interval lambda_support(double) const override { return {-1.0, 1.0}; }
  [[nodiscard]] Interval gamma_support(double) const override { return {0.0, 0.0}; }

  [[nodiscard]] Decomposition decompose(double t) const override {
    const double m = std::exp(-t);
    std::vector<DensityPiece> l{{-1.0, 1.0, [m](double) { return 0.5 * m; },
                                 [m](double x) { return 0.5 * m * (x + 1.0); }}};
    return {DecompositionMeasure({}, {{0.0, m}}), DecompositionMeasure(std::move(l), {})};
  }
  [[nodiscard]] bool regular() const override { return false; }
  [[nodiscard]] bool dispersion() const override { return false; }
};

}  // namespace mimic

#endif  // MIMIC_FAMILIES_HPP
