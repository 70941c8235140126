#ifndef MIMIC_PSI_THETA_HPP
#define MIMIC_PSI_THETA_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/family.hpp"
#include "mimic/hk.hpp"
#include "mimic/numerics.hpp"

namespace mimic {

/// Dual functions at a fixed time t, anchored at x0 in E_t:
///   theta(x) = int_{x0}^x 2 / (b - a) dz,
///   psi(x)   = int_{x0}^x (2x - a(z) - b(z)) / (b(z) - a(z)) dz   (x the outer variable)
/// on the closure of E_t, and outside it
///   x < l_E:  z = a^{-1}(x), theta(x) = theta(z), psi(x) = psi(z) + (z - x)(1 - theta(z)),
///   x > r_E:  z = b^{-1}(x), theta(x) = theta(z), psi(x) = psi(z) + (x - z)(1 + theta(z)).
/// Writing I1 = int dz / (b - a) and I2 = int (a + b) / (b - a) dz gives
/// theta = 2 I1 and psi = 2x I1 - I2; both integrals are accumulated cell by
/// cell with Gauss-Legendre on the target curves.
///
/// With closed-form targets (a, b the ends of E_t) psi is held at its edge
/// value outside E_t and theta vanishes there.
class PsiThetaTable {
 public:
  PsiThetaTable() = default;
  PsiThetaTable(TargetCurves curves, double x0) : curves_(std::move(curves)), x0_(x0) {
    const MarginalFamily& f = curves_.family();
    e_ = f.gamma_support(curves_.time());
    if (!e_.contains(x0))
      throw QueryOutsideSupport(f.name() + ": anchor x0 = " + std::to_string(x0) + " is outside E_t");
    if (curves_.closed_form()) return;

    const auto z = curves_.A().nodes();
    nodes_.assign(z.begin(), z.end());
    nodes_.push_back(x0);
    std::sort(nodes_.begin(), nodes_.end());
    nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
    const std::size_t n = nodes_.size();
    const std::size_t k0 = static_cast<std::size_t>(std::lower_bound(nodes_.begin(), nodes_.end(), x0) - nodes_.begin());
    i1_.assign(n, 0.0);
    i2_.assign(n, 0.0);
    for (std::size_t k = k0; k + 1 < n; ++k) {
      const auto [d1, d2] = cell(nodes_[k], nodes_[k + 1]);
      i1_[k + 1] = i1_[k] + d1;
      i2_[k + 1] = i2_[k] + d2;
    }
    for (std::size_t k = k0; k > 0; --k) {
      const auto [d1, d2] = cell(nodes_[k - 1], nodes_[k]);
      i1_[k - 1] = i1_[k] - d1;
      i2_[k - 1] = i2_[k] - d2;
    }
  }

  [[nodiscard]] double time() const { return curves_.time(); }
  [[nodiscard]] double x0() const { return x0_; }
  [[nodiscard]] Interval central() const { return e_; }
  [[nodiscard]] const TargetCurves& curves() const { return curves_; }
  [[nodiscard]] HkTargets targets(double x) const { return curves_(x); }

  [[nodiscard]] double theta(double x) const {
    if (curves_.closed_form()) return inside(x) ? 2.0 * (x - x0_) / e_.width() : 0.0;
    if (x > e_.hi) return theta_in(inverse_b(x));
    if (x < e_.lo) return theta_in(inverse_a(x));
    return theta_in(x);
  }

  [[nodiscard]] double psi(double x) const {
    if (curves_.closed_form()) {
      const double y = std::clamp(x, e_.lo, e_.hi);
      return (y - x0_) * (2.0 * y - e_.lo - e_.hi) / e_.width();
    }
    if (x > e_.hi) {
      const double z = inverse_b(x);
      return psi_in(z) + (x - z) * (1.0 + theta_in(z));
    }
    if (x < e_.lo) {
      const double z = inverse_a(x);
      return psi_in(z) + (z - x) * (1.0 - theta_in(z));
    }
    return psi_in(x);
  }

  /// d psi / dx: theta + (2x - a - b) / (b - a) on E_t, 1 + theta(z) and
  /// theta(z) - 1 on the right and left branches.
  [[nodiscard]] double psi_prime(double x) const {
    if (curves_.closed_form()) return inside(x) ? 2.0 * (2.0 * x - x0_ - 0.5 * (e_.lo + e_.hi)) / e_.width() : 0.0;
    if (x > e_.hi) return 1.0 + theta_in(inverse_b(x));
    if (x < e_.lo) return theta_in(inverse_a(x)) - 1.0;
    const double y = std::clamp(x, std::nextafter(e_.lo, e_.hi), std::nextafter(e_.hi, e_.lo));
    const auto [a, b] = curves_(y);
    return theta_in(x) + (2.0 * x - a - b) / (b - a);
  }

  /// L(x, y) = |y - x| + psi(x) + theta(x)(y - x) - psi(y) >= 0.
  [[nodiscard]] double L(double x, double y) const { return std::abs(y - x) + psi(x) + theta(x) * (y - x) - psi(y); }

  /// z in the closure of E_t with b(z) = x, for x > r_E.
  [[nodiscard]] double inverse_b(double x) const {
    return invert([&](double z) { return curves_(z).b; }, x, curves_.B());
  }
  /// z in the closure of E_t with a(z) = x, for x < l_E.
  [[nodiscard]] double inverse_a(double x) const {
    return invert([&](double z) { return curves_(z).a; }, x, curves_.A());
  }

 private:
  [[nodiscard]] bool inside(double x) const { return x > e_.lo && x < e_.hi; }

  [[nodiscard]] std::pair<double, double> cell(double lo, double hi) const {
    double s1 = 0.0, s2 = 0.0;
    const double h = 0.5 * (hi - lo), c = 0.5 * (hi + lo);
    for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
      const auto [a, b] = curves_(c + h * kGlNodes[k]);
      s1 += kGlWeights[k] / (b - a);
      s2 += kGlWeights[k] * (a + b) / (b - a);
    }
    return {s1 * h, s2 * h};
  }

  // (I1, I2) from x0 to x, for x in the closure of E_t.
  [[nodiscard]] std::pair<double, double> integrals(double x) const {
    if (x <= nodes_.front()) {
      const auto [d1, d2] = cell(x, nodes_.front());
      return {i1_.front() - d1, i2_.front() - d2};
    }
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
    const auto [d1, d2] = cell(nodes_[k], x);
    return {i1_[k] + d1, i2_[k] + d2};
  }
  [[nodiscard]] double theta_in(double x) const { return 2.0 * integrals(x).first; }
  [[nodiscard]] double psi_in(double x) const {
    const auto [i1, i2] = integrals(x);
    return 2.0 * x * i1 - i2;
  }

  // Both target maps decrease on E_t; solve map(z) = x on the tabulated
  // range. Beyond it z stays at the last node: psi then continues along its
  // tangent, which is first-order exact because d psi / dz vanishes at
  // map(z) = x, and the mass out there is negligible.
  template <class Map>
  [[nodiscard]] double invert(Map&& map, double x, const HermiteCurve& curve) const {
    const double zl = curve.front(), zr = curve.back();
    const double ml = curve.values().front(), mr = curve.values().back();
    if (x >= ml) return zl;
    if (x <= mr) return zr;
    return find_root([&](double z) { return map(z) - x; }, zl, zr, 1e-15);
  }

  TargetCurves curves_;
  double x0_ = 0.0;
  Interval e_;
  std::vector<double> nodes_, i1_, i2_;
};

inline PsiThetaTable build_psi_theta(FamilyPtr family, double t, double x0, std::size_t nodes = 401) {
  return PsiThetaTable(TargetCurves(std::move(family), t, nodes), x0);
}

/// psi(t, x), theta(t, x) and d psi / dt over a time range: the ingredients
/// of the pathwise sub-hedge.
class DualFunctions {
 public:
  virtual ~DualFunctions() = default;
  [[nodiscard]] virtual double psi(double t, double x) const = 0;
  [[nodiscard]] virtual double theta(double t, double x) const = 0;
  [[nodiscard]] virtual double psi_dot(double t, double x) const = 0;
  /// int_{u0}^{u1} psi_dot(u, x) du.
  [[nodiscard]] virtual double time_integral(double x, double u0, double u1) const = 0;
};

/// Self-similar families: psi_t(y) = t^alpha Psi(y t^-alpha), theta_t(y) =
/// Theta(y t^-alpha), psi_dot = alpha t^(alpha-1) [Psi(z) - z Psi'(z)] with
/// z = y t^-alpha, from the profile table at t = 1 anchored at 0.
class SelfSimilarDuals final : public DualFunctions {
 public:
  explicit SelfSimilarDuals(FamilyPtr family, std::size_t nodes = 801) {
    alpha_ = family->scaling_exponent().value_or(0.0);
    if (!(alpha_ > 0.0)) throw UnsupportedFamily(family->name() + " is not self-similar");
    unit_ = build_psi_theta(std::move(family), 1.0, 0.0, nodes);
  }

  [[nodiscard]] const PsiThetaTable& unit() const { return unit_; }
  [[nodiscard]] double alpha() const { return alpha_; }

  // At t = 0 only the anchor (the mean, shifted to 0) is reachable.
  [[nodiscard]] double psi(double t, double x) const override {
    if (t <= 0.0) return at_origin(x, 0.0);
    const double s = std::pow(t, alpha_);
    return s * unit_.psi(x / s);
  }
  [[nodiscard]] double theta(double t, double x) const override {
    if (t <= 0.0) return at_origin(x, unit_.theta(0.0));
    return unit_.theta(x / std::pow(t, alpha_));
  }
  [[nodiscard]] double psi_dot(double t, double x) const override {
    if (t <= 0.0) return at_origin(x, 0.0);
    const double z = x / std::pow(t, alpha_);
    return alpha_ * std::pow(t, alpha_ - 1.0) * (unit_.psi(z) - z * unit_.psi_prime(z));
  }
  /// psi_dot is the exact t-derivative of t^alpha Psi(x t^-alpha), so the
  /// integral is a difference of psi values.
  [[nodiscard]] double time_integral(double x, double u0, double u1) const override {
    return psi(u1, x) - psi(u0, x);
  }

 private:
  [[nodiscard]] static double at_origin(double x, double value) {
    if (x != 0.0) throw QueryOutsideSupport("at t = 0 the path must sit at the mean");
    return value;
  }

  double alpha_ = 0.0;
  PsiThetaTable unit_;
};

/// Other families: at each queried time a table is built from target
/// curves interpolated on a TargetSurface, so every L_t is that of its own
/// curves and vanishes at the kernel targets up to interpolation error,
/// quadratically. psi_dot is a central difference with step 1e-4 t.
class SurfaceDuals final : public DualFunctions {
 public:
  SurfaceDuals(FamilyPtr family, double t_lo, double t_hi)
      : x0_(family->mean()), surface_(std::move(family), t_lo, t_hi) {}

  [[nodiscard]] const TargetSurface& surface() const { return surface_; }
  [[nodiscard]] std::shared_ptr<const PsiThetaTable> slice(double t) const {
    {
      const std::lock_guard lock(mutex_);
      for (const auto& [time, tb] : cache_)
        if (time == t) return tb;
    }
    auto tb = std::make_shared<const PsiThetaTable>(surface_.curves(t), x0_);
    const std::lock_guard lock(mutex_);
    cache_[next_++ % cache_.size()] = {t, tb};
    return tb;
  }

  [[nodiscard]] double psi(double t, double x) const override { return slice(t)->psi(x); }
  [[nodiscard]] double theta(double t, double x) const override { return slice(t)->theta(x); }
  [[nodiscard]] double psi_dot(double t, double x) const override {
    const double h = 1e-4 * t;
    const double lo = std::max(t - h, surface_.t_lo()), hi = std::min(t + h, surface_.t_hi());
    return (psi(hi, x) - psi(lo, x)) / (hi - lo);
  }
  /// Exact for the continuum of slices: a difference of psi values.
  [[nodiscard]] double time_integral(double x, double u0, double u1) const override {
    return psi(u1, x) - psi(u0, x);
  }

 private:
  double x0_;
  TargetSurface surface_;
  mutable std::mutex mutex_;
  mutable std::array<std::pair<double, std::shared_ptr<const PsiThetaTable>>, 16> cache_{};
  mutable std::size_t next_ = 0;
};

/// Scaled profile duals for self-similar families, a target surface on
/// [t_lo, t_hi] otherwise.
inline std::shared_ptr<const DualFunctions> make_duals(FamilyPtr family, double t_lo, double t_hi) {
  if (!family->dispersion()) throw NoDispersion(family->name() + " does not satisfy the dispersion assumption");
  if (family->scaling_exponent()) return std::make_shared<SelfSimilarDuals>(std::move(family));
  return std::make_shared<SurfaceDuals>(std::move(family), t_lo, t_hi);
}

}  // namespace mimic

#endif  // MIMIC_PSI_THETA_HPP
