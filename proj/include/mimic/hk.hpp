#ifndef MIMIC_HK_HPP
#define MIMIC_HK_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/family.hpp"
#include "mimic/kernel.hpp"
#include "mimic/numerics.hpp"

namespace mimic {

/// Q_{t,x}(y) = Q(x) + Q'(x)(y - x) - Q(y).
inline double tangent_gap(const MarginalFamily& f, double t, double x, double y) {
  return f.q(t, x) + f.q_prime(t, x) * (y - x) - f.q(t, y);
}

namespace detail {

// Inverse of Q' on the convex branch left of E (Q' increasing there).
// Clamped to a finite support edge when Q' does not come down to `target`.
inline double left_branch_inverse(const MarginalFamily& f, double t, double target) {
  const Interval e = f.gamma_support(t);
  const Interval s = f.support(t);
  double lo = f.integration_range(t).lo;
  if (std::isfinite(s.lo)) {
    if (f.q_prime(t, std::nextafter(s.lo, e.lo)) >= target) return s.lo;
  } else {
    double step = e.hi - e.lo + 1.0;
    for (int i = 0; i < 200 && f.q_prime(t, lo) >= target; ++i, step *= 2.0) lo -= step;
  }
  return find_root([&](double y) { return f.q_prime(t, y) - target; }, lo, e.lo, 1e-15);
}

// Inverse of Q' on the convex branch right of E (Q' increasing there).
inline double right_branch_inverse(const MarginalFamily& f, double t, double target) {
  const Interval e = f.gamma_support(t);
  const Interval s = f.support(t);
  double hi = f.integration_range(t).hi;
  if (std::isfinite(s.hi)) {
    if (f.q_prime(t, std::nextafter(s.hi, e.hi)) <= target) return s.hi;
  } else {
    double step = e.hi - e.lo + 1.0;
    for (int i = 0; i < 200 && f.q_prime(t, hi) <= target; ++i, step *= 2.0) hi += step;
  }
  return find_root([&](double y) { return f.q_prime(t, y) - target; }, e.hi, hi, 1e-15);
}

}  // namespace detail

/// Solves the chord problem max_{a < x < b} (Q_{t,x}(b) - Q(a)) / (b - a)
/// through its first-order conditions Q'(a) = phi, Q'(x) - Q'(b) = phi,
/// Q_{t,x}(b) - Q(a) = phi (b - a). The unknown is a itself: near the ends
/// of E the admissible slopes shrink to a point while the range of a does not.
inline HkTargets solve_hk_targets(const MarginalFamily& f, double t, double x) {
  const Interval e = f.gamma_support(t);
  const double qpx = f.q_prime(t, x);
  const double qpl = f.q_prime(t, e.lo);
  const double qpr = f.q_prime(t, e.hi);
  const double lo = std::max(qpx, 0.0);
  const double hi = std::min(qpl, qpx - qpr);

  auto b_of = [&](double a) { return detail::right_branch_inverse(f, t, qpx - f.q_prime(t, a)); };
  // Decreasing in a; zero at the optimum.
  auto residual = [&](double a) {
    const double b = b_of(a);
    return tangent_gap(f, t, x, b) - f.q(t, a) - f.q_prime(t, a) * (b - a);
  };

  // Slopes closer than a few ulps to the ends cannot be inverted: there the
  // far target sits beyond the resolution of Q' and the end is returned.
  const double scale = std::max(std::abs(qpx), std::abs(qpl));
  const double ulps = 64.0 * (std::nextafter(scale, kInf) - scale);
  const double dphi = std::max(1e-12 * (hi - lo), ulps);
  if (!(hi - lo > 2.0 * dphi)) {
    // x within rounding of an end of E: the near target is that end and
    // the far one is as far out as Q' resolves.
    if (x - e.lo < e.hi - x) return {e.lo, detail::right_branch_inverse(f, t, -ulps)};
    return {detail::left_branch_inverse(f, t, ulps), e.hi};
  }
  double a_lo = detail::left_branch_inverse(f, t, lo + dphi);
  double a_hi = detail::left_branch_inverse(f, t, hi - dphi);
  const double r_lo = residual(a_lo), r_hi = residual(a_hi);
  if (!(r_lo > 0.0)) return {a_lo, b_of(a_lo)};
  if (!(r_hi < 0.0)) return {a_hi, b_of(a_hi)};
  const double a = find_root(residual, a_lo, a_hi, 1e-15, 400);
  return {a, b_of(a)};
}

/// Down and up targets a_t(x) < l_gamma(t) < x < r_gamma(t) < b_t(x).
inline HkTargets hk_bounds(const MarginalFamily& f, double t, double x) {
  if (!f.dispersion()) throw NoDispersion(f.name() + " does not satisfy the dispersion assumption");
  const Interval e = f.gamma_support(t);
  if (!e.contains(x))
    throw QueryOutsideSupport(f.name() + ": x = " + std::to_string(x) + " is outside E_t at t = " + std::to_string(t));
  if (auto cf = f.closed_form_targets(t, x)) return *cf;
  return solve_hk_targets(f, t, x);
}

inline BinomialKernel hk_kernel(const MarginalFamily& f, double t, double x) {
  const auto [a, b] = hk_bounds(f, t, x);
  return {x, a, b};
}

/// Targets at a fixed time tabulated as Hermite curves on nodes clustered
/// towards the ends of E_t, with slopes from
///   a' rho_dot(a) = p_down rho_dot(x),   b' rho_dot(b) = p_up rho_dot(x).
/// Queries beyond the outermost nodes are solved directly. Families with
/// closed-form targets skip the table.
class TargetCurves {
 public:
  TargetCurves() = default;
  TargetCurves(FamilyPtr family, double t, std::size_t nodes = 401) : f_(std::move(family)), t_(t) {
    if (!f_->dispersion()) throw NoDispersion(f_->name() + " does not satisfy the dispersion assumption");
    const Interval e = f_->gamma_support(t);
    if (f_->closed_form_targets(t, 0.5 * (e.lo + e.hi))) {
      closed_ = true;
      return;
    }
    const auto z = clustered_nodes(e.lo, e.hi, nodes, 1e-4 * e.width());
    std::vector<double> a(z.size()), b(z.size()), da(z.size()), db(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const auto tg = solve_hk_targets(*f_, t, z[i]);
      a[i] = tg.a;
      b[i] = tg.b;
      const double rz = f_->density_rate(t, z[i]);
      const double pd = (tg.b - z[i]) / (tg.b - tg.a);
      da[i] = pd * rz / f_->density_rate(t, tg.a);
      db[i] = (1.0 - pd) * rz / f_->density_rate(t, tg.b);
    }
    A_ = HermiteCurve(z, a, da);
    B_ = HermiteCurve(z, b, db);
  }

  /// Curves given directly, on nodes inside E_t.
  TargetCurves(FamilyPtr family, double t, HermiteCurve a, HermiteCurve b)
      : f_(std::move(family)), t_(t), A_(std::move(a)), B_(std::move(b)) {}

  [[nodiscard]] const MarginalFamily& family() const { return *f_; }
  [[nodiscard]] FamilyPtr family_ptr() const { return f_; }
  [[nodiscard]] double time() const { return t_; }
  [[nodiscard]] bool closed_form() const { return closed_; }
  [[nodiscard]] const HermiteCurve& A() const { return A_; }
  [[nodiscard]] const HermiteCurve& B() const { return B_; }

  [[nodiscard]] HkTargets operator()(double x) const {
    if (closed_ || x < A_.front() || x > A_.back()) return hk_bounds(*f_, t_, x);
    return {A_(x), B_(x)};
  }

 private:
  FamilyPtr f_;
  double t_ = 1.0;
  bool closed_ = false;
  HermiteCurve A_, B_;
};

/// Target curves of a family without scaling, solved on a geometric time
/// grid at fixed relative positions u in E_t and interpolated in log t by
/// four-point Lagrange polynomials. Slopes are stored per unit u.
class TargetSurface {
 public:
  TargetSurface() = default;
  /// n_times = 0 picks 32 times per unit of log t.
  TargetSurface(FamilyPtr family, double t_lo, double t_hi, std::size_t n_times = 0, std::size_t nodes = 201)
      : f_(std::move(family)), u_(clustered_nodes(0.0, 1.0, nodes, 1e-4)) {
    if (!(t_lo > 0.0) || !(t_hi > t_lo)) throw ConfigError("target surface needs 0 < t_lo < t_hi");
    if (n_times == 0) n_times = static_cast<std::size_t>(std::ceil(32.0 * std::log(t_hi / t_lo))) + 1;
    n_times = std::max<std::size_t>(n_times, 4);
    for (std::size_t k = 0; k < n_times; ++k) {
      const double w = static_cast<double>(k) / static_cast<double>(n_times - 1);
      const double t = k + 1 == n_times ? t_hi : t_lo * std::pow(t_hi / t_lo, w);
      log_t_.push_back(std::log(t));
      const Interval e = f_->gamma_support(t);
      Slice sl;
      for (double u : u_) {
        const double z = e.lo + u * e.width();
        const auto tg = solve_hk_targets(*f_, t, z);
        const double rz = f_->density_rate(t, z);
        const double pd = (tg.b - z) / (tg.b - tg.a);
        sl.a.push_back(tg.a);
        sl.b.push_back(tg.b);
        sl.da.push_back(e.width() * pd * rz / f_->density_rate(t, tg.a));
        sl.db.push_back(e.width() * (1.0 - pd) * rz / f_->density_rate(t, tg.b));
      }
      slices_.push_back(std::move(sl));
    }
  }

  [[nodiscard]] double t_lo() const { return std::exp(log_t_.front()); }
  [[nodiscard]] double t_hi() const { return std::exp(log_t_.back()); }

  /// Curves at time t in [t_lo, t_hi].
  [[nodiscard]] TargetCurves curves(double t) const {
    if (!(t >= t_lo() * (1 - 1e-12) && t <= t_hi() * (1 + 1e-12)))
      throw QueryOutsideSupport("t = " + std::to_string(t) + " is outside the tabulated time range");
    const double l = std::log(t);
    const auto it = std::upper_bound(log_t_.begin(), log_t_.end(), l);
    const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(it - log_t_.begin()), 2, log_t_.size() - 2) - 2;
    std::array<double, 4> w{};
    for (std::size_t i = 0; i < 4; ++i) {
      w[i] = 1.0;
      for (std::size_t j = 0; j < 4; ++j)
        if (j != i) w[i] *= (l - log_t_[k + j]) / (log_t_[k + i] - log_t_[k + j]);
    }
    const Interval e = f_->gamma_support(t);
    std::vector<double> z(u_.size()), a(u_.size()), b(u_.size()), da(u_.size()), db(u_.size());
    for (std::size_t n = 0; n < u_.size(); ++n) {
      z[n] = e.lo + u_[n] * e.width();
      for (std::size_t i = 0; i < 4; ++i) {
        const Slice& sl = slices_[k + i];
        a[n] += w[i] * sl.a[n];
        b[n] += w[i] * sl.b[n];
        da[n] += w[i] * sl.da[n] / e.width();
        db[n] += w[i] * sl.db[n] / e.width();
      }
    }
    return {f_, t, HermiteCurve(z, std::move(a), std::move(da)), HermiteCurve(z, std::move(b), std::move(db))};
  }

 private:
  struct Slice {
    std::vector<double> a, b, da, db;
  };
  FamilyPtr f_;
  std::vector<double> u_;
  std::vector<double> log_t_;
  std::vector<Slice> slices_;
};

/// Targets of a self-similar family from its curves at t = 1:
/// a_t(y) = t^alpha A(y t^-alpha), b_t(y) = t^alpha B(y t^-alpha).
class HkTable {
 public:
  HkTable() = default;
  HkTable(FamilyPtr family, std::size_t nodes = 401) {
    alpha_ = family->scaling_exponent().value_or(0.0);
    if (!(alpha_ > 0.0)) throw UnsupportedFamily(family->name() + ": HK tables need a self-similar family");
    unit_ = TargetCurves(std::move(family), 1.0, nodes);
  }

  [[nodiscard]] const MarginalFamily& family() const { return unit_.family(); }
  [[nodiscard]] const TargetCurves& unit() const { return unit_; }
  [[nodiscard]] double alpha() const { return alpha_; }

  [[nodiscard]] HkTargets targets(double t, double y) const {
    if (unit_.closed_form()) return hk_bounds(unit_.family(), t, y);
    const double s = std::pow(t, alpha_);
    const auto [a, b] = unit_(y / s);
    return {s * a, s * b};
  }
  [[nodiscard]] BinomialKernel kernel(double t, double y) const {
    const auto [a, b] = targets(t, y);
    return {y, a, b};
  }

 private:
  double alpha_ = 0.0;
  TargetCurves unit_;
};

}  // namespace mimic

#endif  // MIMIC_HK_HPP
