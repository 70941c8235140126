#ifndef MIMIC_NUMERICS_HPP
#define MIMIC_NUMERICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "mimic/error.hpp"

namespace mimic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Adaptive 31-point Gauss-Kronrod integration of f over [a, b].
///
/// `abs_tol` is the target absolute error. Breakpoints listed in `splits`
/// (discontinuities of f or its derivatives) are honoured exactly.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-10,
                 std::span<const double> splits = {}) {
  if (!(b > a)) return 0.0;
  std::vector<double> pts{a};
  for (double s : splits)
    if (s > a && s < b) pts.push_back(s);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (!(pts[i + 1] > pts[i])) continue;
    // Mapped onto [-1, 1]: the Kronrod error estimate is not scale invariant
    // and degrades like 1 / (b - a) on very short pieces.
    const double h = 0.5 * (pts[i + 1] - pts[i]), c = 0.5 * (pts[i + 1] + pts[i]);
    double err = 0.0;
    const double piece = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double u) { return h * f(c + h * u); }, -1.0, 1.0, 15, 1e-12, &err);
    if (!std::isfinite(piece) || (err > abs_tol && err > 1e-8 * std::abs(piece)))
      throw QuadratureFailure("integral on [" + std::to_string(pts[i]) + ", " +
                              std::to_string(pts[i + 1]) + "] has error estimate " +
                              std::to_string(err));
    total += piece;
  }
  return total;
}

/// 8-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 8> kGlNodes{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                                -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                                0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGlWeights{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                                  0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                                  0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss_legendre(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t k = 0; k < kGlNodes.size(); ++k) s += kGlWeights[k] * f(c + h * kGlNodes[k]);
  return s * h;
}

/// Root of a continuous function bracketed by [lo, hi] (TOMS 748).
template <class F>
double find_root(F&& f, double lo, double hi, double x_tol = 1e-14,
                 std::uintmax_t max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0))
    throw ConvergenceFailure("root not bracketed on [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]");
  auto tol = [x_tol](double u, double v) { return std::abs(u - v) <= x_tol * (1.0 + std::abs(u)); };
  std::uintmax_t iters = max_iter;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  if (iters >= max_iter) throw ConvergenceFailure("toms748 did not converge");
  return 0.5 * (r.first + r.second);
}

/// Plain bisection for monotone predicates: smallest x in [lo, hi] with
/// pred(x) true, to absolute tolerance `tol`. pred must be false..true.
template <class P>
double bisect_first_true(P&& pred, double lo, double hi, double tol = 1e-12) {
  for (int i = 0; i < 2000 && hi - lo > tol * (1.0 + std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

/// n points evenly spaced on [a, b] inclusive.
inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i)
    v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  v.back() = b;
  return v;
}

/// Nodes on the open interval (a, b) clustered towards both endpoints,
/// reaching within `gap` of each end. Used where tables must resolve
/// behaviour close to the edges of a central interval.
inline std::vector<double> clustered_nodes(double a, double b, std::size_t n, double gap) {
  // Uniform in s, mapped through tanh; the extreme nodes sit at a + gap, b - gap.
  std::vector<double> v(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const double smax = std::atanh(1.0 - gap / half);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = -smax + 2.0 * smax * static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = mid + half * std::tanh(s);
  }
  return v;
}

/// Linear interpolation on sorted nodes, clamped at the ends.
inline double interp_linear(std::span<const double> xs, std::span<const double> ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + w * (ys[i + 1] - ys[i]);
}

/// Cubic Hermite interpolant with explicit node derivatives, clamped to the
/// node range.
class HermiteCurve {
 public:
  HermiteCurve() = default;
  HermiteCurve(std::vector<double> x, std::vector<double> y, std::vector<double> dy)
      : x_(std::move(x)), y_(std::move(y)), dy_(std::move(dy)) {}

  [[nodiscard]] bool empty() const { return x_.empty(); }
  [[nodiscard]] double front() const { return x_.front(); }
  [[nodiscard]] double back() const { return x_.back(); }
  [[nodiscard]] std::span<const double> nodes() const { return x_; }
  [[nodiscard]] std::span<const double> values() const { return y_; }
  [[nodiscard]] std::span<const double> slopes() const { return dy_; }

  [[nodiscard]] double operator()(double x) const {
    const auto [i, h, s] = locate(x);
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * y_[i] + h10 * h * dy_[i] + h01 * y_[i + 1] + h11 * h * dy_[i + 1];
  }

  [[nodiscard]] double prime(double x) const {
    const auto [i, h, s] = locate(x);
    const double s2 = s * s;
    const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
    return (d00 * y_[i] + d01 * y_[i + 1]) / h + d10 * dy_[i] + d11 * dy_[i + 1];
  }

 private:
  struct Cell {
    std::size_t i;
    double h;
    double s;
  };
  [[nodiscard]] Cell locate(double x) const {
    x = std::clamp(x, x_.front(), x_.back());
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    i = std::clamp<std::size_t>(i, 1, x_.size() - 1) - 1;
    const double h = x_[i + 1] - x_[i];
    return {i, h, (x - x_[i]) / h};
  }

  std::vector<double> x_, y_, dy_;
};

}  // namespace mimic

#endif  // MIMIC_NUMERICS_HPP
