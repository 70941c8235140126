#ifndef MIMIC_KERNEL_HPP
#define MIMIC_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/family.hpp"

namespace mimic {

/// Two-point martingale jump law: x moves to a or b with mean x.
struct BinomialKernel {
  double x = 0.0;
  double a = 0.0;
  double b = 0.0;

  [[nodiscard]] double p_up() const { return (x - a) / (b - a); }
  [[nodiscard]] double p_down() const { return (b - x) / (b - a); }
  [[nodiscard]] double mean() const { return p_down() * a + p_up() * b; }
  [[nodiscard]] double quantile(double u) const { return u <= p_down() ? a : b; }
  [[nodiscard]] double upper_tail(double z) const {
    return (z <= a ? p_down() : 0.0) + (z <= b ? p_up() : 0.0);
  }
  [[nodiscard]] double lower_tail(double z) const {
    return (z >= a ? p_down() : 0.0) + (z >= b ? p_up() : 0.0);
  }
};

/// Law on the real line used as the jump distribution of a general kernel.
class KernelLaw {
 public:
  virtual ~KernelLaw() = default;
  /// F(y) = law((-inf, y]).
  [[nodiscard]] virtual double cdf(double y) const = 0;
  /// law([z, inf)).
  [[nodiscard]] virtual double upper_tail(double z) const = 0;
  /// inf{y : F(y) >= u}.
  [[nodiscard]] virtual double quantile(double u) const = 0;
  [[nodiscard]] virtual double mean() const = 0;
};

/// Mass spread uniformly over [lo, hi]; an atom at lo when hi <= lo.
struct UniformPiece {
  double lo = 0.0;
  double hi = 0.0;
  double mass = 0.0;
};

/// Atoms plus uniform pieces. The cdf is piecewise linear between sorted
/// breakpoints and jumps at atoms; masses are normalised to one.
class PiecewiseLaw final : public KernelLaw {
 public:
  PiecewiseLaw() = default;
  PiecewiseLaw(const std::vector<Atom>& atoms, const std::vector<UniformPiece>& pieces) {
    for (const auto& a : atoms)
      if (a.mass > 0.0) y_.push_back(a.location);
    for (const auto& p : pieces) {
      if (!(p.mass > 0.0)) continue;
      y_.push_back(p.lo);
      if (p.hi > p.lo) y_.push_back(p.hi);
    }
    if (y_.empty()) throw Error("kernel law has no mass");
    std::sort(y_.begin(), y_.end());
    y_.erase(std::unique(y_.begin(), y_.end()), y_.end());
    const std::size_t n = y_.size();
    auto index = [&](double y) { return static_cast<std::size_t>(std::lower_bound(y_.begin(), y_.end(), y) - y_.begin()); };

    std::vector<double> jump(n, 0.0), seg(n, 0.0);  // seg[k]: mass on (y_k, y_{k+1})
    std::vector<double> dens(n + 1, 0.0);
    for (const auto& a : atoms)
      if (a.mass > 0.0) jump[index(a.location)] += a.mass;
    for (const auto& p : pieces) {
      if (!(p.mass > 0.0)) continue;
      if (!(p.hi > p.lo)) {
        jump[index(p.lo)] += p.mass;
        continue;
      }
      const double d = p.mass / (p.hi - p.lo);
      dens[index(p.lo)] += d;
      dens[index(p.hi)] -= d;
    }
    double d = 0.0, total = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      d += dens[k];
      seg[k] = std::max(d, 0.0) * (y_[k + 1] - y_[k]);
    }
    for (std::size_t k = 0; k < n; ++k) total += jump[k] + seg[k];
    if (!(total > 0.0)) throw Error("kernel law has no mass");

    left_.resize(n);
    at_.resize(n);
    double c = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      left_[k] = c;
      c += jump[k] / total;
      at_[k] = c;
      c += seg[k] / total;
    }
    at_.back() = 1.0;
  }

  /// Sorted locations where the cdf may jump or change slope.
  [[nodiscard]] std::span<const double> breakpoints() const { return y_; }

  [[nodiscard]] double cdf(double y) const override { return eval(y, false); }
  /// law((-inf, y)).
  [[nodiscard]] double cdf_left(double y) const { return eval(y, true); }
  [[nodiscard]] double upper_tail(double z) const override { return 1.0 - cdf_left(z); }
  [[nodiscard]] double quantile(double u) const override {
    const std::size_t k = static_cast<std::size_t>(std::lower_bound(at_.begin(), at_.end(), u) - at_.begin());
    if (k >= y_.size()) return y_.back();
    if (k == 0 || !(left_[k] >= u) || !(left_[k] > at_[k - 1])) return y_[k];
    return y_[k - 1] + (u - at_[k - 1]) / (left_[k] - at_[k - 1]) * (y_[k] - y_[k - 1]);
  }
  [[nodiscard]] double mean() const override {
    double m = 0.0;
    for (std::size_t k = 0; k < y_.size(); ++k) {
      m += y_[k] * (at_[k] - left_[k]);
      if (k + 1 < y_.size()) m += 0.5 * (y_[k] + y_[k + 1]) * (left_[k + 1] - at_[k]);
    }
    return m;
  }

 private:
  [[nodiscard]] double eval(double y, bool strict) const {
    const auto it = std::upper_bound(y_.begin(), y_.end(), y);
    if (it == y_.begin()) return 0.0;
    const std::size_t k = static_cast<std::size_t>(it - y_.begin()) - 1;
    if (y == y_[k]) return strict ? left_[k] : at_[k];
    if (k + 1 >= y_.size()) return 1.0;
    return at_[k] + (left_[k + 1] - at_[k]) * (y - y_[k]) / (y_[k + 1] - y_[k]);
  }

  std::vector<double> y_, left_, at_;  // left_[k] = F(y_k-), at_[k] = F(y_k)
};

/// Uniform law on [lo, hi].
class UniformLaw final : public KernelLaw {
 public:
  UniformLaw(double lo, double hi) : lo_(lo), hi_(hi) {}
  [[nodiscard]] double cdf(double y) const override { return std::clamp((y - lo_) / (hi_ - lo_), 0.0, 1.0); }
  [[nodiscard]] double upper_tail(double z) const override { return 1.0 - cdf(z); }
  [[nodiscard]] double quantile(double u) const override { return lo_ + u * (hi_ - lo_); }
  [[nodiscard]] double mean() const override { return 0.5 * (lo_ + hi_); }

 private:
  double lo_, hi_;
};

/// Convex combination of piecewise laws, mapped through y = scale * v.
///
/// Mixing the kernels of neighbouring table nodes with linear weights keeps
/// the mean equal to the interpolated source exactly.
class MixtureLaw final : public KernelLaw {
 public:
  using Part = std::pair<double, std::shared_ptr<const PiecewiseLaw>>;
  MixtureLaw(std::vector<Part> parts, double scale) : parts_(std::move(parts)), scale_(scale) {}

  [[nodiscard]] double cdf(double y) const override {
    double c = 0.0;
    for (const auto& [w, law] : parts_) c += w * law->cdf(y / scale_);
    return c;
  }
  [[nodiscard]] double cdf_left(double y) const {
    double c = 0.0;
    for (const auto& [w, law] : parts_) c += w * law->cdf_left(y / scale_);
    return c;
  }
  [[nodiscard]] double upper_tail(double z) const override { return 1.0 - cdf_left(z); }
  [[nodiscard]] double quantile(double u) const override {
    // The first breakpoint y* of the union where the cdf reaches u bounds the
    // answer; below it the cdf is linear back to the previous breakpoint.
    double star = kInf;
    for (const auto& [w, law] : parts_) {
      if (w <= 0.0) continue;
      const auto ys = law->breakpoints();
      const auto it = std::partition_point(ys.begin(), ys.end(), [&](double v) { return cdf(v * scale_) < u; });
      if (it != ys.end()) star = std::min(star, *it * scale_);
    }
    if (!std::isfinite(star)) {
      star = -kInf;
      for (const auto& [w, law] : parts_)
        if (w > 0.0) star = std::max(star, law->breakpoints().back() * scale_);
      return star;
    }
    double prev = -kInf;
    for (const auto& [w, law] : parts_) {
      if (w <= 0.0) continue;
      const auto ys = law->breakpoints();
      const auto it = std::lower_bound(ys.begin(), ys.end(), star / scale_);
      if (it != ys.begin()) prev = std::max(prev, *(it - 1) * scale_);
    }
    const double fl = cdf_left(star);
    if (!std::isfinite(prev) || !(fl >= u)) return star;
    const double fp = cdf(prev);
    if (!(fl > fp)) return star;
    return prev + (u - fp) / (fl - fp) * (star - prev);
  }
  [[nodiscard]] double mean() const override {
    double m = 0.0;
    for (const auto& [w, law] : parts_) m += w * law->mean();
    return m * scale_;
  }

 private:
  std::vector<Part> parts_;
  double scale_;
};

/// General martingale jump law from source x, described by its tails.
struct GeneralKernel {
  double x = 0.0;
  std::shared_ptr<const KernelLaw> law;
  double mass_at_source = 0.0;

  /// pi^x([z, inf)).
  [[nodiscard]] double upper_tail(double z) const { return law->upper_tail(z); }
  /// pi^x((-inf, z]).
  [[nodiscard]] double lower_tail(double z) const { return law->cdf(z); }
  [[nodiscard]] double quantile(double u) const { return law->quantile(u); }
  [[nodiscard]] double mean() const { return law->mean(); }
};

using MartingaleKernel = std::variant<BinomialKernel, GeneralKernel>;

/// Generalized inverse of the kernel cdf, inf{y : F(y) >= u}.
inline double kernel_quantile(const BinomialKernel& k, double u) { return k.quantile(u); }
inline double kernel_quantile(const GeneralKernel& k, double u) { return k.quantile(u); }
inline double kernel_quantile(const MartingaleKernel& k, double u) {
  return std::visit([u](const auto& kk) { return kk.quantile(u); }, k);
}

inline double kernel_mean(const MartingaleKernel& k) {
  return std::visit([](const auto& kk) { return kk.mean(); }, k);
}

}  // namespace mimic

#endif  // MIMIC_KERNEL_HPP
