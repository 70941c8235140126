#ifndef MIMIC_MEASURE_HPP
#define MIMIC_MEASURE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "mimic/numerics.hpp"

namespace mimic {

struct Atom {
  double location = 0.0;
  double mass = 0.0;
};

/// Absolutely continuous piece of a measure: density on [lo, hi].
///
/// `cumulative(x)` returns the mass of [lo, x]; when absent it is obtained by
/// quadrature of the density.
struct DensityPiece {
  double lo = 0.0;
  double hi = 0.0;
  std::function<double(double)> density;
  std::function<double(double)> cumulative;
};

/// Finite measure made of density pieces plus exactly represented atoms.
///
/// Used for the mass-leaving (gamma) and mass-arriving (lambda) parts of the
/// marginal flow at a fixed time.
class DecompositionMeasure {
 public:
  DecompositionMeasure() = default;
  DecompositionMeasure(std::vector<DensityPiece> pieces, std::vector<Atom> atoms)
      : pieces_(std::move(pieces)), atoms_(std::move(atoms)) {
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });
  }

  [[nodiscard]] const std::vector<DensityPiece>& pieces() const { return pieces_; }
  [[nodiscard]] const std::vector<Atom>& atoms() const { return atoms_; }
  [[nodiscard]] bool has_continuous_part() const { return !pieces_.empty(); }

  /// Integral of f against the measure.
  template <class F>
  [[nodiscard]] double integrate(F&& f, double abs_tol = 1e-10) const {
    double total = 0.0;
    for (const auto& p : pieces_)
      total += mimic::integrate([&](double x) { return f(x) * p.density(x); }, p.lo, p.hi, abs_tol);
    for (const auto& a : atoms_) total += f(a.location) * a.mass;
    return total;
  }

  [[nodiscard]] double mass() const {
    return integrate([](double) { return 1.0; });
  }
  [[nodiscard]] double mean() const {
    return integrate([](double x) { return x; });
  }

  /// Mass of (-inf, x) or, with `inclusive`, of (-inf, x].
  [[nodiscard]] double mass_below(double x, bool inclusive = false) const {
    double total = continuous_below(x);
    for (const auto& a : atoms_)
      if (a.location < x || (inclusive && a.location == x)) total += a.mass;
    return total;
  }

  [[nodiscard]] double continuous_below(double x) const {
    double total = 0.0;
    for (const auto& p : pieces_) {
      if (x <= p.lo) continue;
      const double top = std::min(x, p.hi);
      if (p.cumulative)
        total += p.cumulative(top);
      else
        total += mimic::integrate(p.density, p.lo, top);
    }
    return total;
  }

  [[nodiscard]] double continuous_density(double x) const {
    for (const auto& p : pieces_)
      if (x >= p.lo && x <= p.hi) return p.density(x);
    return 0.0;
  }

  [[nodiscard]] double atom_mass_at(double x) const {
    double m = 0.0;
    for (const auto& a : atoms_)
      if (a.location == x) m += a.mass;
    return m;
  }

  /// Smallest closed interval containing the support.
  [[nodiscard]] std::pair<double, double> hull() const {
    double lo = kInf, hi = -kInf;
    for (const auto& p : pieces_) {
      lo = std::min(lo, p.lo);
      hi = std::max(hi, p.hi);
    }
    for (const auto& a : atoms_) {
      lo = std::min(lo, a.location);
      hi = std::max(hi, a.location);
    }
    return {lo, hi};
  }

 private:
  std::vector<DensityPiece> pieces_;
  std::vector<Atom> atoms_;
};

}  // namespace mimic

#endif  // MIMIC_MEASURE_HPP
