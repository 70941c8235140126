#ifndef MIMIC_HP_HPP
#define MIMIC_HP_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/family.hpp"
#include "mimic/kernel.hpp"
#include "mimic/measure.hpp"
#include "mimic/numerics.hpp"

namespace mimic {

/// Auxiliary functions of the explicit transport of gamma onto lambda,
/// tabulated on a grid that contains every atom of lambda:
///   xi(z) = sup_{w<z} (Q(z) - Q(w)) / (z - w),  g(z) = largest maximiser,
///   Xi(z) = lambda((-inf, z)) - xi(z).
/// The supremum runs over grid points, so g(z) is always a grid point; when
/// the best one is the neighbour just below z the supremum is the left
/// derivative and g(z) = z. The cell of grid[i] runs between the midpoints
/// to its neighbours.
struct HPAuxiliaries {
  std::vector<double> grid;
  std::vector<double> q;
  std::vector<double> xi;
  std::vector<std::size_t> g_index;  ///< index of g(grid[i]); i when g(z) = z
  std::vector<double> gamma_below;   ///< gamma((-inf, grid[i]))
  std::vector<double> lambda_below;  ///< lambda((-inf, grid[i]))
  std::vector<double> lambda_cell;   ///< continuous part of lambda on the cell of grid[i]
  std::vector<double> lambda_atom;   ///< lambda({grid[i]})
  std::function<double(double)> Q;

  [[nodiscard]] std::size_t size() const { return grid.size(); }
  [[nodiscard]] double g(std::size_t i) const { return grid[g_index[i]]; }
  [[nodiscard]] double Xi(std::size_t i) const { return lambda_below[i] - xi[i]; }
  /// gamma((-inf, w)) - Xi(w): the denominator of the stopping hazard.
  [[nodiscard]] double D(std::size_t i) const { return gamma_below[i] - Xi(i); }

  /// Tangency point of the chord from grid[i], refined between the grid
  /// vertices next to g(grid[i]) with a centred estimate of Q'. Drops then
  /// spread smoothly instead of lumping on vertices.
  [[nodiscard]] double tangency(std::size_t i) const {
    const std::size_t k = g_index[i] == i ? i - 1 : g_index[i];
    if (g_index[i] == i || k == 0 || k + 2 >= i) return grid[k];
    // phi(w) = Q(z) - Q(w) - (z - w) Q'(w) vanishes at the tangency point.
    auto phi = [&](std::size_t j) {
      const double dq = (q[j + 1] - q[j - 1]) / (grid[j + 1] - grid[j - 1]);
      return q[i] - q[j] - (grid[i] - grid[j]) * dq;
    };
    const double f0 = phi(k - 1), f1 = phi(k), f2 = phi(k + 1);
    if ((f0 > 0.0) != (f1 > 0.0)) return grid[k - 1] + (grid[k] - grid[k - 1]) * f0 / (f0 - f1);
    if ((f1 > 0.0) != (f2 > 0.0)) return grid[k] + (grid[k + 1] - grid[k]) * f1 / (f1 - f2);
    return grid[k];
  }

  /// Half-width of the interval around grid[i] over which a stop spreads:
  /// the largest one centred on grid[i] inside its cell.
  [[nodiscard]] double stop_radius(std::size_t i) const {
    const double left = i > 0 ? 0.5 * (grid[i] - grid[i - 1]) : 0.0;
    const double right = i + 1 < grid.size() ? 0.5 * (grid[i + 1] - grid[i]) : 0.0;
    return std::min(left, right);
  }

  /// xi and g at an arbitrary z, maximising over grid points below z.
  [[nodiscard]] std::pair<double, double> xi_g_at(double z) const {
    const double qz = Q(z);
    double best = -kInf, arg = z;
    for (std::size_t i = 0; i < grid.size() && grid[i] < z; ++i) {
      const double s = (qz - q[i]) / (z - grid[i]);
      if (s >= best - 1e-14 * std::abs(best)) {
        best = std::max(best, s);
        arg = grid[i];
      }
    }
    return {best, arg};
  }
};

namespace detail {

inline bool pieces_overlap(const DecompositionMeasure& m1, const DecompositionMeasure& m2) {
  for (const auto& p : m1.pieces())
    for (const auto& r : m2.pieces()) {
      const double lo = std::max(p.lo, r.lo), hi = std::min(p.hi, r.hi);
      if (hi > lo) {
        for (double s : {0.25, 0.5, 0.75}) {
          const double x = lo + s * (hi - lo);
          if (p.density(x) > 0.0 && r.density(x) > 0.0) return true;
        }
      }
    }
  for (const auto& a : m1.atoms())
    for (const auto& b : m2.atoms())
      if (a.location == b.location && a.mass > 0.0 && b.mass > 0.0) return true;
  return false;
}

}  // namespace detail

/// Builds the auxiliaries on `n` evenly spaced points spanning the supports,
/// plus the atoms of both measures.
inline HPAuxiliaries hp_auxiliaries(const DecompositionMeasure& gamma, const DecompositionMeasure& lambda,
                                    std::function<double(double)> Q, std::size_t n = 8001) {
  if (detail::pieces_overlap(gamma, lambda))
    throw UnsupportedFamily("transport needs orthogonal gamma and lambda");
  const auto [glo, ghi] = gamma.hull();
  const auto [llo, lhi] = lambda.hull();
  const double lo = std::min(glo, llo), hi = std::max(ghi, lhi);

  HPAuxiliaries aux;
  aux.Q = std::move(Q);
  aux.grid = linspace(lo, hi, n);
  for (const auto& a : lambda.atoms()) aux.grid.push_back(a.location);
  for (const auto& a : gamma.atoms()) aux.grid.push_back(a.location);
  std::sort(aux.grid.begin(), aux.grid.end());
  aux.grid.erase(std::unique(aux.grid.begin(), aux.grid.end()), aux.grid.end());

  const std::size_t m = aux.grid.size();
  aux.q.resize(m);
  aux.xi.resize(m);
  aux.g_index.resize(m);
  aux.gamma_below.resize(m);
  aux.lambda_below.resize(m);
  aux.lambda_cell.resize(m);
  aux.lambda_atom.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double w = aux.grid[i];
    aux.q[i] = aux.Q(w);
    aux.gamma_below[i] = gamma.mass_below(w);
    aux.lambda_below[i] = lambda.mass_below(w);
    aux.lambda_atom[i] = lambda.atom_mass_at(w);
  }
  std::vector<double> edge_mass(m + 1);
  edge_mass[0] = 0.0;
  edge_mass[m] = lambda.continuous_below(hi);
  for (std::size_t i = 1; i < m; ++i)
    edge_mass[i] = lambda.continuous_below(0.5 * (aux.grid[i - 1] + aux.grid[i]));
  for (std::size_t i = 0; i < m; ++i) aux.lambda_cell[i] = edge_mass[i + 1] - edge_mass[i];

  // Lower convex hull of the points left of z, built incrementally; the
  // maximal chord slope from (z, Q(z)) touches it at a single vertex range.
  std::vector<std::size_t> hull;
  auto cross = [&](std::size_t o, std::size_t p, std::size_t r) {
    return (aux.grid[p] - aux.grid[o]) * (aux.q[r] - aux.q[o]) - (aux.q[p] - aux.q[o]) * (aux.grid[r] - aux.grid[o]);
  };
  aux.xi[0] = 0.0;
  aux.g_index[0] = 0;
  for (std::size_t j = 0; j + 1 < m; ++j) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), j) <= 0.0) hull.pop_back();
    hull.push_back(j);

    const std::size_t z = j + 1;
    auto chord = [&](std::size_t k) { return (aux.q[z] - aux.q[hull[k]]) / (aux.grid[z] - aux.grid[hull[k]]); };
    // Chord slopes along the hull rise then fall; take the last maximiser.
    std::size_t a = 0, b = hull.size() - 1;
    while (a < b) {
      const std::size_t mid = a + (b - a) / 2;
      if (chord(mid + 1) >= chord(mid))
        a = mid + 1;
      else
        b = mid;
    }
    aux.xi[z] = chord(a);
    aux.g_index[z] = hull[a] == j ? z : hull[a];
  }
  return aux;
}

/// Walks the mass started at x up the grid. On the step up to w the walker
/// either moves on or drops, uniformly over the range swept by the tangency
/// point; the split makes each step a martingale. On arrival at w it stops
/// with probability 1 - exp(-lambda^c(cell of w)/D(w)), spread evenly around
/// w, and then on the atom at w with probability (lambda({w})/D(w)) ^ 1.
inline PiecewiseLaw hp_walk(const HPAuxiliaries& aux, double x) {
  std::vector<Atom> atoms;
  std::vector<UniformPiece> pieces;
  const auto first = std::upper_bound(aux.grid.begin(), aux.grid.end(), x);
  std::size_t i = static_cast<std::size_t>(first - aux.grid.begin());
  auto has_drop = [&](std::size_t j) { return j > 0 && aux.g_index[j] != j; };
  double mass = 1.0;
  double cur = x;
  bool start = true;
  for (; i < aux.size() && mass > 1e-300; ++i) {
    const double w = aux.grid[i];
    const double g_hi = aux.tangency(i);
    double g_lo = g_hi;
    if (has_drop(i - 1)) {
      g_lo = aux.tangency(i - 1);
      if (start) g_lo = g_hi + (g_lo - g_hi) * (w - x) / (w - aux.grid[i - 1]);
    }
    const double lo = std::min({g_lo, g_hi, cur}), hi = std::min(std::max(g_lo, g_hi), cur);
    const double mid = 0.5 * (lo + hi);
    const double p = mid < cur ? std::clamp((cur - mid) / (w - mid), 0.0, 1.0) : 1.0;
    if (p < 1.0) pieces.push_back({lo, hi, mass * (1.0 - p)});
    mass *= p;
    cur = w;
    start = false;

    const double den = aux.D(i);
    const double cell = aux.lambda_cell[i], atom = aux.lambda_atom[i];
    if (cell > 0.0) {
      const double stop = den > 0.0 ? -std::expm1(-cell / den) : 1.0;
      const double r = aux.stop_radius(i);
      pieces.push_back({w - r, w + r, mass * stop});
      mass *= 1.0 - stop;
    }
    if (atom > 0.0) {
      const double stop = den > 0.0 ? std::min(atom / den, 1.0) : 1.0;
      atoms.push_back({w, mass * stop});
      mass *= 1.0 - stop;
    }
  }
  if (mass > 0.0) atoms.push_back({cur, mass});
  return PiecewiseLaw(atoms, pieces);
}

inline GeneralKernel hp_kernel(const HPAuxiliaries& aux, const DecompositionMeasure& gamma,
                               const DecompositionMeasure& lambda, double x) {
  (void)lambda;
  const auto [lo, hi] = gamma.hull();
  if (x < lo || x > hi) throw QueryOutsideSupport("x = " + std::to_string(x) + " is outside the support of gamma");
  return {x, std::make_shared<PiecewiseLaw>(hp_walk(aux, x)), 0.0};
}

/// Auxiliaries of a family at time t.
inline HPAuxiliaries hp_auxiliaries(const MarginalFamily& f, double t, std::size_t n = 8001) {
  const Decomposition d = f.decompose(t);
  return hp_auxiliaries(d.gamma, d.lambda, [&f, t](double y) { return f.q(t, y); }, n);
}

/// Kernels of a family built on demand. Self-similar families tabulate walk
/// laws at t = 1 on nodes spanning the closure of E_Z and scale them; a
/// source between nodes mixes the two neighbouring laws with linear weights,
/// which keeps the mean exact. Other families rebuild the auxiliaries at
/// each requested time.
class HpTable {
 public:
  HpTable() = default;
  HpTable(FamilyPtr family, std::size_t grid = 8001, std::size_t nodes = 801)
      : f_(std::move(family)), n_(grid) {
    alpha_ = f_->scaling_exponent().value_or(0.0);
    if (alpha_ > 0.0) {
      const auto aux = hp_auxiliaries(*f_, 1.0, n_);
      const auto [lo, hi] = f_->decompose(1.0).gamma.hull();
      nodes_ = linspace(lo, hi, nodes);
      laws_.reserve(nodes_.size());
      for (double z : nodes_) laws_.push_back(std::make_shared<PiecewiseLaw>(hp_walk(aux, z)));
    }
  }

  [[nodiscard]] const MarginalFamily& family() const { return *f_; }

  [[nodiscard]] GeneralKernel kernel(double t, double y) const {
    if (alpha_ > 0.0) {
      const double s = std::pow(t, alpha_);
      const double z = y / s;
      if (z < nodes_.front() || z > nodes_.back())
        throw QueryOutsideSupport(f_->name() + ": x = " + std::to_string(y) + " is outside supp gamma_t");
      if (nodes_.size() == 1) return {y, std::make_shared<MixtureLaw>(parts(0, 1.0, 0, 0.0), s), 0.0};
      const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), z);
      const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - nodes_.begin()), nodes_.size() - 1) - 1;
      const double w = (z - nodes_[i]) / (nodes_[i + 1] - nodes_[i]);
      return {y, std::make_shared<MixtureLaw>(parts(i, 1.0 - w, i + 1, w), s), 0.0};
    }
    const auto aux = hp_auxiliaries(*f_, t, n_);
    return {y, std::make_shared<PiecewiseLaw>(hp_walk(aux, y)), 0.0};
  }

 private:
  [[nodiscard]] std::vector<MixtureLaw::Part> parts(std::size_t i, double wi, std::size_t j, double wj) const {
    std::vector<MixtureLaw::Part> p{{wi, laws_[i]}};
    if (wj > 0.0) p.emplace_back(wj, laws_[j]);
    return p;
  }

  FamilyPtr f_;
  std::size_t n_ = 8001;
  double alpha_ = 0.0;
  std::vector<double> nodes_;
  std::vector<std::shared_ptr<const PiecewiseLaw>> laws_;
};

}  // namespace mimic

#endif  // MIMIC_HP_HPP
