#ifndef MIMIC_SELF_SIMILAR_HPP
#define MIMIC_SELF_SIMILAR_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mimic/family.hpp"

namespace mimic {

/// Law of a centred random variable Z with a density.
class ZLaw {
 public:
  virtual ~ZLaw() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual double density(double z) const = 0;
  [[nodiscard]] virtual double density_slope(double z) const = 0;
  [[nodiscard]] virtual double cdf(double z) const = 0;
  /// Partial first moment: integral of w rho(w) over w <= z.
  [[nodiscard]] virtual double partial_mean(double z) const = 0;
  [[nodiscard]] virtual Interval support() const = 0;
  [[nodiscard]] virtual double variance() const = 0;
  /// Points where the density or its slope is not smooth.
  [[nodiscard]] virtual std::vector<double> kinks() const { return {}; }
};

class StandardNormalZ final : public ZLaw {
 public:
  [[nodiscard]] std::string name() const override { return "gaussian"; }
  [[nodiscard]] double density(double z) const override { return normal_pdf(z); }
  [[nodiscard]] double density_slope(double z) const override { return -z * normal_pdf(z); }
  [[nodiscard]] double cdf(double z) const override { return normal_cdf(z); }
  [[nodiscard]] double partial_mean(double z) const override { return -normal_pdf(z); }
  [[nodiscard]] Interval support() const override { return {-kInf, kInf}; }
  [[nodiscard]] double variance() const override { return 1.0; }
};

class UniformZ final : public ZLaw {
 public:
  [[nodiscard]] std::string name() const override { return "uniform"; }
  [[nodiscard]] double density(double z) const override { return (z > -1 && z < 1) ? 0.5 : 0.0; }
  [[nodiscard]] double density_slope(double) const override { return 0.0; }
  [[nodiscard]] double cdf(double z) const override { return std::clamp(0.5 * (z + 1.0), 0.0, 1.0); }
  [[nodiscard]] double partial_mean(double z) const override {
    const double c = std::clamp(z, -1.0, 1.0);
    return 0.25 * (c * c - 1.0);
  }
  [[nodiscard]] Interval support() const override { return {-1.0, 1.0}; }
  [[nodiscard]] double variance() const override { return 1.0 / 3.0; }
};

/// Piecewise-linear density through the points (z_i, rho_i), zero outside.
class TabulatedZ final : public ZLaw {
 public:
  TabulatedZ(std::vector<double> z, std::vector<double> rho) : z_(std::move(z)), rho_(std::move(rho)) {
    if (z_.size() < 2 || z_.size() != rho_.size())
      throw InvalidProfile("tabulated profile needs matching z and rho arrays of length >= 2");
    for (std::size_t i = 0; i + 1 < z_.size(); ++i)
      if (!(z_[i + 1] > z_[i])) throw InvalidProfile("tabulated z must be strictly increasing");
    for (double r : rho_)
      if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidProfile("tabulated rho must be finite and >= 0");
    cum0_.assign(z_.size(), 0.0);
    cum1_.assign(z_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < z_.size(); ++i) {
      cum0_[i + 1] = cum0_[i] + mass0(i, z_[i + 1]);
      cum1_[i + 1] = cum1_[i] + mass1(i, z_[i + 1]);
    }
  }

  [[nodiscard]] std::string name() const override { return "tabulated"; }
  [[nodiscard]] double density(double z) const override {
    if (z < z_.front() || z > z_.back()) return 0.0;
    return interp_linear(z_, rho_, z);
  }
  [[nodiscard]] double density_slope(double z) const override {
    if (z < z_.front() || z >= z_.back()) return 0.0;
    const std::size_t i = cell(z);
    return (rho_[i + 1] - rho_[i]) / (z_[i + 1] - z_[i]);
  }
  [[nodiscard]] double cdf(double z) const override {
    if (z <= z_.front()) return 0.0;
    if (z >= z_.back()) return cum0_.back();
    const std::size_t i = cell(z);
    return cum0_[i] + mass0(i, z);
  }
  [[nodiscard]] double partial_mean(double z) const override {
    if (z <= z_.front()) return 0.0;
    if (z >= z_.back()) return cum1_.back();
    const std::size_t i = cell(z);
    return cum1_[i] + mass1(i, z);
  }
  [[nodiscard]] Interval support() const override { return {z_.front(), z_.back()}; }
  [[nodiscard]] double variance() const override {
    double v = 0.0;
    for (std::size_t i = 0; i + 1 < z_.size(); ++i)
      v += integrate([&](double w) { return w * w * density(w); }, z_[i], z_[i + 1], 1e-13);
    return v;
  }
  [[nodiscard]] std::vector<double> kinks() const override { return z_; }

  [[nodiscard]] double total_mass() const { return cum0_.back(); }
  [[nodiscard]] double first_moment() const { return cum1_.back(); }

 private:
  [[nodiscard]] std::size_t cell(double z) const {
    auto it = std::upper_bound(z_.begin(), z_.end(), z);
    return std::min<std::size_t>(static_cast<std::size_t>(it - z_.begin()), z_.size() - 1) - 1;
  }
  // Exact integrals of the linear piece over [z_i, z].
  [[nodiscard]] double mass0(std::size_t i, double z) const {
    const double h = z - z_[i];
    const double s = (rho_[i + 1] - rho_[i]) / (z_[i + 1] - z_[i]);
    return rho_[i] * h + 0.5 * s * h * h;
  }
  [[nodiscard]] double mass1(std::size_t i, double z) const {
    const double a = z_[i];
    const double s = (rho_[i + 1] - rho_[i]) / (z_[i + 1] - z_[i]);
    const double c = rho_[i] - s * a;  // rho(w) = c + s w on the cell
    auto prim = [c, s](double w) { return 0.5 * c * w * w + s * w * w * w / 3.0; };
    return prim(z) - prim(a);
  }

  std::vector<double> z_, rho_, cum0_, cum1_;
};

/// Profile of a self-similar family mu_t = Law(t^alpha Z).
///
/// zeta(z) = -alpha (rho_Z(z) + z rho_Z'(z)) is the time derivative of the
/// density at t = 1. The central interval E = (l_E, r_E) is where zeta < 0.
struct SelfSimilarProfile {
  double alpha = 0.5;
  std::shared_ptr<const ZLaw> law;
  Interval central{};
  double rate_bound_constant = 0.0;

  [[nodiscard]] double zeta(double z) const {
    return -alpha * (law->density(z) + z * law->density_slope(z));
  }
  [[nodiscard]] Interval z_support() const { return law->support(); }
};

/// Validates the law and locates the central interval and K_Z.
inline SelfSimilarProfile make_profile(double alpha, std::shared_ptr<const ZLaw> law) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidProfile("alpha must be positive");
  const Interval s = law->support();
  const double sd = std::sqrt(law->variance());
  const double lo = std::isfinite(s.lo) ? s.lo : -12.0 * sd;
  const double hi = std::isfinite(s.hi) ? s.hi : 12.0 * sd;
  const double mass = law->cdf(hi) - law->cdf(lo);
  const double mean = law->partial_mean(hi) - law->partial_mean(lo);
  if (std::abs(mass - 1.0) > 1e-6) throw InvalidProfile("profile density does not integrate to 1");
  if (std::abs(mean) > 1e-6) throw InvalidProfile("profile density is not centred");

  SelfSimilarProfile p{alpha, std::move(law), {}, 0.0};
  auto g = [&p](double z) { return p.law->density(z) + z * p.law->density_slope(z); };
  if (!(g(0.0) > 0.0)) throw InvalidProfile("rho_Z(0) must be positive");
  // Walk outwards from 0 on a fine grid to the first sign change.
  const std::size_t n = 20000;
  auto edge = [&](double end) {
    double prev = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      const double z = end * static_cast<double>(i) / static_cast<double>(n);
      if (!(g(z) > 0.0)) {
        if (g(z) < 0.0 && g(0.5 * (prev + z)) != 0.0) {
          try {
            return find_root(g, std::min(prev, z), std::max(prev, z), 1e-15);
          } catch (const ConvergenceFailure&) {
            return z;  // jump discontinuity of a tabulated slope
          }
        }
        return z;
      }
      prev = z;
    }
    return end;
  };
  p.central = {edge(lo), edge(hi)};
  double k = 0.0;
  for (double z : linspace(p.central.lo, p.central.hi, 4001)) {
    const double r = p.law->density(z);
    if (r > 0.0) k = std::max(k, std::max(-p.zeta(z), 0.0) / r);
  }
  p.rate_bound_constant = k;
  return p;
}

inline SelfSimilarProfile gaussian_profile() { return make_profile(0.5, std::make_shared<StandardNormalZ>()); }
inline SelfSimilarProfile uniform_profile() { return make_profile(1.0, std::make_shared<UniformZ>()); }

/// Family built from a profile by scaling: rho(t, y) = t^-alpha rho_Z(y t^-alpha).
class SelfSimilarFamily final : public MarginalFamily {
 public:
  explicit SelfSimilarFamily(SelfSimilarProfile p) : p_(std::move(p)) {
    const Interval s = p_.z_support();
    lo_density_ = std::isfinite(s.lo) ? p_.law->density(std::nextafter(s.lo, 0.0)) : 0.0;
    hi_density_ = std::isfinite(s.hi) ? p_.law->density(std::nextafter(s.hi, 0.0)) : 0.0;
  }

  [[nodiscard]] const SelfSimilarProfile& profile() const { return p_; }
  [[nodiscard]] std::string name() const override { return "self-similar:" + p_.law->name(); }
  [[nodiscard]] double mean() const override { return 0.0; }
  [[nodiscard]] double variance(double t) const override {
    return std::pow(t, 2.0 * p_.alpha) * p_.law->variance();
  }

  [[nodiscard]] double density(double t, double y) const override {
    const double s = scale(t);
    return p_.law->density(y / s) / s;
  }
  [[nodiscard]] double cdf(double t, double y) const override { return p_.law->cdf(y / scale(t)); }
  [[nodiscard]] double potential(double t, double y) const override {
    const double s = scale(t);
    const double z = y / s;
    return s * (z * (2.0 * p_.law->cdf(z) - 1.0) - 2.0 * p_.law->partial_mean(z));
  }
  [[nodiscard]] double q(double t, double y) const override {
    return -p_.alpha * scale(t) / t * p_.law->partial_mean(y / scale(t));
  }
  [[nodiscard]] double q_prime(double t, double y) const override {
    const double z = y / scale(t);
    return -p_.alpha * z * p_.law->density(z) / t;
  }
  [[nodiscard]] double density_rate(double t, double y) const override {
    return p_.zeta(y / scale(t)) / (t * scale(t));
  }
  [[nodiscard]] double rate(double t, double y) const override {
    const double z = y / scale(t);
    const double r = p_.law->density(z);
    if (!(r > 0.0) || !p_.central.contains(z)) return 0.0;
    return std::max(-p_.zeta(z), 0.0) / (r * t);
  }
  [[nodiscard]] double rate_bound(double t) const override { return p_.rate_bound_constant / t; }

  [[nodiscard]] Interval support(double t) const override { return scaled(p_.z_support(), t); }
  [[nodiscard]] Interval lambda_support(double t) const override { return scaled(p_.z_support(), t); }
  [[nodiscard]] Interval gamma_support(double t) const override { return scaled(p_.central, t); }

  [[nodiscard]] Decomposition decompose(double t) const override {
    const Interval range = integration_range(t);
    const Interval e = gamma_support(t);
    auto pos = [this, t](double x) { return std::max(density_rate(t, x), 0.0); };
    auto neg = [this, t](double x) { return std::max(-density_rate(t, x), 0.0); };
    // Q' read just inside E: the density may jump at its edge.
    const double qp_l = q_prime(t, std::nextafter(e.lo, e.hi));
    const double qp_r = q_prime(t, std::nextafter(e.hi, e.lo));
    const double qp_lo = q_prime(t, range.lo);
    std::vector<DensityPiece> gamma{{e.lo, e.hi, neg, [this, t, qp_l](double x) { return qp_l - q_prime(t, x); }}};
    std::vector<DensityPiece> lambda;
    if (e.lo > range.lo)
      lambda.push_back({range.lo, e.lo, pos, [this, t, qp_lo](double x) { return q_prime(t, x) - qp_lo; }});
    if (range.hi > e.hi)
      lambda.push_back({e.hi, range.hi, pos, [this, t, qp_r](double x) { return q_prime(t, x) - qp_r; }});
    // A density that is positive at a finite edge of the support pushes mass
    // onto the moving edge: an atom of lambda with mass alpha |edge| rho / t.
    std::vector<Atom> atoms;
    const Interval s = p_.z_support();
    if (lo_density_ > 0.0) atoms.push_back({s.lo * scale(t), p_.alpha * std::abs(s.lo) * lo_density_ / t});
    if (hi_density_ > 0.0) atoms.push_back({s.hi * scale(t), p_.alpha * std::abs(s.hi) * hi_density_ / t});
    return {DecompositionMeasure(std::move(gamma), {}), DecompositionMeasure(std::move(lambda), std::move(atoms))};
  }

  [[nodiscard]] bool regular() const override { return lo_density_ == 0.0 && hi_density_ == 0.0; }
  [[nodiscard]] bool dispersion() const override { return regular() || edge_to_edge(); }
  [[nodiscard]] std::optional<double> scaling_exponent() const override { return p_.alpha; }
  [[nodiscard]] std::optional<HkTargets> closed_form_targets(double t, double) const override {
    if (!edge_to_edge()) return std::nullopt;
    const Interval s = support(t);
    return HkTargets{s.lo, s.hi};
  }

 private:
  [[nodiscard]] double scale(double t) const { return std::pow(t, p_.alpha); }
  [[nodiscard]] Interval scaled(Interval i, double t) const { return {i.lo * scale(t), i.hi * scale(t)}; }
  // All of lambda sits in two atoms at the support edges: binomial to the edges.
  [[nodiscard]] bool edge_to_edge() const {
    const Interval s = p_.z_support();
    return lo_density_ > 0.0 && hi_density_ > 0.0 && p_.central.lo <= s.lo && p_.central.hi >= s.hi;
  }

  SelfSimilarProfile p_;
  double lo_density_ = 0.0;
  double hi_density_ = 0.0;
};

inline FamilyPtr self_similar_family(const SelfSimilarProfile& profile) {
  return std::make_shared<SelfSimilarFamily>(profile);
}

/// Reads {alpha, z_density: "gaussian" | "uniform" | {z: [...], rho: [...]}}.
inline SelfSimilarProfile profile_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidProfile("profile must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "alpha" && key != "z_density") throw InvalidProfile("unknown profile key '" + key + "'");
  if (!j.contains("alpha") || !j["alpha"].is_number()) throw InvalidProfile("profile needs numeric alpha");
  if (!j.contains("z_density")) throw InvalidProfile("profile needs z_density");
  const double alpha = j["alpha"].get<double>();
  const auto& zd = j["z_density"];
  std::shared_ptr<const ZLaw> law;
  if (zd.is_string()) {
    const auto s = zd.get<std::string>();
    if (s == "gaussian")
      law = std::make_shared<StandardNormalZ>();
    else if (s == "uniform")
      law = std::make_shared<UniformZ>();
    else
      throw InvalidProfile("unknown z_density '" + s + "'");
  } else if (zd.is_object() && zd.contains("tabulated")) {
    const auto& tab = zd["tabulated"];
    law = std::make_shared<TabulatedZ>(tab.at("z").get<std::vector<double>>(),
                                       tab.at("rho").get<std::vector<double>>());
  } else if (zd.is_object() && zd.contains("z") && zd.contains("rho")) {
    law = std::make_shared<TabulatedZ>(zd.at("z").get<std::vector<double>>(),
                                       zd.at("rho").get<std::vector<double>>());
  } else {
    throw InvalidProfile("z_density must be \"gaussian\", \"uniform\" or a table {z, rho}");
  }
  return make_profile(alpha, std::move(law));
}

inline SelfSimilarProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("profile '" + path + "': " + e.what());
  }
  return profile_from_json(j);
}

}  // namespace mimic

#endif  // MIMIC_SELF_SIMILAR_HPP
