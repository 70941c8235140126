#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "mimic/mimic.hpp"

using namespace mimic;
using Catch::Approx;

namespace {

// int_{u0}^{u1} psi_dot(u, x) du by composite Simpson on n cells in
// s = sqrt(u), which smooths the u^(alpha - 1) behaviour at small u.
double psi_dot_integral(const DualFunctions& d, double x, double u0, double u1, int n = 4000) {
  const double s0 = std::sqrt(u0), s1 = std::sqrt(u1), h = (s1 - s0) / n;
  auto f = [&](double s) { return 2.0 * s * d.psi_dot(s * s, x); };
  double acc = f(s0) + f(s1);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(s0 + i * h);
  return acc * h / 3.0;
}

HedgeReport certify(const char* family, KernelKind kernel, double eps, std::size_t n) {
  SimConfig c;
  c.family = family;
  c.kernel = kernel;
  c.eps = eps;
  c.n_paths = n;
  c.seed = 21;
  const Simulator sim(c);
  const auto paths = sim.ensemble();
  const auto duals = make_duals(sim.family_ptr(), std::max(sim.start(), kEpsFloor), c.T);
  return certify_ensemble(paths, *duals, c.T);
}

}  // namespace

TEST_CASE("a path that never moves has zero slack", "[hedge]") {
  const SelfSimilarDuals g(make_family("gaussian"));
  const auto h = subhedge_eval(PathSkeleton{0.2, 0.3, {}}, g, 1.0);
  CHECK(h.tv == 0.0);
  CHECK(h.trading == 0.0);
  CHECK(h.slack == Approx(0.0).margin(1e-15));
}

TEST_CASE("uniform single-jump example", "[hedge]") {
  // 0 until 0.5, then 0.8: psi(1, 0.8) = 0.64, time decay psi(1, 0.8) -
  // psi(0.5, 0.8) = 0.14, trading Theta(0) * 0.8 = 0. So rhs 0.5, slack 0.3.
  const SelfSimilarDuals u(make_family("uniform"));
  const auto h = subhedge_eval(PathSkeleton{0.0, 0.0, {{0.5, 0.8}}}, u, 1.0);
  CHECK(h.terminal == Approx(0.64).margin(1e-15));
  CHECK(h.initial == 0.0);
  CHECK(h.time_decay == Approx(0.14).margin(1e-15));
  CHECK(h.trading == Approx(0.0).margin(1e-15));
  CHECK(h.rhs == Approx(0.50).margin(1e-15));
  CHECK(h.tv == Approx(0.8).margin(1e-15));
  CHECK(h.slack == Approx(0.30).margin(1e-15));
  // psi_dot jumps from 1 to -1 where 0.8 enters E_t (t = 0.8): integrate the
  // two sides, keeping the endpoints off the jump itself.
  const double d = 1e-12;
  CHECK(psi_dot_integral(u, 0.8, 0.5, 0.8 - d) + psi_dot_integral(u, 0.8, 0.8 + d, 1.0) ==
        Approx(0.14).margin(1e-8));
}

TEST_CASE("time decay equals a quadrature of psi_dot", "[hedge]") {
  const SelfSimilarDuals g(make_family("gaussian"));
  const PathSkeleton p{0.1, 0.0, {{0.5, 0.3}, {0.7, -0.9}}};
  const auto h = subhedge_eval(p, g, 1.0);
  const double oracle = psi_dot_integral(g, 0.0, 0.1, 0.5) + psi_dot_integral(g, 0.3, 0.5, 0.7) +
                        psi_dot_integral(g, -0.9, 0.7, 1.0);
  CHECK(h.time_decay == Approx(oracle).margin(1e-7));
  CHECK(h.trading == Approx(g.theta(0.5, 0.0) * 0.3 + g.theta(0.7, 0.3) * -1.2).margin(1e-15));
  CHECK(h.tv == Approx(1.5).margin(1e-15));
  CHECK(h.slack >= -1e-12);

  const auto e = make_family("exp-brownian");
  const SurfaceDuals s(e, 0.1, 1.0);
  const PathSkeleton q{0.1, 0.9, {{0.4, 1.6}}};
  const auto he = subhedge_eval(q, s, 1.0);
  const double oe = psi_dot_integral(s, 0.9, 0.1, 0.4, 100) + psi_dot_integral(s, 1.6, 0.4, 1.0, 100);
  CHECK(he.time_decay == Approx(oe).margin(1e-6));
}

TEST_CASE("uniform dual inequality holds on a grid", "[hedge]") {
  const double m = uniform_dual_grid_min();
  CHECK(m >= 0.0);
  CHECK(m == Approx(0.0).margin(1e-15));
}

TEST_CASE("L is nonnegative and vanishes at the targets", "[hedge]") {
  const auto g = make_family("gaussian");
  const SelfSimilarDuals sg(g);
  const SurfaceDuals se(make_family("exp-brownian"), 0.05, 1.0);
  const PsiThetaTable* tables[] = {&sg.unit(), se.slice(0.3).get()};
  for (const PsiThetaTable* tb : tables) {
    const Interval e = tb->central();
    const double c = 0.5 * (e.lo + e.hi), w = 4.0 * e.width();
    double worst = kInf;
    for (double x : linspace(c - w, c + w, 301))
      for (double y : linspace(c - w, c + w, 301)) worst = std::min(worst, tb->L(x, y));
    CHECK(worst >= -1e-10);
    for (double s : {0.1, 0.5, 0.9}) {
      const double x = e.lo + s * e.width();
      const auto [a, b] = tb->targets(x);
      CHECK(std::abs(tb->L(x, a)) <= 1e-8);
      CHECK(std::abs(tb->L(x, b)) <= 1e-8);
    }
  }
}

TEST_CASE("ensembles certify with no violations", "[hedge]") {
  struct Case {
    const char* family;
    KernelKind kernel;
    double eps;
    bool attains;
  };
  for (Case c : {Case{"gaussian", KernelKind::hk, 0.01, true}, Case{"gaussian", KernelKind::hp, 0.01, false},
                 Case{"uniform", KernelKind::hk, 1e-3, true}, Case{"uniform", KernelKind::reverse, 0.0, true},
                 Case{"exp-brownian", KernelKind::hk, 0.01, true}}) {
    const HedgeReport r = certify(c.family, c.kernel, c.eps, 2000);
    INFO(c.family << "/" << kernel_name(c.kernel) << " min=" << r.min_slack << " mean=" << r.slack.mean);
    CHECK(r.pass());
    CHECK(r.min_slack >= -1e-6);
    if (c.attains) CHECK(std::abs(r.slack.mean) <= 3 * r.slack.se + 1e-10);
    else CHECK(r.slack.mean > 3 * r.slack.se);
  }
}

TEST_CASE("exp-Brownian hp paths certify", "[hedge][slow]") {
  const HedgeReport r = certify("exp-brownian", KernelKind::hp, 0.01, 1000);
  CHECK(r.violations == 0);
  CHECK(r.slack.mean > 0.0);
}

TEST_CASE("certification is independent of the thread count", "[hedge]") {
  SimConfig c;
  c.n_paths = 400;
  const auto paths = Simulator(c).ensemble();
  const SelfSimilarDuals d(make_family("gaussian"));
  const auto one = certify_ensemble(paths, d, 1.0, 1e-6, 1);
  const auto three = certify_ensemble(paths, d, 1.0, 1e-6, 3);
  CHECK(one.min_slack == three.min_slack);
  CHECK(one.slack.mean == three.slack.mean);
  CHECK(one.tv.mean == three.tv.mean);
}

TEST_CASE("tolerance governs the violation count", "[hedge]") {
  // A path whose slack is positive never violates; a hostile tolerance of
  // -1 (slack below 1 counts) flags it.
  const SelfSimilarDuals u(make_family("uniform"));
  const std::vector<PathSkeleton> p{{0.0, 0.0, {{0.5, 0.8}}}};
  CHECK(certify_ensemble(p, u, 1.0, 1e-6).violations == 0);
  CHECK(certify_ensemble(p, u, 1.0, -1.0).violations == 1);
}

TEST_CASE("malformed paths are rejected", "[hedge]") {
  const SelfSimilarDuals u(make_family("uniform"));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(subhedge_eval(PathSkeleton{0.0, nan, {}}, u, 1.0), NonFiniteVariationInput);
  CHECK_THROWS_AS(subhedge_eval(PathSkeleton{0.0, 0.0, {{0.5, kInf}}}, u, 1.0), NonFiniteVariationInput);
  CHECK_THROWS_AS(subhedge_eval(PathSkeleton{0.0, 0.0, {{0.5, 0.1}, {0.4, 0.2}}}, u, 1.0), NonFiniteVariationInput);
  CHECK_THROWS_AS(subhedge_eval(PathSkeleton{0.0, 0.0, {{1.5, 0.1}}}, u, 1.0), NonFiniteVariationInput);
  CHECK_THROWS_AS(subhedge_eval(PathSkeleton{0.5, 0.0, {}}, u, 0.4), NonFiniteVariationInput);
}
