#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "mimic/mimic.hpp"

using namespace mimic;
using Catch::Approx;

namespace {

SimConfig config(const char* family, KernelKind kernel, double eps, std::size_t n, std::uint64_t seed = 11) {
  SimConfig c;
  c.family = family;
  c.kernel = kernel;
  c.eps = eps;
  c.T = 1.0;
  c.n_paths = n;
  c.seed = seed;
  return c;
}

bool same_paths(const std::vector<PathSkeleton>& p, const std::vector<PathSkeleton>& q) {
  if (p.size() != q.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].t0 != q[i].t0 || p[i].x0 != q[i].x0 || p[i].jumps.size() != q[i].jumps.size()) return false;
    for (std::size_t k = 0; k < p[i].jumps.size(); ++k)
      if (p[i].jumps[k].time != q[i].jumps[k].time || p[i].jumps[k].value != q[i].jumps[k].value) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("Poisson events lie in the box, sorted", "[events]") {
  Stream rng(hash64(3, 0));
  const auto ev = sample_events(0.5, 2.0, 4.0, rng);
  REQUIRE_FALSE(ev.empty());
  for (std::size_t i = 0; i < ev.size(); ++i) {
    CHECK(ev[i].s > 0.5);
    CHECK(ev[i].s <= 2.0);
    CHECK(ev[i].h > 0.0);
    CHECK(ev[i].h <= 4.0);
    CHECK(ev[i].u > 0.0);
    CHECK(ev[i].u < 1.0);
    if (i > 0) CHECK(ev[i].s > ev[i - 1].s);
  }
}

TEST_CASE("Poisson event count has mean k_bar (T - eps)", "[events]") {
  std::vector<double> counts;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    Stream rng(hash64(5, i));
    counts.push_back(static_cast<double>(sample_events(0.2, 1.0, 2.5, rng).size()));
  }
  const MeanSe m = mean_se(counts);
  CHECK(std::abs(m.mean - 2.0) < 4 * m.se);
  CHECK(m.sd * m.sd == Approx(2.0).epsilon(0.05));  // Poisson: variance equals mean
}

TEST_CASE("degenerate event boxes", "[events]") {
  Stream rng(1);
  CHECK(sample_events(1.0, 1.0, 3.0, rng).empty());
  CHECK(sample_events(0.0, 1.0, 0.0, rng).empty());
  CHECK_THROWS_AS(sample_events(0.0, 1.0, kInf, rng), UnboundedRate);
}

TEST_CASE("streams are pure functions of key and counter", "[rng]") {
  Stream a(hash64(9, 4)), b(hash64(9, 4)), c(hash64(9, 5));
  for (int i = 0; i < 10; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u != c.uniform());
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("ensembles do not depend on the thread count", "[simulator]") {
  for (KernelKind k : {KernelKind::hk, KernelKind::hp}) {
    SimConfig c = config("gaussian", k, 0.01, 300);
    c.hp_grid = 2001;
    c.threads = 1;
    const auto one = Simulator(c).ensemble();
    c.threads = 4;
    const auto four = Simulator(c).ensemble();
    CHECK(same_paths(one, four));
    c.seed = 12;
    CHECK_FALSE(same_paths(one, Simulator(c).ensemble()));
  }
}

TEST_CASE("paths are valid skeletons", "[simulator]") {
  const Simulator sim(config("gaussian", KernelKind::hk, 0.01, 500));
  for (const auto& p : sim.ensemble()) {
    CHECK(p.t0 == 0.01);
    double t = p.t0, x = p.x0;
    for (const auto& j : p.jumps) {
      CHECK(j.time > t);
      CHECK(j.time <= 1.0);
      CHECK(j.value != x);
      t = j.time;
      x = j.value;
    }
  }
}

TEST_CASE("frozen paths never move", "[simulator]") {
  SimConfig c = config("gaussian", KernelKind::hk, 0.01, 200);
  c.frozen = true;
  for (const auto& p : Simulator(c).ensemble()) CHECK(p.jumps.empty());
}

TEST_CASE("eps = 0 starts at the floor", "[simulator]") {
  const Simulator sim(config("uniform", KernelKind::hk, 0.0, 10));
  CHECK(sim.start() == kEpsFloor);
  CHECK(sim.truncated());
  CHECK_FALSE(Simulator(config("uniform", KernelKind::hk, 0.01, 10)).truncated());
}

TEST_CASE("unsupported combinations are rejected", "[simulator]") {
  CHECK_THROWS_AS(Simulator(config("atom-mix", KernelKind::hk, 0.01, 10)), NoDispersion);
  CHECK_THROWS_AS(Simulator(config("gaussian", KernelKind::reverse, 0.0, 10)), UnsupportedExample);
  CHECK_THROWS_AS(Simulator(config("gaussian", KernelKind::hk, 1.0, 10)), ConfigError);
  CHECK_THROWS_AS(parse_kernel("nope"), ConfigError);
  CHECK(parse_kernel("closed-form") == KernelKind::hk);
}

TEST_CASE("uniform jump from 0.3 with a high label goes to the upper edge", "[simulator]") {
  const Simulator sim(config("uniform", KernelKind::hk, 0.01, 1));
  // p_down = (s - 0.3) / (2 s) = 0.35 at s = 1, so u = 0.9 selects b = s.
  CHECK(sim.jump_target(1.0, 0.3, 0.9) == 1.0);
  CHECK(sim.jump_target(1.0, 0.3, 0.2) == -1.0);
  CHECK(sim.jump_target(0.5, 0.3, 0.9) == 0.5);
}

TEST_CASE("uniform holding time: no jump by t with probability eps / t", "[simulator]") {
  // The rate is 1/s everywhere on (-s, s), so survival is exp(-log(t / eps)).
  const auto paths = Simulator(config("uniform", KernelKind::hk, 0.01, 20000)).ensemble();
  for (double t : {0.02, 0.05, 0.1}) {
    std::vector<double> still;
    for (const auto& p : paths) still.push_back(p.jumps.empty() || p.jumps.front().time > t ? 1.0 : 0.0);
    const MeanSe m = mean_se(still);
    INFO("t=" << t);
    CHECK(std::abs(m.mean - 0.01 / t) < 4 * m.se);
  }
}

TEST_CASE("marginals and martingale property, small ensembles", "[simulator]") {
  struct Case {
    const char* family;
    KernelKind kernel;
  };
  for (Case c : {Case{"gaussian", KernelKind::hk}, Case{"uniform", KernelKind::hk}, Case{"uniform", KernelKind::hp},
                 Case{"exp-brownian", KernelKind::hk}}) {
    SimConfig cfg = config(c.family, c.kernel, 0.01, 5000);
    cfg.hp_grid = 2001;
    const Simulator sim(cfg);
    const auto paths = sim.ensemble();
    const std::vector<double> cps{0.05, 0.5, 1.0};
    const auto rep = marginal_report(paths, sim.family(), cps, 1.0);
    INFO(c.family << "/" << kernel_name(c.kernel));
    CHECK(rep.ks_pass());
    for (const auto& cp : rep.checkpoints) {
      CHECK(std::abs(cp.mean_z) < 4.0);
      CHECK(std::abs(cp.increment.mean) < 4 * cp.increment.se + 1e-12);
    }
  }
}

TEST_CASE("binned Gaussian increments have zero conditional mean", "[simulator]") {
  const Simulator sim(config("gaussian", KernelKind::hk, 0.01, 10000));
  const auto paths = sim.ensemble();
  const std::vector<double> cps{0.25, 0.5};
  for (const auto& cp : marginal_report(paths, sim.family(), cps, 1.0, 10).checkpoints) CHECK(cp.max_bin_z < 4.0);
}

TEST_CASE("frozen paths fail the marginal test", "[simulator]") {
  SimConfig c = config("gaussian", KernelKind::hk, 0.01, 5000);
  c.frozen = true;
  const Simulator sim(c);
  const std::vector<double> cps{1.0};
  CHECK_FALSE(marginal_report(sim.ensemble(), sim.family(), cps, 1.0).ks_pass());
}

TEST_CASE("reversed uniform chain", "[reverse]") {
  Stream rng(hash64(2, 0));
  const auto chain = reverse_uniform_chain(0.4, 1.0, rng);
  REQUIRE(chain.size() >= 2);
  CHECK(chain[0] == 0.4);
  // x_0 is left at reversed time T - |x_0| = 0.6.
  CHECK(1.0 - std::abs(chain[0]) == Approx(0.6).epsilon(1e-15));
  CHECK(std::abs(chain[1]) < 0.4);
  for (std::size_t k = 1; k < chain.size(); ++k) CHECK(std::abs(chain[k]) < std::abs(chain[k - 1]));
  CHECK(std::abs(chain.back()) <= 1e-12);

  // Next state has density (r + v) / (2 r^2) on (-r, r): mean r / 3.
  std::vector<double> next;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    Stream s(hash64(4, i));
    next.push_back(reverse_uniform_chain(0.4, 1.0, s)[1]);
  }
  const MeanSe m = mean_se(next);
  CHECK(std::abs(m.mean - 0.4 / 3.0) < 4 * m.se);
  CHECK(*std::min_element(next.begin(), next.end()) > -0.4);
  CHECK(*std::max_element(next.begin(), next.end()) < 0.4);
}

TEST_CASE("reversed atom-mix keeps e^-T of paths at zero", "[reverse]") {
  const auto paths = Simulator(config("atom-mix", KernelKind::reverse, 0.0, 20000)).ensemble();
  std::vector<double> zero;
  for (const auto& p : paths) {
    CHECK(p.jumps.size() <= 1);
    zero.push_back(p.jumps.empty() ? 1.0 : 0.0);
  }
  const MeanSe m = mean_se(zero);
  CHECK(std::abs(m.mean - std::exp(-1.0)) < 4 * m.se);
}

TEST_CASE("reversed paths have the right marginals", "[reverse]") {
  for (const char* name : {"uniform", "atom-mix"}) {
    const Simulator sim(config(name, KernelKind::reverse, 0.0, 10000));
    const auto paths = sim.ensemble();
    CHECK(paths.front().t0 == 0.0);
    const std::vector<double> cps{0.1, 0.5, 1.0};
    const auto rep = marginal_report(paths, sim.family(), cps, 1.0);
    INFO(name);
    CHECK(rep.ks_pass());
    for (const auto& cp : rep.checkpoints) CHECK(std::abs(cp.mean_z) < 4.0);
  }
}
