#include <catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "mimic/mimic.hpp"

using namespace mimic;
using Catch::Approx;

namespace {

// mu_{2-t}: runs a family backwards in time, so the potential decreases.
class TimeReversed final : public MarginalFamily {
 public:
  explicit TimeReversed(FamilyPtr f) : f_(std::move(f)) {}
  std::string name() const override { return "reversed-" + f_->name(); }
  double mean() const override { return f_->mean(); }
  double variance(double t) const override { return f_->variance(s(t)); }
  double density(double t, double x) const override { return f_->density(s(t), x); }
  double cdf(double t, double x) const override { return f_->cdf(s(t), x); }
  double potential(double t, double x) const override { return f_->potential(s(t), x); }
  double q(double t, double x) const override { return -f_->q(s(t), x); }
  double q_prime(double t, double x) const override { return -f_->q_prime(s(t), x); }
  double rate(double, double) const override { return 0.0; }
  double rate_bound(double) const override { return 0.0; }
  Interval support(double t) const override { return f_->support(s(t)); }
  Interval lambda_support(double t) const override { return f_->lambda_support(s(t)); }
  Interval gamma_support(double t) const override { return f_->gamma_support(s(t)); }
  Decomposition decompose(double t) const override {
    auto d = f_->decompose(s(t));
    return {d.lambda, d.gamma};
  }
  bool regular() const override { return false; }
  bool dispersion() const override { return false; }

 private:
  static double s(double t) { return 2.0 - t; }
  FamilyPtr f_;
};

const char* const kAll[] = {"gaussian", "exp-brownian", "uniform", "atom-mix", "self-similar:gaussian",
                            "self-similar:uniform"};

}  // namespace

TEST_CASE("jump rates at worked points", "[families]") {
  // Gaussian: R_t(x) = (t - x^2) / (2 t^2) inside E_t, zero outside.
  const auto g = make_family("gaussian");
  CHECK(eval_rate(*g, 1.0, 0.0) == Approx(0.5).margin(1e-15));
  CHECK(eval_rate(*g, 1.0, 2.0) == 0.0);
  CHECK(eval_rate(*g, 0.25, 0.25) == Approx((0.25 - 0.0625) / (2 * 0.0625)).epsilon(1e-12));
  // Uniform: every point of (-t, t) leaves at rate 1/t.
  const auto u = make_family("uniform");
  CHECK(eval_rate(*u, 1.0, 0.3) == Approx(1.0).epsilon(1e-15));
  CHECK(eval_rate(*u, 0.5, -0.2) == Approx(2.0).epsilon(1e-15));
}

TEST_CASE("rate query outside the support throws", "[families]") {
  const auto u = make_family("uniform");
  CHECK_THROWS_AS(eval_rate(*u, 1.0, 2.0), QueryOutsideSupport);
  const auto m = make_family("atom-mix");
  CHECK_THROWS_AS(eval_rate(*m, 1.0, 1.5), QueryOutsideSupport);
  CHECK(eval_rate(*m, 1.0, 0.0) == 1.0);
  CHECK(eval_rate(*m, 1.0, 0.5) == 0.0);
}

TEST_CASE("Q at worked points", "[families]") {
  // Gaussian Q = rho / 2; uniform Q = 1/4 - x^2 / (4 t^2) on (-t, t).
  CHECK(eval_Q(*make_family("gaussian"), 1.0, 0.0) == Approx(0.5 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(eval_Q(*make_family("gaussian"), 1.0, 0.0) == Approx(0.19947).margin(1e-5));
  CHECK(eval_Q(*make_family("uniform"), 1.0, 0.0) == Approx(0.25).epsilon(1e-15));
  CHECK(eval_Q(*make_family("uniform"), 2.0, 1.0) == Approx(0.25 - 1.0 / 16.0).epsilon(1e-15));
}

TEST_CASE("Q is half the time derivative of the potential", "[families]") {
  for (const char* name : kAll) {
    const auto f = make_family(name);
    for (double t : {0.3, 1.0})
      for (double x : {-0.7, -0.1, 0.2, 0.9, 1.4}) {
        const double h = 1e-5 * t;
        const double fd = 0.5 * (f->potential(t + h, x) - f->potential(t - h, x)) / (2 * h);
        INFO(name << " t=" << t << " x=" << x);
        CHECK(f->q(t, x) == Approx(fd).margin(1e-7));
      }
  }
}

TEST_CASE("uniform lambda is two edge atoms", "[families]") {
  const auto d = make_family("uniform")->decompose(1.0);
  REQUIRE(d.lambda.atoms().size() == 2);
  CHECK(d.lambda.atoms()[0].location == -1.0);
  CHECK(d.lambda.atoms()[1].location == 1.0);
  CHECK(d.lambda.atoms()[0].mass == Approx(0.5).epsilon(1e-15));
  CHECK(d.lambda.atoms()[1].mass == Approx(0.5).epsilon(1e-15));
  CHECK(d.gamma.mass() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Gaussian gamma mass is 2 phi(1) / 2 at t = 1", "[families]") {
  // int_{-1}^{1} phi(x)(1 - x^2) / 2 dx = phi(1), since (x phi)' = phi - x^2 phi.
  const auto d = make_family("gaussian")->decompose(1.0);
  CHECK(d.gamma.mass() == Approx(normal_pdf(1.0)).epsilon(1e-10));
  CHECK(d.gamma.mass() == Approx(0.2420).margin(1e-4));
}

TEST_CASE("atom-mix gamma is the atom at zero", "[families]") {
  const auto f = make_family("atom-mix");
  const auto d = f->decompose(0.7);
  CHECK_FALSE(d.gamma.has_continuous_part());
  REQUIRE(d.gamma.atoms().size() == 1);
  CHECK(d.gamma.atoms()[0].location == 0.0);
  CHECK(d.gamma.atoms()[0].mass == Approx(std::exp(-0.7)).epsilon(1e-15));
  CHECK_FALSE(f->dispersion());
}

TEST_CASE("potential is non-decreasing in t and conserves mass and mean", "[families]") {
  const auto ts = linspace(0.05, 2.0, 40);
  const auto xs = linspace(-4.0, 4.0, 161);
  for (const char* name : kAll) {
    INFO(name);
    const auto rep = check_convex_order(*make_family(name), ts, xs);
    CHECK(rep.violations == 0);
    CHECK(rep.max_violation <= 1e-10);
    CHECK(rep.max_mass_error <= 1e-8);
    CHECK(rep.max_mean_error <= 1e-8);
  }
}

TEST_CASE("convex order check flags a family run backwards", "[families]") {
  const TimeReversed r(make_family("gaussian"));
  const auto rep = check_convex_order(r, linspace(0.1, 1.9, 19), linspace(-3.0, 3.0, 61));
  CHECK(rep.violations > 0);
  CHECK(rep.max_violation > 1e-3);
}

TEST_CASE("self-similar profiles reproduce the closed forms", "[families]") {
  const auto sg = make_family("self-similar:gaussian");
  const auto su = make_family("self-similar:uniform");
  CHECK(sg->q(1.0, 0.0) == Approx(0.19947).margin(1e-5));
  CHECK(su->q(1.0, 0.0) == Approx(0.25).epsilon(1e-14));
  for (double t : {0.1, 1.0, 3.0}) {
    CHECK(sg->gamma_support(t).lo == Approx(-std::sqrt(t)).epsilon(1e-10));
    CHECK(sg->gamma_support(t).hi == Approx(std::sqrt(t)).epsilon(1e-10));
    CHECK(su->gamma_support(t).hi == Approx(t).epsilon(1e-12));
    for (double x : {-1.3, 0.0, 0.4}) {
      CHECK(sg->density(t, x) == Approx(make_family("gaussian")->density(t, x)).epsilon(1e-12));
      CHECK(sg->rate(t, x) == Approx(make_family("gaussian")->rate(t, x)).margin(1e-12));
    }
  }
}

TEST_CASE("invalid profiles are rejected", "[families]") {
  CHECK_THROWS_AS(make_profile(0.5, std::make_shared<TabulatedZ>(std::vector<double>{0.0, 1.0, 2.0},
                                                                 std::vector<double>{0.0, 1.0, 0.0})),
                  InvalidProfile);
  CHECK_THROWS_AS(make_profile(-1.0, std::make_shared<UniformZ>()), InvalidProfile);
  CHECK_THROWS_AS(make_family("no-such-family"), ConfigError);
}

TEST_CASE("jump rate lies between zero and its bound", "[families]") {
  for (const char* name : kAll) {
    const auto f = make_family(name);
    for (double t : {0.01, 0.2, 1.0, 2.0}) {
      const Interval r = f->integration_range(t);
      for (double x : linspace(std::max(r.lo, -5.0), std::min(r.hi, 5.0), 401)) {
        const double rate = f->rate(t, x);
        INFO(name << " t=" << t << " x=" << x);
        CHECK(rate >= 0.0);
        CHECK(rate <= f->rate_bound(t) * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("rate bound is non-increasing in t", "[families]") {
  for (const char* name : kAll) {
    const auto f = make_family(name);
    for (double t = 1e-3; t < 4.0; t *= 1.5) CHECK(f->rate_bound(1.5 * t) <= f->rate_bound(t));
  }
}

TEST_CASE("gamma sits inside E_t and lambda outside", "[families]") {
  for (const char* name : {"gaussian", "exp-brownian", "uniform", "self-similar:gaussian"}) {
    const auto f = make_family(name);
    for (double t : {0.1, 1.0}) {
      const Interval s = f->support(t), e = f->gamma_support(t);
      INFO(name << " t=" << t);
      CHECK(s.lo <= e.lo);
      CHECK(e.lo < e.hi);
      CHECK(e.hi <= s.hi);
      const auto d = f->decompose(t);
      for (const auto& p : d.gamma.pieces()) {
        CHECK(p.lo >= e.lo);
        CHECK(p.hi <= e.hi);
      }
      for (const auto& p : d.lambda.pieces()) CHECK((p.hi <= e.lo || p.lo >= e.hi));
      for (const auto& a : d.lambda.atoms()) CHECK(!e.contains(a.location));
      // E_t grows with t.
      CHECK(f->gamma_support(1.5 * t).lo <= e.lo);
      CHECK(f->gamma_support(1.5 * t).hi >= e.hi);
    }
  }
}

TEST_CASE("gamma and lambda carry equal mass and mean", "[families]") {
  // d/dt of mass and mean vanish, so the outflow matches the inflow.
  for (const char* name : kAll) {
    const auto f = make_family(name);
    for (double t : {0.05, 0.5, 1.0}) {
      const auto d = f->decompose(t);
      INFO(name << " t=" << t);
      CHECK(d.gamma.mass() > 0.0);
      CHECK(d.lambda.mass() == Approx(d.gamma.mass()).epsilon(1e-8));
      CHECK(d.lambda.integrate([](double x) { return x; }) ==
            Approx(d.gamma.integrate([](double x) { return x; })).margin(1e-8 * (1 + d.gamma.mass())));
    }
  }
}

TEST_CASE("quantile inverts the cdf", "[families]") {
  for (const char* name : kAll) {
    const auto f = make_family(name);
    for (double u : {0.01, 0.3, 0.5, 0.77, 0.99}) {
      const double x = f->quantile(0.6, u);
      INFO(name << " u=" << u);
      CHECK(f->cdf(0.6, x) >= u - 1e-10);
      CHECK(f->cdf(0.6, x - 1e-9 * (1 + std::abs(x))) <= u + 1e-10);
    }
  }
}
