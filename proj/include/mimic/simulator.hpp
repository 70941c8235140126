#ifndef MIMIC_SIMULATOR_HPP
#define MIMIC_SIMULATOR_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/family.hpp"
#include "mimic/hk.hpp"
#include "mimic/hp.hpp"
#include "mimic/path.hpp"
#include "mimic/registry.hpp"
#include "mimic/rng.hpp"

namespace mimic {

/// Start time used when a run asks for eps = 0: the jump intensity of the
/// shipped families is not integrable at zero.
inline constexpr double kEpsFloor = 1e-4;

enum class KernelKind { hk, hp, reverse };

inline KernelKind parse_kernel(const std::string& s) {
  if (s == "hk" || s == "closed-form") return KernelKind::hk;
  if (s == "hp") return KernelKind::hp;
  if (s == "reverse") return KernelKind::reverse;
  throw ConfigError("unknown kernel '" + s + "' (expected hk, hp, closed-form or reverse)");
}

inline std::string kernel_name(KernelKind k) {
  switch (k) {
    case KernelKind::hk: return "hk";
    case KernelKind::hp: return "hp";
    case KernelKind::reverse: return "reverse";
  }
  return "?";
}

struct SimConfig {
  std::string family = "gaussian";
  KernelKind kernel = KernelKind::hk;
  double eps = 0.01;
  double T = 1.0;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 42;
  std::vector<double> checkpoints;
  std::size_t threads = 1;
  /// Drop every Poisson event: paths stay at their initial value.
  bool frozen = false;
  std::size_t hp_grid = 8001;
};

/// Point (s, h, u) of the Poisson process on time x height x label.
struct PoissonEvent {
  double s = 0.0;
  double h = 0.0;
  double u = 0.0;
};

/// Points of a unit-intensity Poisson process on (eps, T] x (0, k_bar] x (0, 1),
/// sorted by time.
inline std::vector<PoissonEvent> sample_events(double eps, double T, double k_bar, Stream& rng) {
  if (!std::isfinite(k_bar)) throw UnboundedRate("rate bound is not finite on (" + std::to_string(eps) + ", " +
                                                 std::to_string(T) + "]");
  std::vector<PoissonEvent> out;
  if (!(k_bar > 0.0) || !(T > eps)) return out;
  for (double s = eps + rng.exponential(k_bar); s <= T; s += rng.exponential(k_bar)) {
    const double h = k_bar * rng.uniform();
    const double u = rng.uniform();
    out.push_back({s, h, u});
  }
  return out;
}

/// Pure-jump martingale with marginals mu_t driven by a Poisson process
/// thinned at the jump rate. Time is cut into blocks [eps 2^k, eps 2^(k+1)]
/// with the rate bound of each block taken at its start, which needs K(t)
/// non-increasing.
class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg) : Simulator(make_family(cfg.family), cfg) {}
  Simulator(FamilyPtr family, SimConfig cfg) : cfg_(std::move(cfg)), f_(std::move(family)) {
    if (!(cfg_.T > cfg_.eps) || cfg_.eps < 0.0) throw ConfigError("need 0 <= eps < T");
    if (cfg_.n_paths < 1) throw ConfigError("need at least one path");
    start_ = cfg_.eps > 0.0 ? cfg_.eps : kEpsFloor;
    if (start_ >= cfg_.T) throw ConfigError("T must exceed the start time " + std::to_string(start_));
    switch (cfg_.kernel) {
      case KernelKind::hk:
        if (!f_->dispersion()) throw NoDispersion(f_->name() + " does not satisfy the dispersion assumption");
        if (f_->scaling_exponent() && !f_->closed_form_targets(1.0, 0.0)) hk_ = HkTable(f_, 801);
        break;
      case KernelKind::hp:
        hp_ = HpTable(f_, cfg_.hp_grid);
        break;
      case KernelKind::reverse:
        if (f_->name() != "uniform" && f_->name() != "atom-mix")
          throw UnsupportedExample("time reversal is only available for the uniform and atom-mix families");
        break;
    }
  }

  [[nodiscard]] const SimConfig& config() const { return cfg_; }
  [[nodiscard]] const MarginalFamily& family() const { return *f_; }
  [[nodiscard]] FamilyPtr family_ptr() const { return f_; }
  /// Time at which paths start: eps, or the floor when eps = 0.
  [[nodiscard]] double start() const { return start_; }
  [[nodiscard]] bool truncated() const { return cfg_.eps == 0.0 && cfg_.kernel != KernelKind::reverse; }

  /// Post-jump location of mass at x for label u at time s.
  [[nodiscard]] double jump_target(double s, double x, double u) const {
    if (cfg_.kernel == KernelKind::hp) return hp_.kernel(s, x).quantile(u);
    const HkTargets tg = hk_.has_value() ? hk_->targets(s, x) : hk_bounds(*f_, s, x);
    return BinomialKernel{x, tg.a, tg.b}.quantile(u);
  }

  [[nodiscard]] PathSkeleton simulate_path(std::size_t index) const {
    Stream rng(hash64(cfg_.seed, index));
    if (cfg_.kernel == KernelKind::reverse) return reverse_time_path(rng);
    PathSkeleton p;
    p.t0 = start_;
    p.x0 = f_->quantile(start_, rng.uniform());
    if (cfg_.frozen) return p;
    double x = p.x0;
    for (double lo = start_; lo < cfg_.T; lo *= 2.0) {
      const double hi = std::min(2.0 * lo, cfg_.T);
      for (const auto& ev : sample_events(lo, hi, f_->rate_bound(lo), rng)) {
        if (!(ev.h <= f_->rate(ev.s, x))) continue;
        const double y = jump_target(ev.s, x, ev.u);
        if (y != x) {
          p.jumps.push_back({ev.s, y});
          x = y;
        }
      }
    }
    return p;
  }

  /// Paths 0..n-1; the result does not depend on the thread count.
  [[nodiscard]] std::vector<PathSkeleton> ensemble() const {
    std::vector<PathSkeleton> out(cfg_.n_paths);
    const std::size_t nt = std::max<std::size_t>(1, std::min(cfg_.threads, cfg_.n_paths));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(nt);
    auto work = [&](std::size_t w) {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < out.size();) out[i] = simulate_path(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = out.size();
      }
    };
    if (nt == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < nt; ++w) pool.emplace_back(work, w);
      for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    return out;
  }

 private:
  [[nodiscard]] PathSkeleton reverse_time_path(Stream& rng) const;

  SimConfig cfg_;
  FamilyPtr f_;
  double start_ = 0.0;
  std::optional<HkTable> hk_;
  HpTable hp_;
};

/// States x_0 = x_T, x_1, ... of the reversed uniform chain; x_k is left at
/// reversed time T - |x_k|.
inline std::vector<double> reverse_uniform_chain(double x_T, double T, Stream& rng) {
  std::vector<double> chain{x_T};
  while (std::abs(chain.back()) > 1e-12 * T) {
    const double r = std::abs(chain.back());
    // Inverse cdf of the density (r + v) / (2 r^2) on (-r, r), reflected for x < 0.
    const double v = 2.0 * r * std::sqrt(rng.uniform()) - r;
    chain.push_back(chain.back() > 0.0 ? v : -v);
  }
  return chain;
}

/// Time-reversed construction on [0, T] for the two families where the
/// reversed dynamics are explicit. The result is returned in forward time,
/// started at 0 at time 0.
///
/// atom-mix: the reversed process leaves its start X~_0 ~ mu_T for 0 at rate
/// e^{-(T-s)} / (1 - e^{-(T-s)}); the forward path jumps once, from 0.
/// uniform: from x_k the reversed process waits until T - |x_k| and jumps to
/// (-|x_k|, |x_k|) with density (|x_k| + y sgn x_k) / (2 x_k^2). The chain is
/// stopped once |x_k| <= 1e-12 T.
inline PathSkeleton reverse_time_simulate(const MarginalFamily& f, double T, Stream& rng) {
  PathSkeleton p;
  p.t0 = 0.0;
  p.x0 = 0.0;
  if (f.name() == "atom-mix") {
    const double x = f.quantile(T, rng.uniform());
    if (x == 0.0) return p;
    // Survival of the reversed clock: (1 - e^{-(T-s)}) / (1 - e^{-T}).
    const double t_jump = -std::log1p(std::expm1(-T) * rng.uniform());
    p.jumps.push_back({t_jump, x});
    return p;
  }
  if (f.name() == "uniform") {
    const std::vector<double> chain = reverse_uniform_chain(f.quantile(T, rng.uniform()), T, rng);
    // Forward: value x_k on (|x_k|, |x_{k-1}|], with |x_{-1}| = T.
    for (std::size_t k = chain.size(); k-- > 0;) {
      if (chain[k] == 0.0) continue;
      p.jumps.push_back({std::abs(chain[k]), chain[k]});
    }
    return p;
  }
  throw UnsupportedExample("time reversal is only available for the uniform and atom-mix families");
}

inline PathSkeleton Simulator::reverse_time_path(Stream& rng) const { return reverse_time_simulate(*f_, cfg_.T, rng); }

}  // namespace mimic

#endif  // MIMIC_SIMULATOR_HPP
