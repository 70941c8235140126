#ifndef MIMIC_CLI_HPP
#define MIMIC_CLI_HPP

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mimic/hedge.hpp"
#include "mimic/hk.hpp"
#include "mimic/hp.hpp"
#include "mimic/io.hpp"
#include "mimic/psi_theta.hpp"
#include "mimic/registry.hpp"
#include "mimic/simulator.hpp"
#include "mimic/stats.hpp"
#include "mimic/variation.hpp"

namespace mimic {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;  ///< bad arguments, config or input
inline constexpr int kExitCheck = 3;    ///< a statistical or pathwise check failed

namespace cli {

/// Command-line values; each one set overrides the config file.
struct Options {
  std::string config;
  std::string out;
  std::string summary;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  std::string paths;
  std::string family;
  std::string kernel;
  std::optional<double> t;
  std::string x_grid;
  std::optional<std::size_t> hp_grid;
};

inline json config_echo(const RunConfig& c) {
  return {{"family", c.sim.family},   {"kernel", kernel_name(c.sim.kernel)}, {"eps", c.sim.eps},
          {"T", c.sim.T},             {"n_paths", c.sim.n_paths},           {"seed", c.sim.seed},
          {"checkpoints", c.sim.checkpoints}, {"threads", c.sim.threads},   {"frozen", c.sim.frozen},
          {"hp_grid", c.sim.hp_grid}, {"bins", c.bins}};
}

/// Config file (if any) with command-line overrides and the thread count
/// from --threads, else MIMIC_THREADS, else the file.
inline RunConfig resolve(const Options& o) {
  RunConfig c;
  if (!o.config.empty()) c = load_config(o.config);
  if (!o.family.empty()) c.sim.family = o.family;
  if (!o.kernel.empty()) c.sim.kernel = parse_kernel(o.kernel);
  if (o.t) c.t = o.t;
  if (!o.x_grid.empty()) c.x_grid = o.x_grid;
  if (o.hp_grid) c.sim.hp_grid = *o.hp_grid;
  if (o.seed) c.sim.seed = *o.seed;
  if (!o.out.empty()) c.out = o.out;
  if (!o.summary.empty()) c.summary = o.summary;
  if (!o.paths.empty()) c.paths = o.paths;
  if (o.threads) {
    c.sim.threads = *o.threads;
  } else if (const char* env = std::getenv("MIMIC_THREADS"); env && *env) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(env, &used);
      if (used != std::string(env).size() || v < 1) throw ConfigError("");
      c.sim.threads = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ConfigError("MIMIC_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
  }
  if (c.sim.threads < 1) throw ConfigError("threads must be >= 1");
  return c;
}

/// Checkpoints from the config, or T/4, T/2, 3T/4, T inside [start, T].
inline std::vector<double> checkpoints(const RunConfig& c, double start) {
  if (!c.sim.checkpoints.empty()) return c.sim.checkpoints;
  std::vector<double> v;
  for (double f : {0.25, 0.5, 0.75, 1.0})
    if (f * c.sim.T >= start) v.push_back(f * c.sim.T);
  return v;
}

inline json report_json(const SimReport& r) {
  json ks = json::array(), mart = json::array();
  for (const auto& c : r.checkpoints) {
    ks.push_back({{"t", c.t}, {"ks", c.ks}, {"critical", c.ks_critical}, {"pass", c.ks_pass}});
    mart.push_back({{"t", c.t},
                    {"mean", c.value.mean},
                    {"se", c.value.se},
                    {"mean_z", c.mean_z},
                    {"increment_mean", c.increment.mean},
                    {"increment_se", c.increment.se},
                    {"max_bin_z", c.max_bin_z}});
  }
  return {{"ks", ks},
          {"martingale", mart},
          {"jumps", {{"mean", r.jumps.mean}, {"se", r.jumps.se}, {"max", r.max_jumps}}}};
}

inline void emit(const json& j, const RunConfig& c, std::ostream& out) {
  out << j.dump(2) << '\n';
  if (!c.summary.empty()) {
    std::ofstream f(c.summary);
    if (!f) throw ConfigError("cannot write '" + c.summary + "'");
    f << j.dump(2) << '\n';
  }
}

/// CSV sink: --out file, else `fallback`.
class Sink {
 public:
  Sink(const std::string& file, std::ostream& fallback) {
    if (file.empty()) {
      os_ = &fallback;
    } else {
      file_.open(file);
      if (!file_) throw ConfigError("cannot write '" + file + "'");
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

inline int simulate(const Options& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  if (c.out.empty()) throw ConfigError("simulate needs --out (or \"out\" in the config)");
  const Simulator sim(c.sim);
  const auto paths = sim.ensemble();
  {
    std::ofstream f(c.out);
    if (!f) throw ConfigError("cannot write '" + c.out + "'");
    write_paths_csv(f, paths);
  }
  const double T = c.sim.T;
  json j = {{"config", config_echo(c)}, {"start", sim.start()}, {"truncated", sim.truncated()}};
  const auto cps = checkpoints(c, sim.start());
  j.update(report_json(marginal_report(paths, sim.family(), cps, T, c.bins)));
  const TVEstimate tv = expected_tv_mc(paths);
  j["tv"] = {{"mean", tv.estimate}, {"se", tv.se}};
  emit(j, c, out);
  return kExitOk;
}

/// KS at every checkpoint and the mean of X_t within 4 s.e. of the family
/// mean; failure of either exits with kExitCheck.
inline int check_marginals(const Options& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  const Simulator sim(c.sim);
  std::vector<PathSkeleton> paths;
  if (!c.paths.empty()) {
    std::ifstream in(c.paths);
    if (!in) throw ConfigError("cannot open '" + c.paths + "'");
    paths = read_paths_csv(in, c.paths);
  } else {
    paths = sim.ensemble();
  }
  const auto rep = marginal_report(paths, sim.family(), checkpoints(c, sim.start()), c.sim.T, c.bins);
  bool means_ok = true;
  for (const auto& cp : rep.checkpoints) means_ok = means_ok && std::abs(cp.mean_z) <= 4.0;
  json j = {{"config", config_echo(c)}, {"n_paths", paths.size()}};
  j.update(report_json(rep));
  j["pass"] = rep.ks_pass() && means_ok;
  emit(j, c, out);
  return j["pass"].get<bool>() ? kExitOk : kExitCheck;
}

inline int tv(const Options& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  const FamilyPtr f = make_family(c.sim.family);
  json j = {{"family", f->name()}, {"eps", c.sim.eps}, {"T", c.sim.T}};
  j["bound"] = tv_lower_bound(f, c.sim.eps, c.sim.T);
  j["attained"] = attained_tv(f, c.sim.eps, c.sim.T);
  const Simulator sim(f, c.sim);
  const auto paths = sim.ensemble();
  const TVEstimate est = expected_tv_mc(paths);
  const double start = paths.front().t0;
  j["mc_estimate"] = est.estimate;
  j["mc_se"] = est.se;
  j["mc_n"] = est.n;
  j["mc_start"] = start;
  j["mc_bound"] = tv_lower_bound(f, start, c.sim.T);
  if (f->name() == "gaussian") {
    const BrownianConstant bc = brownian_constant();
    j["C"] = bc.C;
    j["C_jumps"] = bc.C_jumps;
    j["C_upper"] = bc.C_upper;
  }
  if (f->scaling_exponent()) j["J"] = j_constant(SelfSimilarDuals(f)).J;
  emit(j, c, out);
  return kExitOk;
}

inline int hedge_check(const Options& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  const FamilyPtr f = make_family(c.sim.family);
  std::vector<PathSkeleton> paths;
  if (!c.paths.empty()) {
    std::ifstream in(c.paths);
    if (!in) throw ConfigError("cannot open '" + c.paths + "'");
    paths = read_paths_csv(in, c.paths);
  } else {
    paths = Simulator(f, c.sim).ensemble();
  }
  if (paths.empty()) throw ConfigError("no paths to check");
  double t_lo = c.sim.T;
  for (const auto& p : paths) t_lo = std::min(t_lo, p.t0);
  const auto duals = make_duals(f, t_lo, c.sim.T);
  const HedgeReport r = certify_ensemble(paths, *duals, c.sim.T, c.hedge_tolerance, static_cast<unsigned>(c.sim.threads));
  json j = {{"n_paths", r.n_paths},       {"min_slack", r.min_slack}, {"violations", r.violations},
            {"mean_slack", r.slack.mean}, {"slack_se", r.slack.se},   {"mean_rhs", r.rhs.mean},
            {"mean_tv", r.tv.mean},       {"tv_se", r.tv.se},         {"bound", tv_lower_bound(f, t_lo, c.sim.T)},
            {"tolerance", r.tolerance}};
  emit(j, c, out);
  return r.pass() ? kExitOk : kExitCheck;
}

inline int transport_dump(const Options& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  if (!c.t) throw ConfigError("transport-dump needs --t");
  if (c.x_grid.empty()) throw ConfigError("transport-dump needs --x-grid a:b:n");
  const FamilyPtr f = make_family(c.sim.family);
  const auto xs = parse_grid(c.x_grid);
  const double t = *c.t;
  Sink sink(c.out, out);
  if (c.sim.kernel == KernelKind::hp) {
    const auto aux = hp_auxiliaries(*f, t, c.sim.hp_grid);
    *sink << "x,z,cdf\n";
    for (double x : xs) {
      const PiecewiseLaw law = hp_walk(aux, x);
      for (double z : law.breakpoints()) *sink << fmt17(x) << ',' << fmt17(z) << ',' << fmt17(law.cdf(z)) << '\n';
    }
    return kExitOk;
  }
  if (c.sim.kernel != KernelKind::hk) throw ConfigError("transport-dump supports the hk and hp kernels");
  *sink << "x,a,b,p_up\n";
  for (double x : xs) {
    const auto [a, b] = hk_bounds(*f, t, x);
    *sink << fmt17(x) << ',' << fmt17(a) << ',' << fmt17(b) << ',' << fmt17((x - a) / (b - a)) << '\n';
  }
  return kExitOk;
}

/// psi, theta and psi' at time t, anchored at the family mean, on --x-grid
/// or on E_t widened by its width on each side.
inline int psi_dump(const Options& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  if (!c.t) throw ConfigError("psi-dump needs --t");
  const FamilyPtr f = make_family(c.sim.family);
  const double t = *c.t;
  const PsiThetaTable tb = build_psi_theta(f, t, f->mean());
  std::vector<double> xs;
  if (!c.x_grid.empty()) {
    xs = parse_grid(c.x_grid);
  } else {
    const Interval e = f->gamma_support(t);
    xs = linspace(e.lo - e.width(), e.hi + e.width(), 401);
  }
  Sink sink(c.out, out);
  *sink << "x,psi,theta,psi_prime\n";
  for (double x : xs)
    *sink << fmt17(x) << ',' << fmt17(tb.psi(x)) << ',' << fmt17(tb.theta(x)) << ',' << fmt17(tb.psi_prime(x)) << '\n';
  return kExitOk;
}

}  // namespace cli

/// Runs one subcommand. args[0] is the program name.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Pure-jump martingales with prescribed marginals: simulation, total-variation bounds and "
               "sub-hedge certificates.",
               "mimic"};
  app.require_subcommand(1);
  cli::Options o;

  auto common = [&o](CLI::App* s) {
    s->add_option("--config", o.config, "JSON run config")->check(CLI::ExistingFile);
    s->add_option("--out", o.out, "CSV output file");
    s->add_option("--summary", o.summary, "JSON summary file");
    s->add_option("--threads", o.threads, "worker threads (default: MIMIC_THREADS, then the config)")
        ->check(CLI::PositiveNumber);
    s->add_option("--seed-override", o.seed, "replace the config seed");
  };
  auto family_opts = [&o](CLI::App* s) {
    s->add_option("--family", o.family, "family name");
    s->add_option("--kernel", o.kernel, "hk, hp, closed-form or reverse");
  };

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const cli::Options&, std::ostream&);
  };
  const Sub subs[] = {
      {"simulate", "simulate paths; writes paths.csv and a JSON summary", cli::simulate},
      {"check-marginals", "KS and mean tests of simulated marginals", cli::check_marginals},
      {"tv", "total-variation lower bound, attained value and Monte-Carlo estimate", cli::tv},
      {"hedge-check", "pathwise sub-hedge certificate over simulated or given paths", cli::hedge_check},
      {"transport-dump", "kernel targets (hk) or kernel laws (hp) on an x grid", cli::transport_dump},
      {"psi-dump", "dual functions psi, theta at one time", cli::psi_dump},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> registered;
  for (const Sub& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    common(sc);
    family_opts(sc);
    const std::string name = s.name;
    if (name == "check-marginals" || name == "hedge-check") sc->add_option("--paths", o.paths, "paths.csv to read");
    if (name == "transport-dump" || name == "psi-dump") {
      sc->add_option("--t", o.t, "time slice")->check(CLI::PositiveNumber);
      sc->add_option("--x-grid", o.x_grid, "grid a:b:n");
    }
    if (name == "transport-dump") sc->add_option("--hp-grid", o.hp_grid, "grid size of the hp construction");
    registered.emplace_back(sc, &s);
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  for (const auto& [sc, s] : registered) {
    if (!sc->parsed()) continue;
    try {
      return s->run(o, out);
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
      return kExitInvalid;
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitInvalid;
    }
  }
  return kExitInvalid;
}

}  // namespace mimic

#endif  // MIMIC_CLI_HPP
