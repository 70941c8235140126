#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mimic/cli.hpp"
#include "mimic/mimic.hpp"

using namespace mimic;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / "mimic_io_cli_test";
  fs::create_directories(d);
  return d;
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p.string();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mimic");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// Sets or clears MIMIC_THREADS for one scope.
class ThreadsEnv {
 public:
  explicit ThreadsEnv(const char* v) {
    if (v) ::setenv("MIMIC_THREADS", v, 1);
    else ::unsetenv("MIMIC_THREADS");
  }
  ~ThreadsEnv() { ::unsetenv("MIMIC_THREADS"); }
};

}  // namespace

TEST_CASE("config parsing fills fields and keeps defaults", "[config]") {
  const RunConfig c = parse_config(R"({"family": "uniform", "kernel": "hp", "eps": 0.001, "n_paths": 7,
                                       "checkpoints": [0.5, 1.0], "threads": 2})");
  CHECK(c.sim.family == "uniform");
  CHECK(c.sim.kernel == KernelKind::hp);
  CHECK(c.sim.eps == 0.001);
  CHECK(c.sim.T == 1.0);
  CHECK(c.sim.n_paths == 7);
  CHECK(c.sim.checkpoints == std::vector<double>{0.5, 1.0});
  CHECK(c.sim.threads == 2);
  CHECK(c.sim.seed == 42);
  CHECK(c.bins == 10);
  CHECK_FALSE(c.t.has_value());
}

TEST_CASE("config errors name the source and line", "[config]") {
  CHECK_THAT(config_error("{\n  \"family\": \"gaussian\",\n  \"bogus\": 1\n}"),
             ContainsSubstring("cfg.json:3: unknown key 'bogus'"));
  CHECK_THAT(config_error("{\n  \"family\": \"gaussian\",\n  \"eps\": ,\n}"),
             ContainsSubstring("cfg.json:3: malformed JSON"));
  CHECK_THAT(config_error("{\"family\": \"gaussian\",\n\"n_paths\": -4}"), ContainsSubstring("cfg.json:2: 'n_paths'"));
  CHECK_THAT(config_error("{\"family\": \"gaussian\", \"T\": \"one\"}"), ContainsSubstring("'T' must be"));
  CHECK_THAT(config_error("{\"kernel\": \"hk\"}"), ContainsSubstring("'family' is required"));
  CHECK_THAT(config_error("{\"family\": \"gaussian\", \"eps\": 2}"), ContainsSubstring("eps < T"));
  CHECK_THAT(config_error("{\"family\": \"gaussian\", \"checkpoints\": [3]}"), ContainsSubstring("checkpoints"));
  CHECK_THAT(config_error("{\"family\": \"gaussian\", \"kernel\": \"zz\"}"), ContainsSubstring("unknown kernel"));
  CHECK_THAT(config_error("[1, 2]"), ContainsSubstring("must be a JSON object"));
}

TEST_CASE("grids parse as a:b:n", "[config]") {
  CHECK(parse_grid("-1:1:5") == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
  CHECK_THROWS_AS(parse_grid("1:0:3"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0:1"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0:1:3x"), ConfigError);
}

TEST_CASE("paths survive a CSV round trip bit for bit", "[csv]") {
  SimConfig c;
  c.n_paths = 200;
  const auto paths = Simulator(c).ensemble();
  std::stringstream ss;
  write_paths_csv(ss, paths);
  const auto back = read_paths_csv(ss);
  REQUIRE(back.size() == paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    CHECK(back[i].t0 == paths[i].t0);
    CHECK(back[i].x0 == paths[i].x0);
    REQUIRE(back[i].jumps.size() == paths[i].jumps.size());
    for (std::size_t k = 0; k < paths[i].jumps.size(); ++k) {
      CHECK(back[i].jumps[k].time == paths[i].jumps[k].time);
      CHECK(back[i].jumps[k].value == paths[i].jumps[k].value);
    }
    CHECK(path_tv(back[i]) == path_tv(paths[i]));
  }
}

TEST_CASE("malformed CSV is rejected with its line", "[csv]") {
  auto error = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_paths_csv(in, "p.csv");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK_THAT(error("a,b\n"), ContainsSubstring("p.csv:1: expected header"));
  CHECK_THAT(error("path_id,event_index,time,value\n0,0,0.1\n"), ContainsSubstring("p.csv:2: expected 4 fields"));
  CHECK_THAT(error("path_id,event_index,time,value\n0,0,x,1\n"), ContainsSubstring("p.csv:2: bad number"));
  CHECK_THAT(error("path_id,event_index,time,value\n1,0,0.1,0\n"), ContainsSubstring("p.csv:2: path ids"));
  CHECK_THAT(error("path_id,event_index,time,value\n0,0,0.1,0\n0,2,0.5,1\n"), ContainsSubstring("p.csv:3"));
}

TEST_CASE("help and argument errors", "[cli]") {
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({}).code == kExitInvalid);
  CHECK(run({"frobnicate"}).code == kExitInvalid);
  CHECK(run({"tv", "--config", "/no/such/file.json"}).code == kExitInvalid);
  CHECK(run({"tv", "--family", "gaussian", "--threads", "0"}).code == kExitInvalid);
}

TEST_CASE("tv reports the uniform bound", "[cli]") {
  const std::string cfg =
      write_file("tv.json", R"({"family": "uniform", "eps": 0.0, "T": 1.0, "n_paths": 2000, "seed": 3})");
  const Run r = run({"tv", "--config", cfg});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(r.out);
  CHECK(j["bound"].get<double>() == Approx(0.666667).margin(1e-6));
  CHECK(j["attained"].get<double>() == Approx(2.0 / 3.0).margin(1e-12));
  CHECK(j["mc_start"].get<double>() == kEpsFloor);
  CHECK(j["J"].get<double>() == Approx(1.0).margin(1e-12));
  CHECK(std::abs(j["mc_estimate"].get<double>() - j["mc_bound"].get<double>()) <= 4 * j["mc_se"].get<double>());
}

TEST_CASE("malformed and unknown config keys exit 2", "[cli]") {
  const Run bad = run({"tv", "--config", write_file("bad.json", "{\n\"family\": \"uniform\",\n\"bogus\": 1\n}")});
  CHECK(bad.code == kExitInvalid);
  CHECK_THAT(bad.err, ContainsSubstring("bad.json:3: unknown key 'bogus'"));
  CHECK(run({"tv", "--config", write_file("broken.json", "{\"family\": ")}).code == kExitInvalid);
}

TEST_CASE("frozen paths fail check-marginals with exit 3", "[cli]") {
  const std::string cfg = write_file(
      "frozen.json", R"({"family": "gaussian", "eps": 0.01, "n_paths": 3000, "frozen": true, "checkpoints": [1.0]})");
  const Run r = run({"check-marginals", "--config", cfg});
  CHECK(r.code == kExitCheck);
  CHECK_FALSE(json::parse(r.out)["pass"].get<bool>());
}

TEST_CASE("simulate, then check the written paths", "[cli]") {
  const std::string cfg =
      write_file("sim.json", R"({"family": "gaussian", "eps": 0.01, "n_paths": 2000, "seed": 9})");
  const std::string csv = (scratch_dir() / "paths.csv").string();
  const std::string summary = (scratch_dir() / "summary.json").string();
  const Run s = run({"simulate", "--config", cfg, "--out", csv, "--summary", summary});
  REQUIRE(s.code == kExitOk);
  const json j = json::parse(std::ifstream(summary));
  CHECK(j["config"]["n_paths"] == 2000);
  CHECK(j["ks"].size() == 4);
  CHECK(run({"check-marginals", "--config", cfg, "--paths", csv}).code == kExitOk);
  const Run h = run({"hedge-check", "--config", cfg, "--paths", csv});
  REQUIRE(h.code == kExitOk);
  const json hj = json::parse(h.out);
  CHECK(hj["violations"] == 0);
  CHECK(hj["n_paths"] == 2000);
  CHECK(run({"simulate", "--config", cfg}).code == kExitInvalid);  // no --out
}

TEST_CASE("dumps write CSV tables", "[cli]") {
  const Run hk = run({"transport-dump", "--family", "uniform", "--t", "1", "--x-grid", "-0.5:0.5:3"});
  REQUIRE(hk.code == kExitOk);
  CHECK(hk.out == "x,a,b,p_up\n-0.5,-1,1,0.25\n0,-1,1,0.5\n0.5,-1,1,0.75\n");
  const Run hp = run({"transport-dump", "--family", "uniform", "--kernel", "hp", "--t", "1", "--x-grid", "0:0:1",
                      "--hp-grid", "101"});
  REQUIRE(hp.code == kExitOk);
  CHECK_THAT(hp.out, ContainsSubstring("x,z,cdf\n0,-1,0.5"));
  const Run psi = run({"psi-dump", "--family", "uniform", "--t", "1", "--x-grid", "0.5:0.5:1"});
  REQUIRE(psi.code == kExitOk);
  CHECK(psi.out == "x,psi,theta,psi_prime\n0.5,0.25,0.5,1\n");
  CHECK(run({"psi-dump", "--family", "uniform"}).code == kExitInvalid);  // no --t
  CHECK(run({"transport-dump", "--family", "gaussian", "--t", "1", "--x-grid", "2:3:2"}).code == kExitInvalid);
}

TEST_CASE("thread count: flag, then environment, then file", "[cli]") {
  cli::Options o;
  o.config = write_file("threads.json", R"({"family": "gaussian", "threads": 2})");
  {
    ThreadsEnv env(nullptr);
    CHECK(cli::resolve(o).sim.threads == 2);
  }
  {
    ThreadsEnv env("5");
    CHECK(cli::resolve(o).sim.threads == 5);
    o.threads = 3;
    CHECK(cli::resolve(o).sim.threads == 3);
    o.threads.reset();
  }
  {
    ThreadsEnv env("many");
    CHECK_THROWS_AS(cli::resolve(o), ConfigError);
  }
  {
    ThreadsEnv env("0");
    CHECK_THROWS_AS(cli::resolve(o), ConfigError);
  }
}

TEST_CASE("shipped configs parse", "[config]") {
  for (const auto& entry : fs::directory_iterator(MIMIC_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    INFO(entry.path());
    CHECK_NOTHROW(load_config(entry.path().string()));
  }
}
