#ifndef MIMIC_IO_HPP
#define MIMIC_IO_HPP

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "mimic/error.hpp"
#include "mimic/path.hpp"
#include "mimic/simulator.hpp"

namespace mimic {

using nlohmann::json;

/// Shortest decimal text that reads back to the same double.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Settings shared by the subcommands. Keys absent from the file keep the
/// defaults below.
struct RunConfig {
  SimConfig sim;
  std::size_t bins = 10;           ///< martingale increment test bins
  double hedge_tolerance = 1e-6;   ///< slack below -tolerance is a violation
  std::optional<double> t;         ///< time slice for psi-dump / transport-dump
  std::string x_grid;              ///< "a:b:n" for transport-dump
  std::string out;
  std::string summary;
  std::string paths;               ///< paths.csv read by hedge-check
};

namespace detail {

// 1-based line of byte offset `pos` in `text`.
inline std::size_t line_of(const std::string& text, std::size_t pos) {
  pos = std::min(pos, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

// Line of the first occurrence of "key" as an object key, 0 if not found.
inline std::size_t line_of_key(const std::string& text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  for (std::size_t p = text.find(quoted); p != std::string::npos; p = text.find(quoted, p + 1)) {
    std::size_t q = p + quoted.size();
    while (q < text.size() && std::isspace(static_cast<unsigned char>(text[q]))) ++q;
    if (q < text.size() && text[q] == ':') return line_of(text, p);
  }
  return 0;
}

inline std::string where(const std::string& source, const std::string& text, const std::string& key) {
  const std::size_t line = line_of_key(text, key);
  return source + (line ? ":" + std::to_string(line) : std::string()) + ": ";
}

}  // namespace detail

/// Parses a config document. Every error names the source and, where it can
/// be located, the line.
inline RunConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(detail::line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw ConfigError(source + ":1: config must be a JSON object");

  static const std::set<std::string> known{"family", "kernel",     "eps",      "T",    "n_paths", "seed",
                                           "checkpoints", "threads", "frozen", "hp_grid", "bins",
                                           "hedge_tolerance", "t", "x_grid", "out", "summary", "paths"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError(detail::where(source, text, key) + "unknown key '" + key + "'");

  RunConfig c;
  c.sim.family.clear();
  auto get = [&](const char* key, auto& dst, auto check, const char* what) {
    if (!j.contains(key)) return;
    using T = std::decay_t<decltype(dst)>;
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!j[key].is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!j[key].is_number()) throw ConfigError("");
      }
      dst = j[key].template get<T>();
    } catch (const std::exception&) {
      throw ConfigError(detail::where(source, text, key) + "'" + key + "' must be " + what);
    }
    if (!check(dst)) throw ConfigError(detail::where(source, text, key) + "'" + key + "' must be " + what);
  };
  auto any = [](const auto&) { return true; };
  auto positive = [](double v) { return v > 0.0; };
  auto at_least_one = [](std::size_t v) { return v >= 1; };

  std::string kernel = "hk";
  get("family", c.sim.family, any, "a string");
  get("kernel", kernel, any, "a string");
  try {
    c.sim.kernel = parse_kernel(kernel);
  } catch (const ConfigError& e) {
    throw ConfigError(detail::where(source, text, "kernel") + e.what());
  }
  get("eps", c.sim.eps, [](double v) { return v >= 0.0; }, "a number >= 0");
  get("T", c.sim.T, positive, "a positive number");
  get("n_paths", c.sim.n_paths, at_least_one, "an integer >= 1");
  get("seed", c.sim.seed, any, "a nonnegative integer");
  get("checkpoints", c.sim.checkpoints, any, "an array of numbers");
  get("threads", c.sim.threads, at_least_one, "an integer >= 1");
  get("frozen", c.sim.frozen, any, "a boolean");
  get("hp_grid", c.sim.hp_grid, [](std::size_t v) { return v >= 3; }, "an integer >= 3");
  get("bins", c.bins, at_least_one, "an integer >= 1");
  get("hedge_tolerance", c.hedge_tolerance, [](double v) { return v >= 0.0; }, "a number >= 0");
  double t = 0.0;
  if (j.contains("t")) {
    get("t", t, positive, "a positive number");
    c.t = t;
  }
  get("x_grid", c.x_grid, any, "a string a:b:n");
  get("out", c.out, any, "a string");
  get("summary", c.summary, any, "a string");
  get("paths", c.paths, any, "a string");

  if (c.sim.family.empty()) throw ConfigError(source + ": 'family' is required");
  if (!(c.sim.T > c.sim.eps)) throw ConfigError(detail::where(source, text, "T") + "need eps < T");
  for (double s : c.sim.checkpoints)
    if (!(s >= c.sim.eps && s <= c.sim.T))
      throw ConfigError(detail::where(source, text, "checkpoints") + "checkpoints must lie in [eps, T]");
  return c;
}

inline std::string read_text(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + file + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_config(const std::string& file) { return parse_config(read_text(file), file); }

/// Evenly spaced grid from "a:b:n".
inline std::vector<double> parse_grid(const std::string& spec) {
  double a = 0.0, b = 0.0;
  long long n = 0;
  char c1 = 0, c2 = 0, extra = 0;
  std::istringstream in(spec);
  if (!(in >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || (in >> extra) || n < 1 || (n > 1 && !(b > a)))
    throw ConfigError("grid '" + spec + "' must be a:b:n with a < b and n >= 1");
  return linspace(a, b, static_cast<std::size_t>(n));
}

/// paths.csv: path_id, event_index, time, value; event 0 is the start.
inline void write_paths_csv(std::ostream& out, std::span<const PathSkeleton> paths) {
  out << "path_id,event_index,time,value\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    out << i << ",0," << fmt17(paths[i].t0) << ',' << fmt17(paths[i].x0) << '\n';
    for (std::size_t k = 0; k < paths[i].jumps.size(); ++k)
      out << i << ',' << k + 1 << ',' << fmt17(paths[i].jumps[k].time) << ',' << fmt17(paths[i].jumps[k].value)
          << '\n';
  }
}

inline std::vector<PathSkeleton> read_paths_csv(std::istream& in, const std::string& source = "<paths>") {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line.rfind("path_id,event_index,time,value", 0) != 0)
    throw ConfigError(source + ":1: expected header path_id,event_index,time,value");
  std::vector<PathSkeleton> paths;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string f[4];
    for (int k = 0; k < 4; ++k)
      if (!std::getline(row, f[k], ',')) throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 4 fields");
    std::size_t id = 0, ev = 0;
    double time = 0.0, value = 0.0;
    try {
      id = std::stoull(f[0]);
      ev = std::stoull(f[1]);
      time = std::stod(f[2]);
      value = std::stod(f[3]);
    } catch (const std::exception&) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": bad number");
    }
    if (ev == 0) {
      if (id != paths.size()) throw ConfigError(source + ":" + std::to_string(line_no) + ": path ids must be 0, 1, ...");
      paths.push_back({time, value, {}});
    } else {
      if (paths.empty() || id + 1 != paths.size() || ev != paths.back().jumps.size() + 1)
        throw ConfigError(source + ":" + std::to_string(line_no) + ": events must follow their path's start in order");
      paths.back().jumps.push_back({time, value});
    }
  }
  return paths;
}

}  // namespace mimic

#endif  // MIMIC_IO_HPP
