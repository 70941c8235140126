#ifndef MIMIC_PATH_HPP
#define MIMIC_PATH_HPP

#include <algorithm>
#include <cmath>
#include <vector>

namespace mimic {

struct Jump {
  double time = 0.0;
  double value = 0.0;  ///< value from `time` on (cadlag)
};

/// Piecewise-constant cadlag path on [t0, T]: x0 until the first jump, then
/// each jump's value. Jump times are strictly increasing and every jump
/// changes the value.
struct PathSkeleton {
  double t0 = 0.0;
  double x0 = 0.0;
  std::vector<Jump> jumps;

  [[nodiscard]] double value_at(double t) const {
    const auto it = std::upper_bound(jumps.begin(), jumps.end(), t, [](double s, const Jump& j) { return s < j.time; });
    return it == jumps.begin() ? x0 : std::prev(it)->value;
  }
  [[nodiscard]] double terminal() const { return jumps.empty() ? x0 : jumps.back().value; }
};

/// Sum of absolute jump sizes: the total variation of a piecewise-constant path.
inline double path_tv(const PathSkeleton& p) {
  double tv = 0.0, prev = p.x0;
  for (const auto& j : p.jumps) {
    tv += std::abs(j.value - prev);
    prev = j.value;
  }
  return tv;
}

}  // namespace mimic

#endif  // MIMIC_PATH_HPP
