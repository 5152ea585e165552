#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace landmark {

// Right-continuous nonincreasing step function on the residual-time scale,
// S(0) = 1 before the first jump.
struct StepSurvivalCurve {
  std::vector<double> times;   // strictly increasing jump times, all > 0
  std::vector<double> values;  // value on [times[k], times[k+1])

  // S(t), right-continuous
  double at(double t) const {
    if (times.empty() || t < times.front()) return 1.0;
    size_t k = std::upper_bound(times.begin(), times.end(), t) - times.begin();
    return values[k - 1];
  }

  // S(t-), left limit
  double at_left(double t) const {
    if (times.empty() || t <= times.front()) return 1.0;
    size_t k = std::lower_bound(times.begin(), times.end(), t) - times.begin();
    return k == 0 ? 1.0 : values[k - 1];
  }

  void sample(const std::vector<double>& grid, std::vector<double>& out) const {
    out.resize(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) out[i] = at(grid[i]);
  }

  bool valid() const {
    double prev_t = 0.0, prev_v = 1.0;
    for (size_t k = 0; k < times.size(); ++k) {
      if (times[k] <= prev_t) return false;
      if (values[k] > prev_v || values[k] <= 0.0 || values[k] > 1.0) return false;
      prev_t = times[k];
      prev_v = values[k];
    }
    return times.size() == values.size();
  }
};

inline std::vector<double> uniform_grid(double lo, double hi, size_t n_points) {
  std::vector<double> g(n_points);
  for (size_t i = 0; i < n_points; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
  return g;
}

}  // namespace landmark
