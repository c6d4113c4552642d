#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "kerrflow/error.hpp"

namespace kerrflow::roots {

struct Root {
  double x = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Safeguarded secant on a sign-changing bracket. A secant step is taken
/// when it lands strictly inside the bracket and the bracket shrank by at
/// least half over the previous two steps; otherwise the step bisects.
template <class F>
Root bracketed(F&& f, double lo, double hi, double xtol = 0.0, int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return {lo, 0.0, 0};
  if (fhi == 0.0) return {hi, 0.0, 0};
  if ((flo < 0.0) == (fhi < 0.0)) {
    throw Error(ErrorCode::NoBracket, "no sign change on [" + std::to_string(lo) + ", " +
                                          std::to_string(hi) + "]");
  }
  if (xtol <= 0.0) xtol = 4.0 * std::numeric_limits<double>::epsilon();

  double width_prev = std::abs(hi - lo) * 2.0;
  double best = std::abs(flo) < std::abs(fhi) ? lo : hi;
  double fbest = std::min(std::abs(flo), std::abs(fhi));
  int it = 0;
  for (; it < max_iter; ++it) {
    const double width = std::abs(hi - lo);
    if (width <= xtol * std::max(1.0, std::abs(lo) + std::abs(hi))) break;

    double x = lo - flo * (hi - lo) / (fhi - flo);
    const double margin = 0.01 * width;
    const bool inside = std::isfinite(x) && x > std::min(lo, hi) + margin &&
                        x < std::max(lo, hi) - margin;
    if (!inside || width > 0.5 * width_prev) x = 0.5 * (lo + hi);
    width_prev = width;

    const double fx = f(x);
    if (std::abs(fx) < fbest) {
      fbest = std::abs(fx);
      best = x;
    }
    if (fx == 0.0) return {x, 0.0, it + 1};
    if ((fx < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
  }
  return {best, fbest, it};
}

/// Brackets of sign changes of f over a sorted grid.
template <class F>
std::vector<std::pair<double, double>> sign_changes(F&& f, const std::vector<double>& grid) {
  std::vector<std::pair<double, double>> out;
  if (grid.empty()) return out;
  double prev_x = grid.front();
  double prev_f = f(prev_x);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double x = grid[i];
    const double fx = f(x);
    if (prev_f != 0.0 && fx != 0.0 && (prev_f < 0.0) != (fx < 0.0)) out.emplace_back(prev_x, x);
    prev_x = x;
    prev_f = fx;
  }
  return out;
}

/// Points spaced geometrically in (x - origin) between lo and hi.
inline std::vector<double> offset_log_grid(double origin, double lo, double hi, std::size_t n) {
  std::vector<double> grid(n);
  const double a = std::log(lo - origin);
  const double b = std::log(hi - origin);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    grid[i] = origin + std::exp(a + (b - a) * u);
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

}  // namespace kerrflow::roots
