#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace evcc {

struct ScalarMaximum {
  double x = 0.0;
  double value = 0.0;
};

/// Maximises f on [lo, hi]: a uniform grid of `grid` intervals picks the
/// best cell, then golden-section search refines inside its neighbours until
/// the bracket is below rel_tol * (hi - lo).
template <typename F>
ScalarMaximum golden_section_maximize(F&& f, double lo, double hi, double rel_tol = 1e-9,
                                      std::size_t grid = 1024) {
  if (!(lo <= hi)) throw std::invalid_argument("golden_section_maximize: empty interval");
  if (grid < 2) grid = 2;
  const double width = hi - lo;
  if (width == 0) return {lo, f(lo)};

  std::size_t best_i = 0;
  double best_v = f(lo);
  for (std::size_t i = 1; i <= grid; ++i) {
    const double x = i == grid ? hi : lo + width * static_cast<double>(i) / static_cast<double>(grid);
    const double v = f(x);
    if (v > best_v) {
      best_v = v;
      best_i = i;
    }
  }
  const double step = width / static_cast<double>(grid);
  ScalarMaximum best{best_i == grid ? hi : lo + step * static_cast<double>(best_i), best_v};

  double a = best_i == 0 ? lo : lo + step * static_cast<double>(best_i - 1);
  double b = best_i >= grid - 1 ? hi : lo + step * static_cast<double>(best_i + 1);
  const double inv_phi = (std::sqrt(5.0) - 1) / 2;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > rel_tol * width) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = (a + b) / 2;
  const double v = f(x);
  if (v >= best.value) best = {x, v};
  return best;
}

}  // namespace evcc
