#pragma once

#include <functional>

#include "kramers/types.hpp"

namespace kramers {

namespace detail {

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm,
                                   double fb, double whole, double tol,
                                   int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6 * (fa + 4 * flm + fm);
  double right = (b - m) / 6 * (fm + 4 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0) throw QuadratureFailureError("adaptive Simpson: max depth");
  if (std::abs(delta) <= 15 * tol) return left + right + delta / 15;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

}  // namespace detail

inline double integrate_1d(const std::function<double(double)>& f, double a,
                           double b, double tol = 1e-12, int max_depth = 60) {
  // Split into a few panels first so narrow peaks are not missed.
  const int panels = 16;
  double total = 0;
  for (int p = 0; p < panels; ++p) {
    double pa = a + (b - a) * p / panels, pb = a + (b - a) * (p + 1) / panels;
    double fa = f(pa), fb = f(pb), fm = f(0.5 * (pa + pb));
    double whole = (pb - pa) / 6 * (fa + 4 * fm + fb);
    total += detail::adaptive_simpson_rec(f, pa, pb, fa, fm, fb, whole,
                                          tol / panels, max_depth);
  }
  return total;
}

/// Iterated 1D quadrature over a 2D box.
inline double integrate_2d(const std::function<double(double, double)>& f,
                           double ax, double bx, double ay, double by,
                           double tol = 1e-10) {
  auto outer = [&](double x) {
    return integrate_1d([&](double y) { return f(x, y); }, ay, by, tol);
  };
  return integrate_1d(outer, ax, bx, tol);
}

/// Gauss-Legendre-free Laplace-transform quadrature:
/// int_0^inf e^{-lambda t} g(t) dt via the substitution s = e^{-lambda t}.
inline double integrate_laplace(const std::function<double(double)>& g,
                                double lambda, double tol = 1e-10) {
  auto h = [&](double s) {
    if (s <= 0) return 0.0;
    return g(-std::log(s) / lambda) / lambda;
  };
  return integrate_1d(h, 1e-14, 1.0, tol);
}

}  // namespace kramers
