#pragma once

#include <functional>

#include "kramers/types.hpp"

namespace kramers {

/// Adaptive Dormand-Prince RK5(4) step controller.
struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double h_init = 1e-3;
  double h_min = 1e-14;
  double h_max = 1.0;
  double t_max = 1e6;
  long max_steps = 50'000'000;
};

struct OdeStepper {
  std::function<Vec(const Vec&)> f;
  OdeOptions opt;

  // One accepted adaptive step from (t, x); h is updated in place.
  // Returns the new state.
  Vec step(double& t, const Vec& x, double& h) const {
    const Vec k1 = f(x);
    while (true) {
      if (h < opt.h_min) h = opt.h_min;
      Vec k2 = f(x + h * (1.0 / 5) * k1);
      Vec k3 = f(x + h * (3.0 / 40 * k1 + 9.0 / 40 * k2));
      Vec k4 = f(x + h * (44.0 / 45 * k1 - 56.0 / 15 * k2 + 32.0 / 9 * k3));
      Vec k5 = f(x + h * (19372.0 / 6561 * k1 - 25360.0 / 2187 * k2 +
                          64448.0 / 6561 * k3 - 212.0 / 729 * k4));
      Vec k6 = f(x + h * (9017.0 / 3168 * k1 - 355.0 / 33 * k2 +
                          46732.0 / 5247 * k3 + 49.0 / 176 * k4 -
                          5103.0 / 18656 * k5));
      Vec x5 = x + h * (35.0 / 384 * k1 + 500.0 / 1113 * k3 + 125.0 / 192 * k4 -
                        2187.0 / 6784 * k5 + 11.0 / 84 * k6);
      Vec k7 = f(x5);
      Vec x4 = x + h * (5179.0 / 57600 * k1 + 7571.0 / 16695 * k3 +
                        393.0 / 640 * k4 - 92097.0 / 339200 * k5 +
                        187.0 / 2100 * k6 + 1.0 / 40 * k7);
      double err = 0;
      for (int i = 0; i < x.size(); ++i) {
        double sc = opt.abs_tol +
                    opt.rel_tol * std::max(std::abs(x[i]), std::abs(x5[i]));
        err = std::max(err, std::abs(x5[i] - x4[i]) / sc);
      }
      if (err <= 1.0 || h <= opt.h_min * 1.0000001) {
        t += h;
        double grow = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h = std::min(opt.h_max, h * std::min(5.0, std::max(0.2, grow)));
        return x5;
      }
      h *= std::min(1.0, std::max(0.1, 0.9 * std::pow(err, -0.2)));
    }
  }
};

/// Integrate until stop(t, x) returns true; also returns the pre-stop state
/// so callers can bisect an event crossing.  Throws if t_max/max_steps hit.
struct OdeRunResult {
  double t = 0;
  Vec x;
  bool stopped = false;
  std::vector<Vec> samples;  // thinned accepted states, if requested
};

inline OdeRunResult integrate_until(
    const std::function<Vec(const Vec&)>& f, Vec x0,
    const std::function<bool(double, const Vec&)>& stop, OdeOptions opt = {},
    bool record = false, int record_cap = 512) {
  OdeStepper st{f, opt};
  OdeRunResult res;
  res.x = std::move(x0);
  double h = opt.h_init;
  long n = 0;
  if (record) res.samples.push_back(res.x);
  while (res.t < opt.t_max && n < opt.max_steps) {
    if (stop(res.t, res.x)) {
      res.stopped = true;
      return res;
    }
    res.x = st.step(res.t, res.x, h);
    ++n;
    if (record && static_cast<int>(res.samples.size()) < record_cap)
      res.samples.push_back(res.x);
  }
  res.stopped = stop(res.t, res.x);
  return res;
}

}  // namespace kramers
