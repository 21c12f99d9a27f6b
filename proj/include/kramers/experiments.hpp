#pragma once

#include <functional>
#include <map>

#include "kramers/local_analysis.hpp"
#include "kramers/quadrature.hpp"
#include "kramers/reduced_chain.hpp"
#include "kramers/sde.hpp"

namespace kramers {

// ---------------------------------------------------------------------------
// Exit / transition experiments
// ---------------------------------------------------------------------------

struct ExitTimeResult {
  Estimate tau;
  int n_timeouts = 0;
  int n_diverged = 0;
  double predicted = 0;  // theta1 * nu(m) / omega1(m, m') when available
};

/// Mean hitting time of E(to_min) started at the from_min minimum.
inline ExitTimeResult exit_time_experiment(
    const PotentialSpec& spec, const std::vector<CriticalPoint>& cps,
    const WellClassifier& wells, const ReducedChain& chain, int from_min,
    int to_min, const SimConfig& config) {
  PathDriver driver;
  driver.spec = &spec;
  driver.wells = &wells;
  driver.config = config;
  driver.record_events = false;
  driver.stop_on_hit = true;
  driver.target = [&wells, to_min](const Vec& x) {
    return wells.in_well(x, to_min);
  };

  auto results = run_ensemble(driver, cps[from_min].x);
  ExitTimeResult out;
  std::vector<double> taus;
  for (const auto& r : results) {
    if (r.record.diverged) ++out.n_diverged;
    else if (r.hit) taus.push_back(r.hit_time);
    else ++out.n_timeouts;
  }
  out.tau = estimate_mean(taus);

  int i = -1, j = -1;
  for (int k = 0; k < chain.n(); ++k) {
    if (chain.states[k] == from_min) i = k;
    if (chain.states[k] == to_min) j = k;
  }
  if (i >= 0 && j >= 0 && chain.omega1(i, j) > 0)
    out.predicted = chain.theta1_of(config.eps) * chain.nu[i] / chain.omega1(i, j);
  return out;
}

struct TransitionLawResult {
  std::map<int, double> histogram;   // well id -> mass at probe time
  double outside_mass = 0;
  double tv_distance = 0;            // vs reduced-chain row
  double start_well_mass_rho = 0;    // mass on the start well at rho_eps
  double rho_eps = 0;
  double probe_time = 0;             // t * theta1
  double mean_outside_fraction = 0;  // time fraction outside all wells
};

/// Empirical law of Phi(x(t theta1)) vs the reduced-chain row exp(tL), plus
/// the sub-scale occupation at rho = e^{(d1 - 0.3)/eps}.
inline TransitionLawResult transition_law_experiment(
    const PotentialSpec& spec, const std::vector<CriticalPoint>& cps,
    const WellClassifier& wells, const ReducedChain& chain, int start_min,
    double t_scaled, SimConfig config,
    std::vector<PathResult>* raw_out = nullptr) {
  TransitionLawResult out;
  double theta1 = chain.theta1_of(config.eps);
  out.probe_time = t_scaled * theta1;
  out.rho_eps = std::exp((chain.d1 - 0.3) / config.eps);
  config.horizon = out.probe_time;

  PathDriver driver;
  driver.spec = &spec;
  driver.wells = &wells;
  driver.config = config;
  driver.record_events = true;  // needed for the outside-time fraction
  driver.probe_times = {out.rho_eps, out.probe_time};

  auto results = run_ensemble(driver, cps[start_min].x);

  int n = config.n_paths;
  int at_start_rho = 0;
  std::map<int, int> counts;
  int outside = 0;
  double outside_time = 0;
  for (const auto& r : results) {
    if (r.probe_wells.size() >= 1 && r.probe_wells[0] == start_min)
      ++at_start_rho;
    int w = r.probe_wells.size() >= 2 ? r.probe_wells[1] : -1;
    if (w < 0) ++outside;
    else ++counts[w];
    auto segs = trace_process(r.record);
    outside_time += 1.0 - total_trace_time(segs) / std::max(r.record.t_end, 1e-300);
  }
  out.start_well_mass_rho = double(at_start_rho) / n;
  out.outside_mass = double(outside) / n;
  out.mean_outside_fraction = outside_time / n;
  for (auto& [w, c] : counts) out.histogram[w] = double(c) / n;

  // TV against the semigroup row.
  int row = -1;
  for (int k = 0; k < chain.n(); ++k)
    if (chain.states[k] == start_min) row = k;
  Mat P = semigroup(chain, t_scaled);
  double tv = out.outside_mass;  // chain carries no outside mass
  for (int k = 0; k < chain.n(); ++k) {
    double emp = 0;
    auto it = out.histogram.find(chain.states[k]);
    if (it != out.histogram.end()) emp = it->second;
    tv += std::abs(emp - P(row, k));
  }
  out.tv_distance = 0.5 * tv;
  if (raw_out) *raw_out = std::move(results);
  return out;
}

struct FeynmanKacResult {
  Estimate value;
  double chain_value = 0;
};

/// u_eps(t theta1, x0) = E[u0(x(t theta1))] vs the reduced-chain prediction
/// sum_m' p_t(m, m') u0(m').
inline FeynmanKacResult feynman_kac_u(const PotentialSpec& spec,
                                      const std::vector<CriticalPoint>& cps,
                                      const WellClassifier& wells,
                                      const ReducedChain& chain,
                                      const std::function<double(const Vec&)>& u0,
                                      const Vec& x0, int start_min,
                                      double t_scaled, SimConfig config) {
  double theta1 = chain.theta1_of(config.eps);
  config.horizon = t_scaled * theta1;

  PathDriver driver;
  driver.spec = &spec;
  driver.wells = &wells;
  driver.config = config;
  driver.record_events = false;
  driver.probe_times = {config.horizon};
  driver.keep_probe_states = true;

  auto results = run_ensemble(driver, x0);
  std::vector<double> vals;
  for (const auto& r : results)
    if (!r.record.diverged && !r.probe_states.empty())
      vals.push_back(u0(r.probe_states[0]));

  FeynmanKacResult out;
  out.value = estimate_mean(vals);
  int row = -1;
  for (int k = 0; k < chain.n(); ++k)
    if (chain.states[k] == start_min) row = k;
  Mat P = semigroup(chain, t_scaled);
  for (int k = 0; k < chain.n(); ++k)
    out.chain_value += P(row, k) * u0(cps[chain.states[k]].x);
  return out;
}

struct ResolventMcResult {
  std::vector<Estimate> phi;   // one estimate per start point
  double chain_value = 0;      // f(m) from the reduced resolvent
  double max_pair_gap = 0;     // flatness across the starts
};

/// Monte Carlo estimate of the resolvent function
///   phi(x) = E_x[ integral_0^inf e^{-lambda s} G(x(theta1 s)) ds ],
/// with G = sum_m g(m) 1_{E(m)}, at several starting points inside E(m).
/// The cost scales like theta1 = e^{d1/eps}, so this is only usable at
/// moderate eps; the reduced resolvent is the scalable route.
inline ResolventMcResult resolvent_mc_experiment(
    const PotentialSpec& spec, const std::vector<CriticalPoint>& cps,
    const WellClassifier& wells, const ReducedChain& chain, double lambda,
    const Vec& g, const std::vector<Vec>& starts, int start_min,
    SimConfig config, double s_max = 6.0) {
  double theta1 = chain.theta1_of(config.eps);
  double horizon = s_max / lambda * theta1;
  double dt = config.step();
  long n_steps = static_cast<long>(std::ceil(horizon / dt));

  std::map<int, double> g_of;  // well id -> g value
  for (int k = 0; k < chain.n(); ++k) g_of[chain.states[k]] = g[k];

  ResolventMcResult out;
  for (const Vec& x0 : starts) {
    std::vector<double> vals(config.n_paths);
    parallel_for(config.n_paths, config.workers(), [&](std::size_t p) {
      NormalStream noise(config.seed, p);
      Vec x = x0;
      double acc = 0;
      for (long n = 0; n < n_steps; ++n) {
        x = step_em(x, spec, config.eps, dt, noise);
        int w = wells.well_of(x);
        if (w >= 0) {
          double s = (n + 1) * dt / theta1;  // scaled time
          acc += std::exp(-lambda * s) * g_of.at(w) * (dt / theta1);
        }
      }
      vals[p] = acc;
    });
    out.phi.push_back(estimate_mean(vals));
  }
  for (std::size_t i = 0; i < out.phi.size(); ++i)
    for (std::size_t j = i + 1; j < out.phi.size(); ++j)
      out.max_pair_gap = std::max(
          out.max_pair_gap, std::abs(out.phi[i].mean - out.phi[j].mean));

  Vec f = solve_resolvent(chain, lambda, g);
  for (int k = 0; k < chain.n(); ++k)
    if (chain.states[k] == start_min) out.chain_value = f[k];
  return out;
}

// ---------------------------------------------------------------------------
// Mixing experiment (Gaussian coupling at a minimum)
// ---------------------------------------------------------------------------

struct MixingResult {
  double eps1 = 0, eps2 = 0;
  double gap4_eps1 = 0, gap4_eps2 = 0;  // E |y_eps - z_eps|^4 at t_eps
  double fitted_power = 0;              // log-log slope across the two eps
  double cov_rel_err = 0;               // || C - 2 eps H^-1 ||_F / ||.||_F
  Mat sample_cov;
};

/// Couple y_eps (EM under b0), the deterministic flow y (same EM grid) and
/// the Gaussian process xi (EM under A(y(t))) with one shared noise stream
/// per path.  With a linear drift the coupling is exact and y_eps == z_eps
/// pathwise on the grid.
inline MixingResult mixing_experiment(const PotentialSpec& spec,
                                      const std::vector<CriticalPoint>& cps,
                                      int m_id, double eps1, double eps2,
                                      double theta_exp, int n_paths,
                                      uint64_t seed, const Vec& x0_offset,
                                      int threads = 0) {
  if (!(theta_exp > 0 && theta_exp < 1.0 / 3))
    throw std::invalid_argument("mixing_experiment: theta must be in (0, 1/3)");
  const Vec m = cps[m_id].x;
  const Mat H = spec.hessU(m);
  ExtendedField ef = extend_field_b0(spec, m);
  const int d = spec.dim;

  MixingResult out;
  out.eps1 = eps1;
  out.eps2 = eps2;

  auto run_for_eps = [&](double eps, bool want_cov, double& gap4, Mat& cov) {
    double t_eps = std::pow(eps, -theta_exp);
    double dt = std::min(1e-3, eps / 100.0);
    long n_steps = static_cast<long>(std::ceil(t_eps / dt));

    // Deterministic reference path and its Jacobians, shared by all paths.
    std::vector<Vec> ypath(n_steps + 1);
    std::vector<Mat> Apath(n_steps + 1);
    Vec y = m + x0_offset;
    for (long n = 0; n <= n_steps; ++n) {
      ypath[n] = y;
      Apath[n] = spec.drift_jacobian(y);  // y stays in the linearizable ball
      y = y + dt * ef.b0(y);
    }

    std::vector<double> gaps(n_paths);
    std::vector<Vec> finals(n_paths);
    parallel_for(n_paths, threads > 0 ? threads : default_thread_count(),
                 [&](std::size_t p) {
                   NormalStream noise(seed, p);
                   Vec ye = m + x0_offset;
                   Vec xi = Vec::Zero(d);
                   double amp = std::sqrt(2.0 * eps * dt);
                   double sdt = std::sqrt(dt);
                   Vec eta(d);
                   for (long n = 0; n < n_steps; ++n) {
                     for (int k = 0; k < d; ++k) eta[k] = noise.next();
                     ye = ye + dt * ef.b0(ye) + amp * eta;
                     xi = xi + dt * (Apath[n] * xi) + sdt * eta;
                   }
                   Vec z = ypath[n_steps] + std::sqrt(2.0 * eps) * xi;
                   double g = (ye - z).norm();
                   gaps[p] = g * g * g * g;
                   finals[p] = ye;
                 });

    double mean4 = 0;
    for (double g : gaps) mean4 += g;
    gap4 = mean4 / n_paths;

    if (want_cov) {
      Vec mean = Vec::Zero(d);
      for (const auto& f : finals) mean += f;
      mean /= n_paths;
      cov = Mat::Zero(d, d);
      for (const auto& f : finals) cov += (f - mean) * (f - mean).transpose();
      cov /= (n_paths - 1);
    }
  };

  Mat cov1, cov_dummy;
  run_for_eps(eps1, true, out.gap4_eps1, cov1);
  run_for_eps(eps2, false, out.gap4_eps2, cov_dummy);
  out.sample_cov = cov1;

  // Stationary covariance of d xi = A xi dt + dW is K with A K + K A^T = -I;
  // H L skew-symmetric gives K = H^{-1}/2, so cov(y_eps(t_eps)) -> eps H^{-1}.
  Mat target = eps1 * H.inverse();
  out.cov_rel_err = (cov1 - target).norm() / target.norm();
  out.fitted_power = std::log(out.gap4_eps1 / out.gap4_eps2) /
                     std::log(eps1 / eps2);
  return out;
}

// ---------------------------------------------------------------------------
// Gibbs / Laplace asymptotics (quadrature oracle, d <= 2)
// ---------------------------------------------------------------------------

struct GibbsRatios {
  double eps = 0;
  double z_ratio = 0;                     // Z_eps / ((2 pi eps)^{d/2} nu_star)
  std::map<int, double> well_ratios;      // mu(E(m)) e^{U(m)/eps} nu_star/nu(m)
};

inline double partition_function(const PotentialSpec& spec, double eps) {
  if (spec.dim == 1) {
    return integrate_1d(
        [&](double x) {
          Vec v(1);
          v[0] = x;
          return std::exp(-spec.U(v) / eps);
        },
        spec.box.lo[0], spec.box.hi[0], 1e-13);
  }
  if (spec.dim == 2) {
    // Fixed fine midpoint grid: smooth integrand, deterministic.
    const int N = 1200;
    double hx = (spec.box.hi[0] - spec.box.lo[0]) / N;
    double hy = (spec.box.hi[1] - spec.box.lo[1]) / N;
    double s = 0;
    Vec v(2);
    for (int i = 0; i < N; ++i) {
      v[0] = spec.box.lo[0] + (i + 0.5) * hx;
      for (int j = 0; j < N; ++j) {
        v[1] = spec.box.lo[1] + (j + 0.5) * hy;
        s += std::exp(-spec.U(v) / eps);
      }
    }
    return s * hx * hy;
  }
  throw QuadratureFailureError("partition_function: d <= 2 only");
}

/// Quadrature check of the two Laplace asymptotics: the partition function
/// against (2 pi eps)^{d/2} nu_star, and each well's Gibbs mass against
/// nu(m)/nu_star.
inline GibbsRatios gibbs_checks(const PotentialSpec& spec,
                                const std::vector<CriticalPoint>& cps,
                                const WellClassifier& wells, double eps) {
  GibbsRatios out;
  out.eps = eps;
  int d = spec.dim;

  // nu_star over the set of absolute minima (values within 1e-9 of 0).
  double nu_star = 0;
  for (const auto& cp : cps)
    if (cp.kind == CriticalKind::Minimum && cp.u <= 1e-9)
      nu_star += 1.0 / std::sqrt(cp.hess_eigvals.prod());

  double Z = partition_function(spec, eps);
  out.z_ratio = Z / (std::pow(2 * M_PI * eps, d / 2.0) * nu_star);

  for (const auto& cp : cps) {
    if (cp.kind != CriticalKind::Minimum) continue;
    double nu_m = 1.0 / std::sqrt(cp.hess_eigvals.prod());
    double Im = 0;  // int_{E(m)} e^{-(U - U(m))/eps}
    if (d == 1) {
      // The component of {U <= U(m) + r0} containing m is an interval.
      double r0 = wells.r0();
      auto Ushift = [&](double x) {
        Vec v(1);
        v[0] = x;
        return spec.U(v) - cp.u;
      };
      double lo = cp.x[0], hi = cp.x[0];
      double step = 1e-3 * spec.box.diameter();
      while (Ushift(lo - step) <= r0 && lo - step > spec.box.lo[0]) lo -= step;
      while (Ushift(hi + step) <= r0 && hi + step < spec.box.hi[0]) hi += step;
      // refine the edges by bisection
      auto refine = [&](double inside, double outside) {
        for (int it = 0; it < 60; ++it) {
          double mid = 0.5 * (inside + outside);
          (Ushift(mid) <= r0 ? inside : outside) = mid;
        }
        return inside;
      };
      lo = refine(lo, lo - step);
      hi = refine(hi, hi + step);
      Im = integrate_1d([&](double x) { return std::exp(-Ushift(x) / eps); },
                        lo, hi, 1e-13);
    } else {
      const int N = 900;
      double hx = (spec.box.hi[0] - spec.box.lo[0]) / N;
      double hy = (spec.box.hi[1] - spec.box.lo[1]) / N;
      Vec v(2);
      for (int i = 0; i < N; ++i) {
        v[0] = spec.box.lo[0] + (i + 0.5) * hx;
        for (int j = 0; j < N; ++j) {
          v[1] = spec.box.lo[1] + (j + 0.5) * hy;
          if (wells.in_well(v, cp.id)) Im += std::exp(-(spec.U(v) - cp.u) / eps);
        }
      }
      Im *= hx * hy;
    }
    // mu(E(m)) e^{U(m)/eps} = Im e^{-U(m)/eps} e^{U(m)/eps} / Z = Im / Z.
    out.well_ratios[cp.id] = (Im / Z) * (nu_star / nu_m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Saddle-neighborhood exit (Kifer-type scaling) and hitting checks
// ---------------------------------------------------------------------------

struct SaddleExitResult {
  double frac_still_inside = 0;   // after time C/eps
  double frac_exit_below = 0;     // exit height < U(sigma) - eta0
  double measured_eta0 = 0;       // -95th percentile of U(exit) - U(sigma)
  int n_paths = 0;
};

/// Start near an unstable critical point and measure the exit time from a
/// ball around it plus the exit height statistics.
inline SaddleExitResult saddle_exit_experiment(
    const PotentialSpec& spec, const std::vector<CriticalPoint>& cps, int sid,
    double radius, double start_dist, double time_factor, SimConfig config) {
  const Vec& sigma = cps[sid].x;
  double u_sigma = cps[sid].u;
  double t_max = time_factor / config.eps;

  struct Slot {
    bool exited = false;
    double exit_u = 0;
  };
  std::vector<Slot> slots(config.n_paths);
  double dt = config.step();
  long n_steps = static_cast<long>(std::ceil(t_max / dt));

  parallel_for(config.n_paths, config.workers(), [&](std::size_t p) {
    NormalStream noise(config.seed, p);
    // deterministic start direction per path
    Vec dir(spec.dim);
    for (int k = 0; k < spec.dim; ++k) dir[k] = noise.next();
    dir.normalize();
    Vec x = sigma + start_dist * dir;
    for (long n = 0; n < n_steps; ++n) {
      x = step_em(x, spec, config.eps, dt, noise);
      if ((x - sigma).norm() >= radius) {
        slots[p].exited = true;
        slots[p].exit_u = spec.U(x);
        break;
      }
    }
  });

  SaddleExitResult out;
  out.n_paths = config.n_paths;
  std::vector<double> heights;
  int still = 0;
  for (const auto& s : slots) {
    if (!s.exited) ++still;
    else heights.push_back(s.exit_u - u_sigma);
  }
  out.frac_still_inside = double(still) / config.n_paths;
  if (!heights.empty()) {
    std::sort(heights.begin(), heights.end());
    std::size_t q95 = static_cast<std::size_t>(0.95 * heights.size());
    q95 = std::min(q95, heights.size() - 1);
    out.measured_eta0 = -heights[q95];
    int below = 0;
    for (double h : heights)
      if (h < -out.measured_eta0 + 1e-300) ++below;
    // fraction strictly below the measured eta0 level (by construction ~95%)
    out.frac_exit_below = double(below) / heights.size();
  }
  return out;
}

struct HittingResult {
  int n_started = 0;
  int n_hit = 0;
  double frac_failed = 0;
};

/// From uniform starts in {U <= H}, check arrival at some well within
/// time_factor / eps.
inline HittingResult hitting_experiment(const PotentialSpec& spec,
                                        const std::vector<CriticalPoint>& cps,
                                        const WellClassifier& wells, double H,
                                        double time_factor, SimConfig config) {
  (void)cps;
  // Deterministic rejection sampling of starts.
  std::vector<Vec> starts;
  auto pts = quasirandom_points(spec.box, 50 * config.n_paths);
  for (const auto& p : pts) {
    if (spec.U(p) <= H) starts.push_back(p);
    if (static_cast<int>(starts.size()) == config.n_paths) break;
  }

  PathDriver driver;
  driver.spec = &spec;
  driver.wells = &wells;
  SimConfig c = config;
  c.horizon = time_factor / config.eps;
  c.n_paths = 1;
  driver.config = c;
  driver.record_events = false;
  driver.stop_on_hit = true;
  driver.target = [&wells](const Vec& x) { return wells.well_of(x) >= 0; };

  std::vector<char> hit(starts.size(), 0);
  parallel_for(starts.size(), config.workers(), [&](std::size_t i) {
    PathDriver d2 = driver;
    d2.config.seed = config.seed + 1000003 * (i + 1);
    auto r = d2.run(starts[i], 0);
    hit[i] = r.hit ? 1 : 0;
  });

  HittingResult out;
  out.n_started = static_cast<int>(starts.size());
  for (char h : hit) out.n_hit += h;
  out.frac_failed = 1.0 - double(out.n_hit) / out.n_started;
  return out;
}

}  // namespace kramers
