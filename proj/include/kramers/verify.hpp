#pragma once

// The acceptance checks behind `kramers verify` and the acceptance test
// binary: exact desk-scale algebra plus statistical bands at moderate eps.

#include <chrono>
#include <iomanip>
#include <sstream>

#include "kramers/oracles.hpp"
#include "kramers/pipeline.hpp"

namespace kramers {

struct CheckResult {
  int criterion = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  json to_json() const {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["checks"] = json::array();
    for (const auto& c : checks)
      j["checks"].push_back({{"criterion", c.criterion},
                             {"name", c.name},
                             {"pass", c.pass},
                             {"detail", c.detail}});
    j["all_passed"] = all_passed();
    return j;
  }

  void print(std::ostream& os) const {
    for (const auto& c : checks)
      os << (c.pass ? "[PASS] " : "[FAIL] ") << "criterion " << c.criterion
         << ": " << c.name << " — " << c.detail << "\n";
    os << (all_passed() ? "all criteria passed\n"
                        : "one or more criteria FAILED\n");
  }
};

struct VerifyOptions {
  bool fast_only = false;  // skip the long Monte Carlo checks
  uint64_t seed = 20240817;
  int threads = 0;
};

namespace detail {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

struct Workspace {
  PotentialSpec spec;
  std::vector<CriticalPoint> cps;
  LandscapeGraph graph;
  ReducedChain chain;
};

inline Workspace prepare(const std::string& name,
                         const std::string& ell = "none", double c = 0) {
  Workspace w{catalog(name, ell, c), {}, {}, {}};
  w.cps = find_critical_points(w.spec);
  shift_to_zero(w.spec, w.cps);
  w.graph = build_landscape_graph(w.spec, w.cps);
  w.chain = assemble_chain(w.graph, w.cps, w.spec);
  return w;
}

inline std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

inline int min_id_near(const std::vector<CriticalPoint>& cps, double x0) {
  for (const auto& cp : cps)
    if (cp.kind == CriticalKind::Minimum && std::abs(cp.x[0] - x0) < 1e-5)
      return cp.id;
  throw std::runtime_error("minimum not found");
}

// --- criterion 1: exact double-well reduction -------------------------------

inline CheckResult check_exact_reduction() {
  Timer timer;
  auto w = prepare("doublewell1d");
  double nu = 1.0 / std::sqrt(8.0);
  double omega = 1.0 / M_PI;
  double rate = 2.0 * std::sqrt(2.0) / M_PI;
  double err = 0;
  err = std::max(err, std::abs(w.graph.gamma[0] - 1.0));
  err = std::max(err, std::abs(w.graph.gamma[1] - 1.0));
  err = std::max(err, std::abs(w.graph.d1 - 1.0));
  err = std::max(err, std::abs(w.chain.nu[0] - nu));
  err = std::max(err, std::abs(w.chain.nu[1] - nu));
  err = std::max(err, std::abs(w.chain.omega1(0, 1) - omega));
  err = std::max(err, std::abs(w.chain.omega1(1, 0) - omega));
  err = std::max(err, std::abs(w.chain.L(0, 1) - rate));
  err = std::max(err, std::abs(w.chain.L(1, 0) - rate));
  double t = timer.s();
  CheckResult r{1, "exact reduction on doublewell1d", err <= 1e-9 && t < 1.0,
                "max |computed - hand| = " + fmt(err) + ", runtime " +
                    fmt(t, 3) + " s (< 1 s)"};
  return r;
}

// --- criterion 2: Theta against the grid-flood oracle -----------------------

inline CheckResult check_theta_oracle() {
  Timer timer;
  double worst = 0, worst_quantum = 0;
  bool ok = true;

  auto w1 = prepare("triplewell1d_asym");
  for (const auto& r : oracles::grid_minimax_1d(w1.spec, w1.cps, w1.graph, 200001)) {
    double diff = std::abs(w1.graph.theta(r.i, r.j) - r.height);
    if (diff > r.quantum) ok = false;
    if (diff > worst) {
      worst = diff;
      worst_quantum = r.quantum;
    }
  }
  auto w2 = prepare("threewell2d");
  for (const auto& r : oracles::grid_minimax_2d(w2.spec, w2.cps, w2.graph, 2001)) {
    double diff = std::abs(w2.graph.theta(r.i, r.j) - r.height);
    if (diff > r.quantum) ok = false;
    if (diff > worst) {
      worst = diff;
      worst_quantum = r.quantum;
    }
  }
  double t = timer.s();
  return {2, "Theta matches grid-flood minimax oracle",
          ok && t < 60.0,
          "worst |Theta - oracle| = " + fmt(worst) + " (quantum " +
              fmt(worst_quantum) + "), runtime " + fmt(t, 3) + " s (< 60 s)"};
}

// --- criterion 3: semigroup / resolvent algebra -----------------------------

inline CheckResult check_semigroup_algebra() {
  auto w = prepare("triplewell1d_asym");
  double row_defect = 0;
  for (double t : {0.1, 1.0, 10.0}) {
    double d = 0;
    semigroup(w.chain, t, &d);
    row_defect = std::max(row_defect, d);
  }

  Vec g(w.chain.n());
  g << 0.4, -1.2, 0.9;
  double lambda = 0.7;
  Vec f = solve_resolvent(w.chain, lambda, g);
  double dual_err = 0;
  for (int i = 0; i < w.chain.n(); ++i) {
    double quad = integrate_laplace(
        [&](double t) { return (semigroup(w.chain, t) * g)(i); }, lambda, 1e-9);
    dual_err = std::max(dual_err, std::abs(quad - f[i]));
  }

  auto cs = long_time_structure(w.chain);
  int n = w.chain.n();
  double lnorm = w.chain.L.cwiseAbs().maxCoeff();
  Mat P = semigroup(w.chain, 1e6 / lnorm);
  Mat limit = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (std::size_t k = 0; k < cs.classes.size(); ++k)
      limit.row(i) += cs.absorption(i, k) * cs.pis[k].transpose();
  double class_err = (P - limit).cwiseAbs().maxCoeff();

  bool ok = row_defect <= 1e-12 && dual_err <= 1e-6 && class_err <= 1e-8;
  return {3, "semigroup rows / resolvent duality / class decomposition", ok,
          "row defect " + fmt(row_defect) + " (<=1e-12), duality " +
              fmt(dual_err) + " (<=1e-6), long-time " + fmt(class_err) +
              " (<=1e-8)"};
}

// --- criterion 4: Eyring-Kramers exit time ----------------------------------

inline CheckResult check_exit_time(uint64_t seed, int threads) {
  Timer timer;
  auto w = prepare("doublewell1d");
  WellClassifier wells(w.spec, w.cps, 0.45);
  int from = min_id_near(w.cps, -1.0), to = min_id_near(w.cps, 1.0);
  SimConfig cfg;
  cfg.eps = 0.25;
  cfg.dt = 1e-3;
  cfg.n_paths = 2000;
  cfg.seed = seed;
  cfg.threads = threads;
  auto r = exit_time_experiment(w.spec, w.cps, wells, w.chain, from, to, cfg);
  double target = M_PI * std::exp(4.0) / (2.0 * std::sqrt(2.0));
  double rel = std::abs(r.tau.mean - target) / target;
  double t = timer.s();
  bool ok = rel <= 0.20 && r.n_timeouts == 0 && t < 600.0;
  return {4, "mean exit time vs Eyring-Kramers (eps=0.25, 2000 paths)", ok,
          "mean " + fmt(r.tau.mean, 5) + " (CI " + fmt(r.tau.lo(), 5) + ".." +
              fmt(r.tau.hi(), 5) + ") vs " + fmt(target, 5) +
              ", rel dev " + fmt(rel, 3) + " (<=0.2), runtime " + fmt(t, 3) +
              " s"};
}

// --- criterion 5: transition law + sub-scale mass ---------------------------

inline CheckResult check_transition_law(uint64_t seed, int threads) {
  std::ostringstream detail;
  bool ok = true;
  for (const char* name : {"doublewell1d", "triplewell1d_asym"}) {
    auto w = prepare(name);
    // start in the shallowest well (the one whose row of L is live)
    int start = -1;
    for (std::size_t i = 0; i < w.graph.minima.size(); ++i)
      if (std::abs(w.graph.gamma[i] - w.graph.d1) < 1e-9)
        start = w.graph.minima[i];
    WellClassifier wells(w.spec, w.cps, 0.45);
    SimConfig cfg;
    cfg.eps = 0.15;
    cfg.n_paths = 1000;
    cfg.seed = seed;
    cfg.threads = threads;
    auto r = transition_law_experiment(w.spec, w.cps, wells, w.chain, start,
                                       1.0, cfg);
    bool tv_ok = r.tv_distance <= 0.1;
    bool mass_ok = r.start_well_mass_rho >= 0.9;
    ok = ok && tv_ok && mass_ok;
    detail << name << ": TV " << fmt(r.tv_distance, 3) << " (<=0.1"
           << (tv_ok ? "" : ", FAIL") << "), mass@rho "
           << fmt(r.start_well_mass_rho, 3) << " (>=0.9"
           << (mass_ok ? "" : ", FAIL") << "); ";
  }
  return {5, "transition law TV + sub-scale occupation (eps=0.15)", ok,
          detail.str()};
}

// --- criterion 6: mixing covariance and fourth-moment slope -----------------

inline CheckResult check_mixing(uint64_t seed, int threads) {
  auto spec = catalog("doublewell1d");
  auto cps = find_critical_points(spec);
  shift_to_zero(spec, cps);
  int m = min_id_near(cps, 1.0);
  Vec off(1);
  off << 0.1;
  auto r = mixing_experiment(spec, cps, m, 0.02, 0.005, 0.25, 10000, seed, off,
                             threads);
  bool ok = r.cov_rel_err <= 0.10 && r.fitted_power >= 2.0;
  return {6, "mixing: covariance vs eps*H^{-1}, fourth-moment slope", ok,
          "cov rel err " + fmt(r.cov_rel_err, 3) + " (<=0.1), slope " +
              fmt(r.fitted_power, 3) + " (>=2), gap4 " + fmt(r.gap4_eps1) +
              " / " + fmt(r.gap4_eps2)};
}

// --- criterion 7: linear exit locations -------------------------------------

inline CheckResult check_linear_exit() {
  // drift Jacobian at the rotated doublewell2d saddle
  auto spec = catalog("doublewell2d", "rot90_scaled", 0.5);
  auto cps = find_critical_points(spec);
  const CriticalPoint* sad = nullptr;
  for (const auto& cp : cps)
    if (cp.kind == CriticalKind::Saddle) sad = &cp;
  Mat A = spec.drift_jacobian(sad->x);
  auto model = split_manifolds(A, 1.0);
  const double a = 0.05 * model.r1;

  auto run = [&](double r, int n) {
    int fails = 0, used = 0;
    NormalStream ns(4242, 0);
    while (used < n) {
      Vec z(2);
      z << ns.next(), ns.next();
      z.normalize();
      z *= r * (0.2 + 0.8 * ns.next_uniform());
      Vec e;
      try {
        e = linear_exit(model, z);
      } catch (const NoExitError&) {
        continue;  // start was numerically on the stable manifold
      }
      ++used;
      Vec pu = model.unstable_basis * (model.unstable_basis.transpose() * e);
      double dist = std::min((e - model.r1 * pu.normalized()).norm(),
                             (e + model.r1 * pu.normalized()).norm());
      if (dist > a) ++fails;
    }
    return fails;
  };

  // empirical r(a): shrink until a 60-start probe is clean
  double r = 0.5 * model.r1;
  for (int it = 0; it < 12 && run(r, 60) > 0; ++it) r *= 0.5;
  int fails = run(r, 200);
  bool ok = fails <= 2;  // >= 99% of 200
  return {7, "linear exit lands on the unstable sphere", ok,
          "r(a) = " + fmt(r, 4) + ", failures " + std::to_string(fails) +
              "/200 (<=2)"};
}

// --- criterion 8: Laplace asymptotics ---------------------------------------

inline CheckResult check_gibbs() {
  std::ostringstream detail;
  bool ok = true;
  for (const char* name : {"doublewell1d", "triplewell1d_asym"}) {
    auto spec = catalog(name);
    auto cps = find_critical_points(spec);
    shift_to_zero(spec, cps);
    WellClassifier wells(spec, cps, 0.45);
    double prev_z = 1e9;
    for (double eps : {0.2, 0.1, 0.05}) {
      auto g = gibbs_checks(spec, cps, wells, eps);
      // declared bands: [0.9, 1.1] at every tested eps, pinned at 0.05
      if (g.z_ratio < 0.9 || g.z_ratio > 1.1) ok = false;
      for (auto& [id, ratio] : g.well_ratios)
        if (ratio < 0.9 || ratio > 1.1) ok = false;
      double errz = std::abs(g.z_ratio - 1.0);
      if (errz > prev_z + 0.005) ok = false;  // approach 1 (small slack)
      prev_z = errz;
      if (eps == 0.05)
        detail << name << ": z " << fmt(g.z_ratio, 4) << "; ";
    }
  }
  return {8, "Laplace asymptotics ratios in [0.9, 1.1], approaching 1", ok,
          detail.str() + "eps in {0.2, 0.1, 0.05}"};
}

// --- criterion 9: test-function geometry ------------------------------------

inline CheckResult check_testfn() {
  auto spec2 = catalog("doublewell2d", "rot90_scaled", 0.5);
  auto cps2 = find_critical_points(spec2);
  shift_to_zero(spec2, cps2);
  int sad = -1, mright = -1;
  for (const auto& cp : cps2) {
    if (cp.kind == CriticalKind::Saddle) sad = cp.id;
    if (cp.kind == CriticalKind::Minimum && cp.x[0] > 0) mright = cp.id;
  }
  auto fr = make_saddle_frame(spec2, cps2, sad, mright);

  bool half_ok = true;
  double seam_err = 0;
  for (double eps : {0.05, 0.02, 0.01}) {
    if (eval_p(fr, fr.sigma, eps) != 0.5) half_ok = false;
    double cw = fr.c_halfwidth(eps);
    for (double side_frac : {-0.5, 0.0, 0.5}) {
      Vec side = side_frac * fr.side_halfwidth(1, eps) * fr.e_basis.col(1);
      for (double sgn : {1.0, -1.0}) {
        Vec seam = fr.sigma + sgn * cw * fr.e_basis.col(0) + side;
        Vec in = seam - sgn * 1e-13 * fr.e_basis.col(0);
        Vec out = seam + sgn * 1e-13 * fr.e_basis.col(0);
        seam_err = std::max(
            seam_err, std::abs(eval_p(fr, in, eps) - eval_p(fr, out, eps)));
      }
    }
  }

  // gradient scale of the assembled Q on doublewell1d
  auto w = prepare("doublewell1d");
  int mr = min_id_near(w.cps, 1.0);
  QPartition q(w.spec, w.cps, w.graph, mr);
  double bound = 2.0 * std::sqrt(4.0 / (2 * M_PI));  // analytic peak x2
  bool grad_ok = true;
  double worst_scale = 0;
  for (double eps : {0.05, 0.02, 0.01}) {
    double h = 1e-6, max_grad = 0;
    for (int k = -300; k <= 300; ++k) {
      Vec x(1), xp(1), xm(1);
      x << k * 0.002;
      xp << x[0] + h;
      xm << x[0] - h;
      max_grad = std::max(
          max_grad, std::abs(q.value(xp, eps) - q.value(xm, eps)) / (2 * h));
    }
    double scale = max_grad * std::sqrt(eps);
    worst_scale = std::max(worst_scale, scale);
    if (scale > bound) grad_ok = false;
  }
  bool ok = half_ok && seam_err <= 1e-12 && grad_ok;
  return {9, "test function: p(sigma)=1/2, seam continuity, grad scale", ok,
          "seam err " + fmt(seam_err) + " (<=1e-12), max |grad Q| sqrt(eps) " +
              fmt(worst_scale, 3) + " (<= " + fmt(bound, 3) + ")"};
}

// --- criterion 10: structural hypothesis audit ------------------------------

inline CheckResult check_structural_audit() {
  std::ostringstream detail;
  bool ok = true;
  struct Case {
    const char* name;
    const char* ell;
    double c;
  };
  std::vector<Case> cases = {{"doublewell1d", "none", 0},
                             {"triplewell1d_asym", "none", 0},
                             {"bowl", "none", 0},
                             {"bowl2d", "none", 0},
                             {"doublewell2d", "none", 0},
                             {"doublewell2d", "rot90_scaled", 0.5},
                             {"threewell2d", "none", 0},
                             {"threewell2d", "rot90_scaled", 0.5}};
  for (const auto& c : cases) {
    auto spec = catalog(c.name, c.ell, c.c);
    auto rep = verify_field_conditions(spec, 2000);
    if (!rep.pass) {
      ok = false;
      detail << c.name << ": field conditions FAIL; ";
      continue;
    }
    auto cps = find_critical_points(spec);
    shift_to_zero(spec, cps);
    if (max_ell_at_critical(spec, cps) > 1e-8) {
      ok = false;
      detail << c.name << ": ell nonzero at critical point; ";
      continue;
    }
    int n_min = 0;
    for (const auto& cp : cps)
      if (cp.kind == CriticalKind::Minimum) ++n_min;
    if (n_min >= 2) {
      try {
        build_landscape_graph(spec, cps);  // throws if (48)-type audit fails
      } catch (const std::exception& e) {
        ok = false;
        detail << c.name << ": " << e.what() << "; ";
      }
    }
  }
  if (ok) detail << "all catalog potentials (incl. rot90 variants) pass";
  return {10, "structural audit: orthogonality/divergence + descent targets",
          ok, detail.str()};
}

}  // namespace detail

inline VerifyReport run_verification(const RunManifest& mf,
                                     const VerifyOptions& opt = {}) {
  (void)mf;
  VerifyReport rep;
  rep.checks.push_back(detail::check_exact_reduction());
  rep.checks.push_back(detail::check_theta_oracle());
  rep.checks.push_back(detail::check_semigroup_algebra());
  if (!opt.fast_only) {
    rep.checks.push_back(detail::check_exit_time(opt.seed, opt.threads));
    rep.checks.push_back(detail::check_transition_law(opt.seed, opt.threads));
    rep.checks.push_back(detail::check_mixing(opt.seed, opt.threads));
  }
  rep.checks.push_back(detail::check_linear_exit());
  rep.checks.push_back(detail::check_gibbs());
  rep.checks.push_back(detail::check_testfn());
  rep.checks.push_back(detail::check_structural_audit());
  return rep;
}

}  // namespace kramers
