#pragma once

#include <algorithm>
#include <iostream>
#include <optional>
#include <vector>

#include "kramers/potential.hpp"
#include "kramers/types.hpp"

namespace kramers {

struct Tolerances {
  double tol_crit = 1e-10;
  double tol_morse = 1e-8;
  double tol_merge_rel = 1e-6;   // times diam(box)
  double tol_field = 1e-8;
  double tol_spec = 1e-9;
  double tol_gate = 1e-7;
};

enum class CriticalKind { Minimum, Saddle, HigherIndex };

struct CriticalPoint {
  int id = -1;
  Vec x;
  double u = 0;
  int index = 0;  // number of negative Hessian eigenvalues
  Vec hess_eigvals;
  Mat hess_eigvecs;
  double mu = 0;  // index-1 points only
  CriticalKind kind = CriticalKind::Minimum;
};

struct SeedPlan {
  int grid_per_axis = 21;
  int max_seeds = 100000;
  std::vector<Vec> user_seeds;
};

namespace detail {

// Newton on gradU = 0 with a Tikhonov fallback when the Hessian is
// near-singular along the iteration.
inline std::optional<Vec> newton_refine(const PotentialSpec& spec, Vec x,
                                        double tol_crit, const Box& box,
                                        int max_iter = 120) {
  const double slack = 0.25 * box.diameter();
  for (int it = 0; it < max_iter; ++it) {
    Vec g = spec.gradU(x);
    if (!g.allFinite()) return std::nullopt;
    if (g.norm() <= tol_crit) return x;
    Mat H = spec.hessU(x);
    Eigen::FullPivLU<Mat> lu(H);
    Vec step;
    if (lu.isInvertible() && lu.rcond() > 1e-12) {
      step = lu.solve(g);
    } else {
      double rho = 1e-6 * (1.0 + H.cwiseAbs().maxCoeff());
      step = (H + rho * Mat::Identity(H.rows(), H.cols()))
                 .fullPivLu()
                 .solve(g);
    }
    // Damp long steps; Newton is only trusted near a root.
    double max_step = 0.5 * box.diameter();
    if (step.norm() > max_step) step *= max_step / step.norm();
    x -= step;
    if (!box.contains(x, slack)) return std::nullopt;
  }
  return std::nullopt;
}

inline std::vector<Vec> grid_seeds(const Box& box, const SeedPlan& plan) {
  int d = box.dim();
  long total = 1;
  int n = plan.grid_per_axis;
  for (int k = 0; k < d; ++k) {
    total *= n;
    if (total > plan.max_seeds) break;
  }
  while (total > plan.max_seeds && n > 3) {
    --n;
    total = 1;
    for (int k = 0; k < d; ++k) total *= n;
  }
  std::vector<Vec> seeds;
  std::vector<int> idx(d, 0);
  while (true) {
    Vec x(d);
    for (int k = 0; k < d; ++k)
      x[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * idx[k] / double(n - 1);
    seeds.push_back(x);
    int k = 0;
    for (; k < d; ++k) {
      if (++idx[k] < n) break;
      idx[k] = 0;
    }
    if (k == d) break;
  }
  return seeds;
}

}  // namespace detail

/// mu_sigma for an index-1 point: the unique eigenvalue of
/// hessU + jacEll with negative real part is real, and mu = -it > 0.
/// Also rejects eigenvalues on the imaginary axis (hyperbolicity).
inline double classify_saddle_mu(const CriticalPoint& cp,
                                 const PotentialSpec& spec,
                                 double tol_spec = 1e-9) {
  if (cp.index != 1)
    throw std::invalid_argument("classify_saddle_mu: point is not index-1");
  Mat M = spec.hessU(cp.x) + spec.jacEll(cp.x);
  Eigen::EigenSolver<Mat> es(M);
  int n_neg = 0;
  double mu = 0;
  for (int i = 0; i < M.rows(); ++i) {
    std::complex<double> lam = es.eigenvalues()[i];
    if (std::abs(lam.real()) <= tol_spec)
      throw SpectralAmbiguityError(
          "eigenvalue of hessU+jacEll on the imaginary axis at saddle");
    if (lam.real() < 0) {
      ++n_neg;
      if (std::abs(lam.imag()) > tol_spec)
        throw SpectralAmbiguityError(
            "negative-real-part eigenvalue at saddle is not real");
      mu = -lam.real();
    }
  }
  if (n_neg != 1)
    throw SpectralAmbiguityError(
        "expected exactly one negative eigenvalue of hessU+jacEll, got " +
        std::to_string(n_neg));
  return mu;
}

/// Multi-start Newton search over a seed grid, dedup within tol_merge, then
/// classify every point by its Hessian spectrum.  Throws DegenerateCritical
/// if any Hessian eigenvalue is below tol_morse in magnitude (Morse
/// hypothesis).  Deterministic: results sorted by coordinates before ids are
/// assigned.
inline std::vector<CriticalPoint> find_critical_points(
    const PotentialSpec& spec, const SeedPlan& plan = {},
    const Tolerances& tol = {}, bool quiet = true) {
  std::vector<Vec> seeds = detail::grid_seeds(spec.box, plan);
  for (const auto& s : plan.user_seeds) seeds.push_back(s);

  double tol_merge = tol.tol_merge_rel * spec.box.diameter();
  std::vector<Vec> found;
  int dropped = 0;
  for (const Vec& s : seeds) {
    auto r = detail::newton_refine(spec, s, tol.tol_crit, spec.box);
    if (!r) {
      ++dropped;
      continue;
    }
    if (!spec.box.contains(*r, tol_merge)) continue;
    bool dup = false;
    for (const Vec& f : found)
      if ((f - *r).norm() <= tol_merge) {
        dup = true;
        break;
      }
    if (!dup) found.push_back(*r);
  }
  if (!quiet && dropped > 0)
    std::cerr << "find_critical_points: " << dropped
              << " seeds did not converge (dropped)\n";

  std::sort(found.begin(), found.end(), [](const Vec& a, const Vec& b) {
    for (int k = 0; k < a.size(); ++k) {
      if (a[k] < b[k] - 1e-12) return true;
      if (a[k] > b[k] + 1e-12) return false;
    }
    return false;
  });

  std::vector<CriticalPoint> cps;
  for (const Vec& x : found) {
    CriticalPoint cp;
    cp.id = static_cast<int>(cps.size());
    cp.x = x;
    cp.u = spec.U(x);
    Mat H = spec.hessU(x);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    cp.hess_eigvals = es.eigenvalues();
    cp.hess_eigvecs = es.eigenvectors();
    cp.index = 0;
    for (int i = 0; i < cp.hess_eigvals.size(); ++i) {
      if (std::abs(cp.hess_eigvals[i]) < tol.tol_morse)
        throw DegenerateCriticalError(
            "degenerate Hessian eigenvalue at critical point (|lambda| = " +
            std::to_string(std::abs(cp.hess_eigvals[i])) + ")");
      if (cp.hess_eigvals[i] < 0) ++cp.index;
    }
    cp.kind = cp.index == 0   ? CriticalKind::Minimum
              : cp.index == 1 ? CriticalKind::Saddle
                              : CriticalKind::HigherIndex;
    if (cp.kind == CriticalKind::Saddle)
      cp.mu = classify_saddle_mu(cp, spec, tol.tol_spec);
    cps.push_back(std::move(cp));
  }
  return cps;
}

/// Shift U so the lowest found minimum sits at 0; updates stored values.
inline void shift_to_zero(PotentialSpec& spec,
                          std::vector<CriticalPoint>& cps) {
  double umin = std::numeric_limits<double>::infinity();
  for (const auto& cp : cps)
    if (cp.kind == CriticalKind::Minimum) umin = std::min(umin, cp.u);
  if (!std::isfinite(umin))
    throw std::runtime_error("shift_to_zero: no minima found");
  apply_origin_shift(spec, umin);
  for (auto& cp : cps) cp.u -= umin;
}

/// ell must vanish at critical points; check it does.
inline double max_ell_at_critical(const PotentialSpec& spec,
                                  const std::vector<CriticalPoint>& cps) {
  double m = 0;
  for (const auto& cp : cps) m = std::max(m, spec.ell(cp.x).norm());
  return m;
}

}  // namespace kramers
