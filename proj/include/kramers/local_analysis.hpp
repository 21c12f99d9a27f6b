#pragma once

#include <complex>
#include <functional>

#include "kramers/expm.hpp"
#include "kramers/potential.hpp"
#include "kramers/rng.hpp"
#include "kramers/types.hpp"

namespace kramers {

/// Linearized drift at a hyperbolic critical point: A = -(hessU + jacEll),
/// with orthonormal bases of the stable / unstable invariant subspaces.
struct LinearSaddleModel {
  Mat A;
  Mat stable_basis;    // d x dim_s
  Mat unstable_basis;  // d x dim_u
  double r1 = 1.0;     // exit ball radius
};

/// Group eigenvectors of A by the sign of the real part of their eigenvalue
/// (the real-Jordan split), orthonormalizing within each subspace.
/// Throws ImaginaryAxisEigen if A is not hyperbolic.
inline LinearSaddleModel split_manifolds(const Mat& A, double r1 = 1.0,
                                         double tol_spec = 1e-9) {
  int d = static_cast<int>(A.rows());
  Eigen::EigenSolver<Mat> es(A);
  std::vector<Eigen::VectorXcd> stab, unst;
  for (int i = 0; i < d; ++i) {
    std::complex<double> lam = es.eigenvalues()[i];
    if (std::abs(lam.real()) <= tol_spec)
      throw ImaginaryAxisEigenError("eigenvalue on the imaginary axis");
    (lam.real() < 0 ? stab : unst).push_back(es.eigenvectors().col(i));
  }
  auto real_span = [d](const std::vector<Eigen::VectorXcd>& vs) {
    // Real and imaginary parts span the real invariant subspace; QR trims
    // the conjugate-pair duplicates.
    Mat raw(d, 2 * static_cast<int>(vs.size()));
    int c = 0;
    for (const auto& v : vs) {
      raw.col(c++) = v.real();
      raw.col(c++) = v.imag();
    }
    Eigen::ColPivHouseholderQR<Mat> qr(raw);
    qr.setThreshold(1e-10);
    int rank = static_cast<int>(qr.rank());
    Mat Q = qr.householderQ();
    return Q.leftCols(rank).eval();
  };
  LinearSaddleModel model;
  model.A = A;
  model.r1 = r1;
  model.stable_basis = stab.empty() ? Mat(d, 0) : real_span(stab);
  model.unstable_basis = unst.empty() ? Mat(d, 0) : real_span(unst);
  if (model.stable_basis.cols() + model.unstable_basis.cols() != d)
    throw std::runtime_error("manifold split dimensions do not add up");
  return model;
}

/// First exit of xdot = A x from the ball ||x|| = r1.  The flow is linear so
/// steps use the exact propagator exp(dt A); the crossing step is bisected in
/// time to 1e-12.  Throws NoExit when z0 lies on the stable manifold
/// numerically (unstable component below 1e-12 ||z0||): such trajectories
/// only contract.  A tiny but nonzero unstable component is allowed to dip
/// arbitrarily low before growing out.
inline Vec linear_exit(const LinearSaddleModel& model, const Vec& z0,
                       double* exit_time = nullptr) {
  if (z0.norm() == 0 || z0.norm() >= model.r1)
    throw std::invalid_argument("linear_exit: need 0 < ||z0|| < r1");
  // Oblique decomposition z0 = v_u + v_s (the subspaces need not be
  // orthogonal to each other for nonnormal A).
  int du = static_cast<int>(model.unstable_basis.cols());
  if (du == 0) throw NoExitError("A has no unstable directions");
  {
    int d = static_cast<int>(z0.size());
    Mat B(d, d);
    B << model.unstable_basis, model.stable_basis;
    Vec coef = B.fullPivLu().solve(z0);
    if ((model.unstable_basis * coef.head(du)).norm() < 1e-12 * z0.norm())
      throw NoExitError("z0 is on the stable manifold");
  }
  const Mat& A = model.A;
  // Step small enough that the state grows by at most ~5% per step.
  Eigen::JacobiSVD<Mat> svd(A);
  double dt = 0.05 / svd.singularValues()[0];
  const Mat E = expm((dt * A).eval());

  double t = 0;
  Vec x = z0;
  const double floor = 1e-12 * z0.norm();
  const long max_steps = 200'000'000;
  for (long n = 0; n < max_steps; ++n) {
    Vec x_next = E * x;
    if (x_next.norm() >= model.r1) {
      double lo = 0, hi = dt;
      while (hi - lo > 1e-12) {
        double mid = 0.5 * (lo + hi);
        Vec xm = expm((mid * A).eval()) * x;
        (xm.norm() >= model.r1 ? hi : lo) = mid;
      }
      if (exit_time) *exit_time = t + hi;
      return expm((hi * A).eval()) * x;
    }
    x = x_next;
    t += dt;
    if (x.norm() < floor)
      throw NoExitError("trajectory contracted to numerical zero");
  }
  throw NoExitError("linear_exit: no crossing within step budget");
}

/// Positive-definite solution of A^T K + K A = -I via the Kronecker linear
/// system on vec(K); requires all eigenvalues of A in the open left half
/// plane.
struct LyapunovCertificate {
  Mat K;
  double residual = 0;
};

inline LyapunovCertificate solve_lyapunov(const Mat& A) {
  int d = static_cast<int>(A.rows());
  Eigen::EigenSolver<Mat> es(A);
  for (int i = 0; i < d; ++i)
    if (es.eigenvalues()[i].real() >= 0)
      throw UnstableAError("solve_lyapunov: eigenvalue with Re >= 0");

  // (I (x) A^T + A^T (x) I) vec(K) = -vec(I), column-major vec.
  Mat M = Mat::Zero(d * d, d * d);
  Mat I = Mat::Identity(d, d);
  Mat At = A.transpose();
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      int row = j * d + i;
      for (int k = 0; k < d; ++k) {
        M(row, j * d + k) += At(i, k);   // A^T K term
        M(row, k * d + i) += At(j, k);   // K A term: (KA)_{ij} = K_{ik} A_{kj}
      }
    }
  Vec rhs = Vec::Zero(d * d);
  for (int i = 0; i < d; ++i) rhs[i * d + i] = -1.0;
  Vec kv = M.fullPivLu().solve(rhs);
  Mat K(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) K(i, j) = kv[j * d + i];
  K = (0.5 * (K + K.transpose())).eval();  // symmetrize roundoff

  LyapunovCertificate cert;
  cert.K = K;
  cert.residual = (At * K + K * A + I).norm();
  Eigen::SelfAdjointEigenSolver<Mat> ses(K);
  if (ses.eigenvalues().minCoeff() <= 0)
    throw UnstableAError("solve_lyapunov: K not positive definite");
  return cert;
}

/// Radial linearization of the drift outside a ball around a minimum m:
/// b0(x) = b(x) inside B(m, r5), and b(r(x)) + Db(r(x)) (x - r(x)) outside,
/// where r(x) is the radial projection onto the sphere of radius r5.
struct ExtendedField {
  Vec m;
  double r5 = 0;
  std::function<Vec(const Vec&)> b0;
};

/// Find r5 by halving until -b(x) . H x >= |H x|^2 / 2 holds on sampled
/// points of B(m, 2 r5); then build the extension.
inline ExtendedField extend_field_b0(const PotentialSpec& spec, const Vec& m,
                                     double r5_init = 0.0) {
  const Mat H = spec.hessU(m);
  double r5 = r5_init > 0 ? r5_init : 0.25 * spec.box.diameter();
  const int n_dirs = 128, n_radii = 16;
  bool ok = false;
  for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
    ok = true;
    // Deterministic direction set.
    NormalStream ns(0x5eedULL, 17);
    for (int i = 0; i < n_dirs && ok; ++i) {
      Vec dir(spec.dim);
      for (int k = 0; k < spec.dim; ++k) dir[k] = ns.next();
      dir.normalize();
      for (int j = 1; j <= n_radii && ok; ++j) {
        Vec x = m + (2.0 * r5 * j / n_radii) * dir;
        Vec hx = H * (x - m);
        if (-spec.drift(x).dot(hx) < 0.5 * hx.squaredNorm() - 1e-13) ok = false;
      }
    }
    if (!ok) r5 *= 0.5;
    if (r5 < 1e-8 * spec.box.diameter())
      throw NoValidRadiusError(
          "extend_field_b0: contraction inequality never satisfied");
  }

  ExtendedField ef;
  ef.m = m;
  ef.r5 = r5;
  const PotentialSpec* sp = &spec;
  Vec m_copy = m;
  double r5c = r5;
  ef.b0 = [sp, m_copy, r5c](const Vec& x) -> Vec {
    Vec dx = x - m_copy;
    double nrm = dx.norm();
    if (nrm <= r5c) return sp->drift(x);
    Vec r = m_copy + (r5c / nrm) * dx;
    return (sp->drift(r) + sp->drift_jacobian(r) * (x - r)).eval();
  };
  return ef;
}

}  // namespace kramers
