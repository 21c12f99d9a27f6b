#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kramers/critical_points.hpp"
#include "kramers/local_analysis.hpp"

using namespace kramers;

namespace {
Mat diag2(double a, double b) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// Drift Jacobian at the saddle of doublewell2d with rot90 field, c = 0.5:
// A = -(H + Dl) = [[4, 1], [2, -2]].
Mat rotated_saddle_A() {
  Mat A(2, 2);
  A << 4, 1, 2, -2;
  return A;
}
}  // namespace

TEST_CASE("split_manifolds: diagonal saddle") {
  auto model = split_manifolds(diag2(-1, 2));
  REQUIRE(model.stable_basis.cols() == 1);
  REQUIRE(model.unstable_basis.cols() == 1);
  CHECK(std::abs(model.stable_basis.col(0)[0]) == doctest::Approx(1.0));
  CHECK(std::abs(model.unstable_basis.col(0)[1]) == doctest::Approx(1.0));
}

TEST_CASE("split_manifolds: -I is all stable") {
  Mat A = -Mat::Identity(3, 3);
  auto model = split_manifolds(A);
  CHECK(model.stable_basis.cols() == 3);
  CHECK(model.unstable_basis.cols() == 0);
}

TEST_CASE("split_manifolds: catalog rotated saddle vs eigensolve oracle") {
  auto spec = catalog("doublewell2d", "rot90_scaled", 0.5);
  auto cps = find_critical_points(spec);
  const CriticalPoint* sad = nullptr;
  for (const auto& cp : cps)
    if (cp.kind == CriticalKind::Saddle) sad = &cp;
  REQUIRE(sad);
  Mat A = spec.drift_jacobian(sad->x);
  auto model = split_manifolds(A);
  CHECK(model.stable_basis.cols() == 1);
  CHECK(model.unstable_basis.cols() == 1);

  // oracle: direct eigensolve of the assembled 2x2 matrix
  Eigen::EigenSolver<Mat> es(rotated_saddle_A());
  int iu = es.eigenvalues()[0].real() > 0 ? 0 : 1;
  Vec vu = es.eigenvectors().col(iu).real();
  vu.normalize();
  double angle = std::abs(vu.dot(model.unstable_basis.col(0)));
  CHECK(angle == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("invariance: A maps each subspace into itself") {
  auto model = split_manifolds(rotated_saddle_A());
  for (const Mat* basis : {&model.stable_basis, &model.unstable_basis}) {
    if (basis->cols() == 0) continue;
    Mat AV = model.A * (*basis);
    Mat proj = (*basis) * ((*basis).transpose() * AV);
    CHECK((AV - proj).norm() <= 1e-10);
  }
}

TEST_CASE("flow decay along stable directions, growth reversed for unstable") {
  // Well-conditioned case: decay to 1e-6 at t = 50/|max real part| without
  // the opposite mode amplifying representation noise.
  Mat D = diag2(-2, 0.5);
  auto dm = split_manifolds(D);
  double t = 50.0 / 0.5;
  CHECK((expm((t * D).eval()) * dm.stable_basis.col(0)).norm() <= 1e-6);
  CHECK((expm((-t * D).eval()) * dm.unstable_basis.col(0)).norm() <= 1e-6);

  // Nonnormal case: check the decay *rates* instead; running to 1e-6 decay
  // would amplify the 1e-16 unstable leakage of the stored basis past it.
  Mat A = rotated_saddle_A();
  auto model = split_manifolds(A);
  Eigen::EigenSolver<Mat> es(A);
  double lam_s = 0, lam_u = 0;
  for (int i = 0; i < 2; ++i) {
    double re = es.eigenvalues()[i].real();
    (re < 0 ? lam_s : lam_u) = re;
  }
  double tm = 3.0;
  double fwd = (expm((tm * A).eval()) * model.stable_basis.col(0)).norm();
  double bwd = (expm((-tm * A).eval()) * model.unstable_basis.col(0)).norm();
  CHECK(std::log(fwd) == doctest::Approx(lam_s * tm).epsilon(1e-6));
  CHECK(std::log(bwd) == doctest::Approx(-lam_u * tm).epsilon(1e-6));
}

TEST_CASE("imaginary-axis eigenvalue rejected") {
  Mat A = Mat::Zero(2, 2);
  A(0, 1) = 1;
  A(1, 0) = -1;  // eigenvalues +-i
  CHECK_THROWS_AS(split_manifolds(A), ImaginaryAxisEigenError);
}

TEST_CASE("linear_exit: decoupled growth exits on the unstable axis") {
  auto model = split_manifolds(diag2(-1, 2));
  model.r1 = 1.0;
  Vec z0(2);
  z0 << 0.3, 1e-4;
  Vec e = linear_exit(model, z0);
  CHECK(e.norm() == doctest::Approx(1.0).epsilon(1e-9));
  // stable residue at exit: 0.3 e^{-t} with 1e-4 e^{2t} = 1, so ~0.003
  CHECK(std::abs(e[1]) >= 0.99999);
  CHECK(std::abs(e[0]) == doctest::Approx(0.003).epsilon(0.05));
}

TEST_CASE("linear_exit: stable-subspace start contracts (NoExit)") {
  auto model = split_manifolds(diag2(-1, 2));
  Vec z0(2);
  z0 << 0.5, 0.0;
  CHECK_THROWS_AS(linear_exit(model, z0), NoExitError);

  // same for the oblique stable eigendirection of a nonnormal matrix
  Mat A = rotated_saddle_A();
  auto m2 = split_manifolds(A);
  Eigen::EigenSolver<Mat> es(A);
  int is = es.eigenvalues()[0].real() < 0 ? 0 : 1;
  Vec vs = es.eigenvectors().col(is).real();
  vs *= 0.4 / vs.norm();
  CHECK_THROWS_AS(linear_exit(m2, vs), NoExitError);
}

TEST_CASE("linear_exit: tiny unstable component still exits near M_u") {
  // large stable part, 1e-6 unstable part: the trajectory dips well below
  // its starting norm before growing out along the unstable direction
  auto model = split_manifolds(diag2(-1, 2));
  model.r1 = 1.0;
  Vec z0(2);
  z0 << 0.9, 1e-6;
  double t_exit = 0;
  Vec e = linear_exit(model, z0, &t_exit);
  CHECK(e.norm() == doctest::Approx(1.0).epsilon(1e-9));
  // exit time ~ ln(1e6)/2, stable residue 0.9 e^{-t} ~ 9e-4
  CHECK(std::abs(e[0]) <= 0.05);  // within a = 0.05 r1 of the unstable sphere
  CHECK(t_exit == doctest::Approx(std::log(1e6) / 2.0).epsilon(1e-3));
}

TEST_CASE("linear_exit lands near the unstable sphere (empirical radius search)") {
  Mat A = rotated_saddle_A();
  auto model = split_manifolds(A, 1.0);
  const double a = 0.05 * model.r1;
  // shrink r until exits from B(0, r) land within a of M_u cap sphere
  double r = 0.5 * model.r1;
  auto exit_ok = [&](double rr, int n, int* fails) {
    *fails = 0;
    NormalStream ns(99, 7);
    for (int i = 0; i < n; ++i) {
      Vec z(2);
      z[0] = ns.next();
      z[1] = ns.next();
      z.normalize();
      z *= rr * (0.2 + 0.8 * ns.next_uniform());
      Vec e;
      try {
        e = linear_exit(model, z);
      } catch (const NoExitError&) {
        continue;
      }
      Vec pu = model.unstable_basis * (model.unstable_basis.transpose() * e);
      double dist = std::min((e - model.r1 * pu.normalized()).norm(),
                             (e + model.r1 * pu.normalized()).norm());
      if (dist > a) ++(*fails);
    }
  };
  int fails = 0;
  for (int it = 0; it < 12; ++it) {
    exit_ok(r, 60, &fails);
    if (fails == 0) break;
    r *= 0.5;
  }
  CHECK(fails == 0);
  // 200-start confirmation at the found radius
  exit_ok(r, 200, &fails);
  CHECK(double(fails) / 200.0 <= 0.01);
}

TEST_CASE("lyapunov: A = -I gives K = I/2") {
  auto cert = solve_lyapunov((-Mat::Identity(3, 3)).eval());
  CHECK((cert.K - 0.5 * Mat::Identity(3, 3)).norm() <= 1e-14);
  CHECK(cert.residual <= 1e-14);
}

TEST_CASE("lyapunov: symmetric -H gives H^{-1}/2") {
  auto spec = catalog("doublewell2d");
  auto cps = find_critical_points(spec);
  for (const auto& cp : cps) {
    if (cp.kind != CriticalKind::Minimum) continue;
    Mat H = spec.hessU(cp.x);
    auto cert = solve_lyapunov((-H).eval());
    CHECK((cert.K - 0.5 * H.inverse()).norm() <= 1e-12);
  }
}

TEST_CASE("lyapunov: rotated minimum, residual and positivity") {
  auto spec = catalog("doublewell2d", "rot90_scaled", 0.5);
  auto cps = find_critical_points(spec);
  for (const auto& cp : cps) {
    if (cp.kind != CriticalKind::Minimum) continue;
    Mat A = spec.drift_jacobian(cp.x);
    auto cert = solve_lyapunov(A);
    CHECK(cert.residual <= 1e-10);
    Eigen::SelfAdjointEigenSolver<Mat> es(cert.K);
    CHECK(es.eigenvalues().minCoeff() > 0);
    CHECK((cert.K - cert.K.transpose()).norm() <= 1e-14);
  }
}

TEST_CASE("lyapunov rejects unstable A") {
  CHECK_THROWS_AS(solve_lyapunov(rotated_saddle_A()), UnstableAError);
}

TEST_CASE("lyapunov decay identity d/dt <xi, K xi> = -|xi|^2") {
  auto spec = catalog("doublewell2d", "rot90_scaled", 0.3);
  auto cps = find_critical_points(spec);
  const CriticalPoint* m = nullptr;
  for (const auto& cp : cps)
    if (cp.kind == CriticalKind::Minimum) m = &cp;
  Mat A = spec.drift_jacobian(m->x);
  auto cert = solve_lyapunov(A);
  NormalStream ns(3, 3);
  for (int i = 0; i < 20; ++i) {
    Vec x(2);
    x << ns.next(), ns.next();
    double deriv = x.dot((A.transpose() * cert.K + cert.K * A) * x);
    CHECK(std::abs(deriv + x.squaredNorm()) <= 1e-9 * x.squaredNorm());
  }
}

TEST_CASE("HL skew-symmetry at critical points with rotation") {
  auto spec = catalog("threewell2d", "rot90_scaled", 0.5);
  auto cps = find_critical_points(spec);
  for (const auto& cp : cps) {
    Mat H = spec.hessU(cp.x);
    Mat L = spec.jacEll(cp.x);
    Mat S = H * L + (H * L).transpose();
    CHECK(S.norm() <= 1e-8);
  }
}

TEST_CASE("extend_field_b0: inside ball the field is b itself") {
  auto spec = catalog("doublewell2d");
  auto cps = find_critical_points(spec);
  const CriticalPoint* m = nullptr;
  for (const auto& cp : cps)
    if (cp.kind == CriticalKind::Minimum && cp.x[0] > 0) m = &cp;
  auto ef = extend_field_b0(spec, m->x);
  NormalStream ns(5, 5);
  for (int i = 0; i < 30; ++i) {
    Vec d(2);
    d << ns.next(), ns.next();
    d.normalize();
    Vec x = m->x + 0.9 * ef.r5 * ns.next_uniform() * d;
    CHECK((ef.b0(x) - spec.drift(x)).norm() == 0.0);
  }
}

TEST_CASE("extend_field_b0: quadratic U keeps b0 = b everywhere") {
  auto spec = catalog("bowl2d");
  auto cps = find_critical_points(spec);
  auto ef = extend_field_b0(spec, cps[0].x);
  NormalStream ns(6, 6);
  for (int i = 0; i < 30; ++i) {
    Vec x(2);
    x << 4 * ns.next(), 4 * ns.next();  // far outside the ball too
    CHECK((ef.b0(x) - spec.drift(x)).norm() <= 1e-12);
  }
}

TEST_CASE("extend_field_b0: global contraction and linear growth bound") {
  auto spec = catalog("doublewell1d");
  auto cps = find_critical_points(spec);
  const CriticalPoint* m = nullptr;
  for (const auto& cp : cps)
    if (cp.kind == CriticalKind::Minimum && cp.x[0] > 0) m = &cp;
  auto ef = extend_field_b0(spec, m->x);
  Mat H = spec.hessU(m->x);

  // growth constant from the sphere values
  double maxb = 0, maxdb = 0;
  for (double s : {-1.0, 1.0}) {
    Vec r(1);
    r[0] = m->x[0] + s * ef.r5;
    maxb = std::max(maxb, spec.drift(r).norm());
    maxdb = std::max(maxdb, spec.drift_jacobian(r).norm());
  }
  double C = maxb / ef.r5 + maxdb;

  NormalStream ns(7, 7);
  for (int i = 0; i < 1000; ++i) {
    Vec x(1);
    x[0] = m->x[0] + 6.0 * (ns.next_uniform() - 0.5);
    Vec dx = x - m->x;
    Vec hx = H * dx;
    CHECK(-ef.b0(x).dot(hx) >= 0.5 * hx.squaredNorm() - 1e-12);
    if (dx.norm() >= ef.r5)
      CHECK(ef.b0(x).norm() <= C * dx.norm() + 1e-12);
  }
}
