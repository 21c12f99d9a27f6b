#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kramers/quadrature.hpp"
#include "kramers/testfn.hpp"

using namespace kramers;

namespace {
struct Setup {
  PotentialSpec spec;
  std::vector<CriticalPoint> cps;
  LandscapeGraph graph;
  int m_right = -1, sad = -1;
};

Setup make(const std::string& name, const std::string& ell = "none",
           double c = 0) {
  Setup s{catalog(name, ell, c), {}, {}, -1, -1};
  s.cps = find_critical_points(s.spec);
  shift_to_zero(s.spec, s.cps);
  s.graph = build_landscape_graph(s.spec, s.cps);
  for (const auto& cp : s.cps) {
    if (cp.kind == CriticalKind::Saddle) s.sad = cp.id;
    if (cp.kind == CriticalKind::Minimum && cp.x[0] > 0) s.m_right = cp.id;
  }
  return s;
}
}  // namespace

TEST_CASE("frame: v is the -mu eigenvector of hessU - jacEll^T, v.e1 > 0") {
  auto s = make("doublewell2d", "rot90_scaled", 0.5);
  auto fr = make_saddle_frame(s.spec, s.cps, s.sad, s.m_right);
  CHECK(fr.v.dot(fr.e_basis.col(0)) > 0);
  Mat M = s.spec.hessU(fr.sigma) - s.spec.jacEll(fr.sigma).transpose();
  CHECK((M * fr.v + fr.mu * fr.v).norm() <= 1e-8);
  // e1 points toward the chosen minimum
  CHECK((s.cps[s.m_right].x - fr.sigma).dot(fr.e_basis.col(0)) > 0);
}

TEST_CASE("rectangle widths follow the stated multiples of J delta") {
  auto s = make("doublewell2d");
  auto fr = make_saddle_frame(s.spec, s.cps, s.sad, s.m_right);
  double eps = 0.01;
  double delta = SaddleFrame::delta(eps);
  CHECK(fr.c_halfwidth(eps) ==
        doctest::Approx(4.0 * delta / std::sqrt(fr.lambda[0])));
  CHECK(fr.side_halfwidth(1, eps) ==
        doctest::Approx(2.0 * 4.0 * delta / std::sqrt(fr.lambda[1])));

  // the three blocks are contiguous along e1 and share side widths
  RectanglePartition part(fr, eps);
  CHECK(part.a_minus.hi[0] == part.center.lo[0]);
  CHECK(part.center.hi[0] == part.a_plus.lo[0]);
  CHECK(part.a_plus.hi[0] - part.a_plus.lo[0] == doctest::Approx(eps * eps));
  CHECK(part.a_minus.hi[1] == part.center.hi[1]);
  CHECK(part.center.hi[1] == doctest::Approx(fr.side_halfwidth(1, eps)));

  // region layout along e1: A- | C | A+ contiguous
  Vec x = fr.sigma;
  double cw = fr.c_halfwidth(eps), e2 = eps * eps;
  x = fr.sigma + (cw + 0.5 * e2) * fr.e_basis.col(0);
  CHECK(rect_region(fr, x, eps) == RectRegion::APlus);
  x = fr.sigma - (cw + 0.5 * e2) * fr.e_basis.col(0);
  CHECK(rect_region(fr, x, eps) == RectRegion::AMinus);
  x = fr.sigma + 0.99 * cw * fr.e_basis.col(0);
  CHECK(rect_region(fr, x, eps) == RectRegion::Center);
  x = fr.sigma + (cw + 2 * e2) * fr.e_basis.col(0);
  CHECK(rect_region(fr, x, eps) == RectRegion::Outside);
}

TEST_CASE("p at the saddle is exactly 1/2") {
  for (double eps : {0.05, 0.01}) {
    auto s = make("doublewell2d", "rot90_scaled", 0.3);
    auto fr = make_saddle_frame(s.spec, s.cps, s.sad, s.m_right);
    CHECK(eval_p(fr, fr.sigma, eps) == 0.5);
  }
}

TEST_CASE("eval_p outside the rectangle throws") {
  auto s = make("doublewell2d");
  auto fr = make_saddle_frame(s.spec, s.cps, s.sad, s.m_right);
  double eps = 0.02;
  Vec far_out = fr.sigma + 10.0 * fr.c_halfwidth(eps) * fr.e_basis.col(0);
  CHECK_THROWS_AS(eval_p(fr, far_out, eps), OutsideRectangleError);
}

TEST_CASE("p on the outer faces is exactly 1 and 0") {
  auto s = make("doublewell2d");
  auto fr = make_saddle_frame(s.spec, s.cps, s.sad, s.m_right);
  double eps = 0.02, e2 = eps * eps;
  double cw = fr.c_halfwidth(eps);
  Vec side = 0.3 * fr.side_halfwidth(1, eps) * fr.e_basis.col(1);
  Vec xp = fr.sigma + (cw + e2) * fr.e_basis.col(0) + side;
  Vec xm = fr.sigma - (cw + e2) * fr.e_basis.col(0) + side;
  CHECK(eval_p(fr, xp, eps) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eval_p(fr, xm, eps) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("seam continuity at the C/A boundaries is ~1e-12") {
  auto s = make("doublewell2d", "rot90_scaled", 0.5);
  auto fr = make_saddle_frame(s.spec, s.cps, s.sad, s.m_right);
  double eps = 0.02;
  double cw = fr.c_halfwidth(eps);
  for (double side_frac : {-0.7, 0.0, 0.4}) {
    Vec side = side_frac * fr.side_halfwidth(1, eps) * fr.e_basis.col(1);
    for (double sgn : {1.0, -1.0}) {
      Vec seam = fr.sigma + sgn * cw * fr.e_basis.col(0) + side;
      Vec in = seam - sgn * 1e-13 * fr.e_basis.col(0);
      Vec out = seam + sgn * 1e-13 * fr.e_basis.col(0);
      CHECK(rect_region(fr, in, eps) == RectRegion::Center);
      CHECK(std::abs(eval_p(fr, in, eps) - eval_p(fr, out, eps)) <= 1e-12);
    }
  }
}

TEST_CASE("p is monotone along v and in [0,1] on the rectangle") {
  auto s = make("doublewell2d", "rot90_scaled", 0.5);
  auto fr = make_saddle_frame(s.spec, s.cps, s.sad, s.m_right);
  double eps = 0.02;
  double cw = fr.c_halfwidth(eps);
  double prev = -1;
  for (int k = 0; k <= 50; ++k) {
    double t = -0.95 * cw + k * (1.9 * cw) / 50;
    // walk along v scaled into the rectangle via its e1 component
    Vec x = fr.sigma + t / fr.v.dot(fr.e_basis.col(0)) * fr.v;
    if (rect_region(fr, x, eps) != RectRegion::Center) continue;
    double p = eval_p(fr, x, eps);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(p >= prev - 1e-15);
    prev = p;
  }
}

TEST_CASE("normalizer matches quadrature of the Gaussian profile") {
  auto s = make("doublewell2d", "rot90_scaled", 0.2);
  auto fr = make_saddle_frame(s.spec, s.cps, s.sad, s.m_right);
  for (double eps : {0.05, 0.01}) {
    double closed = p_normalizer(fr, eps);
    double wide = 40 * std::sqrt(eps / fr.mu);
    double quad = integrate_1d(
        [&](double t) { return std::exp(-fr.mu * t * t / (2 * eps)); }, -wide,
        wide, 1e-15);
    CHECK(std::abs(closed - quad) <= 1e-12);
  }
}

TEST_CASE("boundary faces of the rectangle sit 1.4 J^2 delta^2 above sigma") {
  auto s = make("doublewell2d");
  auto fr = make_saddle_frame(s.spec, s.cps, s.sad, s.m_right);
  double eps = 0.01;
  double d2 = SaddleFrame::delta(eps) * SaddleFrame::delta(eps);
  double cw = fr.c_halfwidth(eps), sw = fr.side_halfwidth(1, eps);
  double u_sigma = s.spec.U(fr.sigma);
  for (int k = 0; k <= 20; ++k) {
    double t = -cw + k * (2 * cw) / 20;
    for (double sgn : {-1.0, 1.0}) {
      Vec x = fr.sigma + t * fr.e_basis.col(0) + sgn * sw * fr.e_basis.col(1);
      CHECK(s.spec.U(x) >= u_sigma + 1.4 * fr.J * fr.J * d2);
    }
  }
}

TEST_CASE("Q partition: deep wells map to 1 and 0, outside K to OutsideK") {
  auto s = make("doublewell1d");
  QPartition q(s.spec, s.cps, s.graph, s.m_right);
  double eps = 0.02;
  Vec xr(1), xl(1), xtop(1);
  xr << 1.0;
  xl << -1.0;
  xtop << 1.9;  // U(1.9) = (1.9^2-1)^2 = 6.8 >> gate height 1
  CHECK(q.classify(xr, eps) == QRegion::WellSide1);
  CHECK(q.value(xr, eps) == 1.0);
  CHECK(q.classify(xl, eps) == QRegion::WellSide0);
  CHECK(q.value(xl, eps) == 0.0);
  CHECK(q.classify(xtop, eps) == QRegion::OutsideK);
  CHECK(q.value(xtop, eps) == 0.0);  // U > H + eta/2
}

TEST_CASE("Q vanishes above H + eta/2 and gradient scale is eps^{-1/2}") {
  auto s = make("doublewell1d");
  QPartition q(s.spec, s.cps, s.graph, s.m_right);
  // finite-difference gradient scan along the line through the saddle
  double prev_scale = -1;
  for (double eps : {0.05, 0.02, 0.01}) {
    double h = 1e-6;
    double max_grad = 0;
    for (int k = -300; k <= 300; ++k) {
      Vec x(1);
      x << k * 0.002;
      Vec xp = x, xm = x;
      xp[0] += h;
      xm[0] -= h;
      double g = std::abs(q.value(xp, eps) - q.value(xm, eps)) / (2 * h);
      max_grad = std::max(max_grad, g);
    }
    double scale = max_grad * std::sqrt(eps);
    // ||grad Q|| sqrt(eps) stays bounded by a constant: the analytic peak is
    // sqrt(mu / 2 pi) ~ 0.8 for mu = 4.
    CHECK(scale <= 2.0 * std::sqrt(4.0 / (2 * M_PI)));
    if (prev_scale > 0) CHECK(scale == doctest::Approx(prev_scale).epsilon(0.2));
    prev_scale = scale;
  }
}
