#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kramers/quadrature.hpp"
#include "kramers/reduced_chain.hpp"

using namespace kramers;

namespace {
struct Analyzed {
  PotentialSpec spec;
  std::vector<CriticalPoint> cps;
  LandscapeGraph graph;
  ReducedChain chain;
};

Analyzed analyze(const std::string& name, const std::string& ell_mode = "none",
                 double c = 0) {
  Analyzed a{catalog(name, ell_mode, c), {}, {}, {}};
  a.cps = find_critical_points(a.spec);
  shift_to_zero(a.spec, a.cps);
  a.graph = build_landscape_graph(a.spec, a.cps);
  a.chain = assemble_chain(a.graph, a.cps, a.spec);
  return a;
}
}  // namespace

TEST_CASE("double well: hand-derived weights and generator") {
  auto a = analyze("doublewell1d");
  REQUIRE(a.chain.n() == 2);
  // U''(+-1) = 8, U''(0) = -4, mu = 4:
  // nu = 1/sqrt(8), omega = 4 / (2 pi sqrt(4)) = 1/pi,
  // L(off-diagonal) = sqrt(8)/pi = 2 sqrt(2)/pi.
  double r = 2.0 * std::sqrt(2.0) / M_PI;
  CHECK(a.chain.nu[0] == doctest::Approx(1.0 / std::sqrt(8.0)).epsilon(1e-12));
  CHECK(a.chain.nu[1] == doctest::Approx(1.0 / std::sqrt(8.0)).epsilon(1e-12));
  CHECK(a.chain.omega1(0, 1) == doctest::Approx(1.0 / M_PI).epsilon(1e-10));
  CHECK(a.chain.L(0, 1) == doctest::Approx(r).epsilon(1e-10));
  CHECK(a.chain.L(1, 0) == doctest::Approx(r).epsilon(1e-10));
  CHECK(a.chain.L(0, 0) == doctest::Approx(-r).epsilon(1e-10));
  CHECK(a.chain.d1 == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("rows sum to zero exactly and off-diagonals are nonnegative") {
  for (const char* name : {"doublewell1d", "triplewell1d_asym", "threewell2d"}) {
    auto a = analyze(name);
    for (int i = 0; i < a.chain.n(); ++i) {
      CHECK(std::abs(a.chain.L.row(i).sum()) <= 1e-15);
      for (int j = 0; j < a.chain.n(); ++j)
        if (i != j) CHECK(a.chain.L(i, j) >= 0.0);
    }
  }
}

TEST_CASE("omega1 masked to the shallowest wells only") {
  auto a = analyze("triplewell1d_asym");
  int nonzero_rows = 0;
  for (int i = 0; i < a.chain.n(); ++i) {
    bool row_live = a.chain.omega1.row(i).cwiseAbs().sum() > 0;
    bool is_d1 = std::abs(a.graph.gamma[i] - a.graph.d1) <= 1e-7;
    CHECK(row_live == is_d1);
    if (row_live) ++nonzero_rows;
  }
  CHECK(nonzero_rows == 1);
  // omega1 > 0 only toward neighbors.
  for (int i = 0; i < a.chain.n(); ++i)
    for (int j = 0; j < a.chain.n(); ++j)
      if (a.chain.omega1(i, j) > 0)
        CHECK(a.graph.neighbors[i].count(a.chain.states[j]) == 1);
}

TEST_CASE("rotation continuity: L(c) -> L(0) entrywise") {
  auto a0 = analyze("doublewell2d");
  auto a1 = analyze("doublewell2d", "rot90_scaled", 0.1);
  // nu does not depend on c; mu(c) = 1 + sqrt(9 + 8 c^2).
  CHECK((a1.chain.nu - a0.chain.nu).norm() <= 1e-12);
  double scale = (1.0 + std::sqrt(9.0 + 8.0 * 0.01)) / 4.0;
  CHECK(a1.chain.L(0, 1) == doctest::Approx(a0.chain.L(0, 1) * scale).epsilon(1e-10));
  CHECK(std::abs(a1.chain.L(0, 1) - a0.chain.L(0, 1)) <= 0.02);
}

TEST_CASE("semigroup: identity at t = 0, stochastic rows, symmetric limit") {
  auto a = analyze("doublewell1d");
  Mat P0 = semigroup(a.chain, 0.0);
  CHECK((P0 - Mat::Identity(2, 2)).norm() <= 1e-15);
  for (double t : {0.1, 1.0, 10.0}) {
    double defect = 0, neg = 0;
    Mat P = semigroup(a.chain, t, &defect, &neg);
    CHECK(defect <= 1e-12);
    CHECK(neg <= 1e-14);
  }
  Mat Pinf = semigroup(a.chain, 1e3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(Pinf(i, j) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("semigroup property exp((s+t)L) = exp(sL) exp(tL)") {
  auto a = analyze("triplewell1d_asym");
  // fixed pseudo-random times in (0, 5]
  double pairs[][2] = {{0.37, 2.11}, {4.9, 0.05}, {1.7, 1.7}, {3.3, 0.6}};
  for (auto& st : pairs) {
    Mat lhs = semigroup(a.chain, st[0] + st[1]);
    Mat rhs = semigroup(a.chain, st[0]) * semigroup(a.chain, st[1]);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("time rescale identity exp(t 2L) = exp(2t L)") {
  auto a = analyze("doublewell1d");
  ReducedChain doubled = a.chain;
  doubled.omega1 *= 2.0;
  doubled.L *= 2.0;
  for (double t : {0.3, 1.4}) {
    Mat lhs = semigroup(doubled, t);
    Mat rhs = semigroup(a.chain, 2 * t);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("resolvent: constants, large lambda, hand 2x2 solve") {
  auto a = analyze("doublewell1d");
  int n = a.chain.n();

  Vec c = Vec::Constant(n, 3.25);
  Vec f = solve_resolvent(a.chain, 2.0, c);
  for (int i = 0; i < n; ++i) CHECK(f[i] == doctest::Approx(3.25 / 2.0).epsilon(1e-13));

  Vec g(n);
  g << 1.0, -0.5;
  Vec f2 = solve_resolvent(a.chain, 1e6, g);
  for (int i = 0; i < n; ++i)
    CHECK(1e6 * f2[i] == doctest::Approx(g[i]).epsilon(1e-4));

  // lambda = 1, g = (1, 0), r = 2 sqrt 2 / pi:
  // f1 = (1+r)/(1+2r), f2 = r/(1+2r).
  Vec g3(n);
  g3 << 1.0, 0.0;
  double r = 2.0 * std::sqrt(2.0) / M_PI;
  Vec f3 = solve_resolvent(a.chain, 1.0, g3);
  CHECK(f3[0] == doctest::Approx((1 + r) / (1 + 2 * r)).epsilon(1e-12));
  CHECK(f3[1] == doctest::Approx(r / (1 + 2 * r)).epsilon(1e-12));

  // contraction bound
  CHECK(f3.lpNorm<Eigen::Infinity>() <= g3.lpNorm<Eigen::Infinity>() / 1.0 + 1e-15);
}

TEST_CASE("resolvent equals Laplace transform of the semigroup") {
  auto a = analyze("triplewell1d_asym");
  int n = a.chain.n();
  Vec g(n);
  g << 0.3, -1.1, 0.7;
  double lambda = 0.8;
  Vec f = solve_resolvent(a.chain, lambda, g);
  for (int i = 0; i < n; ++i) {
    double quad = integrate_laplace(
        [&](double t) { return (semigroup(a.chain, t) * g)(i); }, lambda, 1e-9);
    CHECK(std::abs(quad - f[i]) <= 1e-6);
  }
}

TEST_CASE("long-time structure: symmetric double well is one class") {
  auto a = analyze("doublewell1d");
  auto cs = long_time_structure(a.chain);
  REQUIRE(cs.classes.size() == 1);
  CHECK(cs.transient.empty());
  CHECK(cs.pis[0][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cs.pis[0][1] == doctest::Approx(0.5).epsilon(1e-12));
  // pi^T L = 0
  CHECK((cs.pis[0].transpose() * a.chain.L).norm() <= 1e-14);
}

TEST_CASE("long-time structure: single-jump chain absorbs at the target") {
  auto a = analyze("triplewell1d_asym");
  auto cs = long_time_structure(a.chain);
  // one transient state (the shallow well), two absorbing singletons
  REQUIRE(cs.classes.size() == 2);
  REQUIRE(cs.transient.size() == 1);
  int t = cs.transient[0];
  CHECK(std::abs(a.graph.gamma[t] - a.graph.d1) <= 1e-9);
  // the shallow well's single gate leads to one target: absorption = 1 there
  double sum = 0;
  for (int k = 0; k < 2; ++k) sum += cs.absorption(t, k);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cs.absorption.row(t).maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("limit of exp(tL) equals absorption * pi") {
  for (const char* name : {"doublewell1d", "triplewell1d_asym"}) {
    auto a = analyze(name);
    auto cs = long_time_structure(a.chain);
    int n = a.chain.n();
    double lnorm = a.chain.L.cwiseAbs().maxCoeff();
    Mat P = semigroup(a.chain, 1e6 / std::max(lnorm, 1e-12));
    Mat limit = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (std::size_t k = 0; k < cs.classes.size(); ++k)
        limit.row(i) += cs.absorption(i, k) * cs.pis[k].transpose();
    INFO(name);
    CHECK((P - limit).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("expm sanity: diagonal and nilpotent blocks") {
  Mat D = Mat::Zero(2, 2);
  D(0, 0) = -1;
  D(1, 1) = 2;
  Mat E = expm(D);
  CHECK(E(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(E(1, 1) == doctest::Approx(std::exp(2.0)).epsilon(1e-14));
  CHECK(std::abs(E(0, 1)) + std::abs(E(1, 0)) <= 1e-16);

  Mat Nl = Mat::Zero(2, 2);
  Nl(0, 1) = 3.0;
  Mat EN = expm(Nl);
  CHECK(EN(0, 1) == doctest::Approx(3.0).epsilon(1e-14));

  // scaling path: large norm
  Mat B = Mat::Zero(2, 2);
  B(0, 0) = -40;
  B(1, 1) = -35;
  Mat EB = expm(B);
  CHECK(EB(0, 0) == doctest::Approx(std::exp(-40.0)).epsilon(1e-10));
}
