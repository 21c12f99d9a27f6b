#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kramers/types.hpp"

namespace kramers {

/// One polynomial term: coeff * prod_k x_k^exponents[k].
struct Monomial {
  double coeff = 0;
  std::vector<int> exponents;
};

using Polynomial = std::vector<Monomial>;

inline double poly_eval(const Polynomial& p, const Vec& x) {
  double s = 0;
  for (const auto& m : p) {
    double t = m.coeff;
    for (int k = 0; k < static_cast<int>(m.exponents.size()); ++k)
      for (int e = 0; e < m.exponents[k]; ++e) t *= x[k];
    s += t;
  }
  return s;
}

/// d/dx_k of a monomial list, again as a monomial list.
inline Polynomial poly_diff(const Polynomial& p, int k) {
  Polynomial d;
  for (const auto& m : p) {
    if (m.exponents[k] == 0) continue;
    Monomial q = m;
    q.coeff *= m.exponents[k];
    q.exponents[k] -= 1;
    d.push_back(q);
  }
  return d;
}

/// Expand c * prod_i (y - roots[i]) into 1D monomial coefficients (ascending).
inline std::vector<double> poly_from_roots(const std::vector<double>& roots,
                                           double c) {
  std::vector<double> coef{1.0};
  for (double r : roots) {
    std::vector<double> next(coef.size() + 1, 0.0);
    for (std::size_t i = 0; i < coef.size(); ++i) {
      next[i + 1] += coef[i];
      next[i] -= r * coef[i];
    }
    coef = next;
  }
  for (auto& v : coef) v *= c;
  return coef;
}

/// The potential/field pair and its analytic derivatives.
///
/// U, gradU, hessU come from an exact monomial representation (or an explicit
/// closure); ell is divergence-free and orthogonal to gradU.  origin_shift is
/// subtracted from the raw polynomial so that min U = 0 over the minima found
/// inside the box.
struct PotentialSpec {
  std::string name;
  int dim = 1;
  Box box;
  double origin_shift = 0;

  std::function<double(const Vec&)> U;
  std::function<Vec(const Vec&)> gradU;
  std::function<Mat(const Vec&)> hessU;
  std::function<Vec(const Vec&)> ell;
  std::function<Mat(const Vec&)> jacEll;

  std::string ell_mode = "none";
  double ell_c = 0;

  Vec drift(const Vec& x) const { return -(gradU(x) + ell(x)); }

  /// Jacobian of the drift: -(hessU + jacEll).
  Mat drift_jacobian(const Vec& x) const { return -(hessU(x) + jacEll(x)); }
};

namespace detail {

struct PolyData {
  Polynomial u;
  std::vector<Polynomial> grad;         // d polynomials
  std::vector<std::vector<Polynomial>> hess;  // d x d
};

inline std::shared_ptr<PolyData> make_poly_data(const Polynomial& u, int dim) {
  auto pd = std::make_shared<PolyData>();
  pd->u = u;
  pd->grad.resize(dim);
  pd->hess.assign(dim, std::vector<Polynomial>(dim));
  for (int i = 0; i < dim; ++i) pd->grad[i] = poly_diff(u, i);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) pd->hess[i][j] = poly_diff(pd->grad[i], j);
  return pd;
}

}  // namespace detail

/// Build a PotentialSpec from a monomial list for U.
///
/// ell_mode: "none", or "rot90_scaled" with parameter c (d=2 only), giving
/// ell = c * (-dU/dy, dU/dx), which is automatically divergence-free and
/// orthogonal to gradU.  An explicit polynomial ell (one monomial list per
/// component) is also accepted.
inline PotentialSpec make_polynomial_potential(
    std::string name, int dim, const Polynomial& u_poly, Box box,
    const std::string& ell_mode = "none", double ell_c = 0,
    const std::vector<Polynomial>& ell_polys = {}) {
  PotentialSpec spec;
  spec.name = std::move(name);
  spec.dim = dim;
  spec.box = std::move(box);
  spec.ell_mode = ell_mode;
  spec.ell_c = ell_c;

  auto pd = detail::make_poly_data(u_poly, dim);
  // origin_shift is applied later (set_min_to_zero) once minima are known.
  spec.U = [pd](const Vec& x) { return poly_eval(pd->u, x); };
  spec.gradU = [pd, dim](const Vec& x) {
    Vec g(dim);
    for (int i = 0; i < dim; ++i) g[i] = poly_eval(pd->grad[i], x);
    return g;
  };
  spec.hessU = [pd, dim](const Vec& x) {
    Mat h(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) h(i, j) = poly_eval(pd->hess[i][j], x);
    return h;
  };

  if (ell_mode == "none") {
    spec.ell = [dim](const Vec&) { return Vec::Zero(dim).eval(); };
    spec.jacEll = [dim](const Vec&) { return Mat::Zero(dim, dim).eval(); };
  } else if (ell_mode == "rot90_scaled") {
    if (dim != 2)
      throw std::runtime_error("rot90_scaled ell requires dim == 2");
    spec.ell = [pd, ell_c](const Vec& x) {
      Vec v(2);
      v[0] = -ell_c * poly_eval(pd->grad[1], x);
      v[1] = ell_c * poly_eval(pd->grad[0], x);
      return v;
    };
    spec.jacEll = [pd, ell_c](const Vec& x) {
      Mat j(2, 2);
      j(0, 0) = -ell_c * poly_eval(pd->hess[1][0], x);
      j(0, 1) = -ell_c * poly_eval(pd->hess[1][1], x);
      j(1, 0) = ell_c * poly_eval(pd->hess[0][0], x);
      j(1, 1) = ell_c * poly_eval(pd->hess[0][1], x);
      return j;
    };
  } else if (ell_mode == "monomials") {
    if (static_cast<int>(ell_polys.size()) != dim)
      throw std::runtime_error("ell monomial list must have dim components");
    auto comps = std::make_shared<std::vector<detail::PolyData>>();
    for (const auto& p : ell_polys) comps->push_back(*detail::make_poly_data(p, dim));
    spec.ell = [comps, dim](const Vec& x) {
      Vec v(dim);
      for (int i = 0; i < dim; ++i) v[i] = poly_eval((*comps)[i].u, x);
      return v;
    };
    spec.jacEll = [comps, dim](const Vec& x) {
      Mat j(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k)
          j(i, k) = poly_eval((*comps)[i].grad[k], x);
      return j;
    };
  } else {
    throw std::runtime_error("unknown ell_mode: " + ell_mode);
  }
  return spec;
}

/// Subtract a constant so that min U = 0 (shift decided by the caller from
/// the refined minima).
inline void apply_origin_shift(PotentialSpec& spec, double shift) {
  spec.origin_shift += shift;
  auto base = spec.U;
  spec.U = [base, shift](const Vec& x) { return base(x) - shift; };
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

inline std::vector<std::string> catalog_names() {
  return {"doublewell1d", "triplewell1d_asym", "threewell2d",
          "doublewell2d",  "bowl",              "bowl2d"};
}

/// Hard-coded polynomial catalog.  `ell_mode`/`ell_c` apply to 2D entries.
inline PotentialSpec catalog(const std::string& name,
                             const std::string& ell_mode = "none",
                             double ell_c = 0) {
  auto mono1 = [](double c, int e) { return Monomial{c, {e}}; };
  auto mono2 = [](double c, int ex, int ey) { return Monomial{c, {ex, ey}}; };

  if (name == "doublewell1d") {
    // U = (x^2 - 1)^2; minima at +-1 (U=0), saddle at 0 (U=1).
    Polynomial u{mono1(1, 4), mono1(-2, 2), mono1(1, 0)};
    return make_polynomial_potential(name, 1, u, Box{{-2.0}, {2.0}});
  }
  if (name == "triplewell1d_asym") {
    // U'(y) = c * y (y^2-...) style quintic with roots at
    // w*{-1.6,-0.5,0.6,1.4,2.2}: three minima of distinct depth, two saddles,
    // all critical values distinct.  The scale (c, w) keeps the shallowest
    // depth near 0.98 and the escape rate of the shallow well moderate.
    const double c = 2.5, w = 1.55;
    std::vector<double> roots{-1.6, -0.5, 0.6, 1.4, 2.2};
    std::vector<double> dcoef = poly_from_roots(roots, 1.0);  // degree 5
    Polynomial u;
    for (int k = 0; k <= 5; ++k) {
      // integrate y^k -> y^(k+1)/(k+1), then substitute y = x / w.
      double ck = c * dcoef[k] / (k + 1) / std::pow(w, k + 1);
      u.push_back(mono1(ck, k + 1));
    }
    return make_polynomial_potential(name, 1, u, Box{{-3.6}, {4.4}});
  }
  if (name == "threewell2d") {
    // U = (x^2+y^2)^2 - (x^3 - 3 x y^2) - (x^2+y^2) + 0.1 x + 0.06 y.
    // Three minima, three index-1 saddles (each connecting a distinct pair),
    // one index-2 point near the origin; generic tilt makes every critical
    // value distinct.
    Polynomial u{mono2(1, 4, 0), mono2(2, 2, 2), mono2(1, 0, 4),
                 mono2(-1, 3, 0), mono2(3, 1, 2), mono2(-1, 2, 0),
                 mono2(-1, 0, 2), mono2(0.1, 1, 0), mono2(0.06, 0, 1)};
    return make_polynomial_potential(name, 2, u, Box{{-2.2, -2.2}, {2.2, 2.2}},
                                     ell_mode, ell_c);
  }
  if (name == "doublewell2d") {
    // U = (x^2-1)^2 + y^2: minima (+-1, 0), saddle (0, 0).
    Polynomial u{mono2(1, 4, 0), mono2(-2, 2, 0), mono2(1, 0, 0),
                 mono2(1, 0, 2)};
    return make_polynomial_potential(name, 2, u, Box{{-2.0, -1.6}, {2.0, 1.6}},
                                     ell_mode, ell_c);
  }
  if (name == "bowl") {
    Polynomial u{mono1(0.5, 2)};
    return make_polynomial_potential(name, 1, u, Box{{-2.0}, {2.0}});
  }
  if (name == "bowl2d") {
    Polynomial u{mono2(0.5, 2, 0), mono2(0.5, 0, 2)};
    return make_polynomial_potential(name, 2, u, Box{{-2.0, -2.0}, {2.0, 2.0}},
                                     ell_mode, ell_c);
  }
  std::string known;
  for (const auto& n : catalog_names()) known += " " + n;
  throw std::runtime_error("unknown catalog potential '" + name +
                           "'; known:" + known);
}

// ---------------------------------------------------------------------------
// Verification oracles (finite differences; never the primary evaluator)
// ---------------------------------------------------------------------------

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-5) {
  Vec g(x.size());
  for (int k = 0; k < x.size(); ++k) {
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    g[k] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

inline Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x,
                      double h = 1e-4) {
  int d = static_cast<int>(x.size());
  Mat H(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      Vec xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[i] += h; xpp[j] += h;
      xpm[i] += h; xpm[j] -= h;
      xmp[i] -= h; xmp[j] += h;
      xmm[i] -= h; xmm[j] -= h;
      H(i, j) = H(j, i) = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4 * h * h);
    }
  }
  return H;
}

inline double divergence(const PotentialSpec& spec, const Vec& x) {
  return spec.jacEll(x).trace();
}

/// Low-discrepancy points in the box (additive lattice; deterministic).
inline std::vector<Vec> quasirandom_points(const Box& box, int n) {
  int d = box.dim();
  // Generalized golden-ratio lattice.
  double g = 1.0;
  for (int it = 0; it < 32; ++it) g = std::pow(1.0 + g, 1.0 / (d + 1));
  std::vector<double> alpha(d);
  for (int k = 0; k < d; ++k) alpha[k] = std::pow(1.0 / g, k + 1);
  std::vector<Vec> pts;
  pts.reserve(n);
  std::vector<double> u(d, 0.5);
  for (int i = 0; i < n; ++i) {
    Vec x(d);
    for (int k = 0; k < d; ++k) {
      u[k] += alpha[k];
      u[k] -= std::floor(u[k]);
      x[k] = box.lo[k] + u[k] * (box.hi[k] - box.lo[k]);
    }
    pts.push_back(x);
  }
  return pts;
}

struct FieldConditionReport {
  double max_divergence = 0;
  double max_grad_dot_ell = 0;
  int n_samples = 0;
  double tol = 0;
  bool pass = false;
};

/// Check div(ell) = 0 and gradU . ell = 0 over quasi-random samples.
inline FieldConditionReport verify_field_conditions(const PotentialSpec& spec,
                                                    int n_samples,
                                                    double tol_field = 1e-8) {
  FieldConditionReport rep;
  rep.n_samples = n_samples;
  rep.tol = tol_field;
  for (const Vec& x : quasirandom_points(spec.box, n_samples)) {
    rep.max_divergence =
        std::max(rep.max_divergence, std::abs(divergence(spec, x)));
    rep.max_grad_dot_ell =
        std::max(rep.max_grad_dot_ell, std::abs(spec.gradU(x).dot(spec.ell(x))));
  }
  rep.pass = rep.max_divergence <= tol_field && rep.max_grad_dot_ell <= tol_field;
  return rep;
}

}  // namespace kramers
