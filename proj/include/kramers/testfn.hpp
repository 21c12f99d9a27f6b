#pragma once

#include <cmath>

#include "kramers/critical_points.hpp"
#include "kramers/heights.hpp"
#include "kramers/ode.hpp"
#include "kramers/potential.hpp"

namespace kramers {

/// Local frame at an index-1 saddle used by the gate test function:
/// Hessian eigenpairs with e1 oriented toward a chosen minimum, the unit
/// eigenvector v of hessU - jacEll^T for its unique negative eigenvalue -mu
/// (flipped so v.e1 > 0), and the rectangle geometry scale delta(eps).
struct SaddleFrame {
  Vec sigma;
  Vec lambda;   // lambda[0] = lambda_1 > 0 is the magnitude of the negative one
  Mat e_basis;  // columns e1..ed
  Vec v;
  double mu = 0;
  double J = 4.0;

  static double delta(double eps) { return std::sqrt(eps * std::log(1.0 / eps)); }

  /// Half-width of the central rectangle along e1.
  double c_halfwidth(double eps) const {
    return J * delta(eps) / std::sqrt(lambda[0]);
  }
  /// Half-width along e_k (k >= 2 in 1-based terms).
  double side_halfwidth(int k, double eps) const {
    return 2.0 * J * delta(eps) / std::sqrt(lambda[k]);
  }

  Vec coords(const Vec& x) const { return e_basis.transpose() * (x - sigma); }
};

/// Build the frame at saddle `sid`, orienting e1 toward the minimum
/// `toward_min` (both are critical point ids).
inline SaddleFrame make_saddle_frame(const PotentialSpec& spec,
                                     const std::vector<CriticalPoint>& cps,
                                     int sid, int toward_min, double J = 4.0) {
  const CriticalPoint& s = cps[sid];
  if (s.kind != CriticalKind::Saddle)
    throw std::invalid_argument("make_saddle_frame: not an index-1 point");
  SaddleFrame fr;
  fr.sigma = s.x;
  fr.J = J;
  fr.mu = s.mu;
  int d = spec.dim;

  // Order eigenpairs so the negative one comes first; store magnitudes.
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return s.hess_eigvals[a] < s.hess_eigvals[b];
  });
  fr.lambda = Vec(d);
  fr.e_basis = Mat(d, d);
  fr.lambda[0] = -s.hess_eigvals[order[0]];
  fr.e_basis.col(0) = s.hess_eigvecs.col(order[0]);
  for (int k = 1; k < d; ++k) {
    fr.lambda[k] = s.hess_eigvals[order[k]];
    fr.e_basis.col(k) = s.hess_eigvecs.col(order[k]);
  }
  if (fr.lambda.minCoeff() <= 0)
    throw std::invalid_argument("make_saddle_frame: not an index-1 spectrum");

  // Orient e1 toward the target minimum.
  if ((cps[toward_min].x - s.x).dot(fr.e_basis.col(0)) < 0)
    fr.e_basis.col(0) *= -1.0;

  // v: unit negative eigenvector of hessU - jacEll^T, with v.e1 > 0.
  Mat M = spec.hessU(s.x) - spec.jacEll(s.x).transpose();
  Eigen::EigenSolver<Mat> es(M);
  int which = -1;
  for (int i = 0; i < d; ++i)
    if (es.eigenvalues()[i].real() < 0) which = i;
  if (which < 0)
    throw SpectralAmbiguityError("hessU - jacEll^T has no negative eigenvalue");
  fr.v = es.eigenvectors().col(which).real();
  fr.v.normalize();
  if (fr.v.dot(fr.e_basis.col(0)) < 0) fr.v *= -1.0;
  return fr;
}

/// The three saddle-frame blocks in e-coordinates: thin slabs A-/A+ of width
/// eps^2 flanking the central rectangle C along e1.
struct RectanglePartition {
  struct Block {
    Vec lo, hi;  // per-axis bounds in the e-coordinates
  };
  Block a_minus, center, a_plus;

  RectanglePartition(const SaddleFrame& fr, double eps) {
    int d = static_cast<int>(fr.lambda.size());
    double cw = fr.c_halfwidth(eps), e2 = eps * eps;
    auto side = [&](Block& b) {
      b.lo = Vec(d);
      b.hi = Vec(d);
      for (int k = 1; k < d; ++k) {
        b.hi[k] = fr.side_halfwidth(k, eps);
        b.lo[k] = -b.hi[k];
      }
    };
    side(a_minus);
    side(center);
    side(a_plus);
    a_minus.lo[0] = -cw - e2;
    a_minus.hi[0] = -cw;
    center.lo[0] = -cw;
    center.hi[0] = cw;
    a_plus.lo[0] = cw;
    a_plus.hi[0] = cw + e2;
  }
};

enum class RectRegion { AMinus, Center, APlus, Outside };

/// Which block of R_eps = A- U C U A+ contains x (in the e-coordinates).
inline RectRegion rect_region(const SaddleFrame& fr, const Vec& x, double eps) {
  Vec xi = fr.coords(x);
  double cw = fr.c_halfwidth(eps);
  for (int k = 1; k < xi.size(); ++k)
    if (std::abs(xi[k]) > fr.side_halfwidth(k, eps)) return RectRegion::Outside;
  double e2 = eps * eps;
  if (xi[0] < -cw - e2 || xi[0] > cw + e2) return RectRegion::Outside;
  if (xi[0] < -cw) return RectRegion::AMinus;
  if (xi[0] > cw) return RectRegion::APlus;
  return RectRegion::Center;
}

/// Normalizing constant of the Gaussian profile: sqrt(2 pi eps / mu).
inline double p_normalizer(const SaddleFrame& fr, double eps) {
  return std::sqrt(2.0 * M_PI * eps / fr.mu);
}

/// The gate test function on R_eps: Gaussian CDF along v in the center
/// rectangle, extended affinely in the e1 coordinate across the thin slabs
/// A+- so that it hits exactly 1 / 0 on their outer faces.
inline double eval_p(const SaddleFrame& fr, const Vec& x, double eps) {
  RectRegion reg = rect_region(fr, x, eps);
  if (reg == RectRegion::Outside)
    throw OutsideRectangleError("eval_p: x outside R_eps");

  auto center_value = [&](const Vec& y) {
    double s = (y - fr.sigma).dot(fr.v);
    // (1/M) int_{-inf}^{s} exp(-mu t^2 / 2 eps) dt
    return 0.5 * std::erfc(-s * std::sqrt(fr.mu / (2.0 * eps)));
  };

  if (reg == RectRegion::Center) return center_value(x);

  Vec xi = fr.coords(x);
  double cw = fr.c_halfwidth(eps);
  double e2 = eps * eps;
  if (reg == RectRegion::APlus) {
    Vec xbar = fr.sigma + cw * fr.e_basis.col(0);
    for (int k = 1; k < xi.size(); ++k) xbar += xi[k] * fr.e_basis.col(k);
    double pr = center_value(xbar);
    return 1.0 + (xi[0] - cw - e2) / e2 * (1.0 - pr);
  }
  Vec xbar = fr.sigma - cw * fr.e_basis.col(0);
  for (int k = 1; k < xi.size(); ++k) xbar += xi[k] * fr.e_basis.col(k);
  double pl = center_value(xbar);
  return (xi[0] + cw + e2) / e2 * pl;
}

/// Region label assigned by the assembled test function Q_eps.
enum class QRegion { WellSide1, WellSide0, SaddleRect, OutsideK };

/// Q_eps for the well W (the component of {U < H} containing `m_id`) at gate
/// height H: 1 on the W side, 0 across the gates, the p-profile inside each
/// gate rectangle, and a smooth ramp to 0 between U = H + J^2 delta^2 and
/// U = H + eta/2.
class QPartition {
 public:
  QPartition(const PotentialSpec& spec, const std::vector<CriticalPoint>& cps,
             const LandscapeGraph& graph, int m_id, double eta = 0.0,
             double J = 4.0)
      : spec_(&spec), cps_(&cps), m_id_(m_id), J_(J) {
    int pos = -1;
    for (std::size_t i = 0; i < graph.minima.size(); ++i)
      if (graph.minima[i] == m_id) pos = static_cast<int>(i);
    if (pos < 0) throw std::invalid_argument("QPartition: unknown minimum");
    H_ = cps[m_id].u + graph.gamma[pos];
    eta_ = eta > 0 ? eta : 0.25 * graph.gamma[pos];
    for (int sid : graph.gates[pos]) {
      // Orient each gate frame toward m (the W side).
      frames_.push_back(make_saddle_frame(spec, cps, sid, m_id, J));
      const DescentEdge* edge = nullptr;
      for (const auto& e : graph.edges)
        if (e.saddle_id == sid) edge = &e;
      gate_other_.push_back(edge->minus_target == m_id ? edge->plus_target
                                                       : edge->minus_target);
    }
    for (const auto& cp : cps)
      if (cp.kind == CriticalKind::Minimum) minima_.push_back(cp.id);
  }

  double gate_height() const { return H_; }

  QRegion classify(const Vec& x, double eps) const {
    for (const auto& fr : frames_)
      if (rect_region(fr, x, eps) != RectRegion::Outside)
        return QRegion::SaddleRect;
    double d2 = SaddleFrame::delta(eps);
    d2 *= d2;
    if (spec_->U(x) > H_ + J_ * J_ * d2) return QRegion::OutsideK;
    return descend_target(x) == m_id_ ? QRegion::WellSide1 : QRegion::WellSide0;
  }

  double value(const Vec& x, double eps) const {
    for (const auto& fr : frames_)
      if (rect_region(fr, x, eps) != RectRegion::Outside)
        return eval_p(fr, x, eps) * ramp(x, eps);
    double d2 = SaddleFrame::delta(eps);
    d2 *= d2;
    double u = spec_->U(x);
    if (u > H_ + eta_ / 2) return 0.0;
    if (u > H_ + J_ * J_ * d2)
      return descend_target(x) == m_id_ ? ramp(x, eps) : 0.0;
    return descend_target(x) == m_id_ ? 1.0 : 0.0;
  }

 private:
  // Smoothstep from 1 at U = H + J^2 delta^2 down to 0 at U = H + eta/2.
  double ramp(const Vec& x, double eps) const {
    double d2 = SaddleFrame::delta(eps);
    d2 *= d2;
    double u0 = H_ + J_ * J_ * d2, u1 = H_ + eta_ / 2;
    double u = spec_->U(x);
    if (u <= u0) return 1.0;
    if (u >= u1) return 0.0;
    double s = (u - u0) / (u1 - u0);
    return 1.0 - s * s * (3 - 2 * s);
  }

  int descend_target(const Vec& x) const {
    DescentOptions dopt;
    return descend(*spec_, *cps_, x, dopt);
  }

  const PotentialSpec* spec_;
  const std::vector<CriticalPoint>* cps_;
  int m_id_;
  double J_, H_ = 0, eta_ = 0;
  std::vector<SaddleFrame> frames_;
  std::vector<int> gate_other_;
  std::vector<int> minima_;
};

}  // namespace kramers
