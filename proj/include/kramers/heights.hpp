#pragma once

#include <algorithm>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "kramers/critical_points.hpp"
#include "kramers/ode.hpp"
#include "kramers/potential.hpp"

namespace kramers {

/// Heteroclinic descent record for one index-1 saddle: the two minima reached
/// from sigma +- delta e1 along the unstable eigenvector of the drift
/// Jacobian.
struct DescentEdge {
  int saddle_id = -1;
  int minus_target = -1;
  int plus_target = -1;
  std::vector<Vec> path_samples;  // optional, for reporting
};

struct LandscapeGraph {
  std::vector<int> minima;   // critical point ids, index 0
  std::vector<int> saddles;  // critical point ids, index 1
  std::vector<DescentEdge> edges;
  Mat theta;                 // minima x minima, -inf on the diagonal
  Vec gamma;                 // per minimum
  double d1 = 0;
  std::vector<std::vector<int>> gates;           // per minimum: saddle ids
  std::vector<std::set<int>> neighbors;          // per minimum: minima ids
  std::map<std::pair<int, int>, std::vector<int>> separating;  // (m,m') -> saddles
  std::vector<std::string> warnings;

  double theta1_of(double eps) const { return std::exp(d1 / eps); }
};

struct DescentOptions {
  double delta_unstable_rel = 1e-4;  // initial offset, times diam(box)
  double r_capture_rel = 1e-5;       // capture radius, times diam(box)
  double abs_tol = 1e-10;
  double t_max = 1e5;
  double stall_grad = 1e-9;
};

/// Integrate xdot = b(x) from x0 until within r_capture of a minimum.
/// Returns the minimum id.  U decreases along trajectories (dU/dt =
/// -|gradU|^2 since ell is orthogonal), so reaching a minimum is the generic
/// outcome; stalling far from one flags a missed critical point.
inline int descend(const PotentialSpec& spec,
                   const std::vector<CriticalPoint>& cps, const Vec& x0,
                   const DescentOptions& dopt = {},
                   std::vector<Vec>* samples = nullptr) {
  double diam = spec.box.diameter();
  double r_capture = dopt.r_capture_rel * diam;

  std::vector<int> minima;
  for (const auto& cp : cps)
    if (cp.kind == CriticalKind::Minimum) minima.push_back(cp.id);

  int hit = -1;
  auto near_minimum = [&](const Vec& x) {
    for (int id : minima)
      if ((x - cps[id].x).norm() <= r_capture) {
        hit = id;
        return true;
      }
    return false;
  };

  OdeOptions opt;
  opt.abs_tol = dopt.abs_tol;
  opt.rel_tol = dopt.abs_tol;
  opt.t_max = dopt.t_max;
  opt.h_max = 10.0;
  auto rhs = [&spec](const Vec& x) { return spec.drift(x); };

  auto stop = [&](double, const Vec& x) {
    if (!spec.box.contains(x, 0.05 * diam))
      throw LeftBoxError("descent trajectory left the box");
    return near_minimum(x);
  };

  OdeRunResult res =
      integrate_until(rhs, x0, stop, opt, samples != nullptr);
  if (!res.stopped) {
    if (spec.gradU(res.x).norm() < dopt.stall_grad)
      throw DescentStallError(
          "descent stalled at small gradient far from any minimum "
          "(possible missed critical point)");
    throw DescentStallError("descent did not reach a minimum within budget");
  }
  if (samples) {
    *samples = std::move(res.samples);
    samples->push_back(cps[hit].x);
  }
  return hit;
}

/// Launch descents from sigma +- delta e1 for every index-1 saddle, where e1
/// is the unstable direction of the drift Jacobian -(hessU + jacEll).
/// Throws AssumptionViolated if a descent terminates at a non-minimum.
inline std::vector<DescentEdge> build_descent_edges(
    const PotentialSpec& spec, const std::vector<CriticalPoint>& cps,
    const DescentOptions& dopt = {}, bool record_paths = false) {
  std::vector<DescentEdge> edges;
  double delta = dopt.delta_unstable_rel * spec.box.diameter();

  for (const auto& cp : cps) {
    if (cp.kind != CriticalKind::Saddle) continue;
    // Unstable eigenvector of Db = -(H + Dl): the eigenvalue +mu direction,
    // i.e. the -mu eigenvector of H + Dl.
    Mat M = spec.hessU(cp.x) + spec.jacEll(cp.x);
    Eigen::EigenSolver<Mat> es(M);
    int which = -1;
    for (int i = 0; i < M.rows(); ++i)
      if (es.eigenvalues()[i].real() < 0) which = i;
    if (which < 0)
      throw AssumptionViolatedError("saddle without unstable drift direction");
    Vec e1 = es.eigenvectors().col(which).real();
    e1.normalize();

    DescentEdge edge;
    edge.saddle_id = cp.id;
    std::vector<Vec> path_minus, path_plus;
    edge.minus_target = descend(spec, cps, (cp.x - delta * e1).eval(), dopt,
                                record_paths ? &path_minus : nullptr);
    edge.plus_target = descend(spec, cps, (cp.x + delta * e1).eval(), dopt,
                               record_paths ? &path_plus : nullptr);
    if (record_paths) {
      // Stitch into one polyline through the saddle, minus side reversed.
      edge.path_samples.assign(path_minus.rbegin(), path_minus.rend());
      edge.path_samples.push_back(cp.x);
      edge.path_samples.insert(edge.path_samples.end(), path_plus.begin(),
                               path_plus.end());
    }
    edges.push_back(std::move(edge));
  }
  return edges;
}

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);  // deterministic root: smallest id
    parent[b] = a;
    return true;
  }
};

}  // namespace detail

/// Kruskal-style sweep over saddles sorted by height: Theta(m, m') is the
/// merge height at which m and m' first share a union-find component.
inline Mat communication_heights(const std::vector<CriticalPoint>& cps,
                                 const std::vector<DescentEdge>& edges) {
  std::vector<int> minima;
  std::map<int, int> min_pos;  // cp id -> row
  for (const auto& cp : cps)
    if (cp.kind == CriticalKind::Minimum) {
      min_pos[cp.id] = static_cast<int>(minima.size());
      minima.push_back(cp.id);
    }
  int n = static_cast<int>(minima.size());
  Mat theta = Mat::Constant(n, n, -std::numeric_limits<double>::infinity());

  std::vector<const DescentEdge*> order;
  for (const auto& e : edges) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(),
                   [&](const DescentEdge* a, const DescentEdge* b) {
                     double ua = cps[a->saddle_id].u, ub = cps[b->saddle_id].u;
                     if (ua != ub) return ua < ub;
                     return a->saddle_id < b->saddle_id;
                   });

  detail::UnionFind uf(n);
  for (const DescentEdge* e : order) {
    int a = min_pos.at(e->minus_target), b = min_pos.at(e->plus_target);
    double h = cps[e->saddle_id].u;
    int ra = uf.find(a), rb = uf.find(b);
    if (ra == rb) continue;
    // All pairs across the two components communicate at this height.
    std::vector<int> compA, compB;
    for (int i = 0; i < n; ++i) {
      int r = uf.find(i);
      if (r == ra) compA.push_back(i);
      else if (r == rb) compB.push_back(i);
    }
    for (int i : compA)
      for (int j : compB) theta(i, j) = theta(j, i) = h;
    uf.unite(ra, rb);
  }

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!std::isfinite(theta(i, j)))
        throw HeightUnreachableError(
            "minima not connected through index-1 saddles inside the box");
  return theta;
}

/// Assemble gamma, d1, gates, neighbor sets and separating-saddle sets from
/// the theta sweep.  Gate test: a saddle at height U(m) + Gamma(m) is a gate
/// of m when, in the union-find state strictly below that height, its descent
/// pair touches m's component and another component.
inline LandscapeGraph gates_and_neighbors(const PotentialSpec& spec,
                                          const std::vector<CriticalPoint>& cps,
                                          std::vector<DescentEdge> edges,
                                          const Tolerances& tol = {}) {
  LandscapeGraph g;
  g.edges = std::move(edges);
  std::map<int, int> min_pos;
  for (const auto& cp : cps) {
    if (cp.kind == CriticalKind::Minimum) {
      min_pos[cp.id] = static_cast<int>(g.minima.size());
      g.minima.push_back(cp.id);
    } else if (cp.kind == CriticalKind::Saddle) {
      g.saddles.push_back(cp.id);
    }
  }
  int n = static_cast<int>(g.minima.size());
  if (n < 2)
    throw std::runtime_error(
        "gates_and_neighbors: need at least 2 minima (depth undefined)");

  g.theta = communication_heights(cps, g.edges);
  g.gamma = Vec(n);
  for (int i = 0; i < n; ++i) {
    double th = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      if (j != i) th = std::min(th, g.theta(i, j));
    g.gamma[i] = th - cps[g.minima[i]].u;
  }
  g.d1 = g.gamma.minCoeff();

  // Sorted saddle sweep replayed once per minimum's gate height.
  std::vector<const DescentEdge*> order;
  for (const auto& e : g.edges) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(),
                   [&](const DescentEdge* a, const DescentEdge* b) {
                     double ua = cps[a->saddle_id].u, ub = cps[b->saddle_id].u;
                     if (ua != ub) return ua < ub;
                     return a->saddle_id < b->saddle_id;
                   });

  g.gates.assign(n, {});
  g.neighbors.assign(n, {});
  for (int i = 0; i < n; ++i) {
    double gate_h = cps[g.minima[i]].u + g.gamma[i];
    // Union-find state strictly below the gate height.
    detail::UnionFind uf(n);
    for (const DescentEdge* e : order) {
      if (cps[e->saddle_id].u >= gate_h - tol.tol_gate) break;
      uf.unite(min_pos.at(e->minus_target), min_pos.at(e->plus_target));
    }
    int comp_m = uf.find(i);
    for (const DescentEdge* e : order) {
      if (std::abs(cps[e->saddle_id].u - gate_h) > tol.tol_gate) continue;
      int a = min_pos.at(e->minus_target), b = min_pos.at(e->plus_target);
      int ra = uf.find(a), rb = uf.find(b);
      if (ra == rb) continue;           // same-component loop: not a gate
      if (ra != comp_m && rb != comp_m) continue;
      g.gates[i].push_back(e->saddle_id);
      // Separating set requires a heteroclinic orbit to m itself.
      int other = -1;
      if (e->minus_target == g.minima[i]) other = e->plus_target;
      else if (e->plus_target == g.minima[i]) other = e->minus_target;
      if (other >= 0) {
        g.neighbors[i].insert(other);
        g.separating[{g.minima[i], other}].push_back(e->saddle_id);
      } else if (std::abs(g.gamma[i] - g.d1) <= tol.tol_gate) {
        // Condition: every gate of a shallowest well must descend to m.
        throw AssumptionViolatedError(
            "gate saddle " + std::to_string(e->saddle_id) +
            " of minimum " + std::to_string(g.minima[i]) +
            " has no heteroclinic orbit to it");
      } else {
        g.warnings.push_back(
            "gate saddle " + std::to_string(e->saddle_id) + " of minimum " +
            std::to_string(g.minima[i]) +
            " descends to a different minimum of the same component");
      }
    }
    // Height ties are supported (weights sum over tied gates); flag saddles
    // at the gate height whose descent pair is a same-minimum loop touching
    // m's component, since they cannot disambiguate the tie.
    for (const DescentEdge* e : order) {
      if (std::abs(cps[e->saddle_id].u - gate_h) > tol.tol_gate) continue;
      if (e->minus_target == e->plus_target &&
          uf.find(min_pos.at(e->minus_target)) == comp_m)
        g.warnings.push_back("GateDegeneracy: saddle " +
                             std::to_string(e->saddle_id) +
                             " is a same-minimum loop at gate height of minimum " +
                             std::to_string(g.minima[i]));
    }
  }
  return g;
}

/// Full heights pipeline.
inline LandscapeGraph build_landscape_graph(const PotentialSpec& spec,
                                            const std::vector<CriticalPoint>& cps,
                                            const DescentOptions& dopt = {},
                                            const Tolerances& tol = {},
                                            bool record_paths = false) {
  auto edges = build_descent_edges(spec, cps, dopt, record_paths);
  // Both targets must be minima (heteroclinic orbits saddle -> minimum).
  for (const auto& e : edges) {
    if (cps[e.minus_target].kind != CriticalKind::Minimum ||
        cps[e.plus_target].kind != CriticalKind::Minimum)
      throw AssumptionViolatedError(
          "descent from saddle " + std::to_string(e.saddle_id) +
          " terminated at a non-minimum");
  }
  return gates_and_neighbors(spec, cps, std::move(edges), tol);
}

}  // namespace kramers
