#pragma once

#include <algorithm>
#include <vector>

#include "kramers/expm.hpp"
#include "kramers/heights.hpp"

namespace kramers {

/// The first-time-scale reduced Markov chain on the set of minima:
/// L(m,m') = omega1(m,m') / nu(m), rows summing to zero.
struct ReducedChain {
  std::vector<int> states;  // critical point ids of the minima, in graph order
  Vec nu;
  Mat omega1;
  Mat L;
  double d1 = 0;

  int n() const { return static_cast<int>(states.size()); }
  double theta1_of(double eps) const { return std::exp(d1 / eps); }
};

/// Long-time decomposition of the chain: closed irreducible classes, their
/// stationary laws, and absorption probabilities from transient states.
struct ChainStructure {
  std::vector<std::vector<int>> classes;  // state indices per closed class
  std::vector<Vec> pis;                   // stationary law per class (full length)
  Mat absorption;                         // n x n_classes
  std::vector<int> transient;             // state indices
};

/// Eyring-Kramers weights: nu(m) = 1/sqrt(det hessU(m)),
/// omega(sigma) = mu_sigma / (2 pi sqrt(-det hessU(sigma))),
/// omega(m,m') summed over the separating saddles, then masked by
/// Gamma(m) = d1 to form omega1 and the generator.
inline ReducedChain assemble_chain(const LandscapeGraph& g,
                                   const std::vector<CriticalPoint>& cps,
                                   const PotentialSpec& spec,
                                   const Tolerances& tol = {}) {
  (void)spec;
  ReducedChain rc;
  rc.states = g.minima;
  rc.d1 = g.d1;
  int n = rc.n();
  rc.nu = Vec(n);
  for (int i = 0; i < n; ++i) {
    double det = cps[g.minima[i]].hess_eigvals.prod();
    if (det <= 0)
      throw NegativeDetError("nonpositive Hessian determinant at a minimum");
    rc.nu[i] = 1.0 / std::sqrt(det);
  }

  auto omega_sigma = [&](int sid) {
    const CriticalPoint& s = cps[sid];
    double det = s.hess_eigvals.prod();
    if (det >= 0)
      throw NegativeDetError(
          "nonnegative Hessian determinant at claimed saddle " +
          std::to_string(sid));
    return s.mu / (2.0 * M_PI * std::sqrt(-det));
  };

  rc.omega1 = Mat::Zero(n, n);
  std::map<int, int> pos;
  for (int i = 0; i < n; ++i) pos[g.minima[i]] = i;
  for (int i = 0; i < n; ++i) {
    if (std::abs(g.gamma[i] - g.d1) > tol.tol_gate) continue;  // masked row
    for (int other : g.neighbors[i]) {
      auto it = g.separating.find({g.minima[i], other});
      if (it == g.separating.end()) continue;
      double w = 0;
      for (int sid : it->second) w += omega_sigma(sid);
      rc.omega1(i, pos.at(other)) = w;
    }
  }

  rc.L = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double row = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      rc.L(i, j) = rc.omega1(i, j) / rc.nu[i];
      row += rc.L(i, j);
    }
    rc.L(i, i) = -row;
  }
  return rc;
}

/// p_t = exp(tL).  Rows are renormalized only in the report, never silently:
/// the max row-sum deviation and negative clamp are returned on request.
inline Mat semigroup(const ReducedChain& chain, double t,
                     double* max_row_defect = nullptr,
                     double* max_neg = nullptr) {
  if (t < 0) throw std::invalid_argument("semigroup: t must be >= 0");
  Mat P = expm((t * chain.L).eval());
  double defect = 0, neg = 0;
  for (int i = 0; i < P.rows(); ++i) {
    defect = std::max(defect, std::abs(P.row(i).sum() - 1.0));
    for (int j = 0; j < P.cols(); ++j) neg = std::min(neg, P(i, j));
  }
  if (max_row_defect) *max_row_defect = defect;
  if (max_neg) *max_neg = -neg;
  return P;
}

/// Solve (lambda - L) f = g; checks the residual and the contraction bound
/// ||f||_inf <= ||g||_inf / lambda.
inline Vec solve_resolvent(const ReducedChain& chain, double lambda,
                           const Vec& g) {
  if (lambda <= 0) throw std::invalid_argument("resolvent: lambda must be > 0");
  int n = chain.n();
  Mat A = lambda * Mat::Identity(n, n) - chain.L;
  Eigen::PartialPivLU<Mat> lu(A);
  Vec f = lu.solve(g);
  double resid = (A * f - g).lpNorm<Eigen::Infinity>();
  double gnorm = g.lpNorm<Eigen::Infinity>();
  if (!f.allFinite() || resid > 1e-10 * std::max(1.0, gnorm))
    throw SingularSystemError("resolvent solve failed (residual " +
                              std::to_string(resid) + ")");
  return f;
}

namespace detail {

// Tarjan strongly-connected components on the support of L.
struct Tarjan {
  const std::vector<std::vector<int>>& adj;
  std::vector<int> idx, low, comp;
  std::vector<bool> on_stack;
  std::vector<int> stack_;
  int counter = 0, ncomp = 0;

  explicit Tarjan(const std::vector<std::vector<int>>& a)
      : adj(a),
        idx(a.size(), -1),
        low(a.size(), 0),
        comp(a.size(), -1),
        on_stack(a.size(), false) {
    for (std::size_t v = 0; v < a.size(); ++v)
      if (idx[v] < 0) dfs(static_cast<int>(v));
  }

  void dfs(int v) {
    idx[v] = low[v] = counter++;
    stack_.push_back(v);
    on_stack[v] = true;
    for (int w : adj[v]) {
      if (idx[w] < 0) {
        dfs(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], idx[w]);
      }
    }
    if (low[v] == idx[v]) {
      while (true) {
        int w = stack_.back();
        stack_.pop_back();
        on_stack[w] = false;
        comp[w] = ncomp;
        if (w == v) break;
      }
      ++ncomp;
    }
  }
};

}  // namespace detail

/// Closed irreducible classes by condensation of the support graph;
/// stationary law of each class from the null space of L restricted and
/// transposed (LU with full pivoting); absorption probabilities for the
/// transient states from the standard linear system.
inline ChainStructure long_time_structure(const ReducedChain& chain,
                                          double support_tol = 0.0) {
  int n = chain.n();
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && chain.L(i, j) > support_tol) adj[i].push_back(j);

  detail::Tarjan tarjan(adj);
  int nc = tarjan.ncomp;
  std::vector<std::vector<int>> members(nc);
  for (int v = 0; v < n; ++v) members[tarjan.comp[v]].push_back(v);

  // A component is closed iff no member has an edge leaving it.
  std::vector<bool> closed(nc, true);
  for (int v = 0; v < n; ++v)
    for (int w : adj[v])
      if (tarjan.comp[w] != tarjan.comp[v]) closed[tarjan.comp[v]] = false;

  ChainStructure cs;
  std::vector<int> class_of_comp(nc, -1);
  // Deterministic class order: smallest member state id first.
  std::vector<int> comp_order;
  for (int c = 0; c < nc; ++c)
    if (closed[c]) comp_order.push_back(c);
  std::sort(comp_order.begin(), comp_order.end(), [&](int a, int b) {
    return *std::min_element(members[a].begin(), members[a].end()) <
           *std::min_element(members[b].begin(), members[b].end());
  });
  for (int c : comp_order) {
    class_of_comp[c] = static_cast<int>(cs.classes.size());
    auto m = members[c];
    std::sort(m.begin(), m.end());
    cs.classes.push_back(m);
  }
  for (int v = 0; v < n; ++v)
    if (!closed[tarjan.comp[v]]) cs.transient.push_back(v);

  // Stationary law per class: null space of (L restricted)^T.
  for (const auto& cls : cs.classes) {
    int k = static_cast<int>(cls.size());
    Vec pi_full = Vec::Zero(n);
    if (k == 1) {
      pi_full[cls[0]] = 1.0;
    } else {
      Mat Lc(k, k);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) Lc(a, b) = chain.L(cls[a], cls[b]);
      // Rows of the closed class already sum to zero within the class.
      Eigen::FullPivLU<Mat> lu(Lc.transpose());
      lu.setThreshold(1e-12);
      Mat ker = lu.kernel();
      Vec pi = ker.col(0);
      if (pi.sum() < 0) pi = -pi;
      pi /= pi.sum();
      for (int a = 0; a < k; ++a) pi_full[cls[a]] = pi[a];
    }
    cs.pis.push_back(pi_full);
  }

  // Absorption probabilities.
  int ncls = static_cast<int>(cs.classes.size());
  cs.absorption = Mat::Zero(n, ncls);
  for (int kcls = 0; kcls < ncls; ++kcls)
    for (int v : cs.classes[kcls]) cs.absorption(v, kcls) = 1.0;
  int nt = static_cast<int>(cs.transient.size());
  if (nt > 0) {
    Mat Ltt(nt, nt);
    Mat rhs(nt, ncls);
    for (int a = 0; a < nt; ++a) {
      for (int b = 0; b < nt; ++b) Ltt(a, b) = chain.L(cs.transient[a], cs.transient[b]);
      for (int kcls = 0; kcls < ncls; ++kcls) {
        double s = 0;
        for (int v : cs.classes[kcls]) s += chain.L(cs.transient[a], v);
        rhs(a, kcls) = -s;
      }
    }
    Mat H = Ltt.partialPivLu().solve(rhs);
    for (int a = 0; a < nt; ++a)
      for (int kcls = 0; kcls < ncls; ++kcls)
        cs.absorption(cs.transient[a], kcls) = H(a, kcls);
  }
  return cs;
}

}  // namespace kramers
