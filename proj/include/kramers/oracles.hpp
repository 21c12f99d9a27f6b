#pragma once

// Brute-force oracles used by the verify stage and the test suites.  They
// deliberately avoid the descent/union-find machinery: communication heights
// are recomputed from dense grids of U samples alone, so a disagreement
// points at the analysis path, not at a shared bug.

#include <algorithm>
#include <queue>

#include "kramers/heights.hpp"

namespace kramers::oracles {

struct GridMinimaxResult {
  int i = 0, j = 0;       // graph minima indices
  double height = 0;      // grid minimax barrier
  double quantum = 0;     // one-grid-cell energy resolution
};

/// Resolution bound: near a saddle the gradient vanishes, so the grid path's
/// barrier differs from the true one by at most a quadratic cell-size term.
inline double energy_quantum(const PotentialSpec& spec,
                             const std::vector<CriticalPoint>& cps,
                             double cell_diag) {
  double hmax = 0;
  for (const auto& cp : cps)
    if (cp.kind == CriticalKind::Saddle)
      hmax = std::max(hmax, cp.hess_eigvals.cwiseAbs().maxCoeff());
  return 2.0 * hmax * cell_diag * cell_diag + 1e-12;
}

/// 1D: the only path between two minima is the interval; the barrier is the
/// max of U over the sampled segment.
inline std::vector<GridMinimaxResult> grid_minimax_1d(
    const PotentialSpec& spec, const std::vector<CriticalPoint>& cps,
    const LandscapeGraph& graph, int n_points) {
  double lo = spec.box.lo[0], hi = spec.box.hi[0];
  double h = (hi - lo) / (n_points - 1);
  std::vector<double> u(n_points);
  for (int k = 0; k < n_points; ++k) {
    Vec x(1);
    x[0] = lo + k * h;
    u[k] = spec.U(x);
  }
  auto cell_of = [&](double x) {
    int k = static_cast<int>(std::lround((x - lo) / h));
    return std::clamp(k, 0, n_points - 1);
  };
  double quantum = energy_quantum(spec, cps, h);

  std::vector<GridMinimaxResult> out;
  int n = static_cast<int>(graph.minima.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      int a = cell_of(cps[graph.minima[i]].x[0]);
      int b = cell_of(cps[graph.minima[j]].x[0]);
      if (a > b) std::swap(a, b);
      double barrier = -1e300;
      for (int k = a; k <= b; ++k) barrier = std::max(barrier, u[k]);
      out.push_back({i, j, barrier, quantum});
    }
  return out;
}

namespace detail {

// Does {U <= level} connect cells a and b?  8-connected BFS flood.
inline bool flood_connects(const std::vector<double>& u, int N, int a, int b,
                           double level) {
  if (u[a] > level || u[b] > level) return false;
  std::vector<char> seen(u.size(), 0);
  std::vector<int> stack{a};
  seen[a] = 1;
  while (!stack.empty()) {
    int c = stack.back();
    stack.pop_back();
    if (c == b) return true;
    int ci = c / N, cj = c % N;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        int ni = ci + di, nj = cj + dj;
        if (ni < 0 || nj < 0 || ni >= N || nj >= N) continue;
        int nc = ni * N + nj;
        if (!seen[nc] && u[nc] <= level) {
          seen[nc] = 1;
          stack.push_back(nc);
        }
      }
  }
  return false;
}

}  // namespace detail

/// 2D: binary-search the connection level over the sorted cell values; the
/// flood fill at each probe level is the only machinery involved.
inline std::vector<GridMinimaxResult> grid_minimax_2d(
    const PotentialSpec& spec, const std::vector<CriticalPoint>& cps,
    const LandscapeGraph& graph, int N) {
  double lox = spec.box.lo[0], hix = spec.box.hi[0];
  double loy = spec.box.lo[1], hiy = spec.box.hi[1];
  double hx = (hix - lox) / (N - 1), hy = (hiy - loy) / (N - 1);
  std::vector<double> u(static_cast<std::size_t>(N) * N);
  Vec x(2);
  for (int i = 0; i < N; ++i) {
    x[0] = lox + i * hx;
    for (int j = 0; j < N; ++j) {
      x[1] = loy + j * hy;
      u[static_cast<std::size_t>(i) * N + j] = spec.U(x);
    }
  }
  std::vector<double> levels = u;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  auto cell_of = [&](const Vec& p) {
    int i = std::clamp(static_cast<int>(std::lround((p[0] - lox) / hx)), 0, N - 1);
    int j = std::clamp(static_cast<int>(std::lround((p[1] - loy) / hy)), 0, N - 1);
    return i * N + j;
  };
  double quantum = energy_quantum(spec, cps, std::hypot(hx, hy));

  std::vector<GridMinimaxResult> out;
  int n = static_cast<int>(graph.minima.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      int a = cell_of(cps[graph.minima[i]].x);
      int b = cell_of(cps[graph.minima[j]].x);
      // smallest level index connecting a and b
      std::size_t lo_i = 0, hi_i = levels.size() - 1;
      if (!detail::flood_connects(u, N, a, b, levels[hi_i]))
        throw HeightUnreachableError("grid oracle: minima never connect");
      while (lo_i < hi_i) {
        std::size_t mid = (lo_i + hi_i) / 2;
        if (detail::flood_connects(u, N, a, b, levels[mid])) hi_i = mid;
        else lo_i = mid + 1;
      }
      out.push_back({i, j, levels[lo_i], quantum});
    }
  return out;
}

}  // namespace kramers::oracles
