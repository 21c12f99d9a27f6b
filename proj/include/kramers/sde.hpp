#pragma once

#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <unordered_map>

#include "kramers/critical_points.hpp"
#include "kramers/heights.hpp"
#include "kramers/parallel.hpp"
#include "kramers/rng.hpp"

namespace kramers {

struct SimConfig {
  double eps = 0.1;
  double dt = 0;          // 0: use min(1e-3, eps/100)
  double horizon = 1e9;   // unscaled time
  int n_paths = 1000;
  uint64_t seed = 12345;
  double well_r0 = 0.45;
  int threads = 0;        // 0: default_thread_count()

  double step() const { return dt > 0 ? dt : std::min(1e-3, eps / 100.0); }
  int workers() const { return threads > 0 ? threads : default_thread_count(); }

  void warn_if_coarse(std::ostream& os = std::cerr) const {
    if (step() > 0.01 * eps)
      os << "simconfig: dt = " << step() << " exceeds 0.01*eps = "
         << 0.01 * eps << " (recommended guard)\n";
  }
};

/// One Euler-Maruyama step: x + b(x) dt + sqrt(2 eps dt) eta.
inline Vec step_em(const Vec& x, const PotentialSpec& spec, double eps,
                   double dt, NormalStream& noise) {
  Vec out(x.size());
  Vec b = spec.drift(x);
  double amp = std::sqrt(2.0 * eps * dt);
  for (int k = 0; k < x.size(); ++k) out[k] = x[k] + b[k] * dt + amp * noise.next();
  if (!out.allFinite()) throw NonFiniteError("step_em: state diverged");
  return out;
}

/// Well membership oracle for E(m) = W^{r0}(m): U(x) <= U(m) + r0 and a
/// budgeted deterministic descent from x reaches m.  Connectedness is
/// certified by the descent rather than by a set flood.  Results are memoized
/// on a spatial hash (advisory only; recomputed exactly on a miss).
class WellClassifier {
 public:
  WellClassifier(const PotentialSpec& spec, std::vector<CriticalPoint> cps,
                 double r0)
      : spec_(&spec), cps_(std::move(cps)), r0_(r0) {
    for (const auto& cp : cps_)
      if (cp.kind == CriticalKind::Minimum) minima_.push_back(cp.id);
    cell_ = 1e-3 * spec.box.diameter();
  }

  const std::vector<int>& minima() const { return minima_; }
  double r0() const { return r0_; }

  /// id of the well containing x, or -1.
  int well_of(const Vec& x) const {
    double u = spec_->U(x);
    bool any = false;
    for (int id : minima_)
      if (u <= cps_[id].u + r0_) {
        any = true;
        break;
      }
    if (!any) return -1;
    int target = descend_cached(x);
    if (target < 0) return -1;
    return u <= cps_[target].u + r0_ ? target : -1;
  }

  bool in_well(const Vec& x, int m) const { return well_of(x) == m; }

  int descend_cached(const Vec& x) const {
    // Thread-local advisory cache keyed on a spatial hash; exact recompute on
    // a miss, so worker count never changes results.
    static thread_local std::unordered_map<uint64_t, int> cache;
    uint64_t key = quantize(x) ^ (reinterpret_cast<uintptr_t>(this) * 0x9E3779B97F4A7C15ULL);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    int t;
    try {
      DescentOptions dopt;
      dopt.t_max = 1e4;
      t = descend(*spec_, cps_, x, dopt);
    } catch (const std::exception&) {
      t = -1;  // budget exhaustion or stall counts as "not in any well"
    }
    cache.emplace(key, t);
    return t;
  }

 private:
  uint64_t quantize(const Vec& x) const {
    uint64_t h = 1469598103934665603ULL;
    for (int k = 0; k < x.size(); ++k) {
      auto q = static_cast<uint64_t>(
          static_cast<int64_t>(std::floor(x[k] / cell_)));
      h = (h ^ q) * 1099511628211ULL;
    }
    return h;
  }

  const PotentialSpec* spec_;
  std::vector<CriticalPoint> cps_;
  std::vector<int> minima_;
  double r0_, cell_;
};

/// Per-path event log: (time, minimum id) on well entry, (time, -1) on exit.
struct WellEvent {
  double t;
  int well;  // -1 = left all wells
};

struct TrajectoryRecord {
  std::vector<WellEvent> events;
  Vec terminal;
  double t_end = 0;
  bool diverged = false;
};

/// Well labels with accumulated in-well clock (the trace process projected
/// through Phi).
struct TraceSegment {
  int well;
  double duration;
};

inline std::vector<TraceSegment> trace_process(const TrajectoryRecord& rec) {
  std::vector<TraceSegment> segs;
  int cur = -1;
  double t_enter = 0;
  for (const auto& ev : rec.events) {
    if (cur >= 0) {
      double len = ev.t - t_enter;
      if (!segs.empty() && segs.back().well == cur) segs.back().duration += len;
      else segs.push_back({cur, len});
    }
    cur = ev.well;
    t_enter = ev.t;
  }
  if (cur >= 0) {
    double len = rec.t_end - t_enter;
    if (!segs.empty() && segs.back().well == cur) segs.back().duration += len;
    else segs.push_back({cur, len});
  }
  return segs;
}

inline double total_trace_time(const std::vector<TraceSegment>& segs) {
  double s = 0;
  for (const auto& seg : segs) s += seg.duration;
  return s;
}

/// Drive one path, recording well entry/exit events, probing the state at
/// the requested times, and optionally stopping on a predicate.
struct PathResult {
  TrajectoryRecord record;
  std::vector<int> probe_wells;        // well id at each probe time (-1 = none)
  std::vector<Vec> probe_states;
  double hit_time = -1;                // first time the target predicate held
  bool hit = false;
};

struct PathDriver {
  const PotentialSpec* spec;
  const WellClassifier* wells;
  SimConfig config;
  std::vector<double> probe_times;                      // ascending
  std::function<bool(const Vec&)> target;               // optional
  bool record_events = true;
  bool stop_on_hit = false;
  bool keep_probe_states = false;

  PathResult run(const Vec& x0, uint64_t path_index) const {
    NormalStream noise(config.seed, path_index);
    double dt = config.step();
    Vec x = x0;
    PathResult res;
    res.record.t_end = 0;
    std::size_t probe_i = 0;
    int cur_well = wells->well_of(x);
    if (record_events && cur_well >= 0)
      res.record.events.push_back({0.0, cur_well});

    double t = 0;
    long n_steps = static_cast<long>(std::ceil(config.horizon / dt));
    if (target && target(x)) {
      res.hit = true;
      res.hit_time = 0;
      if (stop_on_hit) {
        res.record.terminal = x;
        return res;
      }
    }
    for (long n = 0; n < n_steps; ++n) {
      try {
        x = step_em(x, *spec, config.eps, dt, noise);
      } catch (const NonFiniteError&) {
        res.record.diverged = true;
        break;
      }
      t = (n + 1) * dt;
      while (probe_i < probe_times.size() && t >= probe_times[probe_i]) {
        res.probe_wells.push_back(wells->well_of(x));
        if (keep_probe_states) res.probe_states.push_back(x);
        ++probe_i;
      }
      if (record_events) {
        int w = wells->well_of(x);
        if (w != cur_well) res.record.events.push_back({t, w});
        cur_well = w;
      }
      if (target && !res.hit && target(x)) {
        res.hit = true;
        res.hit_time = t;
        if (stop_on_hit) break;
      }
      if (!res.hit && probe_i >= probe_times.size() && probe_times.size() > 0 &&
          !record_events && !target)
        break;
    }
    res.record.terminal = x;
    res.record.t_end = t;
    while (probe_i < probe_times.size()) {
      res.probe_wells.push_back(wells->well_of(x));
      if (keep_probe_states) res.probe_states.push_back(x);
      ++probe_i;
    }
    return res;
  }
};

/// Run an ensemble; per-path results land in pre-assigned slots so the
/// statistics are identical for any worker count.
inline std::vector<PathResult> run_ensemble(const PathDriver& driver,
                                            const Vec& x0) {
  std::vector<PathResult> results(driver.config.n_paths);
  parallel_for(driver.config.n_paths, driver.config.workers(),
               [&](std::size_t i) { results[i] = driver.run(x0, i); });
  return results;
}

/// Mean, standard error and a 95% normal CI.
struct Estimate {
  double mean = 0;
  double se = 0;
  int n = 0;
  double lo() const { return mean - 1.96 * se; }
  double hi() const { return mean + 1.96 * se; }
};

inline Estimate estimate_mean(const std::vector<double>& xs) {
  Estimate e;
  e.n = static_cast<int>(xs.size());
  if (e.n == 0) return e;
  double s = 0;
  for (double v : xs) s += v;
  e.mean = s / e.n;
  double q = 0;
  for (double v : xs) q += (v - e.mean) * (v - e.mean);
  e.se = e.n > 1 ? std::sqrt(q / (e.n - 1) / e.n) : 0;
  return e;
}

}  // namespace kramers
