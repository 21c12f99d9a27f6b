#pragma once

#include <filesystem>
#include <sstream>

#include "kramers/experiments.hpp"
#include "kramers/io.hpp"
#include "kramers/testfn.hpp"

namespace kramers {

/// Resolved inputs for one pipeline run: which potential, which stages, and
/// where outputs go.
struct RunManifest {
  std::string potential = "doublewell1d";  // catalog name or spec file path
  std::string ell;                         // e.g. "rot90:0.5"
  std::string out_dir = "out";
  uint64_t seed = 12345;
  int threads = 0;
  json experiment;  // simulate-stage config
};

struct AnalysisResult {
  PotentialSpec spec;
  std::vector<CriticalPoint> cps;
  LandscapeGraph graph;
  FieldConditionReport field_report;
};

inline PotentialSpec resolve_potential(const RunManifest& mf) {
  std::string ell_mode = "none";
  double ell_c = 0;
  if (!mf.ell.empty()) {
    if (mf.ell.rfind("rot90:", 0) == 0) {
      ell_mode = "rot90_scaled";
      ell_c = std::stod(mf.ell.substr(6));
    } else {
      throw std::runtime_error("unknown --ell spec: " + mf.ell);
    }
  }
  auto names = catalog_names();
  if (std::find(names.begin(), names.end(), mf.potential) != names.end())
    return catalog(mf.potential, ell_mode, ell_c);
  if (std::filesystem::exists(mf.potential))
    return potential_from_json(read_json_file(mf.potential));
  std::ostringstream msg;
  msg << "unknown potential '" << mf.potential << "'; catalog:";
  for (const auto& n : names) msg << " " << n;
  throw std::runtime_error(msg.str());
}

/// landscape + heights: locate critical points, verify the structural field
/// conditions, shift min U to 0, and build the saddle connectivity graph.
inline AnalysisResult analyze(const RunManifest& mf) {
  AnalysisResult res;
  res.spec = resolve_potential(mf);
  res.field_report = verify_field_conditions(res.spec, 2000);
  if (!res.field_report.pass)
    throw AssumptionViolatedError(
        "field conditions violated: max|div ell| = " +
        std::to_string(res.field_report.max_divergence) +
        ", max|gradU.ell| = " +
        std::to_string(res.field_report.max_grad_dot_ell));
  res.cps = find_critical_points(res.spec);
  shift_to_zero(res.spec, res.cps);
  double ell_at_crit = max_ell_at_critical(res.spec, res.cps);
  if (ell_at_crit > 1e-8)
    throw AssumptionViolatedError("ell does not vanish at critical points");
  res.graph = build_landscape_graph(res.spec, res.cps);
  return res;
}

inline void write_analysis(const RunManifest& mf, const AnalysisResult& res) {
  std::filesystem::create_directories(mf.out_dir);
  json j = landscape_graph_to_json(mf.potential, res.cps, res.graph);
  j["field_conditions"] = {{"max_divergence", res.field_report.max_divergence},
                           {"max_grad_dot_ell", res.field_report.max_grad_dot_ell},
                           {"n_samples", res.field_report.n_samples},
                           {"pass", res.field_report.pass}};
  j["origin_shift"] = res.spec.origin_shift;
  // The search certifies the box contents only; finiteness outside is a
  // hypothesis of the model, not a computed fact.
  j["certification"] = "no further critical points found inside box";
  write_json_file(mf.out_dir + "/landscape_graph.json", j);
}

inline ReducedChain reduce(const AnalysisResult& analysis) {
  return assemble_chain(analysis.graph, analysis.cps, analysis.spec);
}

inline void write_reduction(const RunManifest& mf, const ReducedChain& chain,
                            const ChainStructure& cs) {
  std::filesystem::create_directories(mf.out_dir);
  write_json_file(mf.out_dir + "/reduced_chain.json", reduced_chain_to_json(chain));
  write_json_file(mf.out_dir + "/chain_structure.json", chain_structure_to_json(cs));
}

inline SimConfig sim_config_from_json(const json& j, uint64_t seed, int threads) {
  SimConfig c;
  c.eps = j.value("eps", 0.1);
  c.dt = j.value("dt", 0.0);
  c.horizon = j.value("horizon", 1e9);
  c.n_paths = j.value("paths", 1000);
  c.seed = j.value("seed", seed);
  c.well_r0 = j.value("well_r0", 0.45);
  c.threads = j.value("threads", threads);
  return c;
}

/// Per-path well entry/exit events for the transition experiment.
inline void write_events_csv(const std::string& path,
                             const std::vector<PathResult>& results) {
  std::ofstream out(path);
  out << "path,time,well\n";
  for (std::size_t p = 0; p < results.size(); ++p)
    for (const auto& ev : results[p].record.events)
      out << p << "," << ev.t << "," << ev.well << "\n";
}

/// Sampling dump of the gate test function along the e1 line through each
/// gate saddle: x coordinates, p value, region label.
inline void write_q_samples_csv(const std::string& path,
                                const PotentialSpec& spec,
                                const std::vector<CriticalPoint>& cps,
                                const LandscapeGraph& graph, int m_id,
                                double eps, int n_samples = 400) {
  QPartition q(spec, cps, graph, m_id);
  std::ofstream out(path);
  out << "t";
  for (int k = 0; k < spec.dim; ++k) out << ",x" << k;
  out << ",q,region\n";
  int pos = -1;
  for (std::size_t i = 0; i < graph.minima.size(); ++i)
    if (graph.minima[i] == m_id) pos = static_cast<int>(i);
  for (int sid : graph.gates[pos]) {
    auto fr = make_saddle_frame(spec, cps, sid, m_id);
    double span = 3.0 * fr.c_halfwidth(eps);
    for (int k = 0; k <= n_samples; ++k) {
      double t = -span + 2 * span * k / n_samples;
      Vec x = fr.sigma + t * fr.e_basis.col(0);
      const char* label = "well";
      switch (q.classify(x, eps)) {
        case QRegion::WellSide1: label = "well1"; break;
        case QRegion::WellSide0: label = "well0"; break;
        case QRegion::SaddleRect: label = "saddle"; break;
        case QRegion::OutsideK: label = "outside"; break;
      }
      out << t;
      for (int d = 0; d < spec.dim; ++d) out << "," << x[d];
      out << "," << q.value(x, eps) << "," << label << "\n";
    }
  }
}

/// Declarative plot manifest describing the CSV artifacts (data-only).
inline json plot_manifest_entry(const std::string& file, const std::string& x,
                                const std::string& y, const std::string& kind) {
  return {{"file", file}, {"x", x}, {"y", y}, {"kind", kind}};
}

/// Dispatch a simulate-stage experiment; returns the stats payload.
inline json simulate(const RunManifest& mf, const AnalysisResult& analysis,
                     const ReducedChain& chain) {
  const json& e = mf.experiment;
  std::string kind = e.value("kind", "exit");
  SimConfig config = sim_config_from_json(e, mf.seed, mf.threads);
  config.warn_if_coarse();
  WellClassifier wells(analysis.spec, analysis.cps, config.well_r0);

  json out;
  out["schema_version"] = kSchemaVersion;
  out["kind"] = kind;
  out["config"] = {{"eps", config.eps},       {"dt", config.step()},
                   {"paths", config.n_paths}, {"seed", config.seed},
                   {"well_r0", config.well_r0}};

  auto min_by_rank = [&](int rank) {
    std::vector<int> ms = wells.minima();
    if (rank < 0 || rank >= static_cast<int>(ms.size()))
      throw std::runtime_error("experiment: minimum rank out of range");
    return ms[rank];
  };

  if (kind == "exit") {
    int from = e.value("from", 0), to = e.value("to", 1);
    auto r = exit_time_experiment(analysis.spec, analysis.cps, wells, chain,
                                  min_by_rank(from), min_by_rank(to), config);
    out["mean_exit_time"] = r.tau.mean;
    out["ci95"] = {r.tau.lo(), r.tau.hi()};
    out["n_timeouts"] = r.n_timeouts;
    out["n_diverged"] = r.n_diverged;
    out["predicted"] = r.predicted;
  } else if (kind == "transition") {
    int from = e.value("from", 0);
    double t = e.value("t", 1.0);
    std::vector<PathResult> raw;
    auto r = transition_law_experiment(analysis.spec, analysis.cps, wells,
                                       chain, min_by_rank(from), t, config,
                                       &raw);
    std::filesystem::create_directories(mf.out_dir);
    write_events_csv(mf.out_dir + "/events.csv", raw);
    write_json_file(mf.out_dir + "/plots.json",
                    json::array({plot_manifest_entry("events.csv", "time",
                                                     "well", "step")}));
    out["t"] = t;
    out["probe_time"] = r.probe_time;
    out["rho_eps"] = r.rho_eps;
    out["tv_distance"] = r.tv_distance;
    out["start_well_mass_rho"] = r.start_well_mass_rho;
    out["outside_mass"] = r.outside_mass;
    out["mean_outside_fraction"] = r.mean_outside_fraction;
    json hist = json::object();
    for (auto& [w, m] : r.histogram) hist[std::to_string(w)] = m;
    out["histogram"] = hist;
  } else if (kind == "mixing") {
    int m = e.value("at", 0);
    double eps2 = e.value("eps2", config.eps / 4);
    double theta = e.value("theta_exp", 0.25);
    Vec offset = Vec::Zero(analysis.spec.dim);
    offset[0] = e.value("offset", 0.1);
    auto r = mixing_experiment(analysis.spec, analysis.cps, min_by_rank(m),
                               config.eps, eps2, theta, config.n_paths,
                               config.seed, offset, config.workers());
    out["gap4"] = {r.gap4_eps1, r.gap4_eps2};
    out["fitted_power"] = r.fitted_power;
    out["cov_rel_err"] = r.cov_rel_err;
  } else if (kind == "gibbs") {
    std::vector<double> eps_list =
        e.value("eps_list", std::vector<double>{0.2, 0.1, 0.05});
    json rows = json::array();
    for (double eps : eps_list) {
      auto r = gibbs_checks(analysis.spec, analysis.cps, wells, eps);
      json row;
      row["eps"] = eps;
      row["z_ratio"] = r.z_ratio;
      json wr = json::object();
      for (auto& [id, v] : r.well_ratios) wr[std::to_string(id)] = v;
      row["well_ratios"] = wr;
      rows.push_back(row);
    }
    out["ratios"] = rows;
  } else {
    throw std::runtime_error("unknown experiment kind: " + kind);
  }
  return out;
}

}  // namespace kramers
