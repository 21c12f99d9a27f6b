// Batch front end: analyze -> reduce -> simulate -> verify -> report.
#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "kramers/pipeline.hpp"
#include "kramers/verify.hpp"

using namespace kramers;

namespace {

// Exit codes: 0 success, 1 generic error, 2 structural assumption violated,
// 3 unknown potential.
int guarded(const std::function<void()>& fn) {
  try {
    fn();
    return 0;
  } catch (const AssumptionViolatedError& e) {
    std::cerr << "assumption violated: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateCriticalError& e) {
    std::cerr << "assumption violated: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::cerr << "error: " << msg << "\n";
    if (msg.rfind("unknown potential", 0) == 0) return 3;
    return 1;
  }
}

void write_meta(const RunManifest& mf, const std::string& stage) {
  json meta;
  meta["stage"] = stage;
  meta["unix_time"] = static_cast<long>(std::time(nullptr));
  write_json_file(mf.out_dir + "/meta_" + stage + ".json", meta);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metastable reduction toolkit"};
  app.require_subcommand(1);

  RunManifest mf;
  std::string config_file;
  app.add_option("--potential", mf.potential, "catalog name or spec file");
  app.add_option("--ell", mf.ell, "drift rotation, e.g. rot90:0.5");
  app.add_option("--out", mf.out_dir, "output directory");
  app.add_option("--seed", mf.seed, "RNG seed");
  app.add_option("--threads", mf.threads, "worker threads (or KRAMERS_THREADS)");
  app.add_option("--config", config_file, "experiment config JSON");

  auto* c_analyze = app.add_subcommand("analyze", "critical points + heights");
  auto* c_reduce = app.add_subcommand("reduce", "assemble the reduced chain");
  auto* c_sim = app.add_subcommand("simulate", "run a Monte Carlo experiment");
  std::string exp_kind = "exit";
  double exp_eps = 0.25;
  int exp_paths = 2000;
  double exp_dt = 0;
  auto* o_kind =
      c_sim->add_option("--experiment", exp_kind, "exit|transition|mixing|gibbs");
  auto* o_eps = c_sim->add_option("--eps", exp_eps, "temperature");
  auto* o_paths = c_sim->add_option("--paths", exp_paths, "ensemble size");
  auto* o_dt = c_sim->add_option("--dt", exp_dt, "EM step (0 = auto)");
  auto* c_verify = app.add_subcommand("verify", "run acceptance checks");
  bool verify_all = false;
  bool verify_fast = false;
  c_verify->add_flag("--all", verify_all, "run every check (default)");
  c_verify->add_flag("--fast", verify_fast, "algebraic checks only");
  auto* c_report = app.add_subcommand("report", "print a summary of outputs");
  double q_eps = 0;
  c_report->add_option("--q-samples", q_eps,
                       "also dump the gate test function sampled at this eps");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();
  CLI11_PARSE(app, argc, argv);

  if (!config_file.empty()) {
    json cfg = read_json_file(config_file);
    if (cfg.contains("potential")) mf.potential = cfg["potential"];
    if (cfg.contains("ell")) mf.ell = cfg["ell"];
    if (cfg.contains("out")) mf.out_dir = cfg["out"];
    if (cfg.contains("seed")) mf.seed = cfg["seed"];
    mf.experiment = cfg.value("experiment", json::object());
  }

  if (c_analyze->parsed()) {
    return guarded([&] {
      auto res = analyze(mf);
      write_analysis(mf, res);
      write_meta(mf, "analyze");
      std::cout << "minima: " << res.graph.minima.size()
                << "  saddles: " << res.graph.saddles.size()
                << "  d1: " << res.graph.d1 << "\n"
                << "wrote " << mf.out_dir << "/landscape_graph.json\n";
    });
  }
  if (c_reduce->parsed()) {
    return guarded([&] {
      if (!std::filesystem::exists(mf.out_dir + "/landscape_graph.json"))
        throw MissingStageOutputError("run analyze first: " + mf.out_dir +
                                      "/landscape_graph.json missing");
      auto res = analyze(mf);  // stages re-derive; outputs stay byte-stable
      auto chain = reduce(res);
      auto cs = long_time_structure(chain);
      write_reduction(mf, chain, cs);
      write_meta(mf, "reduce");
      std::cout << "states: " << chain.n() << "  d1: " << chain.d1 << "\n"
                << "wrote " << mf.out_dir << "/reduced_chain.json, "
                << mf.out_dir << "/chain_structure.json\n";
    });
  }
  if (c_sim->parsed()) {
    return guarded([&] {
      if (!std::filesystem::exists(mf.out_dir + "/reduced_chain.json"))
        throw MissingStageOutputError("run reduce first: " + mf.out_dir +
                                      "/reduced_chain.json missing");
      if (mf.experiment.is_null() || mf.experiment.empty())
        mf.experiment = json::object();
      // explicit flags override any experiment.json field
      if (o_kind->count() || !mf.experiment.contains("kind"))
        mf.experiment["kind"] = exp_kind;
      if (o_eps->count() || !mf.experiment.contains("eps"))
        mf.experiment["eps"] = exp_eps;
      if (o_paths->count() || !mf.experiment.contains("paths"))
        mf.experiment["paths"] = exp_paths;
      if (o_dt->count()) mf.experiment["dt"] = exp_dt;
      auto res = analyze(mf);
      auto chain = reduce(res);
      json stats = simulate(mf, res, chain);
      std::filesystem::create_directories(mf.out_dir);
      write_json_file(mf.out_dir + "/stats.json", stats);
      write_meta(mf, "simulate");
      std::cout << stats.dump(2) << "\n";
    });
  }
  if (c_verify->parsed()) {
    int rc = 0;
    int guard = guarded([&] {
      VerifyOptions opt;
      opt.fast_only = verify_fast && !verify_all;
      auto report = run_verification(mf, opt);
      std::filesystem::create_directories(mf.out_dir);
      write_json_file(mf.out_dir + "/verify_report.json", report.to_json());
      write_meta(mf, "verify");
      report.print(std::cout);
      if (!report.all_passed()) rc = 4;
    });
    return guard != 0 ? guard : rc;
  }
  if (c_report->parsed()) {
    return guarded([&] {
      for (const char* f : {"landscape_graph.json", "reduced_chain.json",
                            "chain_structure.json", "stats.json",
                            "verify_report.json"}) {
        std::string path = mf.out_dir + "/" + f;
        if (!std::filesystem::exists(path)) continue;
        json j = read_json_file(path);
        std::cout << "== " << f << " ==\n" << j.dump(2) << "\n";
      }
      if (q_eps > 0) {
        auto res = analyze(mf);
        // dump around the gates of the shallowest well
        int start = -1;
        for (std::size_t i = 0; i < res.graph.minima.size(); ++i)
          if (std::abs(res.graph.gamma[i] - res.graph.d1) < 1e-9)
            start = res.graph.minima[i];
        std::filesystem::create_directories(mf.out_dir);
        write_q_samples_csv(mf.out_dir + "/q_samples.csv", res.spec, res.cps,
                            res.graph, start, q_eps);
        write_json_file(mf.out_dir + "/plots.json",
                        json::array({plot_manifest_entry("q_samples.csv", "t",
                                                         "q", "line")}));
        std::cout << "wrote " << mf.out_dir << "/q_samples.csv\n";
      }
    });
  }
  return 0;
}
