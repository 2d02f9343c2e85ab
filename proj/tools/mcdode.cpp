// mcdode: synthesize scenarios, estimate multi-class dynamic OD demand,
// and score the results.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mcdode/harness.hpp"

namespace fs = std::filesystem;
using namespace mcdode;

namespace {

struct CommonOpts {
  std::string spec_path;
  long seed = -1;
  int workers = -1;
  std::string method;
  double step = -1.0;
  int iters = -1;
  double noise = -1.0;
  int samples = -1;
  std::string sweep;
};

struct Experiment {
  json spec;
  json scenario_doc;
  ExperimentProtocol protocol;
  SolverConfig solver;
  std::string out_dir;
  std::uint64_t seed = 1;
};

Experiment load_experiment(const CommonOpts &opts) {
  Experiment exp;
  exp.spec = load_json(opts.spec_path);
  // relative scenario paths resolve against the spec file's directory
  std::string ref = exp.spec.at("scenario").get<std::string>();
  if (ref.rfind("builtin:", 0) != 0 && !fs::path(ref).is_absolute() &&
      !fs::exists(ref))
    ref = (fs::path(opts.spec_path).parent_path() / ref).string();
  exp.scenario_doc = resolve_scenario_doc(ref);
  exp.protocol = protocol_from_json(exp.spec.value("protocol", json::object()));
  exp.solver = solver_from_json(exp.spec.value("solver", json::object()));
  exp.out_dir = exp.spec.value("out", std::string("out"));
  exp.seed = exp.spec.value("seed", 1);

  if (opts.seed >= 0) exp.seed = static_cast<std::uint64_t>(opts.seed);
  if (opts.workers > 0) exp.solver.workers = opts.workers;
  if (!opts.method.empty())
    exp.solver = [&] {
      SolverConfig c = exp.solver;
      json j = {{"method", opts.method}};
      SolverConfig m = solver_from_json(j);
      c.method = m.method;
      return c;
    }();
  if (opts.step > 0.0) exp.solver.step = opts.step;
  if (opts.iters >= 0) exp.solver.max_iters = opts.iters;
  if (opts.noise >= 0.0) exp.protocol.base.noise = opts.noise;
  if (opts.samples > 0) exp.protocol.base.num_samples = opts.samples;
  exp.solver.seed = exp.seed;
  fs::create_directories(exp.out_dir);
  return exp;
}

void write_trace_csv(const std::string &path, const EstimationResult &res) {
  std::ofstream out(path);
  out << "iter,loss,l1_car,l1_truck,l2_car,l2_truck,wall_ms\n";
  for (std::size_t i = 0; i < res.trace.size(); ++i) {
    const IterationRecord &r = res.trace[i];
    auto at = [](const std::vector<double> &v, std::size_t i) {
      return i < v.size() ? v[i] : 0.0;
    };
    out << i << ',' << r.loss << ',' << at(r.l1_by_class, 0) << ','
        << at(r.l1_by_class, 1) << ',' << at(r.l2_by_class, 0) << ','
        << at(r.l2_by_class, 1) << ',' << r.wall_ms << '\n';
  }
}

int cmd_synth(const CommonOpts &opts) {
  Experiment exp = load_experiment(opts);
  const ScenarioConfig cfg = parse_scenario(exp.scenario_doc);
  const Network net = build_network(cfg);
  const TruthBundle truth =
      synthesize_truth(net, cfg.grid, exp.protocol.base, exp.seed);
  save_json(exp.out_dir + "/truth.json", truth_to_json(truth));
  save_json(exp.out_dir + "/samples.json", samples_to_json(truth.samples));
  save_json(exp.out_dir + "/maps.json", maps_to_json(truth.maps));
  std::cout << "wrote " << exp.out_dir << "/{truth,samples,maps}.json ("
            << truth.samples.size() << " samples)\n";
  return 0;
}

EstimationResult run_one(const Experiment &exp, const TruthBundle &truth,
                         const std::vector<DataSample> &samples,
                         std::uint64_t seed) {
  Scenario scen =
      make_scenario(exp.scenario_doc, truth.maps, truth.portions);
  SolverConfig cfg = exp.solver;
  cfg.seed = seed;
  cfg.q_init = draw_initial_demand(scen.net, scen.grid,
                                   exp.protocol.init_max, seed);
  return run_estimation(scen, samples, cfg);
}

int cmd_estimate(const CommonOpts &opts) {
  Experiment exp = load_experiment(opts);
  const TruthBundle truth =
      truth_from_json(load_json(exp.out_dir + "/truth.json"));
  TruthBundle with_maps = truth;
  with_maps.maps = maps_from_json(load_json(exp.out_dir + "/maps.json"));
  const std::vector<DataSample> samples =
      samples_from_json(load_json(exp.out_dir + "/samples.json"));

  if (!opts.sweep.empty()) {
    std::ofstream out(exp.out_dir + "/sweep.csv");
    out << "run,param,final_loss,r2_od_car,r2_od_truck\n";
    const int repetitions = exp.spec.value("sweep_runs", 5);
    std::vector<double> step_grid = {0.01, 0.1, 1, 5, 10, 50, 100};
    std::vector<double> noise_grid = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<int> data_grid = {1, 4, 8, 16, 64, 256};
    int runs = repetitions;
    if (opts.sweep == "step") runs = static_cast<int>(step_grid.size());
    if (opts.sweep == "noise") runs = static_cast<int>(noise_grid.size());
    if (opts.sweep == "data") runs = static_cast<int>(data_grid.size());
    for (int r = 0; r < runs; ++r) {
      Experiment e = exp;
      TruthBundle t = with_maps;
      std::vector<DataSample> s = samples;
      double param = r;
      const std::uint64_t run_seed = exp.seed + 1000 * (r + 1);
      const ScenarioConfig scfg = parse_scenario(e.scenario_doc);
      const Network net = build_network(scfg);
      if (opts.sweep == "truth" || opts.sweep == "noise" ||
          opts.sweep == "data") {
        ExperimentProtocol p = e.protocol;
        if (opts.sweep == "noise") param = p.base.noise = noise_grid[r];
        if (opts.sweep == "data") param = p.base.num_samples = data_grid[r];
        t = synthesize_truth(net, scfg.grid, p.base, run_seed);
        s = t.samples;
      } else if (opts.sweep == "step") {
        param = e.solver.step = step_grid[r];
      } else if (opts.sweep != "init") {
        std::cerr << "unknown sweep kind: " << opts.sweep << '\n';
        return 2;
      }
      const EstimationResult res = run_one(e, t, s, run_seed);
      Scenario scen = make_scenario(e.scenario_doc, t.maps, t.portions);
      const Metrics m =
          score_estimate(scen, res.q, t, e.solver, run_seed + 7);
      out << r << ',' << param << ','
          << (res.trace.empty() ? 0.0 : res.trace.back().loss) << ','
          << (m.od_demand[0] ? *m.od_demand[0] : std::nan("")) << ','
          << (m.od_demand.size() > 1 && m.od_demand[1] ? *m.od_demand[1]
                                                       : std::nan(""))
          << '\n';
    }
    std::cout << "wrote " << exp.out_dir << "/sweep.csv\n";
    return 0;
  }

  const EstimationResult res = run_one(exp, with_maps, samples, exp.seed);
  save_json(exp.out_dir + "/result.json", result_to_json(res));
  write_trace_csv(exp.out_dir + "/result.csv", res);
  std::cout << "wrote " << exp.out_dir << "/result.{json,csv} ("
            << res.trace.size() << " iterations, converged="
            << (res.converged ? "yes" : "no") << ")\n";
  return 0;
}

int cmd_eval(const CommonOpts &opts) {
  Experiment exp = load_experiment(opts);
  TruthBundle truth = truth_from_json(load_json(exp.out_dir + "/truth.json"));
  truth.maps = maps_from_json(load_json(exp.out_dir + "/maps.json"));
  const json result = load_json(exp.out_dir + "/result.json");
  std::vector<DenseVector> q_est;
  for (const auto &q : result.at("q"))
    q_est.emplace_back(VectorRole::Od, q.get<std::vector<double>>());

  Scenario scen = make_scenario(exp.scenario_doc, truth.maps, truth.portions);
  const Metrics m = score_estimate(scen, q_est, truth, exp.solver,
                                   exp.seed + 7);
  save_json(exp.out_dir + "/metrics.json", metrics_to_json(m));
  std::cout << load_json(exp.out_dir + "/metrics.json").dump(2) << '\n';
  return 0;
}

int cmd_export(const CommonOpts &opts) {
  Experiment exp = load_experiment(opts);
  const json result = load_json(exp.out_dir + "/result.json");
  EstimationResult res;
  for (const auto &rec : result.at("iterations")) {
    IterationRecord r;
    r.loss = rec.at("loss").get<double>();
    r.wall_ms = rec.at("wall_ms").get<double>();
    r.l1_by_class = rec.at("l1").get<std::vector<double>>();
    r.l2_by_class = rec.at("l2").get<std::vector<double>>();
    res.trace.push_back(std::move(r));
  }
  write_trace_csv(exp.out_dir + "/result.csv", res);
  std::cout << "wrote " << exp.out_dir << "/result.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"multi-class dynamic OD demand estimation"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--spec", opts.spec_path, "experiment spec JSON")
        ->required();
    sub->add_option("--seed", opts.seed, "override experiment seed");
    sub->add_option("--workers", opts.workers, "parallel gradient workers");
    sub->add_option("--method", opts.method, "gd | sgd | adagrad");
    sub->add_option("--step", opts.step, "optimizer step size");
    sub->add_option("--iters", opts.iters, "max iterations");
    sub->add_option("--noise", opts.noise, "observation noise level");
    sub->add_option("--samples", opts.samples, "number of data samples");
  };

  CLI::App *synth = app.add_subcommand("synth", "generate synthetic truth");
  add_common(synth);
  CLI::App *estimate = app.add_subcommand("estimate", "run the estimation");
  add_common(estimate);
  estimate->add_option("--sweep", opts.sweep,
                       "init | truth | step | noise | data");
  CLI::App *eval = app.add_subcommand("eval", "score a result against truth");
  add_common(eval);
  CLI::App *exp = app.add_subcommand("export", "re-emit result CSV");
  add_common(exp);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(opts);
    if (estimate->parsed()) return cmd_estimate(opts);
    if (eval->parsed()) return cmd_eval(opts);
    if (exp->parsed()) return cmd_export(opts);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
