#pragma once

#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcdode/estimate.hpp"
#include "mcdode/metrics.hpp"
#include "mcdode/net.hpp"
#include "mcdode/obs.hpp"
#include "mcdode/scenarios.hpp"
#include "mcdode/serde.hpp"

namespace mcdode {

struct ExperimentProtocol {
  BaselineProtocol base;
  std::vector<double> init_max = {15.0, 3.0};  // Unif(0, max) per class
};

inline ExperimentProtocol protocol_from_json(const json &j) {
  ExperimentProtocol p;
  if (j.contains("noise")) p.base.noise = j.at("noise").get<double>();
  if (j.contains("samples")) p.base.num_samples = j.at("samples").get<int>();
  if (j.contains("demand_max"))
    p.base.demand_max = j.at("demand_max").get<std::vector<double>>();
  if (j.contains("init_max"))
    p.init_max = j.at("init_max").get<std::vector<double>>();
  if (j.contains("observed_links"))
    p.base.observed_link_ids = j.at("observed_links").get<std::vector<int>>();
  if (j.contains("tt_links"))
    p.base.tt_link_ids = j.at("tt_links").get<std::vector<int>>();
  if (j.contains("hidden_links"))
    p.base.hidden_link_ids = j.at("hidden_links").get<std::vector<int>>();
  if (j.contains("flow_groups"))
    p.base.flow_groups_per_class =
        j.at("flow_groups").get<std::vector<int>>();
  return p;
}

inline SolverConfig solver_from_json(const json &j) {
  SolverConfig cfg;
  if (j.contains("method")) {
    const std::string m = j.at("method").get<std::string>();
    if (m == "gd") cfg.method = Method::Gd;
    else if (m == "sgd") cfg.method = Method::Sgd;
    else if (m == "adagrad") cfg.method = Method::Adagrad;
    else throw std::invalid_argument("unknown method: " + m);
  }
  if (j.contains("step")) cfg.step = j.at("step").get<double>();
  if (j.contains("iters")) cfg.max_iters = j.at("iters").get<int>();
  if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
  if (j.contains("w1")) cfg.w1 = j.at("w1").get<double>();
  if (j.contains("w2")) cfg.w2 = j.at("w2").get<double>();
  if (j.contains("w3")) cfg.w3 = j.at("w3").get<double>();
  if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
  if (j.contains("mode")) {
    const std::string m = j.at("mode").get<std::string>();
    if (m == "logit") cfg.choice_mode = ChoiceMode::Logit;
    else if (m == "oracle") cfg.choice_mode = ChoiceMode::Oracle;
    else throw std::invalid_argument("unknown estimator mode: " + m);
  }
  if (j.contains("theta")) cfg.theta = j.at("theta").get<std::vector<double>>();
  return cfg;
}

inline json resolve_scenario_doc(const std::string &ref) {
  if (ref == "builtin:small7") return small7_scenario();
  if (ref == "builtin:two_link") return two_link_scenario();
  return load_json(ref);
}

inline std::vector<DenseVector> draw_initial_demand(
    const Network &net, const TimeGrid &grid,
    const std::vector<double> &init_max, std::uint64_t seed) {
  const LayoutSpec layout = net.layout(grid);
  std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ull);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<DenseVector> q;
  for (int i = 0; i < net.num_classes(); ++i) {
    DenseVector qi(VectorRole::Od, layout.od_size());
    for (double &v : qi.values) v = unif(rng) * init_max.at(i);
    q.push_back(std::move(qi));
  }
  return q;
}

struct Metrics {
  // per class: observed flow, link flow, link travel time, OD demand
  std::vector<std::optional<double>> observed_flow;
  std::vector<std::optional<double>> link_flow;
  std::vector<std::optional<double>> link_tt;
  std::vector<std::optional<double>> od_demand;
};

/// Table-3 style scoring: rerun the loading with the estimated demand and
/// compare against the stored truth. Connector links are excluded from the
/// link flow/travel time scores.
inline Metrics score_estimate(const Scenario &scen,
                              const std::vector<DenseVector> &q_est,
                              const TruthBundle &truth,
                              const SolverConfig &cfg, std::uint64_t seed) {
  const Network &net = scen.net;
  const LayoutSpec layout = net.layout(scen.grid);
  const ForwardState st = forward(q_est, scen, cfg, seed);
  const int nc = net.num_classes();
  Metrics m;

  for (int i = 0; i < nc; ++i) {
    std::vector<double> ye, yt;
    for (std::size_t b = 0; b < st.y.size(); ++b)
      if (scen.maps.flow_row_class.at(b) == i) {
        ye.push_back(st.y[b]);
        yt.push_back(truth.y[b]);
      }
    m.observed_flow.push_back(r_square(ye, yt));

    std::vector<double> xe, xt, te, tt;
    for (int a = 0; a < net.num_links(); ++a) {
      if (net.links[a].is_connector) continue;
      for (int h = 0; h < scen.grid.num_intervals; ++h) {
        const int idx = layout.link_index(h, a);
        xe.push_back(st.x[i][idx]);
        xt.push_back(truth.x[i][idx]);
        te.push_back(st.t[i][idx]);
        tt.push_back(truth.t[i][idx]);
      }
    }
    m.link_flow.push_back(r_square(xe, xt));
    m.link_tt.push_back(r_square(te, tt));
    m.od_demand.push_back(
        r_square(q_est[i].values, truth.q[i].values));
  }
  return m;
}

inline json metrics_to_json(const Metrics &m) {
  auto arr = [](const std::vector<std::optional<double>> &v) {
    json a = json::array();
    for (const auto &x : v)
      a.push_back(x ? json(*x) : json(nullptr));
    return a;
  };
  return {{"observed_flow", arr(m.observed_flow)},
          {"link_flow", arr(m.link_flow)},
          {"link_tt", arr(m.link_tt)},
          {"od_demand", arr(m.od_demand)}};
}

/// Scenario bundle for the estimator: network, grid, maps and (for oracle
/// mode) the true portions.
inline Scenario make_scenario(const json &scenario_doc,
                              const ObservationMap &maps,
                              const PortionTable &oracle_portions) {
  Scenario scen;
  const ScenarioConfig cfg = parse_scenario(scenario_doc);
  scen.net = build_network(cfg);
  scen.grid = cfg.grid;
  scen.maps = maps;
  scen.oracle_portions = oracle_portions;
  return scen;
}

}  // namespace mcdode
