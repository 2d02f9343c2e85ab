#pragma once

#include <random>
#include <vector>

#include "mcdode/estimate.hpp"
#include "mcdode/harness.hpp"
#include "mcdode/net.hpp"
#include "mcdode/scenarios.hpp"
#include "mcdode/tensor.hpp"

namespace test_support {

using namespace mcdode;

inline Network small7() {
  return build_network(parse_scenario(small7_scenario()));
}

inline TimeGrid small7_grid() {
  return parse_scenario(small7_scenario()).grid;
}

inline Network two_link() {
  return build_network(parse_scenario(two_link_scenario()));
}

/// Dense row-major mirror of a sparse matrix, the matmul reference.
inline std::vector<std::vector<double>> densify(const SparseMatrix &m) {
  std::vector<std::vector<double>> d(m.rows(),
                                     std::vector<double>(m.cols(), 0.0));
  for (const Triplet &t : m.to_triplets()) d[t.row][t.col] += t.value;
  return d;
}

inline std::vector<double> dense_multiply(
    const std::vector<std::vector<double>> &d, const std::vector<double> &v) {
  std::vector<double> out(d.size(), 0.0);
  for (std::size_t r = 0; r < d.size(); ++r)
    for (std::size_t c = 0; c < v.size(); ++c) out[r] += d[r][c] * v[c];
  return out;
}

/// Central finite differences of the frozen objective.
inline std::vector<DenseVector> fd_gradient(const ForwardState &st,
                                            const Scenario &scen,
                                            const DataSample &sample,
                                            const SolverConfig &cfg,
                                            std::vector<DenseVector> q,
                                            double h = 1e-3) {
  std::vector<DenseVector> g;
  for (std::size_t i = 0; i < q.size(); ++i) {
    DenseVector gi(VectorRole::Od, q[i].size());
    for (std::size_t j = 0; j < q[i].size(); ++j) {
      const double orig = q[i][j];
      q[i][j] = orig + h;
      const double up = frozen_loss(st, scen, sample, cfg, q);
      q[i][j] = orig - h;
      const double dn = frozen_loss(st, scen, sample, cfg, q);
      q[i][j] = orig;
      gi[j] = (up - dn) / (2.0 * h);
    }
    g.push_back(std::move(gi));
  }
  return g;
}

inline PortionTable uniform_portions(const Network &net, const TimeGrid &grid) {
  PortionTable p(net.num_classes());
  for (int i = 0; i < net.num_classes(); ++i) {
    p[i].resize(grid.num_intervals);
    for (int h = 0; h < grid.num_intervals; ++h) {
      p[i][h].resize(net.num_od());
      for (int rs = 0; rs < net.num_od(); ++rs) {
        const std::size_t n = net.od_paths[rs].size();
        std::vector<double> row(n, 1.0 / n);
        row.back() = 1.0;
        for (std::size_t s = 0; s + 1 < n; ++s) row.back() -= row[s];
        p[i][h][rs] = row;
      }
    }
  }
  return p;
}

/// Small demand scenario on the 7-link network with oracle portions.
inline Scenario small7_scenario_bundle(std::uint64_t seed,
                                       BaselineProtocol protocol = {},
                                       TruthBundle *truth_out = nullptr) {
  Scenario scen;
  const ScenarioConfig cfg = parse_scenario(small7_scenario());
  scen.net = build_network(cfg);
  scen.grid = cfg.grid;
  TruthBundle truth = synthesize_truth(scen.net, scen.grid, protocol, seed);
  scen.maps = truth.maps;
  scen.oracle_portions = truth.portions;
  if (truth_out) *truth_out = std::move(truth);
  return scen;
}

}  // namespace test_support
