#pragma once

#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "mcdode/dar.hpp"
#include "mcdode/net.hpp"
#include "mcdode/route.hpp"
#include "mcdode/sim.hpp"
#include "mcdode/tensor.hpp"

namespace mcdode {

/// Flow incidence L_i (binary) and travel time weights M_i per class.
/// Rows are tagged with the single class they aggregate, or -1 if mixed;
/// the tags drive the per-class loss decomposition.
struct ObservationMap {
  std::vector<SparseMatrix> flow;  // |B| x N|A| per class
  std::vector<SparseMatrix> tt;    // |E| x N|A| per class
  std::vector<int> flow_row_class;
  std::vector<int> tt_row_class;

  int num_flow_rows() const { return flow.empty() ? 0 : flow.front().rows(); }
  int num_tt_rows() const { return tt.empty() ? 0 : tt.front().rows(); }

  void validate(const Network &net, const TimeGrid &grid) const {
    const LayoutSpec layout = net.layout(grid);
    auto check = [&](const SparseMatrix &m, bool binary) {
      if (m.cols() != layout.link_size())
        throw std::invalid_argument("observation map shape mismatch");
      for (const Triplet &t : m.to_triplets()) {
        const auto [h, a] = layout.link_unindex(t.col);
        if (net.links[a].is_connector)
          throw std::invalid_argument("observation references a connector");
        if (binary && t.value != 0.0 && t.value != 1.0)
          throw std::invalid_argument("flow incidence must be binary");
        if (t.value < 0.0 || t.value > 1.0)
          throw std::invalid_argument("weights must lie in [0,1]");
      }
    };
    for (const SparseMatrix &m : flow) check(m, true);
    for (const SparseMatrix &m : tt) check(m, false);
  }
};

inline DenseVector observe_flow(const ObservationMap &maps,
                                const std::vector<DenseVector> &x) {
  DenseVector y(VectorRole::Observation, maps.num_flow_rows());
  for (std::size_t i = 0; i < maps.flow.size(); ++i) {
    const std::vector<double> part = maps.flow[i].multiply(x.at(i).values);
    for (std::size_t b = 0; b < part.size(); ++b) y[b] += part[b];
  }
  return y;
}

inline DenseVector observe_tt(const ObservationMap &maps,
                              const std::vector<DenseVector> &t) {
  DenseVector z(VectorRole::Observation, maps.num_tt_rows());
  for (std::size_t i = 0; i < maps.tt.size(); ++i) {
    const std::vector<double> part = maps.tt[i].multiply(t.at(i).values);
    for (std::size_t e = 0; e < part.size(); ++e) z[e] += part[e];
  }
  return z;
}

struct DataSample {
  int day = 0;
  std::vector<double> y;
  std::vector<double> z;
};

struct BaselineProtocol {
  std::vector<double> demand_max = {300.0, 60.0};  // Unif(0, max) per class
  double noise = 0.1;                              // xi
  int num_samples = 8;
  std::vector<int> observed_link_ids = {3, 4, 5, 6};
  std::vector<int> tt_link_ids = {3, 4, 5, 6};
  std::vector<int> hidden_link_ids = {2};
  std::vector<int> flow_groups_per_class = {6, 4};

  void validate() const {
    if (noise < 0.0 || noise >= 1.0)
      throw std::invalid_argument("noise level must be in [0, 1)");
    if (num_samples < 1)
      throw std::invalid_argument("need at least one data sample");
  }
};

struct TruthBundle {
  std::vector<DenseVector> q;  // per class, od layout
  PortionTable portions;
  ObservationMap maps;
  std::vector<DenseVector> x;  // per class, link layout (simulated counts)
  std::vector<DenseVector> t;  // per class, link layout (seconds)
  DenseVector y;               // noiseless observed flow
  DenseVector z;               // noiseless observed travel time
  std::vector<DataSample> samples;
};

namespace detail {

inline std::vector<double> simplex_draw(std::size_t n, std::mt19937_64 &rng) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> w(n);
  double sum = 0.0;
  for (double &v : w) {
    v = exp1(rng);
    sum += v;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    w[i] /= sum;
    acc += w[i];
  }
  w[n - 1] = 1.0 - acc;  // rows must sum to 1 exactly
  return w;
}

}  // namespace detail

/// Synthesize the "true" scenario: uniform demand, random simplex route
/// portions, Bernoulli(0.5) flow aggregation over the observable links
/// (hidden links never referenced), per-link per-class travel time rows,
/// and multiplicative Unif(-xi, xi) noise drawn independently per day.
inline TruthBundle synthesize_truth(const Network &net, const TimeGrid &grid,
                                    const BaselineProtocol &protocol,
                                    std::uint64_t seed) {
  protocol.validate();
  const LayoutSpec layout = net.layout(grid);
  const int nc = net.num_classes();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  TruthBundle truth;
  for (int i = 0; i < nc; ++i) {
    DenseVector q(VectorRole::Od, layout.od_size());
    for (double &v : q.values) v = unif(rng) * protocol.demand_max.at(i);
    truth.q.push_back(std::move(q));
  }

  truth.portions.resize(nc);
  for (int i = 0; i < nc; ++i) {
    truth.portions[i].resize(grid.num_intervals);
    for (int h = 0; h < grid.num_intervals; ++h) {
      truth.portions[i][h].resize(net.num_od());
      for (int rs = 0; rs < net.num_od(); ++rs)
        truth.portions[i][h][rs] =
            detail::simplex_draw(net.od_paths[rs].size(), rng);
    }
  }

  // Observation maps. Each flow group belongs to one class and aggregates
  // a Bernoulli(0.5) subset of the observable links, replicated per
  // interval; empty subsets are redrawn.
  std::vector<int> observed;
  for (int id : protocol.observed_link_ids)
    observed.push_back(net.link_index_of_id.at(id));
  std::set<int> hidden;
  for (int id : protocol.hidden_link_ids)
    hidden.insert(net.link_index_of_id.at(id));
  for (int a : observed)
    if (hidden.count(a))
      throw std::invalid_argument("hidden link marked observable");

  int total_groups = 0;
  for (int g : protocol.flow_groups_per_class) total_groups += g;
  std::vector<std::vector<Triplet>> l_trip(nc);
  ObservationMap &maps = truth.maps;
  int group = 0;
  for (int i = 0; i < nc; ++i) {
    for (int g = 0; g < protocol.flow_groups_per_class.at(i); ++g, ++group) {
      std::vector<int> members;
      while (members.empty()) {
        members.clear();
        for (int a : observed)
          if (unif(rng) < 0.5) members.push_back(a);
      }
      for (int h = 0; h < grid.num_intervals; ++h) {
        const int row = group * grid.num_intervals + h;
        for (int a : members)
          l_trip[i].push_back({row, layout.link_index(h, a), 1.0});
      }
      for (int h = 0; h < grid.num_intervals; ++h)
        maps.flow_row_class.push_back(i);
    }
  }
  const int b_rows = total_groups * grid.num_intervals;
  for (int i = 0; i < nc; ++i)
    maps.flow.push_back(SparseMatrix::assemble(std::move(l_trip[i]), b_rows,
                                               layout.link_size()));

  // Direct per-link per-class travel time observations.
  std::vector<std::vector<Triplet>> m_trip(nc);
  int e_row = 0;
  for (int i = 0; i < nc; ++i) {
    for (int id : protocol.tt_link_ids) {
      const int a = net.link_index_of_id.at(id);
      for (int h = 0; h < grid.num_intervals; ++h) {
        m_trip[i].push_back({e_row, layout.link_index(h, a), 1.0});
        maps.tt_row_class.push_back(i);
        ++e_row;
      }
    }
  }
  for (int i = 0; i < nc; ++i)
    maps.tt.push_back(SparseMatrix::assemble(std::move(m_trip[i]), e_row,
                                             layout.link_size()));
  maps.validate(net, grid);

  // True network conditions from one loading run.
  const ChoiceMatrix p = fixed_portions(net, grid, truth.portions);
  PathDepartures f = PathDepartures::zeros(layout, nc);
  for (int i = 0; i < nc; ++i)
    f.per_class[i].values = p.per_class[i].multiply(truth.q[i].values);
  const SimOutput sim = run_dnl(net, grid, f, {}, seed);
  truth.x = sim.link_flow;
  truth.t = sim.link_tt;
  truth.y = observe_flow(maps, truth.x);
  truth.z = observe_tt(maps, truth.t);

  for (int m = 0; m < protocol.num_samples; ++m) {
    DataSample sample;
    sample.day = m;
    sample.y.reserve(truth.y.size());
    for (double v : truth.y.values)
      sample.y.push_back(v * (1.0 + protocol.noise * (2.0 * unif(rng) - 1.0)));
    sample.z.reserve(truth.z.size());
    for (double v : truth.z.values)
      sample.z.push_back(v * (1.0 + protocol.noise * (2.0 * unif(rng) - 1.0)));
    truth.samples.push_back(std::move(sample));
  }
  return truth;
}

}  // namespace mcdode
