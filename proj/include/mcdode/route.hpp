#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mcdode/net.hpp"
#include "mcdode/tensor.hpp"

namespace mcdode {

/// Route choice portions, one sparse matrix per class, path layout x OD
/// layout. Each (rs, h1) block is a simplex over the OD pair's paths.
struct ChoiceMatrix {
  std::vector<SparseMatrix> per_class;
};

/// Portions given explicitly, e.g. the synthetic "true" scenario.
/// portions[cls][h1][rs][slot] follows the path ordering of od_paths.
using PortionTable =
    std::vector<std::vector<std::vector<std::vector<double>>>>;

inline ChoiceMatrix fixed_portions(const Network &net, const TimeGrid &grid,
                                   const PortionTable &portions) {
  const LayoutSpec layout = net.layout(grid);
  ChoiceMatrix cm;
  for (int i = 0; i < net.num_classes(); ++i) {
    std::vector<Triplet> triplets;
    for (int h = 0; h < grid.num_intervals; ++h) {
      for (int rs = 0; rs < net.num_od(); ++rs) {
        const auto &row = portions.at(i).at(h).at(rs);
        if (row.size() != net.od_paths[rs].size())
          throw std::invalid_argument("portion row size mismatch");
        double sum = 0.0;
        for (double p : row) sum += p;
        if (std::abs(sum - 1.0) > 1e-9)
          throw std::invalid_argument("portions must sum to 1 per OD block");
        for (std::size_t slot = 0; slot < row.size(); ++slot)
          if (row[slot] != 0.0)
            triplets.push_back({layout.path_index(h, net.od_paths[rs][slot]),
                                layout.od_index(h, rs), row[slot]});
      }
    }
    cm.per_class.push_back(SparseMatrix::assemble(
        std::move(triplets), layout.path_size(), layout.od_size()));
  }
  return cm;
}

/// Multinomial logit on path travel times at the departure interval,
/// max-subtracted for overflow safety. theta in 1/seconds, per class.
inline ChoiceMatrix logit_portions(const Network &net, const TimeGrid &grid,
                                   const std::vector<DenseVector> &path_tt,
                                   const std::vector<double> &theta) {
  const LayoutSpec layout = net.layout(grid);
  ChoiceMatrix cm;
  for (int i = 0; i < net.num_classes(); ++i) {
    if (theta.at(i) <= 0.0) throw std::invalid_argument("theta must be > 0");
    std::vector<Triplet> triplets;
    for (int h = 0; h < grid.num_intervals; ++h) {
      for (int rs = 0; rs < net.num_od(); ++rs) {
        const auto &paths = net.od_paths[rs];
        double best = std::numeric_limits<double>::infinity();
        for (int k : paths)
          best = std::min(best, path_tt[i][layout.path_index(h, k)]);
        double denom = 0.0;
        std::vector<double> w(paths.size());
        for (std::size_t s = 0; s < paths.size(); ++s) {
          const double c = path_tt[i][layout.path_index(h, paths[s])];
          w[s] = std::exp(-theta[i] * (c - best));
          denom += w[s];
        }
        for (std::size_t s = 0; s < paths.size(); ++s)
          triplets.push_back({layout.path_index(h, paths[s]),
                              layout.od_index(h, rs), w[s] / denom});
      }
    }
    cm.per_class.push_back(SparseMatrix::assemble(
        std::move(triplets), layout.path_size(), layout.od_size()));
  }
  return cm;
}

/// Free-flow path times, the cost seed before any loading has run.
inline std::vector<DenseVector> free_flow_path_tt(const Network &net,
                                                  const TimeGrid &grid) {
  const LayoutSpec layout = net.layout(grid);
  std::vector<DenseVector> out;
  for (int i = 0; i < net.num_classes(); ++i) {
    DenseVector c(VectorRole::Path, layout.path_size());
    for (int k = 0; k < net.num_paths(); ++k) {
      double fftt = 0.0;
      for (int a : net.path_links[k]) fftt += net.links[a].free_flow_seconds(i);
      for (int h = 0; h < grid.num_intervals; ++h)
        c[layout.path_index(h, k)] = fftt;
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace mcdode
