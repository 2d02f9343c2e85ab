#pragma once

#include <algorithm>
#include <unordered_map>
#include <vector>

#include "mcdode/net.hpp"
#include "mcdode/sim.hpp"
#include "mcdode/tensor.hpp"

namespace mcdode {

/// Step curve of cumulative arrivals; times are appended in simulation
/// order, so they arrive nondecreasing.
struct CumulativeCurve {
  std::vector<double> times;
  std::vector<int> counts;  // cumulative, parallel to times

  void add(double t) {
    if (!times.empty() && times.back() == t) {
      counts.back()++;
    } else {
      times.push_back(t);
      counts.push_back(total() + 1);
    }
  }

  int total() const { return counts.empty() ? 0 : counts.back(); }

  /// Number of arrivals strictly before t. An arrival exactly on an
  /// interval boundary therefore belongs to the later interval.
  int before(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0;
    return counts[it - times.begin() - 1];
  }
};

/// Growing-tree store: link -> class -> departure interval -> path ->
/// cumulative curve. Leaves exist only for combinations actually traversed.
class TreeCurveStore {
 public:
  using PathMap = std::unordered_map<int, CumulativeCurve>;
  using IntervalMap = std::unordered_map<int, PathMap>;
  using ClassMap = std::unordered_map<int, IntervalMap>;

  void record(int link, int cls, int h1, int path, double t) {
    tree_[link][cls][h1][path].add(t);
  }

  int query(int link, int cls, int h1, int path, double t) const {
    const CumulativeCurve *c = find(link, cls, h1, path);
    return c ? c->before(t) : 0;
  }

  const CumulativeCurve *find(int link, int cls, int h1, int path) const {
    auto la = tree_.find(link);
    if (la == tree_.end()) return nullptr;
    auto ci = la->second.find(cls);
    if (ci == la->second.end()) return nullptr;
    auto hi = ci->second.find(h1);
    if (hi == ci->second.end()) return nullptr;
    auto pi = hi->second.find(path);
    if (pi == hi->second.end()) return nullptr;
    return &pi->second;
  }

  std::size_t leaf_count() const {
    std::size_t n = 0;
    for (const auto &[a, cm] : tree_)
      for (const auto &[i, im] : cm)
        for (const auto &[h, pm] : im) n += pm.size();
    return n;
  }

  long total_records() const {
    long n = 0;
    for (const auto &[a, cm] : tree_)
      for (const auto &[i, im] : cm)
        for (const auto &[h, pm] : im)
          for (const auto &[k, curve] : pm) n += curve.total();
    return n;
  }

  const std::unordered_map<int, ClassMap> &links() const { return tree_; }

  EntryHook hook() {
    return [this](int link, int cls, int h1, int path, double t) {
      record(link, cls, h1, path, t);
    };
  }

 private:
  std::unordered_map<int, ClassMap> tree_;
};

/// One sparse matrix per class, link layout x path layout.
struct DarMatrix {
  std::vector<SparseMatrix> per_class;
};

/// DAR entries from curve differences over each interval, divided by the
/// realized (post-rounding) departures the simulation actually loaded.
inline DarMatrix assemble_dar(const TreeCurveStore &store,
                              const std::vector<std::vector<int>> &realized,
                              const TimeGrid &grid, const LayoutSpec &layout) {
  const int nc = static_cast<int>(realized.size());
  std::vector<std::vector<Triplet>> triplets(nc);
  for (const auto &[a, class_map] : store.links()) {
    for (const auto &[cls, interval_map] : class_map) {
      for (const auto &[h1, path_map] : interval_map) {
        for (const auto &[k, curve] : path_map) {
          const int n = realized[cls][layout.path_index(h1, k)];
          if (n == 0) continue;
          for (int h2 = 0; h2 < grid.num_intervals; ++h2) {
            const double lo = h2 * grid.interval_length;
            const double hi = lo + grid.interval_length;
            int cnt = curve.before(hi) - curve.before(lo);
            if (h2 + 1 == grid.num_intervals)
              cnt = curve.total() - curve.before(lo);
            if (cnt == 0) continue;
            triplets[cls].push_back({layout.link_index(h2, a),
                                     layout.path_index(h1, k),
                                     static_cast<double>(cnt) / n});
          }
        }
      }
    }
  }
  DarMatrix dar;
  for (int i = 0; i < nc; ++i)
    dar.per_class.push_back(SparseMatrix::assemble(
        std::move(triplets[i]), layout.link_size(), layout.path_size()));
  return dar;
}

/// Exact DAR by direct trajectory counting; validation reference for
/// assemble_dar.
inline DarMatrix naive_dar_oracle(const std::vector<TrajEvent> &log,
                                  const std::vector<std::vector<int>> &realized,
                                  const TimeGrid &grid,
                                  const LayoutSpec &layout) {
  const int nc = static_cast<int>(realized.size());
  // counts[(cls, h2*|A|+a, h1*Pi+k)]
  std::vector<std::unordered_map<long, int>> counts(nc);
  for (const TrajEvent &e : log) {
    const int h2 = interval_of(e.entry, grid);
    const long key = static_cast<long>(layout.link_index(h2, e.link)) *
                         layout.path_size() +
                     layout.path_index(e.h1, e.path);
    counts[e.cls][key]++;
  }
  DarMatrix dar;
  for (int i = 0; i < nc; ++i) {
    std::vector<Triplet> triplets;
    for (const auto &[key, cnt] : counts[i]) {
      const int row = static_cast<int>(key / layout.path_size());
      const int col = static_cast<int>(key % layout.path_size());
      const int n = realized[i][col];
      if (n == 0) continue;
      triplets.push_back({row, col, static_cast<double>(cnt) / n});
    }
    dar.per_class.push_back(SparseMatrix::assemble(
        std::move(triplets), layout.link_size(), layout.path_size()));
  }
  return dar;
}

}  // namespace mcdode
