#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <vector>

#include "mcdode/net.hpp"
#include "mcdode/tensor.hpp"

namespace mcdode {

/// Requested departures, one path-layout vector per class (vehicles per
/// departure interval, real valued).
struct PathDepartures {
  std::vector<DenseVector> per_class;

  static PathDepartures zeros(const LayoutSpec &layout, int num_classes) {
    PathDepartures f;
    for (int i = 0; i < num_classes; ++i)
      f.per_class.emplace_back(VectorRole::Path, layout.path_size());
    return f;
  }
};

struct Vehicle {
  int cls = 0;
  int path = 0;       // global path index
  int h1 = 0;         // departure interval
  double depart = 0;  // seconds
  int position = -1;  // index into the path's link sequence
  std::vector<double> entry_times;  // per traversed link, strictly increasing
  bool completed = false;
  double complete_time = 0.0;
};

struct TrajEvent {
  int vehicle = 0;
  int cls = 0;
  int path = 0;
  int h1 = 0;
  int link = 0;
  double entry = 0.0;
};

/// Invoked once per (vehicle, link-entry) event during loading.
using EntryHook =
    std::function<void(int link, int cls, int h1, int path, double t)>;

struct SimOutput {
  std::vector<DenseVector> link_tt;   // per class, link layout, seconds
  std::vector<DenseVector> path_tt;   // per class, path layout, seconds
  std::vector<DenseVector> link_flow; // per class, link layout, entry counts
  std::vector<std::vector<int>> realized_departures;  // per class, path layout
  std::vector<Vehicle> vehicles;
  std::vector<long> generated_per_class;
  std::vector<long> completed_per_class;
  // mean in-queue delay per (link, interval), classes pooled; drives the
  // marginal travel time derivative
  std::vector<double> mean_delay;
  std::vector<long> delay_samples;
};

namespace detail {

struct LinkState {
  std::deque<int> queue;      // vehicle ids, FIFO
  double occupancy_pce = 0.0;
  double budget_pce = 0.0;
};

}  // namespace detail

/// Mesoscopic multi-class loading: spatial queue per link with a shared
/// PCE capacity/holding budget, unsignalized FIFO merges, fixed paths.
/// Deterministic given the seed. Per loading step: generation, routing
/// (paths fixed at generation), node evolution, link evolution, statistics.
inline SimOutput run_dnl(const Network &net, const TimeGrid &grid,
                         const PathDepartures &f, const EntryHook &hook,
                         std::uint64_t rng_seed,
                         std::vector<TrajEvent> *trajectory = nullptr) {
  const LayoutSpec layout = net.layout(grid);
  const int nc = net.num_classes();
  const double dt = grid.loading_step;

  if (static_cast<int>(f.per_class.size()) != nc)
    throw std::invalid_argument("departures class count mismatch");
  for (const DenseVector &v : f.per_class) {
    if (static_cast<int>(v.size()) != layout.path_size())
      throw std::invalid_argument("departures size mismatch");
    for (double x : v.values)
      if (!std::isfinite(x) || x < 0.0)
        throw std::invalid_argument("departure flow must be finite and >= 0");
  }

  SimOutput out;
  out.realized_departures.assign(nc, std::vector<int>(layout.path_size(), 0));
  out.generated_per_class.assign(nc, 0);
  out.completed_per_class.assign(nc, 0);
  out.mean_delay.assign(layout.link_size(), 0.0);
  out.delay_samples.assign(layout.link_size(), 0);

  // Stochastic rounding of fractional interval flows into whole vehicles.
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Vehicle> &vehicles = out.vehicles;
  for (int i = 0; i < nc; ++i) {
    for (int h1 = 0; h1 < grid.num_intervals; ++h1) {
      for (int k = 0; k < net.num_paths(); ++k) {
        const double flow = f.per_class[i][layout.path_index(h1, k)];
        int n = static_cast<int>(std::floor(flow));
        const double frac = flow - n;
        if (frac > 0.0 && unif(rng) < frac) ++n;
        out.realized_departures[i][layout.path_index(h1, k)] = n;
        for (int v = 0; v < n; ++v) {
          Vehicle veh;
          veh.cls = i;
          veh.path = k;
          veh.h1 = h1;
          // departures spread evenly over the interval
          veh.depart =
              (h1 + (v + 0.5) / n) * grid.interval_length;
          vehicles.push_back(veh);
        }
        out.generated_per_class[i] += n;
      }
    }
  }
  std::vector<int> spawn_order(vehicles.size());
  for (std::size_t v = 0; v < vehicles.size(); ++v) spawn_order[v] = (int)v;
  std::stable_sort(spawn_order.begin(), spawn_order.end(), [&](int a, int b) {
    return vehicles[a].depart < vehicles[b].depart;
  });

  const int na = net.num_links();
  std::vector<detail::LinkState> state(na);
  std::vector<double> ready(vehicles.size(), 0.0);

  // Shared PCE capacity and holding, anchored on class 0.
  const double base_pce = net.classes[0].pce;
  std::vector<double> cap_pce_step(na, 0.0), holding_pce(na, 0.0);
  for (int a = 0; a < na; ++a) {
    if (net.links[a].is_connector) continue;
    cap_pce_step[a] = net.links[a].capacity_vph[0] * base_pce * dt / 3600.0;
    holding_pce[a] =
        net.links[a].holding_vpm[0] * base_pce * net.links[a].length_miles;
  }
  double max_pce = 0.0;
  for (const VehicleClass &c : net.classes) max_pce = std::max(max_pce, c.pce);

  // travel time accumulators, keyed by entry interval
  std::vector<std::vector<double>> tt_sum(nc),
      tt_cnt(nc);
  for (int i = 0; i < nc; ++i) {
    tt_sum[i].assign(layout.link_size(), 0.0);
    tt_cnt[i].assign(layout.link_size(), 0.0);
  }
  std::vector<std::vector<double>> flow_cnt(nc);
  for (int i = 0; i < nc; ++i) flow_cnt[i].assign(layout.link_size(), 0.0);
  std::vector<double> delay_sum(layout.link_size(), 0.0);
  std::vector<double> path_tt_sum(layout.path_size() * nc, 0.0);
  std::vector<long> path_tt_cnt(layout.path_size() * nc, 0);

  auto record_entry = [&](int vid, int a, double t) {
    Vehicle &veh = vehicles[vid];
    veh.entry_times.push_back(t);
    const int h2 = interval_of(t, grid);
    flow_cnt[veh.cls][layout.link_index(h2, a)] += 1.0;
    if (hook) hook(a, veh.cls, veh.h1, veh.path, t);
    if (trajectory)
      trajectory->push_back({vid, veh.cls, veh.path, veh.h1, a, t});
  };

  auto record_exit = [&](int vid, int a, double entry, double now) {
    Vehicle &veh = vehicles[vid];
    const int h2 = interval_of(entry, grid);
    const double dur = now - entry;
    tt_sum[veh.cls][layout.link_index(h2, a)] += dur;
    tt_cnt[veh.cls][layout.link_index(h2, a)] += 1.0;
    if (!net.links[a].is_connector) {
      // delay beyond the step-quantized empty-link traversal, so pure
      // time discretization never registers as congestion
      const double fftt = net.links[a].free_flow_seconds(veh.cls);
      const double quantized = std::ceil(fftt / dt) * dt;
      delay_sum[layout.link_index(h2, a)] += dur - quantized;
      out.delay_samples[layout.link_index(h2, a)] += 1;
    }
  };

  auto complete = [&](int vid, double now) {
    Vehicle &veh = vehicles[vid];
    veh.completed = true;
    veh.complete_time = now;
    out.completed_per_class[veh.cls]++;
    const std::size_t idx =
        static_cast<std::size_t>(veh.cls) * layout.path_size() +
        layout.path_index(veh.h1, veh.path);
    path_tt_sum[idx] += now - veh.depart;
    path_tt_cnt[idx] += 1;
  };

  std::size_t next_spawn = 0;
  const int total_steps = grid.total_steps();
  for (int step = 0; step < total_steps; ++step) {
    const double now = step * dt;
    const double step_end = now + dt;

    // 1. vehicle generation
    while (next_spawn < spawn_order.size() &&
           vehicles[spawn_order[next_spawn]].depart < step_end) {
      const int vid = spawn_order[next_spawn++];
      Vehicle &veh = vehicles[vid];
      const int first = net.path_links[veh.path].front();
      veh.position = 0;
      record_entry(vid, first, veh.depart);
      state[first].queue.push_back(vid);
      state[first].occupancy_pce += net.classes[veh.cls].pce;
      ready[vid] = veh.depart + net.links[first].free_flow_seconds(veh.cls);
    }

    // 2. routing: paths are fixed at generation time

    // 4. link evolution: replenish per-step service budgets (sub-vehicle
    // remainders carry, unused whole-vehicle service does not)
    for (int a = 0; a < na; ++a) {
      if (net.links[a].is_connector) continue;
      state[a].budget_pce =
          std::min(state[a].budget_pce, max_pce) + cap_pce_step[a];
    }

    // 3. node evolution: global FIFO over all link heads ready by now
    using Cand = std::pair<double, int>;  // (ready time, vehicle id)
    std::priority_queue<Cand, std::vector<Cand>, std::greater<Cand>> heap;
    std::vector<char> blocked(na, 0);
    for (int a = 0; a < na; ++a)
      if (!state[a].queue.empty() && ready[state[a].queue.front()] <= now)
        heap.push({ready[state[a].queue.front()], state[a].queue.front()});

    while (!heap.empty()) {
      const int vid = heap.top().second;
      heap.pop();
      Vehicle &veh = vehicles[vid];
      const auto &links = net.path_links[veh.path];
      const int a = links[veh.position];
      if (blocked[a]) continue;
      detail::LinkState &cur = state[a];
      if (cur.queue.empty() || cur.queue.front() != vid) continue;
      const double pce = net.classes[veh.cls].pce;
      if (!net.links[a].is_connector && cur.budget_pce < pce) {
        blocked[a] = 1;
        continue;
      }
      const bool last = veh.position + 1 == static_cast<int>(links.size());
      int nl = -1;
      if (!last) {
        nl = links[veh.position + 1];
        if (!net.links[nl].is_connector &&
            state[nl].occupancy_pce + pce > holding_pce[nl]) {
          blocked[a] = 1;  // spillback: FIFO head stalls the whole link
          continue;
        }
      }
      // move
      cur.queue.pop_front();
      cur.occupancy_pce -= pce;
      if (!net.links[a].is_connector) cur.budget_pce -= pce;
      record_exit(vid, a, veh.entry_times.back(), now);
      if (last) {
        complete(vid, now);
      } else {
        veh.position++;
        record_entry(vid, nl, now);
        ready[vid] = now + net.links[nl].free_flow_seconds(veh.cls);
        state[nl].queue.push_back(vid);
        state[nl].occupancy_pce += pce;
        // terminal connectors drain instantly
        const bool at_terminal =
            net.links[nl].is_connector &&
            veh.position + 1 == static_cast<int>(links.size());
        if (at_terminal) {
          state[nl].queue.pop_back();
          state[nl].occupancy_pce -= pce;
          record_exit(vid, nl, now, now);
          complete(vid, now);
        }
      }
      if (!cur.queue.empty() && ready[cur.queue.front()] <= now)
        heap.push({ready[cur.queue.front()], cur.queue.front()});
    }

    // 5. statistics are accumulated inside record_entry/record_exit
  }

  // assemble outputs
  for (int i = 0; i < nc; ++i) {
    DenseVector tt(VectorRole::Link, layout.link_size());
    for (int a = 0; a < na; ++a) {
      const double fftt = net.links[a].free_flow_seconds(i);
      for (int h = 0; h < grid.num_intervals; ++h) {
        const int idx = layout.link_index(h, a);
        tt[idx] = tt_cnt[i][idx] > 0 ? tt_sum[i][idx] / tt_cnt[i][idx] : fftt;
      }
    }
    out.link_tt.push_back(std::move(tt));

    DenseVector ptt(VectorRole::Path, layout.path_size());
    for (int k = 0; k < net.num_paths(); ++k) {
      double fftt = 0.0;
      for (int a : net.path_links[k]) fftt += net.links[a].free_flow_seconds(i);
      for (int h = 0; h < grid.num_intervals; ++h) {
        const std::size_t idx =
            static_cast<std::size_t>(i) * layout.path_size() +
            layout.path_index(h, k);
        ptt[layout.path_index(h, k)] =
            path_tt_cnt[idx] > 0 ? path_tt_sum[idx] / path_tt_cnt[idx] : fftt;
      }
    }
    out.path_tt.push_back(std::move(ptt));

    out.link_flow.emplace_back(VectorRole::Link, std::move(flow_cnt[i]));
  }
  for (int idx = 0; idx < layout.link_size(); ++idx)
    if (out.delay_samples[idx] > 0)
      out.mean_delay[idx] = delay_sum[idx] / out.delay_samples[idx];

  return out;
}

inline const DenseVector &extract_link_tt(const SimOutput &sim, int cls) {
  return sim.link_tt.at(cls);
}

/// Marginal-vehicle approximation of the link travel time derivative for
/// class `cls`: diagonal over the link layout, one extra vehicle on a
/// queued link is delayed by its PCE share of the service rate.
inline SparseMatrix tt_derivative(const SimOutput &sim, const Network &net,
                                  const TimeGrid &grid, int cls) {
  const LayoutSpec layout = net.layout(grid);
  std::vector<double> diag(layout.link_size(), 0.0);
  const double base_pce = net.classes[0].pce;
  for (int a = 0; a < net.num_links(); ++a) {
    if (net.links[a].is_connector) continue;
    const double cap_pce_sec =
        net.links[a].capacity_vph[0] * base_pce / 3600.0;
    const double marginal = net.classes[cls].pce / cap_pce_sec;
    for (int h = 0; h < grid.num_intervals; ++h) {
      const int idx = layout.link_index(h, a);
      // queued iff observed delay exceeds half a loading step
      if (sim.mean_delay[idx] > 0.5 * grid.loading_step)
        diag[idx] = marginal;
    }
  }
  return SparseMatrix::diagonal(diag);
}

}  // namespace mcdode
