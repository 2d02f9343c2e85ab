#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcdode/tensor.hpp"

namespace mcdode {

struct VehicleClass {
  std::string name;
  double pce = 1.0;  // passenger-car equivalent
};

struct Link {
  int id = 0;
  int from = 0;
  int to = 0;
  double length_miles = 0.0;
  std::vector<double> free_flow_speed_mph;   // per class
  std::vector<double> capacity_vph;          // per class
  std::vector<double> holding_vpm;           // per class, vehicles/mile
  bool is_connector = false;

  double free_flow_seconds(int cls) const {
    if (is_connector) return 0.0;
    return length_miles / free_flow_speed_mph[cls] * 3600.0;
  }
};

/// Two time discretizations: the loading step the simulator advances in,
/// and the coarser aggregation interval all tensors are indexed by.
struct TimeGrid {
  double loading_step = 5.0;      // seconds
  double interval_length = 900.0; // seconds
  int num_intervals = 0;

  double horizon() const { return interval_length * num_intervals; }
  int steps_per_interval() const {
    return static_cast<int>(interval_length / loading_step + 0.5);
  }
  int total_steps() const { return steps_per_interval() * num_intervals; }
};

/// 0-based interval containing time t, intervals half-open [start, end).
inline int interval_of(double t, const TimeGrid &grid) {
  if (t < 0.0 || t >= grid.horizon())
    throw std::out_of_range("time outside study horizon");
  int h = static_cast<int>(t / grid.interval_length);
  return std::min(h, grid.num_intervals - 1);
}

struct OdPair {
  int origin = 0;
  int destination = 0;
};

/// Immutable scenario topology. Path and OD orderings are frozen at build
/// time and define the tensor index layout.
struct Network {
  std::vector<int> nodes;
  std::vector<Link> links;
  std::vector<OdPair> od_pairs;
  std::vector<VehicleClass> classes;

  // paths_by_od[rs] lists link-index sequences; global path index is the
  // position in the concatenation over rs.
  std::vector<std::vector<std::vector<int>>> paths_by_od;

  std::map<int, int> link_index_of_id;
  std::vector<int> path_od;                 // global path -> od index
  std::vector<std::vector<int>> path_links; // global path -> link indices
  std::vector<std::vector<int>> od_paths;   // od -> global path indices

  int num_links() const { return static_cast<int>(links.size()); }
  int num_paths() const { return static_cast<int>(path_links.size()); }
  int num_od() const { return static_cast<int>(od_pairs.size()); }
  int num_classes() const { return static_cast<int>(classes.size()); }

  LayoutSpec layout(const TimeGrid &grid) const {
    return LayoutSpec{grid.num_intervals, num_links(), num_paths(), num_od()};
  }
};

struct ScenarioConfig {
  TimeGrid grid;
  nlohmann::json doc;  // parsed JSON with links/od_pairs/paths/classes
};

inline ScenarioConfig parse_scenario(const nlohmann::json &j) {
  ScenarioConfig cfg;
  const auto &g = j.at("grid");
  cfg.grid.loading_step = g.at("loading_step").get<double>();
  cfg.grid.interval_length = g.at("interval_length").get<double>();
  cfg.grid.num_intervals = g.at("num_intervals").get<int>();
  if (cfg.grid.loading_step <= 0 || cfg.grid.num_intervals <= 0)
    throw std::invalid_argument("bad time grid");
  double ratio = cfg.grid.interval_length / cfg.grid.loading_step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw std::invalid_argument(
        "interval_length must be a multiple of loading_step");
  cfg.doc = j;
  return cfg;
}

inline Network build_network(const ScenarioConfig &cfg) {
  const nlohmann::json &j = cfg.doc;
  Network net;

  for (const auto &c : j.at("classes")) {
    VehicleClass vc;
    vc.name = c.at("name").get<std::string>();
    vc.pce = c.value("pce", 1.0);
    net.classes.push_back(vc);
  }
  if (net.classes.empty()) throw std::invalid_argument("no vehicle classes");
  const int nc = net.num_classes();

  std::set<int> node_ids;
  for (const auto &l : j.at("links")) {
    Link link;
    link.id = l.at("id").get<int>();
    link.from = l.at("from").get<int>();
    link.to = l.at("to").get<int>();
    link.length_miles = l.at("length").get<double>();
    link.is_connector = l.value("connector", false);
    auto per_class = [&](const char *key) {
      std::vector<double> v = l.at(key).get<std::vector<double>>();
      if (static_cast<int>(v.size()) != nc)
        throw std::invalid_argument(std::string(key) + " must have one value per class");
      return v;
    };
    if (link.is_connector) {
      link.free_flow_speed_mph.assign(nc, 0.0);
      link.capacity_vph.assign(nc, 0.0);
      link.holding_vpm.assign(nc, 0.0);
    } else {
      link.free_flow_speed_mph = per_class("free_flow_speed");
      link.capacity_vph = per_class("capacity");
      link.holding_vpm = per_class("holding");
      if (link.length_miles <= 0)
        throw std::invalid_argument("link length must be positive");
      for (int i = 0; i < nc; ++i)
        if (link.free_flow_speed_mph[i] <= 0 || link.capacity_vph[i] <= 0 ||
            link.holding_vpm[i] <= 0)
          throw std::invalid_argument("link parameters must be positive");
    }
    if (net.link_index_of_id.count(link.id))
      throw std::invalid_argument("duplicate link id");
    net.link_index_of_id[link.id] = net.num_links();
    node_ids.insert(link.from);
    node_ids.insert(link.to);
    net.links.push_back(std::move(link));
  }
  net.nodes.assign(node_ids.begin(), node_ids.end());

  for (const auto &od : j.at("od_pairs"))
    net.od_pairs.push_back({od.at("origin").get<int>(),
                            od.at("destination").get<int>()});
  if (net.od_pairs.empty()) throw std::invalid_argument("no OD pairs");

  net.paths_by_od.resize(net.num_od());
  for (const auto &p : j.at("paths")) {
    int rs = p.at("od").get<int>();
    if (rs < 0 || rs >= net.num_od())
      throw std::invalid_argument("path references unknown OD pair");
    std::vector<int> seq;
    for (int link_id : p.at("links").get<std::vector<int>>()) {
      auto it = net.link_index_of_id.find(link_id);
      if (it == net.link_index_of_id.end())
        throw std::invalid_argument("path references unknown link id");
      seq.push_back(it->second);
    }
    if (seq.empty()) throw std::invalid_argument("empty path");
    // connected walk from origin to destination
    if (net.links[seq.front()].from != net.od_pairs[rs].origin ||
        net.links[seq.back()].to != net.od_pairs[rs].destination)
      throw std::invalid_argument("path endpoints do not match OD pair");
    for (std::size_t i = 0; i + 1 < seq.size(); ++i)
      if (net.links[seq[i]].to != net.links[seq[i + 1]].from)
        throw std::invalid_argument("disconnected path");
    net.paths_by_od[rs].push_back(seq);
  }

  net.od_paths.resize(net.num_od());
  for (int rs = 0; rs < net.num_od(); ++rs) {
    if (net.paths_by_od[rs].empty())
      throw std::invalid_argument("OD pair has no paths");
    for (const auto &seq : net.paths_by_od[rs]) {
      net.od_paths[rs].push_back(net.num_paths());
      net.path_od.push_back(rs);
      net.path_links.push_back(seq);
    }
  }
  return net;
}

}  // namespace mcdode
