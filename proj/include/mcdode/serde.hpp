#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "mcdode/estimate.hpp"
#include "mcdode/obs.hpp"
#include "mcdode/tensor.hpp"

namespace mcdode {

using nlohmann::json;

inline json triplets_to_json(const SparseMatrix &m) {
  json rows = json::array();
  for (const Triplet &t : m.to_triplets())
    rows.push_back({t.row, t.col, t.value});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", rows}};
}

inline SparseMatrix triplets_from_json(const json &j) {
  std::vector<Triplet> trip;
  for (const auto &e : j.at("entries"))
    trip.push_back({e.at(0).get<int>(), e.at(1).get<int>(),
                    e.at(2).get<double>()});
  return SparseMatrix::assemble(std::move(trip), j.at("rows").get<int>(),
                                j.at("cols").get<int>());
}

inline json maps_to_json(const ObservationMap &maps) {
  json j;
  j["flow"] = json::array();
  for (const SparseMatrix &m : maps.flow) j["flow"].push_back(triplets_to_json(m));
  j["tt"] = json::array();
  for (const SparseMatrix &m : maps.tt) j["tt"].push_back(triplets_to_json(m));
  j["flow_row_class"] = maps.flow_row_class;
  j["tt_row_class"] = maps.tt_row_class;
  return j;
}

inline ObservationMap maps_from_json(const json &j) {
  ObservationMap maps;
  for (const auto &m : j.at("flow")) maps.flow.push_back(triplets_from_json(m));
  for (const auto &m : j.at("tt")) maps.tt.push_back(triplets_from_json(m));
  maps.flow_row_class = j.at("flow_row_class").get<std::vector<int>>();
  maps.tt_row_class = j.at("tt_row_class").get<std::vector<int>>();
  return maps;
}

inline json truth_to_json(const TruthBundle &truth) {
  json j;
  j["q"] = json::array();
  for (const DenseVector &q : truth.q) j["q"].push_back(q.values);
  j["portions"] = truth.portions;
  j["x"] = json::array();
  for (const DenseVector &x : truth.x) j["x"].push_back(x.values);
  j["t"] = json::array();
  for (const DenseVector &t : truth.t) j["t"].push_back(t.values);
  j["y"] = truth.y.values;
  j["z"] = truth.z.values;
  return j;
}

inline TruthBundle truth_from_json(const json &j) {
  TruthBundle truth;
  for (const auto &q : j.at("q"))
    truth.q.emplace_back(VectorRole::Od, q.get<std::vector<double>>());
  truth.portions = j.at("portions").get<PortionTable>();
  for (const auto &x : j.at("x"))
    truth.x.emplace_back(VectorRole::Link, x.get<std::vector<double>>());
  for (const auto &t : j.at("t"))
    truth.t.emplace_back(VectorRole::Link, t.get<std::vector<double>>());
  truth.y = DenseVector(VectorRole::Observation,
                        j.at("y").get<std::vector<double>>());
  truth.z = DenseVector(VectorRole::Observation,
                        j.at("z").get<std::vector<double>>());
  return truth;
}

inline json samples_to_json(const std::vector<DataSample> &samples) {
  json arr = json::array();
  for (const DataSample &s : samples)
    arr.push_back({{"day", s.day}, {"y", s.y}, {"z", s.z}});
  return arr;
}

inline std::vector<DataSample> samples_from_json(const json &j) {
  std::vector<DataSample> out;
  for (const auto &s : j) {
    DataSample d;
    d.day = s.at("day").get<int>();
    d.y = s.at("y").get<std::vector<double>>();
    d.z = s.at("z").get<std::vector<double>>();
    out.push_back(std::move(d));
  }
  return out;
}

inline json result_to_json(const EstimationResult &res) {
  json iters = json::array();
  for (const IterationRecord &r : res.trace) {
    json rec = {{"loss", r.loss}, {"wall_ms", r.wall_ms},
                {"grad_max", r.grad_max}, {"dq_max", r.dq_max}};
    rec["l1"] = r.l1_by_class;
    rec["l2"] = r.l2_by_class;
    iters.push_back(rec);
  }
  json j;
  j["iterations"] = iters;
  j["converged"] = res.converged;
  j["max_staleness"] = res.max_staleness;
  j["q"] = json::array();
  for (const DenseVector &q : res.q) j["q"].push_back(q.values);
  return j;
}

inline json load_json(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

inline void save_json(const std::string &path, const json &j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace mcdode
