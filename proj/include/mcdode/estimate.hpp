#pragma once

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "mcdode/dar.hpp"
#include "mcdode/net.hpp"
#include "mcdode/obs.hpp"
#include "mcdode/route.hpp"
#include "mcdode/sim.hpp"
#include "mcdode/tensor.hpp"

namespace mcdode {

enum class Method { Gd, Sgd, Adagrad };
enum class ChoiceMode { Logit, Oracle };

struct SolverConfig {
  Method method = Method::Adagrad;
  double step = 1.0;
  int max_iters = 100;
  double tol = 1e-3;  // vehicles/interval, max-norm demand change
  double w1 = 1.0;
  double w2 = 0.01;
  double w3 = 0.0;
  int workers = 1;
  std::uint64_t seed = 1;
  ChoiceMode choice_mode = ChoiceMode::Oracle;
  std::vector<double> theta;  // logit dispersion per class, 1/seconds
  std::vector<DenseVector> q_init;
  std::vector<DenseVector> q_hist;  // historical prior, used when w3 > 0
  std::vector<bool> freeze_class;   // optional per-class update freeze

  void validate() const {
    if (step <= 0.0) throw std::invalid_argument("step must be > 0");
    if (w1 < 0.0 || w2 < 0.0 || w3 < 0.0)
      throw std::invalid_argument("weights must be >= 0");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  }
};

/// Everything immutable during one estimation run.
struct Scenario {
  Network net;
  TimeGrid grid;
  ObservationMap maps;
  PortionTable oracle_portions;  // required in oracle choice mode
};

/// Output of one forward pass with the supporting matrices frozen for the
/// backward pass.
struct ForwardState {
  ChoiceMatrix p;
  DarMatrix rho;
  std::vector<SparseMatrix> dtt;  // diagonal travel time derivative per class
  std::vector<DenseVector> t;
  std::vector<DenseVector> c;
  std::vector<DenseVector> x;         // rho * p * q, continuous
  std::vector<DenseVector> f;         // requested departures p * q
  std::vector<std::vector<int>> realized;
  DenseVector y;
  DenseVector z;
};

struct LossParts {
  double total = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  std::vector<double> l1_by_class;
  std::vector<double> l2_by_class;
};

struct IterationRecord {
  double loss = 0.0;
  std::vector<double> l1_by_class;
  std::vector<double> l2_by_class;
  double wall_ms = 0.0;
  double grad_max = 0.0;
  double dq_max = 0.0;
};

struct EstimationResult {
  std::vector<DenseVector> q;
  std::vector<IterationRecord> trace;
  bool converged = false;
  int max_staleness = 0;
  double final_grad_max = 0.0;
};

inline ForwardState forward(const std::vector<DenseVector> &q,
                            const Scenario &scen, const SolverConfig &cfg,
                            std::uint64_t sim_seed,
                            const std::vector<DenseVector> *prev_path_tt =
                                nullptr) {
  const Network &net = scen.net;
  const TimeGrid &grid = scen.grid;
  const LayoutSpec layout = net.layout(grid);
  const int nc = net.num_classes();
  for (int i = 0; i < nc; ++i)
    for (double v : q.at(i).values)
      if (v < 0.0) throw std::invalid_argument("demand must be >= 0");

  ForwardState st;
  if (cfg.choice_mode == ChoiceMode::Oracle) {
    st.p = fixed_portions(net, grid, scen.oracle_portions);
  } else {
    std::vector<double> theta = cfg.theta;
    if (theta.empty()) theta.assign(nc, 0.05);
    const std::vector<DenseVector> &costs =
        prev_path_tt && !prev_path_tt->empty() ? *prev_path_tt
                                               : free_flow_path_tt(net, grid);
    st.p = logit_portions(net, grid, costs, theta);
  }

  PathDepartures f = PathDepartures::zeros(layout, nc);
  for (int i = 0; i < nc; ++i)
    f.per_class[i].values = st.p.per_class[i].multiply(q[i].values);

  TreeCurveStore store;
  const SimOutput sim = run_dnl(net, grid, f, store.hook(), sim_seed);
  st.realized = sim.realized_departures;
  st.rho = assemble_dar(store, st.realized, grid, layout);
  st.t = sim.link_tt;
  st.c = sim.path_tt;
  st.f = std::move(f.per_class);
  for (int i = 0; i < nc; ++i) {
    st.x.emplace_back(VectorRole::Link,
                      st.rho.per_class[i].multiply(st.f[i].values));
    st.dtt.push_back(tt_derivative(sim, net, grid, i));
  }
  st.y = observe_flow(scen.maps, st.x);
  st.z = observe_tt(scen.maps, st.t);
  return st;
}

namespace detail {

inline double sq_norm(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace detail

/// Loss of a frozen forward state against one sample, decomposed by the
/// observation rows' class tags.
inline LossParts loss_against(const ForwardState &st, const Scenario &scen,
                              const DataSample &sample,
                              const SolverConfig &cfg,
                              const std::vector<DenseVector> *q = nullptr) {
  const int nc = scen.net.num_classes();
  LossParts parts;
  parts.l1_by_class.assign(nc, 0.0);
  parts.l2_by_class.assign(nc, 0.0);
  for (std::size_t b = 0; b < st.y.size(); ++b) {
    const double r = sample.y.at(b) - st.y[b];
    parts.l1 += r * r;
    const int cls = scen.maps.flow_row_class.at(b);
    if (cls >= 0) parts.l1_by_class[cls] += r * r;
  }
  for (std::size_t e = 0; e < st.z.size(); ++e) {
    const double r = sample.z.at(e) - st.z[e];
    parts.l2 += r * r;
    const int cls = scen.maps.tt_row_class.at(e);
    if (cls >= 0) parts.l2_by_class[cls] += r * r;
  }
  if (cfg.w3 > 0.0 && q) {
    for (int i = 0; i < nc; ++i)
      for (std::size_t j = 0; j < (*q)[i].size(); ++j) {
        const double d = cfg.q_hist.at(i)[j] - (*q)[i][j];
        parts.l3 += d * d;
      }
  }
  parts.total = cfg.w1 * parts.l1 + cfg.w2 * parts.l2 + cfg.w3 * parts.l3;
  return parts;
}

/// Frozen objective of one sample as a function of q, with (rho, p, t)
/// held at the forward state. Used by the finite difference checks.
inline double frozen_loss(const ForwardState &st, const Scenario &scen,
                          const DataSample &sample, const SolverConfig &cfg,
                          const std::vector<DenseVector> &q) {
  const int nc = scen.net.num_classes();
  std::vector<double> y(st.y.size(), 0.0);
  for (int i = 0; i < nc; ++i) {
    const std::vector<double> f = st.p.per_class[i].multiply(q[i].values);
    const std::vector<double> x = st.rho.per_class[i].multiply(f);
    const std::vector<double> part = scen.maps.flow[i].multiply(x);
    for (std::size_t b = 0; b < y.size(); ++b) y[b] += part[b];
  }
  double l1 = 0.0;
  for (std::size_t b = 0; b < y.size(); ++b) {
    const double r = sample.y.at(b) - y[b];
    l1 += r * r;
  }
  double l2 = 0.0;
  for (std::size_t e = 0; e < st.z.size(); ++e) {
    const double r = sample.z.at(e) - st.z[e];
    l2 += r * r;
  }
  double l3 = 0.0;
  if (cfg.w3 > 0.0)
    for (int i = 0; i < nc; ++i)
      for (std::size_t j = 0; j < q[i].size(); ++j) {
        const double d = cfg.q_hist.at(i)[j] - q[i][j];
        l3 += d * d;
      }
  return cfg.w1 * l1 + cfg.w2 * l2 + cfg.w3 * l3;
}

inline std::vector<DenseVector> grad_prior(const std::vector<DenseVector> &q,
                                           const std::vector<DenseVector>
                                               &q_hist,
                                           double w3) {
  std::vector<DenseVector> g;
  for (std::size_t i = 0; i < q.size(); ++i) {
    DenseVector gi(VectorRole::Od, q[i].size());
    if (w3 > 0.0)
      for (std::size_t j = 0; j < q[i].size(); ++j)
        gi[j] = -2.0 * w3 * (q_hist.at(i)[j] - q[i][j]);
    g.push_back(std::move(gi));
  }
  return g;
}

/// Analytic gradient of the frozen objective at demand q: chained sparse
/// transpose multiplications through L, rho, p (flow term) and through
/// the diagonal travel time derivative (travel time term).
inline std::vector<DenseVector> backward(const ForwardState &st,
                                         const Scenario &scen,
                                         const DataSample &sample,
                                         const SolverConfig &cfg,
                                         const std::vector<DenseVector> &q) {
  const int nc = scen.net.num_classes();

  std::vector<double> y(st.y.size(), 0.0);
  std::vector<std::vector<double>> f_of_q(nc);
  for (int i = 0; i < nc; ++i) {
    f_of_q[i] = st.p.per_class[i].multiply(q[i].values);
    const std::vector<double> x = st.rho.per_class[i].multiply(f_of_q[i]);
    const std::vector<double> part = scen.maps.flow[i].multiply(x);
    for (std::size_t b = 0; b < y.size(); ++b) y[b] += part[b];
  }
  std::vector<double> ry(y.size());
  for (std::size_t b = 0; b < y.size(); ++b) ry[b] = sample.y.at(b) - y[b];
  std::vector<double> rz(st.z.size());
  for (std::size_t e = 0; e < st.z.size(); ++e)
    rz[e] = sample.z.at(e) - st.z[e];

  std::vector<DenseVector> grad;
  for (int i = 0; i < nc; ++i) {
    // flow term: -2 w1 p^T rho^T L^T ry
    std::vector<double> gx = scen.maps.flow[i].multiply_transpose(ry);
    std::vector<double> gf = st.rho.per_class[i].multiply_transpose(gx);
    std::vector<double> gq = st.p.per_class[i].multiply_transpose(gf);

    // travel time term: -2 w2 p^T rho^T dLambda M^T rz
    std::vector<double> gt = scen.maps.tt[i].multiply_transpose(rz);
    std::vector<double> gx2 = st.dtt[i].multiply(gt);
    std::vector<double> gf2 = st.rho.per_class[i].multiply_transpose(gx2);
    std::vector<double> gq2 = st.p.per_class[i].multiply_transpose(gf2);

    DenseVector gi(VectorRole::Od, q[i].size());
    for (std::size_t j = 0; j < gi.size(); ++j)
      gi[j] = -2.0 * cfg.w1 * gq[j] - 2.0 * cfg.w2 * gq2[j];
    grad.push_back(std::move(gi));
  }
  if (cfg.w3 > 0.0) {
    const std::vector<DenseVector> gp = grad_prior(q, cfg.q_hist, cfg.w3);
    for (int i = 0; i < nc; ++i)
      for (std::size_t j = 0; j < grad[i].size(); ++j) grad[i][j] += gp[i][j];
  }
  return grad;
}

struct OptimizerState {
  std::vector<std::vector<double>> accum;  // Adagrad G per class

  void init(const std::vector<DenseVector> &q) {
    accum.clear();
    for (const DenseVector &v : q) accum.emplace_back(v.size(), 0.0);
  }
};

/// Projected update. gd/sgd: q - eta g, clamped at 0. adagrad:
/// per-coordinate q - eta g / (sqrt(G) + delta) with G accumulating g^2.
inline std::vector<DenseVector> step_update(const std::vector<DenseVector> &q,
                                            const std::vector<DenseVector> &g,
                                            const SolverConfig &cfg,
                                            OptimizerState &opt) {
  constexpr double kDelta = 1e-8;
  std::vector<DenseVector> out;
  for (std::size_t i = 0; i < q.size(); ++i) {
    DenseVector qi = q[i];
    const bool frozen =
        i < cfg.freeze_class.size() && cfg.freeze_class[i];
    if (!frozen) {
      for (std::size_t j = 0; j < qi.size(); ++j) {
        double delta;
        if (cfg.method == Method::Adagrad) {
          opt.accum[i][j] += g[i][j] * g[i][j];
          delta = cfg.step * g[i][j] / (std::sqrt(opt.accum[i][j]) + kDelta);
        } else {
          delta = cfg.step * g[i][j];
        }
        qi[j] = std::max(0.0, qi[j] - delta);
      }
    }
    out.push_back(std::move(qi));
  }
  return out;
}

inline bool check_convergence(double dq_max, double grad_max, double tol) {
  return dq_max < tol || grad_max < tol;
}

namespace detail {

inline double max_abs_diff(const std::vector<DenseVector> &a,
                           const std::vector<DenseVector> &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      m = std::max(m, std::abs(a[i][j] - b[i][j]));
  return m;
}

inline double max_abs(const std::vector<DenseVector> &a) {
  double m = 0.0;
  for (const DenseVector &v : a)
    for (double x : v.values) m = std::max(m, std::abs(x));
  return m;
}

inline IterationRecord make_record(const ForwardState &st,
                                   const Scenario &scen,
                                   const std::vector<DataSample> &samples,
                                   const SolverConfig &cfg,
                                   const std::vector<DenseVector> &q) {
  IterationRecord rec;
  const int nc = scen.net.num_classes();
  rec.l1_by_class.assign(nc, 0.0);
  rec.l2_by_class.assign(nc, 0.0);
  for (const DataSample &s : samples) {
    const LossParts parts = loss_against(st, scen, s, cfg, &q);
    rec.loss += parts.total / samples.size();
    for (int i = 0; i < nc; ++i) {
      rec.l1_by_class[i] += parts.l1_by_class[i] / samples.size();
      rec.l2_by_class[i] += parts.l2_by_class[i] / samples.size();
    }
  }
  return rec;
}

}  // namespace detail

inline EstimationResult run_estimation_sequential(
    const Scenario &scen, const std::vector<DataSample> &samples,
    const SolverConfig &cfg) {
  cfg.validate();
  if (samples.empty()) throw std::invalid_argument("need at least one sample");
  const int nc = scen.net.num_classes();

  EstimationResult res;
  res.q = cfg.q_init;
  OptimizerState opt;
  opt.init(res.q);
  std::mt19937_64 sample_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<DenseVector> last_path_tt;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    const ForwardState st =
        forward(res.q, scen, cfg, cfg.seed + iter + 1, &last_path_tt);
    last_path_tt = st.c;

    IterationRecord rec = detail::make_record(st, scen, samples, cfg, res.q);

    std::vector<DenseVector> grad;
    if (cfg.method == Method::Gd) {
      // average gradient over all data samples
      for (std::size_t m = 0; m < samples.size(); ++m) {
        std::vector<DenseVector> g =
            backward(st, scen, samples[m], cfg, res.q);
        if (grad.empty()) {
          grad = std::move(g);
        } else {
          for (int i = 0; i < nc; ++i)
            for (std::size_t j = 0; j < grad[i].size(); ++j)
              grad[i][j] += g[i][j];
        }
      }
      for (int i = 0; i < nc; ++i)
        for (std::size_t j = 0; j < grad[i].size(); ++j)
          grad[i][j] /= samples.size();
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
      grad = backward(st, scen, samples[pick(sample_rng)], cfg, res.q);
    }

    std::vector<DenseVector> q_next = step_update(res.q, grad, cfg, opt);
    rec.grad_max = detail::max_abs(grad);
    rec.dq_max = detail::max_abs_diff(q_next, res.q);
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.q = std::move(q_next);
    res.final_grad_max = rec.grad_max;
    res.trace.push_back(std::move(rec));

    if (check_convergence(res.trace.back().dq_max, res.trace.back().grad_max,
                          cfg.tol)) {
      // the convergence flag asserts a vanished gradient, not just a stall
      res.converged = res.trace.back().grad_max < cfg.tol;
      break;
    }
  }
  return res;
}

/// Delayed-SGD: up to `workers` gradients are evaluated concurrently, each
/// against a demand snapshot that may be stale. Tasks are claimed through a
/// sliding window (task - applied <= workers - 1) and their updates applied
/// serially in task order, which caps staleness at workers - 1.
inline EstimationResult run_estimation_delayed(
    const Scenario &scen, const std::vector<DataSample> &samples,
    const SolverConfig &cfg) {
  cfg.validate();
  if (samples.empty()) throw std::invalid_argument("need at least one sample");

  EstimationResult res;
  res.q = cfg.q_init;
  OptimizerState opt;
  opt.init(res.q);

  // pre-drawn per-iteration sample choices keep the schedule reproducible
  std::mt19937_64 sample_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::vector<std::size_t> sample_of_iter(cfg.max_iters);
  for (int i = 0; i < cfg.max_iters; ++i) sample_of_iter[i] = pick(sample_rng);

  std::mutex mu;
  std::condition_variable cv;
  int next_task = 0;
  int applied = 0;
  bool stop = false;
  std::vector<DenseVector> last_path_tt;

  auto worker = [&]() {
    while (true) {
      int task;
      std::vector<DenseVector> q_snapshot;
      std::vector<DenseVector> path_tt_snapshot;
      int snapshot_applied;
      {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] {
          return stop || next_task >= cfg.max_iters ||
                 next_task - applied <= cfg.workers - 1;
        });
        if (stop || next_task >= cfg.max_iters) return;
        task = next_task++;
        q_snapshot = res.q;
        path_tt_snapshot = last_path_tt;
        snapshot_applied = applied;
      }
      const auto t0 = std::chrono::steady_clock::now();
      const ForwardState st = forward(q_snapshot, scen, cfg,
                                      cfg.seed + task + 1, &path_tt_snapshot);
      IterationRecord rec =
          detail::make_record(st, scen, samples, cfg, q_snapshot);
      std::vector<DenseVector> grad =
          backward(st, scen, samples[sample_of_iter[task]], cfg, q_snapshot);
      rec.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return stop || applied == task; });
        if (stop) return;
        std::vector<DenseVector> q_next = step_update(res.q, grad, cfg, opt);
        rec.grad_max = detail::max_abs(grad);
        rec.dq_max = detail::max_abs_diff(q_next, res.q);
        res.q = std::move(q_next);
        last_path_tt = st.c;
        res.final_grad_max = rec.grad_max;
        res.max_staleness =
            std::max(res.max_staleness, applied - snapshot_applied);
        ++applied;
        res.trace.push_back(std::move(rec));
        if (check_convergence(res.trace.back().dq_max,
                              res.trace.back().grad_max, cfg.tol)) {
          res.converged = res.trace.back().grad_max < cfg.tol;
          stop = true;
        }
        cv.notify_all();
      }
    }
  };

  std::vector<std::thread> pool;
  for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(worker);
  for (std::thread &t : pool) t.join();
  return res;
}

inline EstimationResult run_estimation(const Scenario &scen,
                                       const std::vector<DataSample> &samples,
                                       const SolverConfig &cfg) {
  if (cfg.workers > 1 && cfg.method != Method::Gd)
    return run_estimation_delayed(scen, samples, cfg);
  return run_estimation_sequential(scen, samples, cfg);
}

}  // namespace mcdode
