#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dagprobit/causal.hpp"
#include "dagprobit/cholesky.hpp"
#include "dagprobit/dag.hpp"
#include "dagprobit/errors.hpp"
#include "dagprobit/mcmc.hpp"
#include "dagprobit/model.hpp"
#include "dagprobit/rng.hpp"

namespace dagprobit {

struct ScenarioConfig {
  int q = 10;
  int n1 = 200;
  int n2 = 200;
  double xi = 0.1;
  // The generator draws |L| uniformly in [coef_min, coef_max] with random
  // sign, conditional variances in [noise_min, noise_max], and the cut-off
  // in [theta_min, theta_max]. The coefficient floor keeps every edge
  // detectable at n = 50 against the worst noise draw.
  double coef_min = 0.5;
  double coef_max = 1.0;
  double noise_min = 0.5;
  double noise_max = 1.5;
  double theta_min = -0.7;
  double theta_max = 0.7;
};

struct Scenario {
  explicit Scenario(int q) : dag1(q), dag2(q) {}

  ScenarioConfig config;
  std::uint64_t seed = 0;
  Dag dag1;
  Dag dag2;
  Eigen::MatrixXd L1, L2;
  Eigen::VectorXd D;
  double theta = 0.0;
  Eigen::MatrixXd sigma1, sigma2;
  GroupData data1, data2;

  const Dag& dag(int k) const { return k == 0 ? dag1 : dag2; }
  const Eigen::MatrixXd& sigma(int k) const { return k == 0 ? sigma1 : sigma2; }
  const GroupData& data(int k) const { return k == 0 ? data1 : data2; }
};

namespace detail {

inline Eigen::MatrixXd draw_coefficients(const Dag& dag, const ScenarioConfig& cfg,
                                         Rng& rng) {
  const int q = dag.node_count();
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(q, q);
  for (int i = 1; i < q; ++i) {
    for (int j = 0; j < i; ++j) {
      if (!dag.has_edge(i, j)) continue;
      const double magnitude = rng.uniform(cfg.coef_min, cfg.coef_max);
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      L(i, j) = sign * magnitude;
    }
  }
  return L;
}

// Solve L'X = eps row-wise for n samples.
inline Eigen::MatrixXd solve_sem(const Eigen::MatrixXd& L, const Eigen::VectorXd& D, int n,
                                 Rng& rng) {
  const int q = static_cast<int>(L.rows());
  Eigen::MatrixXd eps(n, q);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < q; ++j) eps(i, j) = rng.normal(0.0, std::sqrt(D(j)));
  return L.transpose()
      .triangularView<Eigen::Upper>()
      .solve(eps.transpose())
      .transpose();
}

inline GroupData threshold_group(const Eigen::MatrixXd& x, double theta) {
  GroupData d;
  const int n = static_cast<int>(x.rows());
  d.y.resize(n);
  for (int i = 0; i < n; ++i) d.y(i) = x(i, 0) > theta ? 1 : 0;
  d.x_obs = x.rightCols(x.cols() - 1);
  d.x_latent = x.col(0);
  return d;
}

}  // namespace detail

// Ground truth plus data drawn exactly from it. Both groups share D and
// theta; DAGs and coefficients are group specific.
inline Scenario generate_scenario(const ScenarioConfig& cfg, Rng& rng) {
  if (cfg.q < 2) throw ValidationError("generate_scenario: need q >= 2");
  if (cfg.n1 < 1 || cfg.n2 < 1) throw ValidationError("generate_scenario: need n_k >= 1");
  Scenario sc(cfg.q);
  sc.config = cfg;
  sc.dag1 = random_dag(cfg.q, cfg.xi, rng);
  sc.dag2 = random_dag(cfg.q, cfg.xi, rng);
  sc.D = Eigen::VectorXd::Ones(cfg.q);
  for (int j = 1; j < cfg.q; ++j) sc.D(j) = rng.uniform(cfg.noise_min, cfg.noise_max);
  sc.theta = rng.uniform(cfg.theta_min, cfg.theta_max);
  sc.L1 = detail::draw_coefficients(sc.dag1, cfg, rng);
  sc.L2 = detail::draw_coefficients(sc.dag2, cfg, rng);
  sc.data1 = detail::threshold_group(detail::solve_sem(sc.L1, sc.D, cfg.n1, rng), sc.theta);
  sc.data2 = detail::threshold_group(detail::solve_sem(sc.L2, sc.D, cfg.n2, rng), sc.theta);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(cfg.q, cfg.q);
  sc.sigma1 = reconstruct_precision({sc.L1, sc.D}).llt().solve(eye);
  sc.sigma2 = reconstruct_precision({sc.L2, sc.D}).llt().solve(eye);
  return sc;
}

inline Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Scenario sc = generate_scenario(cfg, rng);
  sc.seed = seed;
  return sc;
}

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr)
  double auc = 0.0;
};

// Threshold-sweep ROC; tied scores collapse into one step. AUC by trapezoid.
inline RocCurve roc_auc(const std::vector<int>& truth, const std::vector<double>& scores) {
  if (truth.size() != scores.size())
    throw ValidationError("roc_auc: truth/scores length mismatch");
  const long positives = std::count(truth.begin(), truth.end(), 1);
  const long negatives = static_cast<long>(truth.size()) - positives;
  if (positives == 0 || negatives == 0)
    throw ValidationError("roc_auc: both classes must be present in the truth vector");

  std::vector<std::size_t> order(truth.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.emplace_back(0.0, 0.0);
  long tp = 0;
  long fp = 0;
  double auc = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (truth[order[i]] == 1)
        ++tp;
      else
        ++fp;
      ++i;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
    const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
    const auto& prev = roc.points.back();
    auc += 0.5 * (fpr - prev.first) * (tpr + prev.second);
    roc.points.emplace_back(fpr, tpr);
  }
  roc.auc = auc;
  return roc;
}

// Lower-triangle (i > j) edge indicators flattened row by row.
inline std::vector<int> lower_triangle_edges(const Dag& dag) {
  std::vector<int> bits;
  for (int i = 1; i < dag.node_count(); ++i)
    for (int j = 0; j < i; ++j) bits.push_back(dag.has_edge(i, j) ? 1 : 0);
  return bits;
}

inline std::vector<double> lower_triangle_scores(const Eigen::MatrixXd& probs) {
  std::vector<double> scores;
  for (int i = 1; i < probs.rows(); ++i)
    for (int j = 0; j < i; ++j) scores.push_back(probs(i, j));
  return scores;
}

// Pooled two-group ROC: the actual condition concatenates both groups'
// lower-triangle edges, the score vector the matching posterior
// probabilities.
inline RocCurve pooled_roc(const Scenario& sc, const ChainTrace& trace) {
  std::vector<int> truth = lower_triangle_edges(sc.dag1);
  const auto t2 = lower_triangle_edges(sc.dag2);
  truth.insert(truth.end(), t2.begin(), t2.end());
  std::vector<double> scores = lower_triangle_scores(edge_probabilities(trace, 0));
  const auto s2 = lower_triangle_scores(edge_probabilities(trace, 1));
  scores.insert(scores.end(), s2.begin(), s2.end());
  return roc_auc(truth, scores);
}

// Signed and absolute partial-correlation error, averaged over kept
// iterations and the upper-triangle pairs; sign convention is
// rho_true - rho_estimated.
inline std::pair<double, double> partial_corr_errors(const ChainTrace& trace, int k,
                                                     const Eigen::MatrixXd& truth_sigma) {
  if (trace.kept() == 0) throw ValidationError("partial_corr_errors: empty trace");
  if (trace.partials[k].empty())
    throw ValidationError("partial_corr_errors: trace has no recorded partial correlations");
  const int q = trace.q;
  const Eigen::MatrixXd omega_true =
      truth_sigma.llt().solve(Eigen::MatrixXd::Identity(q, q));
  const Eigen::MatrixXd rho_true = partial_correlations(omega_true);
  const double pairs = 0.5 * q * (q - 1);
  double mean_err = 0.0;
  double abs_err = 0.0;
  for (const auto& rho_hat : trace.partials[k]) {
    double m = 0.0;
    double ab = 0.0;
    for (int i = 0; i < q; ++i) {
      for (int j = i + 1; j < q; ++j) {
        const double d = rho_true(i, j) - rho_hat(i, j);
        m += d;
        ab += std::abs(d);
      }
    }
    mean_err += m / pairs;
    abs_err += ab / pairs;
  }
  const double kept = static_cast<double>(trace.kept());
  return {mean_err / kept, abs_err / kept};
}

// Truth effect minus BMA-estimated effect for do(X_s = x_tilde).
inline double effect_size_error(const Scenario& sc, const ChainTrace& trace, int k, int s,
                                double x_tilde) {
  const double truth_effect =
      do_expectation(sc.sigma(k), sc.theta, s, sc.dag(k).parents(s), x_tilde);
  return truth_effect - bma_effects(trace, k, s, x_tilde).mean;
}

struct EffectError {
  int group;  // 0-based
  int node;   // intervention target s
  double error;
};

struct EvalReport {
  RocCurve roc;
  double auc = 0.0;
  double partial_err_mean = 0.0;
  double partial_err_abs = 0.0;
  std::vector<EffectError> effect_err;  // one row per true edge into node 1
  double theta_mean = 0.0;
  double theta_lo95 = 0.0;
  double theta_hi95 = 0.0;
  double theta_err = 0.0;  // posterior mean minus truth
  bool theta_covered = false;
  double wall_time_s = 0.0;
};

inline EvalReport evaluate_run(const Scenario& sc, const ChainTrace& trace,
                               double wall_time_s = 0.0) {
  EvalReport rep;
  rep.roc = pooled_roc(sc, trace);
  rep.auc = rep.roc.auc;
  const auto [m1, a1] = partial_corr_errors(trace, 0, sc.sigma1);
  const auto [m2, a2] = partial_corr_errors(trace, 1, sc.sigma2);
  rep.partial_err_mean = 0.5 * (m1 + m2);
  rep.partial_err_abs = 0.5 * (a1 + a2);
  for (int k = 0; k < 2; ++k)
    for (int s : sc.dag(k).parents(0))
      rep.effect_err.push_back({k, s, effect_size_error(sc, trace, k, s, trace.x_tilde)});
  rep.theta_mean = std::accumulate(trace.theta.begin(), trace.theta.end(), 0.0) /
                   static_cast<double>(trace.kept());
  rep.theta_lo95 = empirical_quantile(trace.theta, 0.025);
  rep.theta_hi95 = empirical_quantile(trace.theta, 0.975);
  rep.theta_err = rep.theta_mean - sc.theta;
  rep.theta_covered = sc.theta >= rep.theta_lo95 && sc.theta <= rep.theta_hi95;
  rep.wall_time_s = wall_time_s;
  return rep;
}

struct GridConfig {
  std::vector<int> qs{10};
  std::vector<std::pair<int, int>> sample_sizes{{200, 200}};
  std::vector<double> xis{0.1};
  int replications = 25;
  int iters = 5000;
  int burnin = 1000;
  double x_tilde = 1.0;
  ScenarioConfig base;  // coefficient/noise/theta ranges; q, n, xi overridden per cell
};

// Larger DAGs need sample sizes beyond the grid; these combinations are
// reported as skipped.
inline bool grid_cell_skipped(int q, double xi) {
  return (q == 40 && xi >= 0.4) || (q == 50 && xi >= 0.3);
}

struct RunRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EvalReport report;
};

struct CellResult {
  int q = 0;
  int n1 = 0;
  int n2 = 0;
  double xi = 0.0;
  bool skipped = false;
  bool partial = false;  // at least one replication failed
  std::string note;
  std::vector<RunRecord> runs;
  int replications_done = 0;
  double mean_auc = 0.0;
  double mean_partial_err = 0.0;
  double mean_partial_abs_err = 0.0;
  double mean_theta_abs_err = 0.0;
  double mean_effect_abs_err = 0.0;  // NaN when no true edge into node 1 showed up
  double mean_wall_time_s = 0.0;
};

inline std::uint64_t grid_task_seed(std::uint64_t master, std::size_t cell_index, int rep) {
  return derive_seed(master, cell_index * 1000003ULL + static_cast<std::uint64_t>(rep));
}

inline RunRecord run_grid_task(const GridConfig& grid, const ScenarioConfig& cell_cfg,
                               int rep, std::uint64_t seed) {
  RunRecord rec;
  rec.rep = rep;
  rec.seed = seed;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = generate_scenario(cell_cfg, seed);
    Hyperparams hyper = Hyperparams::defaults_for(cell_cfg.q, cell_cfg.n1, cell_cfg.n2);
    hyper.xi = cell_cfg.xi;
    hyper.iters = grid.iters;
    hyper.burnin = grid.burnin;
    ChainOptions options;
    options.x_tilde = grid.x_tilde;
    Rng rng(derive_seed(seed, 1));
    const ChainTrace trace = run_chain(sc.data1, sc.data2, hyper, options, rng);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.report = evaluate_run(sc, trace, secs);
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

inline void aggregate_cell(CellResult& cell) {
  double auc = 0.0, pm = 0.0, pa = 0.0, th = 0.0, wt = 0.0;
  double eff = 0.0;
  long eff_count = 0;
  int done = 0;
  for (const auto& run : cell.runs) {
    if (!run.ok) {
      cell.partial = true;
      continue;
    }
    ++done;
    auc += run.report.auc;
    pm += run.report.partial_err_mean;
    pa += run.report.partial_err_abs;
    th += std::abs(run.report.theta_err);
    wt += run.report.wall_time_s;
    for (const auto& e : run.report.effect_err) {
      eff += std::abs(e.error);
      ++eff_count;
    }
  }
  cell.replications_done = done;
  if (done > 0) {
    const double d = static_cast<double>(done);
    cell.mean_auc = auc / d;
    cell.mean_partial_err = pm / d;
    cell.mean_partial_abs_err = pa / d;
    cell.mean_theta_abs_err = th / d;
    cell.mean_wall_time_s = wt / d;
  }
  cell.mean_effect_abs_err =
      eff_count > 0 ? eff / static_cast<double>(eff_count)
                    : std::numeric_limits<double>::quiet_NaN();
}

// Cells x replications with independent seed streams; results are
// scheduling-independent. thread_count <= 1 runs serially.
inline std::vector<CellResult> run_grid(const GridConfig& grid, std::uint64_t master_seed,
                                        int thread_count = 1) {
  if (grid.replications < 1) throw ValidationError("run_grid: need replications >= 1");
  std::vector<CellResult> cells;
  for (int q : grid.qs) {
    for (double xi : grid.xis) {
      for (const auto& [n1, n2] : grid.sample_sizes) {
        CellResult cell;
        cell.q = q;
        cell.n1 = n1;
        cell.n2 = n2;
        cell.xi = xi;
        if (grid_cell_skipped(q, xi)) {
          cell.skipped = true;
          cell.note = "skipped: sample sizes above the grid are needed at q=" +
                      std::to_string(q) + ", xi=" + std::to_string(xi);
        } else {
          cell.runs.resize(grid.replications);
        }
        cells.push_back(std::move(cell));
      }
    }
  }

  struct Task {
    std::size_t cell;
    int rep;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].skipped) continue;
    for (int r = 0; r < grid.replications; ++r) tasks.push_back({c, r});
  }

  auto worker_body = [&](std::size_t task_idx) {
    const Task& task = tasks[task_idx];
    CellResult& cell = cells[task.cell];
    ScenarioConfig cfg = grid.base;
    cfg.q = cell.q;
    cfg.n1 = cell.n1;
    cfg.n2 = cell.n2;
    cfg.xi = cell.xi;
    cell.runs[task.rep] =
        run_grid_task(grid, cfg, task.rep, grid_task_seed(master_seed, task.cell, task.rep));
  };

  if (thread_count <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) worker_body(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min<int>(thread_count, static_cast<int>(tasks.size()));
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          worker_body(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  for (auto& cell : cells) {
    if (!cell.skipped) aggregate_cell(cell);
  }
  return cells;
}

}  // namespace dagprobit
