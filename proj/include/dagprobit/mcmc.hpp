#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dagprobit/causal.hpp"
#include "dagprobit/cholesky.hpp"
#include "dagprobit/dag.hpp"
#include "dagprobit/errors.hpp"
#include "dagprobit/model.hpp"
#include "dagprobit/rng.hpp"
#include "dagprobit/stats.hpp"

namespace dagprobit {

struct ChainOptions {
  std::vector<int> effect_targets;  // 0-based covariate nodes; empty = all of 1..q-1
  double x_tilde = 1.0;
  double init_zero_tol = 0.1;  // |L| threshold when binarizing the initial factor
  bool init_from_data = true;  // fall back to empty DAGs when estimation is impossible
  bool record_partials = true;
};

// One MCMC state. The coefficient matrices carry the DAG sparsity patterns;
// shared_d is common to both groups with shared_d[0] pinned to 1.
struct ChainState {
  explicit ChainState(int q)
      : dags{Dag(q), Dag(q)},
        L{Eigen::MatrixXd::Identity(q, q), Eigen::MatrixXd::Identity(q, q)},
        shared_d(Eigen::VectorXd::Ones(q)),
        theta(0.0) {}

  std::array<Dag, 2> dags;
  std::array<Eigen::MatrixXd, 2> L;
  Eigen::VectorXd shared_d;
  double theta;
  std::array<Eigen::VectorXd, 2> latents;

  CholeskyFactors group_factors(int k) const { return {L[k], shared_d}; }
};

// Post-burn-in history plus acceptance counters.
struct ChainTrace {
  int q = 0;
  int iters = 0;
  int burnin = 0;
  std::vector<int> effect_targets;
  double x_tilde = 1.0;
  std::vector<double> theta;
  std::array<std::vector<AdjacencyMatrix>, 2> edges;
  std::array<std::vector<Eigen::MatrixXd>, 2> partials;
  std::array<std::vector<Eigen::VectorXd>, 2> effects;
  std::array<long, 2> dag_proposals{0, 0};
  std::array<long, 2> dag_accepts{0, 0};
  long theta_proposals = 0;
  long theta_accepts = 0;

  int kept() const { return static_cast<int>(theta.size()); }
};

// Draw from N(mu, 1) conditioned on (lo, hi]. Inversion works on whichever
// tail probability is the small one, so boundaries up to ~8 sd from mu stay
// finite and exact.
inline double sample_truncated_normal(double mu, double lo, double hi, Rng& rng) {
  if (!(lo < hi)) throw ValidationError("sample_truncated_normal: need lo < hi");
  const double a = lo - mu;
  const double b = hi - mu;
  const double u = rng.uniform();
  double z;
  if (std::isinf(a) && std::isinf(b)) {
    z = norm_quantile(u);
  } else if (std::isinf(b)) {
    z = -norm_quantile(u * norm_sf(a));
  } else if (std::isinf(a)) {
    z = norm_quantile(u * norm_cdf(b));
  } else if (a + b > 0.0) {
    const double sl = norm_sf(a);
    const double sh = norm_sf(b);
    z = -norm_quantile(sh + u * (sl - sh));
  } else {
    const double pl = norm_cdf(a);
    const double ph = norm_cdf(b);
    z = norm_quantile(pl + u * (ph - pl));
  }
  return mu + z;
}

struct Proposal {
  Dag dag;
  Operator op;
  double log_q_ratio;  // ln|O^D| - ln|O^D'|
};

// Uniform draw over the valid-operator set; cycle-creating candidates were
// already excluded at enumeration time.
inline Proposal propose_dag(const Dag& dag, Rng& rng) {
  const auto ops = enumerate_valid_operators(dag);
  if (ops.empty()) throw ValidationError("propose_dag: no valid operators");
  const Operator op = ops[rng.uniform_index(ops.size())];
  Dag next = apply_operator(dag, op);
  const auto reverse_ops = enumerate_valid_operators(next);
  const double log_q_ratio = std::log(static_cast<double>(ops.size())) -
                             std::log(static_cast<double>(reverse_ops.size()));
  return {std::move(next), op, log_q_ratio};
}

// log acceptance ratio for a DAG move. Insert/Delete touch one node's
// marginal; Reverse touches both endpoints.
inline double dag_log_accept_ratio(const Eigen::MatrixXd& gram, int n, const Dag& current,
                                   const Dag& proposed, const Operator& op,
                                   double log_q_ratio, double g, double a, double xi) {
  const int q = current.node_count();
  double delta = 0.0;
  if (op.kind == OperatorKind::Reverse) {
    for (int node : {op.source, op.target}) {
      delta += log_marginal_node_gram(gram, proposed.parents(node), node, n, q, g, a) -
               log_marginal_node_gram(gram, current.parents(node), node, n, q, g, a);
    }
  } else {
    const int node = op.target;
    delta += log_marginal_node_gram(gram, proposed.parents(node), node, n, q, g, a) -
             log_marginal_node_gram(gram, current.parents(node), node, n, q, g, a);
  }
  return delta + std::log(prior_ratio(op, xi)) + log_q_ratio;
}

inline bool accept_dag(const Eigen::MatrixXd& x, const Dag& current, const Dag& proposed,
                       const Operator& op, double log_q_ratio, double g,
                       const Hyperparams& hyper, Rng& rng) {
  const Eigen::MatrixXd gram = x.transpose() * x;
  const double log_alpha =
      dag_log_accept_ratio(gram, static_cast<int>(x.rows()), current, proposed, op,
                           hyper.approx_proposal_ratio ? 0.0 : log_q_ratio, g, hyper.a,
                           hyper.xi);
  return std::log(rng.uniform()) < log_alpha;
}

// Sum of node marginals; the whole-DAG score used to cross-check move ratios.
inline double log_marginal_dag(const Eigen::MatrixXd& x, const Dag& dag, double g, double a) {
  const Eigen::MatrixXd gram = x.transpose() * x;
  const int n = static_cast<int>(x.rows());
  double total = 0.0;
  for (int j = 0; j < dag.node_count(); ++j)
    total += log_marginal_node_gram(gram, dag.parents(j), j, n, dag.node_count(), g, a);
  return total;
}

// Posterior shape/rate for sigma^2_j pooled over both groups.
inline std::pair<double, double> sigma_posterior_params(const Eigen::MatrixXd& gram1, int n1,
                                                        const Eigen::MatrixXd& gram2, int n2,
                                                        const Dag& dag1, const Dag& dag2,
                                                        int j, const Hyperparams& hyper) {
  const int q = dag1.node_count();
  double shape = 0.0;
  double rate = 0.0;
  const std::array<const Eigen::MatrixXd*, 2> grams{&gram1, &gram2};
  const std::array<const Dag*, 2> dags{&dag1, &dag2};
  const std::array<int, 2> ns{n1, n2};
  const std::array<double, 2> gs{hyper.g1, hyper.g2};
  for (int k = 0; k < 2; ++k) {
    const auto pa = dags[k]->parents(j);
    const auto s = detail::node_suff_stats(*grams[k], pa, j, gs[k]);
    const double a_j = shape_a_j(hyper.a, s.p, q);
    const double beta = gs[k] + s.resid;
    if (!(beta > 0.0))
      throw NumericError("sigma_posterior_params: non-positive rate at node " +
                         std::to_string(j + 1));
    shape += 0.5 * (a_j + static_cast<double>(ns[k]));
    rate += 0.5 * beta;
  }
  return {shape, rate};
}

inline void update_shared_sigma(ChainState& state, const Eigen::MatrixXd& gram1, int n1,
                                const Eigen::MatrixXd& gram2, int n2,
                                const Hyperparams& hyper, Rng& rng) {
  state.shared_d(0) = 1.0;
  for (int j = 1; j < state.dags[0].node_count(); ++j) {
    const auto [shape, rate] = sigma_posterior_params(gram1, n1, gram2, n2, state.dags[0],
                                                      state.dags[1], j, hyper);
    state.shared_d(j) = rng.inverse_gamma(shape, rate);
  }
}

// Redraw every column of L^{(k)}: node j's slot gets
// N(-l_hat, sigma^2_j T_bar^{-1}), with sigma^2_1 = 1.
inline void update_L(ChainState& state, int k, const Eigen::MatrixXd& gram,
                     const Hyperparams& hyper, Rng& rng) {
  const Dag& dag = state.dags[k];
  const int q = dag.node_count();
  const double g = (k == 0) ? hyper.g1 : hyper.g2;
  Eigen::MatrixXd& L = state.L[k];
  L.setIdentity(q, q);
  for (int j = 0; j < q; ++j) {
    const auto pa = dag.parents(j);
    if (pa.empty()) continue;
    const auto s = detail::node_suff_stats(gram, pa, j, g);
    const double sigma_sq = (j == 0) ? 1.0 : state.shared_d(j);
    Eigen::VectorXd z(s.p);
    for (int r = 0; r < s.p; ++r) z(r) = rng.normal();
    // T_bar = R R'; cov chol factor is sqrt(sigma^2) R'^{-1}
    const Eigen::VectorXd draw =
        -s.l_hat + std::sqrt(sigma_sq) * s.t_bar_llt.matrixU().solve(z);
    for (int r = 0; r < s.p; ++r) L(pa[r], j) = draw(r);
  }
}

// Conditional mean of the latent column given the observed parents of node 1.
inline Eigen::VectorXd latent_mean(const Dag& dag, const Eigen::MatrixXd& L,
                                   const Eigen::MatrixXd& x_obs) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(x_obs.rows());
  for (int r : dag.parents(0)) mu -= L(r, 0) * x_obs.col(r - 1);
  return mu;
}

inline void update_latent(ChainState& state, int k, const GroupData& data, Rng& rng) {
  const Eigen::VectorXd mu = latent_mean(state.dags[k], state.L[k], data.x_obs);
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd latent(data.n());
  for (int i = 0; i < data.n(); ++i) {
    if (data.y(i) == 1)
      latent(i) = sample_truncated_normal(mu(i), state.theta, inf, rng);
    else
      latent(i) = sample_truncated_normal(mu(i), -inf, state.theta, rng);
  }
  state.latents[k] = std::move(latent);
}

inline double log_psi(int y, double eta, double mu) {
  return y == 0 ? log_norm_cdf(eta - mu) : log_norm_sf(eta - mu);
}

inline double theta_log_ratio(double theta_new, double theta_old, const Eigen::VectorXd& mu1,
                              const Eigen::VectorXi& y1, const Eigen::VectorXd& mu2,
                              const Eigen::VectorXi& y2, double sigma0_sq) {
  double lr = 0.0;
  for (int i = 0; i < y1.size(); ++i)
    lr += log_psi(y1(i), theta_new, mu1(i)) - log_psi(y1(i), theta_old, mu1(i));
  for (int i = 0; i < y2.size(); ++i)
    lr += log_psi(y2(i), theta_new, mu2(i)) - log_psi(y2(i), theta_old, mu2(i));
  // proposal-kernel ratio; identically zero for the symmetric kernel
  lr += normal_log_pdf(theta_old, theta_new, sigma0_sq) -
        normal_log_pdf(theta_new, theta_old, sigma0_sq);
  return lr;
}

inline bool update_theta(ChainState& state, const GroupData& data1, const GroupData& data2,
                         const Hyperparams& hyper, Rng& rng) {
  const Eigen::VectorXd mu1 = latent_mean(state.dags[0], state.L[0], data1.x_obs);
  const Eigen::VectorXd mu2 = latent_mean(state.dags[1], state.L[1], data2.x_obs);
  const double proposal = rng.normal(state.theta, std::sqrt(hyper.sigma0_sq));
  const double lr = theta_log_ratio(proposal, state.theta, mu1, data1.y, mu2, data2.y,
                                    hyper.sigma0_sq);
  if (std::log(rng.uniform()) < lr) {
    state.theta = proposal;
    return true;
  }
  return false;
}

namespace detail {

struct GroupWork {
  Eigen::MatrixXd x;     // n x q augmented data, column 0 = latent
  Eigen::MatrixXd gram;  // x'x, latent row/column refreshed per iteration

  void refresh_latent(const Eigen::VectorXd& latent) {
    x.col(0) = latent;
    const Eigen::VectorXd g0 = x.transpose() * latent;
    gram.col(0) = g0;
    gram.row(0) = g0.transpose();
  }
};

inline void check_state_invariants(const ChainState& state, int iteration) {
  const int q = state.dags[0].node_count();
  if (state.shared_d(0) != 1.0)
    throw NumericError("chain invariant: shared_d[1] != 1 at iteration " +
                       std::to_string(iteration));
  for (int j = 0; j < q; ++j)
    if (!(state.shared_d(j) > 0.0))
      throw NumericError("chain invariant: non-positive variance at iteration " +
                         std::to_string(iteration));
  for (int k = 0; k < 2; ++k) {
    state.dags[k].validate();
    const Eigen::MatrixXd& L = state.L[k];
    for (int i = 0; i < q; ++i) {
      for (int j = 0; j < q; ++j) {
        if (i == j) {
          if (L(i, j) != 1.0)
            throw NumericError("chain invariant: non-unit diagonal in L at iteration " +
                               std::to_string(iteration));
        } else if (!state.dags[k].has_edge(i, j) && L(i, j) != 0.0) {
          throw NumericError("chain invariant: L sparsity breach at iteration " +
                             std::to_string(iteration));
        }
      }
    }
  }
}

inline void check_latent_consistency(const ChainState& state, const GroupData& data, int k,
                                     int iteration) {
  for (int i = 0; i < data.n(); ++i) {
    const bool exceeds = state.latents[k](i) > state.theta;
    if ((data.y(i) == 1) != exceeds)
      throw NumericError("chain invariant: latent/response mismatch in group " +
                         std::to_string(k + 1) + " at iteration " + std::to_string(iteration));
  }
}

}  // namespace detail

// Algorithm: per iteration, (i) per-group DAG Metropolis move, (ii) shared
// sigma^2 Gibbs update, (iii) per-group L update, (iv) per-group latent
// imputation, (v) cut-off MH step, (vi) per-group post-intervention effects,
// recorded after burn-in. Any incoming latent column is ignored; imputation
// starts from scratch.
inline ChainTrace run_chain(const GroupData& data1, const GroupData& data2,
                            const Hyperparams& hyper, const ChainOptions& options, Rng& rng) {
  data1.validate();
  data2.validate();
  if (data1.q() != data2.q())
    throw ValidationError("run_chain: groups have different node counts");
  const int q = data1.q();
  if (q < 2) throw ValidationError("run_chain: need q >= 2");
  hyper.validate(q);

  std::vector<int> targets = options.effect_targets;
  if (targets.empty())
    for (int s = 1; s < q; ++s) targets.push_back(s);
  for (int s : targets)
    if (s <= 0 || s >= q)
      throw ValidationError("run_chain: effect target out of range (cannot be node 1)");

  const std::array<const GroupData*, 2> data{&data1, &data2};
  const std::array<double, 2> g{hyper.g1, hyper.g2};

  ChainState state(q);
  for (int k = 0; k < 2; ++k) {
    state.dags[k] = Dag(q);
    if (options.init_from_data && data[k]->n() > q) {
      try {
        state.dags[k] = initial_dag_estimate(data[k]->x_obs, options.init_zero_tol);
      } catch (const ValidationError&) {
        // near-singular covariance: keep the empty start
      }
    }
  }
  state.theta = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd latent(data[k]->n());
    for (int i = 0; i < data[k]->n(); ++i)
      latent(i) = data[k]->y(i) == 1 ? sample_truncated_normal(0.0, 0.0, inf, rng)
                                     : sample_truncated_normal(0.0, -inf, 0.0, rng);
    state.latents[k] = std::move(latent);
  }

  std::array<detail::GroupWork, 2> work;
  for (int k = 0; k < 2; ++k) {
    work[k].x.resize(data[k]->n(), q);
    work[k].x.rightCols(q - 1) = data[k]->x_obs;
    work[k].x.col(0).setZero();
    work[k].gram = work[k].x.transpose() * work[k].x;
    work[k].refresh_latent(state.latents[k]);
  }

  ChainTrace trace;
  trace.q = q;
  trace.iters = hyper.iters;
  trace.burnin = hyper.burnin;
  trace.effect_targets = targets;
  trace.x_tilde = options.x_tilde;

  for (int t = 1; t <= hyper.iters; ++t) {
    for (int k = 0; k < 2; ++k) {
      Proposal proposal = propose_dag(state.dags[k], rng);
      const double log_q_ratio = hyper.approx_proposal_ratio ? 0.0 : proposal.log_q_ratio;
      const double log_alpha =
          dag_log_accept_ratio(work[k].gram, data[k]->n(), state.dags[k], proposal.dag,
                               proposal.op, log_q_ratio, g[k], hyper.a, hyper.xi);
      ++trace.dag_proposals[k];
      if (std::log(rng.uniform()) < log_alpha) {
        state.dags[k] = std::move(proposal.dag);
        ++trace.dag_accepts[k];
      }
    }

    update_shared_sigma(state, work[0].gram, data[0]->n(), work[1].gram, data[1]->n(), hyper,
                        rng);
    for (int k = 0; k < 2; ++k) update_L(state, k, work[k].gram, hyper, rng);
    for (int k = 0; k < 2; ++k) {
      update_latent(state, k, *data[k], rng);
      work[k].refresh_latent(state.latents[k]);
      detail::check_latent_consistency(state, *data[k], k, t);
    }
    ++trace.theta_proposals;
    if (update_theta(state, data1, data2, hyper, rng)) ++trace.theta_accepts;
    detail::check_state_invariants(state, t);

    if (t > hyper.burnin) {
      trace.theta.push_back(state.theta);
      for (int k = 0; k < 2; ++k) {
        trace.edges[k].push_back(state.dags[k].adjacency());
        const Eigen::MatrixXd omega = reconstruct_precision(state.group_factors(k));
        if (options.record_partials)
          trace.partials[k].push_back(partial_correlations(omega));
        const Eigen::MatrixXd sigma =
            omega.llt().solve(Eigen::MatrixXd::Identity(q, q));
        Eigen::VectorXd eff(static_cast<int>(targets.size()));
        for (std::size_t idx = 0; idx < targets.size(); ++idx) {
          const int s = targets[idx];
          eff(static_cast<int>(idx)) = do_expectation(sigma, state.theta, s,
                                                      state.dags[k].parents(s),
                                                      options.x_tilde);
        }
        trace.effects[k].push_back(std::move(eff));
      }
    }
  }
  return trace;
}

// Group-list form kept for a later multi-group extension; only two groups
// are accepted today.
inline ChainTrace run_chain(const std::vector<GroupData>& groups, const Hyperparams& hyper,
                            const ChainOptions& options, Rng& rng) {
  if (groups.size() != 2)
    throw ValidationError("run_chain: exactly 2 groups are supported, got " +
                          std::to_string(groups.size()));
  return run_chain(groups[0], groups[1], hyper, options, rng);
}

// Posterior edge-inclusion frequencies over the kept iterations.
inline Eigen::MatrixXd edge_probabilities(const ChainTrace& trace, int k) {
  if (k < 0 || k > 1) throw ValidationError("edge_probabilities: group must be 1 or 2");
  if (trace.kept() == 0) throw ValidationError("edge_probabilities: empty trace");
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(trace.q, trace.q);
  for (const auto& adj : trace.edges[k]) probs += adj.cast<double>();
  return probs / static_cast<double>(trace.kept());
}

// Bayesian model average of the recorded per-iteration effects.
inline EffectEstimate bma_effects(const ChainTrace& trace, int k, int s, double x_tilde) {
  if (k < 0 || k > 1) throw ValidationError("bma_effects: group must be 1 or 2");
  if (trace.kept() == 0) throw ValidationError("bma_effects: empty trace");
  if (x_tilde != trace.x_tilde)
    throw ValidationError("bma_effects: x_tilde was not recorded by this trace");
  const auto it = std::find(trace.effect_targets.begin(), trace.effect_targets.end(), s);
  if (it == trace.effect_targets.end())
    throw ValidationError("bma_effects: node was not a recorded intervention target");
  const auto col = static_cast<int>(it - trace.effect_targets.begin());
  std::vector<double> values;
  values.reserve(trace.effects[k].size());
  for (const auto& eff : trace.effects[k]) values.push_back(eff(col));
  return summarize_effect(std::move(values), s, x_tilde);
}

}  // namespace dagprobit
