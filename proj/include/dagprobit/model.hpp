#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "dagprobit/dag.hpp"
#include "dagprobit/errors.hpp"
#include "dagprobit/rng.hpp"
#include "dagprobit/stats.hpp"

namespace dagprobit {

struct Hyperparams {
  double a = 0.0;        // DAG-Wishart shape base
  double g1 = 0.0;       // group-1 prior precision scale
  double g2 = 0.0;       // group-2 prior precision scale
  double xi = 0.1;       // edge-inclusion probability
  double sigma0_sq = 0.5;  // proposal variance for the cut-off
  int iters = 5000;        // T
  int burnin = 1000;       // B
  double edge_threshold = 0.5;
  bool approx_proposal_ratio = false;  // use the sparse q-ratio ~ 1 shortcut

  // a = q and g_k = 1/n_k.
  static Hyperparams defaults_for(int q, int n1, int n2) {
    Hyperparams h;
    h.a = static_cast<double>(q);
    h.g1 = 1.0 / static_cast<double>(n1);
    h.g2 = 1.0 / static_cast<double>(n2);
    return h;
  }

  void validate(int q) const {
    if (!(a > static_cast<double>(q) - 1.0))
      throw ValidationError("Hyperparams: a must exceed q-1 so every a_j stays positive");
    if (!(g1 > 0.0) || !(g2 > 0.0))
      throw ValidationError("Hyperparams: g1 and g2 must be positive");
    if (!(xi > 0.0 && xi < 1.0)) throw ValidationError("Hyperparams: xi must lie in (0,1)");
    if (!(sigma0_sq > 0.0)) throw ValidationError("Hyperparams: sigma0_sq must be positive");
    if (burnin < 0 || burnin >= iters)
      throw ValidationError("Hyperparams: need 0 <= burnin < iters");
    if (edge_threshold < 0.0 || edge_threshold > 1.0)
      throw ValidationError("Hyperparams: edge_threshold must lie in [0,1]");
  }
};

// One group's observations: binary responses, observed covariates for nodes
// 2..q, and the current imputation of the latent column X_1.
struct GroupData {
  Eigen::VectorXi y;
  Eigen::MatrixXd x_obs;
  Eigen::VectorXd x_latent;

  int n() const { return static_cast<int>(y.size()); }
  int q() const { return static_cast<int>(x_obs.cols()) + 1; }

  void validate() const {
    if (x_obs.rows() != y.size())
      throw ValidationError("GroupData: y and x_obs row counts disagree");
    if (x_latent.size() != 0 && x_latent.size() != y.size())
      throw ValidationError("GroupData: latent column length mismatch");
    for (int i = 0; i < y.size(); ++i)
      if (y(i) != 0 && y(i) != 1)
        throw ValidationError("GroupData: y must be 0/1; row " + std::to_string(i + 1) +
                              " is " + std::to_string(y(i)));
  }

  // Augmented data matrix [X_1 | X_{-1}]; latent column zero if unset.
  Eigen::MatrixXd augmented() const {
    Eigen::MatrixXd x(x_obs.rows(), q());
    x.col(0) = x_latent.size() ? x_latent : Eigen::VectorXd::Zero(x_obs.rows());
    x.rightCols(x_obs.cols()) = x_obs;
    return x;
  }
};

inline double shape_a_j(double a, int pa_count, int q) {
  return a + static_cast<double>(pa_count) - static_cast<double>(q) + 1.0;
}

// T_j = g I, T_bar_j = T_j + Xpa'Xpa, l_hat = T_bar^{-1} Xpa'Xj.
struct NodeStats {
  Eigen::MatrixXd t;
  Eigen::MatrixXd t_bar;
  Eigen::VectorXd l_hat;
};

namespace detail {

// Everything the sampler needs about one node, computed off the Gram matrix
// of the augmented data so repeated submatrix extraction stays cheap.
struct NodeSuffStats {
  int p = 0;
  Eigen::MatrixXd t_bar;
  Eigen::LLT<Eigen::MatrixXd> t_bar_llt;
  Eigen::VectorXd gpj;    // Xpa'Xj
  Eigen::VectorXd l_hat;  // T_bar^{-1} Xpa'Xj
  double gjj = 0.0;       // Xj'Xj
  double logdet_t_bar = 0.0;
  double resid = 0.0;  // Xj'Xj - l_hat'T_bar l_hat, always >= 0
};

inline NodeSuffStats node_suff_stats(const Eigen::MatrixXd& gram, const std::vector<int>& pa,
                                     int j, double g) {
  NodeSuffStats s;
  s.p = static_cast<int>(pa.size());
  s.gjj = gram(j, j);
  if (s.p == 0) {
    s.resid = s.gjj;
    return s;
  }
  s.t_bar.resize(s.p, s.p);
  s.gpj.resize(s.p);
  for (int r = 0; r < s.p; ++r) {
    s.gpj(r) = gram(pa[r], j);
    for (int c = 0; c < s.p; ++c) s.t_bar(r, c) = gram(pa[r], pa[c]);
    s.t_bar(r, r) += g;
  }
  s.t_bar_llt.compute(s.t_bar);
  if (s.t_bar_llt.info() != Eigen::Success)
    throw NumericError("node_suff_stats: T_bar not positive definite");
  s.l_hat = s.t_bar_llt.solve(s.gpj);
  s.logdet_t_bar = 2.0 * s.t_bar_llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  s.resid = std::max(s.gjj - s.gpj.dot(s.l_hat), 0.0);
  return s;
}

// log m(X_j | X_pa(j), D). Node 1 (j == 0) is the fixed-variance case.
inline double log_marginal_core(const NodeSuffStats& s, int j, int n, int q, double g,
                                double a) {
  const double det_term = 0.5 * (static_cast<double>(s.p) * std::log(g) - s.logdet_t_bar);
  const double base = -0.5 * static_cast<double>(n) * kLogTwoPi + det_term;
  if (j == 0) return base - 0.5 * s.resid;
  const double a_j = shape_a_j(a, s.p, q);
  if (!(a_j > 0.0))
    throw ValidationError("log_marginal_node: a_j <= 0 at node " + std::to_string(j + 1) +
                          "; increase the hyperparameter a");
  const double an = a_j + static_cast<double>(n);
  return base + std::lgamma(0.5 * an) - std::lgamma(0.5 * a_j) + 0.5 * a_j * std::log(0.5 * g) -
         0.5 * an * std::log(0.5 * (g + s.resid));
}

}  // namespace detail

inline NodeStats node_stats(const Eigen::MatrixXd& x, const Dag& dag, int j, double g) {
  const auto pa = dag.parents(j);
  const int p = static_cast<int>(pa.size());
  NodeStats out;
  if (p == 0) return out;
  Eigen::MatrixXd xpa(x.rows(), p);
  for (int r = 0; r < p; ++r) xpa.col(r) = x.col(pa[r]);
  out.t = g * Eigen::MatrixXd::Identity(p, p);
  out.t_bar = out.t + xpa.transpose() * xpa;
  out.l_hat = out.t_bar.llt().solve(xpa.transpose() * x.col(j));
  return out;
}

inline double log_marginal_node_gram(const Eigen::MatrixXd& gram, const std::vector<int>& pa,
                                     int j, int n, int q, double g, double a) {
  return detail::log_marginal_core(detail::node_suff_stats(gram, pa, j, g), j, n, q, g, a);
}

inline double log_marginal_node(const Eigen::MatrixXd& x, const Dag& dag, int j, double g,
                                double a) {
  const Eigen::MatrixXd gram = x.transpose() * x;
  return log_marginal_node_gram(gram, dag.parents(j), j, static_cast<int>(x.rows()),
                                dag.node_count(), g, a);
}

// Shape/rate of the doubly prior on sigma^2_j given the two current DAGs.
inline std::pair<double, double> sigma_prior_params(const Dag& dag1, const Dag& dag2, int j,
                                                    const Hyperparams& hyper) {
  const int q = dag1.node_count();
  const double a1 = shape_a_j(hyper.a, static_cast<int>(dag1.parents(j).size()), q);
  const double a2 = shape_a_j(hyper.a, static_cast<int>(dag2.parents(j).size()), q);
  const double shape = 0.5 * (a1 + a2);
  const double rate = 0.5 * (hyper.g1 + hyper.g2);
  if (!(shape > 0.0))
    throw ValidationError("sigma_prior_params: non-positive shape at node " +
                          std::to_string(j + 1));
  return {shape, rate};
}

inline double sample_sigma_prior(const Dag& dag1, const Dag& dag2, int j,
                                 const Hyperparams& hyper, Rng& rng) {
  if (j == 0) return 1.0;  // probit scale: sigma^2_1 = 1
  const auto [shape, rate] = sigma_prior_params(dag1, dag2, j, hyper);
  return rng.inverse_gamma(shape, rate);
}

inline Eigen::VectorXd sample_L_prior(const Dag& dag, int j, double sigma_sq, double g,
                                      Rng& rng) {
  const int p = static_cast<int>(dag.parents(j).size());
  Eigen::VectorXd draw(p);
  const double sd = std::sqrt(sigma_sq / g);
  for (int r = 0; r < p; ++r) draw(r) = rng.normal(0.0, sd);
  return draw;
}

}  // namespace dagprobit
