#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "dagprobit/dag.hpp"
#include "dagprobit/errors.hpp"

namespace dagprobit {

// Omega = L * D^{-1} * L' with unit-triangular L and positive conditional
// variances D. Entry L(i,j) is the structural coefficient of the edge
// i -> j; with parent ordering (edges from higher to lower index) L is
// lower triangular.
struct CholeskyFactors {
  Eigen::MatrixXd L;
  Eigen::VectorXd D;
};

inline Eigen::MatrixXd reconstruct_precision(const CholeskyFactors& f) {
  return f.L * f.D.cwiseInverse().asDiagonal() * f.L.transpose();
}

// Unpivoted LDL factorization of an SPD matrix, returned in the
// Omega = L D^{-1} L' parameterization. The decomposition is unique, so a
// reconstruct-decompose round trip is the identity.
inline CholeskyFactors modified_cholesky(const Eigen::MatrixXd& omega) {
  const int q = static_cast<int>(omega.rows());
  if (omega.cols() != q) throw NumericError("modified_cholesky: matrix must be square");
  const double scale = omega.cwiseAbs().maxCoeff();
  if ((omega - omega.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0))
    throw NumericError("modified_cholesky: matrix is not symmetric");

  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(q, q);
  Eigen::VectorXd m(q);  // pivots of Omega = L diag(m) L'
  for (int j = 0; j < q; ++j) {
    double mj = omega(j, j);
    for (int k = 0; k < j; ++k) mj -= L(j, k) * L(j, k) * m(k);
    if (!(mj > 0.0))
      throw NumericError("modified_cholesky: non-positive pivot at index " +
                         std::to_string(j + 1) + " (matrix not positive definite)");
    m(j) = mj;
    for (int i = j + 1; i < q; ++i) {
      double v = omega(i, j);
      for (int k = 0; k < j; ++k) v -= L(i, k) * L(j, k) * m(k);
      L(i, j) = v / mj;
    }
  }
  return {std::move(L), m.cwiseInverse()};
}

// Gaussian conditional of node j given x_pa(j) under covariance sigma.
// Stored with the structural sign: mean(x) = -coefficients . x.
struct ConditionalParams {
  Eigen::VectorXd coefficients;
  double residual_variance;
};

inline ConditionalParams conditional_params(const Eigen::MatrixXd& sigma, int j,
                                            const std::vector<int>& pa) {
  const int q = static_cast<int>(sigma.rows());
  if (j < 0 || j >= q) throw ValidationError("conditional_params: node out of range");
  const int p = static_cast<int>(pa.size());
  if (p == 0) return {Eigen::VectorXd(), sigma(j, j)};

  Eigen::MatrixXd spp(p, p);
  Eigen::VectorXd spj(p);
  for (int r = 0; r < p; ++r) {
    if (pa[r] == j) throw ValidationError("conditional_params: j cannot be its own parent");
    spj(r) = sigma(pa[r], j);
    for (int c = 0; c < p; ++c) spp(r, c) = sigma(pa[r], pa[c]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(spp);
  if (llt.info() != Eigen::Success)
    throw NumericError("conditional_params: singular parent covariance block");
  const Eigen::VectorXd beta = llt.solve(spj);
  const double resid = sigma(j, j) - spj.dot(beta);
  if (!(resid > 0.0))
    throw NumericError("conditional_params: non-positive residual variance");
  return {-beta, resid};
}

// rho_ij = -omega_ij / sqrt(omega_ii omega_jj), diagonal set to 1.
inline Eigen::MatrixXd partial_correlations(const Eigen::MatrixXd& omega) {
  const int q = static_cast<int>(omega.rows());
  for (int i = 0; i < q; ++i)
    if (!(omega(i, i) > 0.0))
      throw NumericError("partial_correlations: non-positive diagonal entry");
  Eigen::MatrixXd rho(q, q);
  for (int i = 0; i < q; ++i) {
    rho(i, i) = 1.0;
    for (int j = i + 1; j < q; ++j) {
      const double v = -omega(i, j) / std::sqrt(omega(i, i) * omega(j, j));
      rho(i, j) = v;
      rho(j, i) = v;
    }
  }
  return rho;
}

// Initial DAG heuristic: the latent column is unavailable, but the trailing
// block of the full factor equals the factor of the observed-margin
// precision, so thresholding the latter recovers the structure among nodes
// 2..q. Node 1 starts isolated.
inline Dag initial_dag_estimate(const Eigen::MatrixXd& x_minus1, double zero_tol) {
  const int n = static_cast<int>(x_minus1.rows());
  const int p = static_cast<int>(x_minus1.cols());
  if (p < 1) throw ValidationError("initial_dag_estimate: no covariate columns");
  if (n <= p)
    throw ValidationError(
        "initial_dag_estimate: need n > q-1 rows for an invertible empirical covariance; "
        "consider regularizing or reducing q");
  const Eigen::MatrixXd centered = x_minus1.rowwise() - x_minus1.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw ValidationError(
        "initial_dag_estimate: singular empirical covariance; regularize the inputs");
  const Eigen::MatrixXd omega_rest = llt.solve(Eigen::MatrixXd::Identity(p, p));
  const CholeskyFactors f = modified_cholesky(omega_rest);

  AdjacencyMatrix adj = AdjacencyMatrix::Zero(p + 1, p + 1);
  for (int r = 1; r < p; ++r)
    for (int c = 0; c < r; ++c)
      if (std::abs(f.L(r, c)) > zero_tol) adj(r + 1, c + 1) = 1;
  return Dag::from_adjacency(adj);
}

}  // namespace dagprobit
