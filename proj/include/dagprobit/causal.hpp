#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dagprobit/errors.hpp"
#include "dagprobit/stats.hpp"

namespace dagprobit {

// Regression reparameterization of Sigma used for the post-intervention
// distribution of the latent response:
//   (gamma_s, gamma')' = Sigma_{1,fa(s)} (Sigma_{fa(s),fa(s)})^{-1}
//   delta1^2           = Sigma_{1|fa(s)}
//   T                  = (Sigma_{pa(s),pa(s)})^{-1} + gamma gamma' / delta1^2
//   sigma_do^2         = delta1^2 / (1 - gamma' T^{-1} gamma / delta1^2)
struct BartlettParams {
  double delta1_sq;
  double gamma_s;
  Eigen::VectorXd gamma;
  Eigen::MatrixXd t_mat;
  double sigma_do_sq;
};

inline BartlettParams bartlett_params(const Eigen::MatrixXd& sigma, int s,
                                      const std::vector<int>& pa_s) {
  const int q = static_cast<int>(sigma.rows());
  if (s <= 0 || s >= q)
    throw ValidationError("bartlett_params: intervention target must be a covariate node");
  for (int v : pa_s)
    if (v == 0)
      throw ValidationError("bartlett_params: the latent response cannot parent the target");

  const int p = static_cast<int>(pa_s.size());
  const int m = p + 1;
  std::vector<int> fa(m);  // s first, then pa(s)
  fa[0] = s;
  std::copy(pa_s.begin(), pa_s.end(), fa.begin() + 1);

  Eigen::MatrixXd sff(m, m);
  Eigen::VectorXd sf1(m);
  for (int r = 0; r < m; ++r) {
    sf1(r) = sigma(fa[r], 0);
    for (int c = 0; c < m; ++c) sff(r, c) = sigma(fa[r], fa[c]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sff);
  if (llt.info() != Eigen::Success)
    throw NumericError("bartlett_params: singular family covariance block");
  const Eigen::VectorXd w = llt.solve(sf1);

  BartlettParams out;
  out.gamma_s = w(0);
  out.gamma = w.tail(p);
  out.delta1_sq = sigma(0, 0) - sf1.dot(w);
  if (!(out.delta1_sq > 0.0))
    throw NumericError("bartlett_params: non-positive conditional variance");

  if (p == 0) {
    out.t_mat.resize(0, 0);
    out.sigma_do_sq = out.delta1_sq;
  } else {
    Eigen::MatrixXd spp(p, p);
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c) spp(r, c) = sigma(pa_s[r], pa_s[c]);
    Eigen::LLT<Eigen::MatrixXd> llt_pp(spp);
    if (llt_pp.info() != Eigen::Success)
      throw NumericError("bartlett_params: singular parent covariance block");
    out.t_mat = llt_pp.solve(Eigen::MatrixXd::Identity(p, p)) +
                out.gamma * out.gamma.transpose() / out.delta1_sq;
    const double corr = out.gamma.dot(out.t_mat.llt().solve(out.gamma)) / out.delta1_sq;
    if (!(corr >= 0.0 && corr < 1.0))
      throw NumericError("bartlett_params: correction factor outside [0,1)");
    out.sigma_do_sq = out.delta1_sq / (1.0 - corr);
  }
  if (out.sigma_do_sq < out.delta1_sq * (1.0 - 1e-9))
    throw NumericError("bartlett_params: sigma_do^2 fell below delta1^2");
  return out;
}

// E[Y | do(X_s = x_tilde), Sigma, theta] = 1 - Phi((theta - gamma_s x) / sigma_do).
inline double do_expectation(const Eigen::MatrixXd& sigma, double theta, int s,
                             const std::vector<int>& pa_s, double x_tilde) {
  const BartlettParams b = bartlett_params(sigma, s, pa_s);
  return norm_sf((theta - b.gamma_s * x_tilde) / std::sqrt(b.sigma_do_sq));
}

struct EffectEstimate {
  int node;      // intervention target s
  double level;  // x_tilde
  std::vector<double> values;
  double mean;
  double lo95;
  double hi95;
};

inline EffectEstimate summarize_effect(std::vector<double> values, int node, double level) {
  if (values.empty()) throw ValidationError("summarize_effect: empty effect trace");
  EffectEstimate e;
  e.node = node;
  e.level = level;
  e.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  e.lo95 = empirical_quantile(values, 0.025);
  e.hi95 = empirical_quantile(values, 0.975);
  e.values = std::move(values);
  return e;
}

}  // namespace dagprobit
