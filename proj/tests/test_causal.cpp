#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dagprobit/causal.hpp"
#include "dagprobit/cholesky.hpp"
#include "dagprobit/dag.hpp"
#include "dagprobit/rng.hpp"

using namespace dagprobit;

namespace {

Dag make_dag(int q, const std::vector<std::pair<int, int>>& edges) {
  AdjacencyMatrix adj = AdjacencyMatrix::Zero(q, q);
  for (const auto& [i, j] : edges) adj(i, j) = 1;
  return Dag::from_adjacency(adj);
}

// Random SEM truth on a parent-ordered DAG, with the probit-scale
// constraint D(0) = 1.
struct SemTruth {
  Dag dag;
  Eigen::MatrixXd L;
  Eigen::VectorXd D;
  Eigen::MatrixXd sigma;
};

SemTruth random_sem(int q, double xi, Rng& rng) {
  SemTruth t{random_dag(q, xi, rng), Eigen::MatrixXd::Identity(q, q),
             Eigen::VectorXd::Ones(q), {}};
  for (int i = 1; i < q; ++i)
    for (int j = 0; j < i; ++j)
      if (t.dag.has_edge(i, j))
        t.L(i, j) = rng.uniform(0.4, 1.2) * (rng.uniform() < 0.5 ? -1 : 1);
  for (int j = 1; j < q; ++j) t.D(j) = rng.uniform(0.5, 1.5);
  t.sigma = reconstruct_precision({t.L, t.D})
                .llt()
                .solve(Eigen::MatrixXd::Identity(q, q));
  return t;
}

// Truncated-factorization oracle: simulate the SEM with the equation for
// X_s deleted and X_s pinned to x_tilde, then count exceedances of theta.
double mutilated_sem_effect(const SemTruth& t, int s, double x_tilde, double theta,
                            long samples, Rng& rng) {
  const int q = t.dag.node_count();
  long hits = 0;
  Eigen::VectorXd x(q);
  for (long it = 0; it < samples; ++it) {
    for (int j = q - 1; j >= 0; --j) {  // parents always have higher index
      if (j == s) {
        x(j) = x_tilde;
        continue;
      }
      double mean = 0.0;
      for (int i = j + 1; i < q; ++i)
        if (t.dag.has_edge(i, j)) mean -= t.L(i, j) * x(i);
      x(j) = mean + rng.normal() * std::sqrt(t.D(j));
    }
    if (x(0) > theta) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

}  // namespace

TEST_CASE("bartlett_params closed-form cases") {
  SECTION("identity covariance") {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
    const auto b = bartlett_params(eye, 2, {1, 3});
    CHECK_THAT(b.gamma_s, Catch::Matchers::WithinAbs(0.0, 1e-14));
    CHECK(b.gamma.cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THAT(b.delta1_sq, Catch::Matchers::WithinAbs(1.0, 1e-14));
    CHECK_THAT(b.sigma_do_sq, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }

  SECTION("no parents collapses to the single regression") {
    Rng rng(12);
    const SemTruth t = random_sem(3, 0.45, rng);
    const auto b = bartlett_params(t.sigma, 2, {});
    CHECK_THAT(b.gamma_s,
               Catch::Matchers::WithinAbs(t.sigma(0, 2) / t.sigma(2, 2), 1e-12));
    CHECK_THAT(b.sigma_do_sq, Catch::Matchers::WithinAbs(b.delta1_sq, 1e-12));
    CHECK(b.t_mat.size() == 0);
  }

  SECTION("validation") {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
    CHECK_THROWS_AS(bartlett_params(eye, 0, {}), ValidationError);
    CHECK_THROWS_AS(bartlett_params(eye, 2, {0}), ValidationError);
  }
}

TEST_CASE("post-intervention density matches Monte-Carlo marginalization") {
  // f(x1 | do(X_s = x)) integrates the conditional over the parents'
  // marginal; draw that integral directly and compare first two moments.
  Rng rng(100);
  const SemTruth t = random_sem(4, 0.6, rng);
  const int s = 2;
  const auto pa_s = t.dag.parents(s);
  const double x_tilde = 1.3;
  const auto b = bartlett_params(t.sigma, s, pa_s);

  const int p = static_cast<int>(pa_s.size());
  const long draws = 1000000;
  Rng mc(101);
  double sum = 0.0, sumsq = 0.0;
  Eigen::MatrixXd spp(p, p);
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) spp(r, c) = t.sigma(pa_s[r], pa_s[c]);
  const Eigen::MatrixXd chol =
      p ? Eigen::MatrixXd(spp.llt().matrixL()) : Eigen::MatrixXd();
  for (long i = 0; i < draws; ++i) {
    Eigen::VectorXd z(p);
    for (int r = 0; r < p; ++r) z(r) = mc.normal();
    const Eigen::VectorXd xpa = p ? Eigen::VectorXd(chol * z) : Eigen::VectorXd();
    double mean = b.gamma_s * x_tilde;
    for (int r = 0; r < p; ++r) mean += b.gamma(r) * xpa(r);
    const double x1 = mean + mc.normal() * std::sqrt(b.delta1_sq);
    sum += x1;
    sumsq += x1 * x1;
  }
  const double mc_mean = sum / draws;
  const double mc_var = sumsq / draws - mc_mean * mc_mean;
  CHECK(std::abs(mc_mean - b.gamma_s * x_tilde) <
        0.02 * std::max(1.0, std::abs(b.gamma_s * x_tilde)));
  CHECK(std::abs(mc_var - b.sigma_do_sq) < 0.02 * b.sigma_do_sq);
}

TEST_CASE("do_expectation closed-form cases") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THAT(do_expectation(eye, 0.0, 1, {}, 2.7), Catch::Matchers::WithinAbs(0.5, 1e-14));
  CHECK(do_expectation(eye, 40.0, 1, {}, 1.0) < 1e-12);
  CHECK_THAT(do_expectation(eye, -40.0, 1, {}, 1.0), Catch::Matchers::WithinAbs(1.0, 1e-12));

  SECTION("sigma = I gives a flat response in x_tilde") {
    for (double x : {-2.0, 0.0, 1.0, 3.0})
      CHECK_THAT(do_expectation(eye, 0.4, 2, {1}, x),
                 Catch::Matchers::WithinAbs(do_expectation(eye, 0.4, 2, {1}, 0.0), 1e-13));
  }

  SECTION("x_tilde = 0 depends only on sigma_do") {
    Rng rng(7);
    const SemTruth t = random_sem(4, 0.5, rng);
    const auto pa = t.dag.parents(2);
    const auto b = bartlett_params(t.sigma, 2, pa);
    CHECK_THAT(do_expectation(t.sigma, 0.8, 2, pa, 0.0),
               Catch::Matchers::WithinAbs(norm_sf(0.8 / std::sqrt(b.sigma_do_sq)), 1e-13));
  }
}

TEST_CASE("do_expectation agrees with the mutilated-SEM oracle") {
  SECTION("three-node chain") {
    Rng rng(2023);
    SemTruth t{make_dag(3, {{2, 1}, {1, 0}}), Eigen::MatrixXd::Identity(3, 3),
               Eigen::VectorXd::Ones(3), {}};
    t.L(2, 1) = -0.8;
    t.L(1, 0) = 0.9;
    t.D(1) = 0.7;
    t.D(2) = 1.3;
    t.sigma =
        reconstruct_precision({t.L, t.D}).llt().solve(Eigen::MatrixXd::Identity(3, 3));
    const double theta = 0.3;
    const double x_tilde = 1.0;
    for (int s : {1, 2}) {
      const double closed = do_expectation(t.sigma, theta, s, t.dag.parents(s), x_tilde);
      const double mc = mutilated_sem_effect(t, s, x_tilde, theta, 1000000, rng);
      REQUIRE(std::abs(closed - mc) < 0.01);
    }
  }

  SECTION("random instances q <= 4 (property)") {
    Rng rng(424242);
    for (int trial = 0; trial < 6; ++trial) {
      const int q = 3 + static_cast<int>(rng.uniform_index(2));
      const SemTruth t = random_sem(q, 0.5, rng);
      const int s = 1 + static_cast<int>(rng.uniform_index(q - 1));
      const double theta = rng.uniform(-0.8, 0.8);
      const double x_tilde = rng.uniform(-1.5, 1.5);
      const long draws = 400000;
      const double closed = do_expectation(t.sigma, theta, s, t.dag.parents(s), x_tilde);
      const double mc = mutilated_sem_effect(t, s, x_tilde, theta, draws, rng);
      const double se = std::sqrt(std::max(closed * (1 - closed), 1e-4) / draws);
      REQUIRE(std::abs(closed - mc) < std::max(3.5 * se, 0.005));
    }
  }
}

TEST_CASE("sigma_do never falls below the conditional variance (property)") {
  Rng rng(31337);
  for (int trial = 0; trial < 200; ++trial) {
    const int q = 3 + static_cast<int>(rng.uniform_index(3));
    const SemTruth t = random_sem(q, 0.5, rng);
    const int s = 1 + static_cast<int>(rng.uniform_index(q - 1));
    const auto b = bartlett_params(t.sigma, s, t.dag.parents(s));
    REQUIRE(b.sigma_do_sq >= b.delta1_sq * (1.0 - 1e-12));
  }
}

TEST_CASE("summarize_effect") {
  SECTION("constant trace gives a degenerate band") {
    const auto e = summarize_effect(std::vector<double>(50, 0.42), 3, 1.0);
    CHECK_THAT(e.mean, Catch::Matchers::WithinAbs(0.42, 1e-15));
    CHECK_THAT(e.lo95, Catch::Matchers::WithinAbs(0.42, 1e-15));
    CHECK_THAT(e.hi95, Catch::Matchers::WithinAbs(0.42, 1e-15));
  }
  SECTION("all-ones trace") {
    const auto e = summarize_effect(std::vector<double>(10, 1.0), 2, 0.5);
    CHECK(e.mean == 1.0);
    CHECK(e.lo95 == 1.0);
    CHECK(e.hi95 == 1.0);
  }
  SECTION("empty trace rejected") {
    CHECK_THROWS_AS(summarize_effect({}, 1, 1.0), ValidationError);
  }
}
