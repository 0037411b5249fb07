#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "dagprobit/dag.hpp"

using namespace dagprobit;

namespace {

Dag make_dag(int q, const std::vector<std::pair<int, int>>& edges) {
  AdjacencyMatrix adj = AdjacencyMatrix::Zero(q, q);
  for (const auto& [i, j] : edges) adj(i, j) = 1;
  return Dag::from_adjacency(adj);
}

// Independent operator oracle: try every (kind, i, j) combination and keep
// the ones whose application produces a valid Dag.
std::vector<Operator> brute_force_operators(const Dag& dag) {
  std::vector<Operator> valid;
  const int q = dag.node_count();
  for (OperatorKind kind :
       {OperatorKind::Insert, OperatorKind::Delete, OperatorKind::Reverse}) {
    for (int i = 0; i < q; ++i) {
      for (int j = 0; j < q; ++j) {
        if (i == j) continue;
        const Operator op{kind, i, j};
        try {
          Dag next = apply_operator(dag, op);
          next.validate();
          valid.push_back(op);
        } catch (const ValidationError&) {
        }
      }
    }
  }
  return valid;
}

bool contains(const std::vector<Operator>& ops, const Operator& op) {
  return std::find(ops.begin(), ops.end(), op) != ops.end();
}

// Wilson-Hilferty chi-squared quantile approximation, good enough for a
// test threshold.
double chi_sq_quantile(double p, double df) {
  const double z = dagprobit::norm_quantile(p);
  const double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
  return df * t * t * t;
}

}  // namespace

TEST_CASE("is_acyclic basics") {
  AdjacencyMatrix empty = AdjacencyMatrix::Zero(3, 3);
  CHECK(is_acyclic(empty));

  AdjacencyMatrix cycle = AdjacencyMatrix::Zero(3, 3);
  cycle(0, 1) = cycle(1, 2) = cycle(2, 0) = 1;
  CHECK_FALSE(is_acyclic(cycle));

  AdjacencyMatrix chain = AdjacencyMatrix::Zero(3, 3);
  chain(2, 1) = chain(1, 0) = 1;
  CHECK(is_acyclic(chain));
}

TEST_CASE("parents") {
  const Dag chain = make_dag(3, {{2, 1}, {1, 0}});
  CHECK(chain.parents(0) == std::vector<int>{1});
  CHECK(chain.parents(2).empty());

  const Dag vee = make_dag(3, {{1, 0}, {2, 0}});
  CHECK(vee.parents(0) == std::vector<int>{1, 2});
  CHECK_THROWS_AS(vee.parents(3), ValidationError);
  CHECK_THROWS_AS(vee.parents(-1), ValidationError);
}

TEST_CASE("dag invariant validation") {
  AdjacencyMatrix self = AdjacencyMatrix::Zero(2, 2);
  self(1, 1) = 1;
  CHECK_THROWS_AS(Dag::from_adjacency(self), ValidationError);

  AdjacencyMatrix both = AdjacencyMatrix::Zero(3, 3);
  both(1, 2) = both(2, 1) = 1;
  CHECK_THROWS_AS(Dag::from_adjacency(both), ValidationError);

  AdjacencyMatrix child_of_one = AdjacencyMatrix::Zero(3, 3);
  child_of_one(0, 2) = 1;
  CHECK_THROWS_AS(Dag::from_adjacency(child_of_one), ValidationError);
}

TEST_CASE("enumerate_valid_operators on small graphs") {
  SECTION("empty q=3: into-1 pairs one orientation, free pair both") {
    const Dag empty(3);
    const auto ops = enumerate_valid_operators(empty);
    CHECK(ops.size() == 4);
    CHECK(contains(ops, {OperatorKind::Insert, 1, 0}));
    CHECK(contains(ops, {OperatorKind::Insert, 2, 0}));
    CHECK(contains(ops, {OperatorKind::Insert, 1, 2}));
    CHECK(contains(ops, {OperatorKind::Insert, 2, 1}));
  }
  SECTION("single edge into node 1 admits only Delete") {
    const Dag d = make_dag(2, {{1, 0}});
    const auto ops = enumerate_valid_operators(d);
    REQUIRE(ops.size() == 1);
    CHECK(ops[0] == Operator{OperatorKind::Delete, 1, 0});
  }
  SECTION("complete parent-ordered q=3 has no inserts") {
    const Dag full = make_dag(3, {{1, 0}, {2, 0}, {2, 1}});
    for (const auto& op : enumerate_valid_operators(full))
      CHECK(op.kind != OperatorKind::Insert);
  }
}

TEST_CASE("enumerate_valid_operators matches brute force on random dags") {
  Rng rng(20240811);
  for (int trial = 0; trial < 40; ++trial) {
    const int q = 2 + static_cast<int>(rng.uniform_index(5));
    Dag dag = random_dag(q, 0.35, rng);
    // Random walk a few steps so non-parent-ordered shapes show up too.
    for (int step = 0; step < 6; ++step) {
      const auto ops = enumerate_valid_operators(dag);
      dag = apply_operator(dag, ops[rng.uniform_index(ops.size())]);
    }
    auto fast = enumerate_valid_operators(dag);
    auto slow = brute_force_operators(dag);
    REQUIRE(fast.size() == slow.size());
    for (const auto& op : slow) CHECK(contains(fast, op));
  }
}

TEST_CASE("apply_operator basics") {
  const Dag edge = make_dag(2, {{1, 0}});
  CHECK(apply_operator(edge, {OperatorKind::Delete, 1, 0}) == Dag(2));

  const Dag e32 = make_dag(3, {{2, 1}});
  CHECK(apply_operator(e32, {OperatorKind::Reverse, 2, 1}) == make_dag(3, {{1, 2}}));

  CHECK(apply_operator(Dag(3), {OperatorKind::Insert, 2, 1}) == make_dag(3, {{2, 1}}));

  CHECK_THROWS_AS(apply_operator(Dag(3), {OperatorKind::Delete, 2, 1}), ValidationError);
  CHECK_THROWS_AS(apply_operator(edge, {OperatorKind::Reverse, 1, 0}), ValidationError);
  CHECK_THROWS_AS(apply_operator(Dag(3), {OperatorKind::Insert, 0, 1}), ValidationError);
}

TEST_CASE("operators preserve dag invariants (property)") {
  Rng rng(7771);
  for (int trial = 0; trial < 30; ++trial) {
    const int q = 3 + static_cast<int>(rng.uniform_index(5));
    Dag dag = random_dag(q, 0.3, rng);
    for (int step = 0; step < 10; ++step) {
      const auto ops = enumerate_valid_operators(dag);
      REQUIRE_FALSE(ops.empty());
      const auto& op = ops[rng.uniform_index(ops.size())];
      Dag next = apply_operator(dag, op);
      REQUIRE_NOTHROW(next.validate());
      if (op.kind == OperatorKind::Insert) {
        // insert followed by delete returns to the original graph
        CHECK(apply_operator(next, {OperatorKind::Delete, op.source, op.target}) == dag);
      }
      dag = std::move(next);
    }
  }
}

TEST_CASE("random_dag domain and moments") {
  Rng rng(99);
  CHECK_THROWS_AS(random_dag(4, 0.0, rng), ValidationError);
  CHECK_THROWS_AS(random_dag(4, 1.0, rng), ValidationError);

  SECTION("expected edge count: q=10, xi=0.1 over 1e4 draws") {
    Rng r(123);
    const int draws = 10000;
    double total = 0.0;
    for (int i = 0; i < draws; ++i) total += random_dag(10, 0.1, r).edge_count();
    const double mean = total / draws;
    const double se = std::sqrt(45 * 0.1 * 0.9 / draws);
    CHECK(std::abs(mean - 4.5) < 3.0 * se);
  }

  SECTION("seeded determinism") {
    Rng a(42), b(42);
    CHECK(random_dag(8, 0.25, a) == random_dag(8, 0.25, b));
  }

  SECTION("edge counts follow Binomial(15, xi) at q=6 (chi-squared)") {
    Rng r(2024);
    const double xi = 0.3;
    const int slots = 15;
    const int draws = 20000;
    std::vector<int> counts(slots + 1, 0);
    for (int i = 0; i < draws; ++i) ++counts[random_dag(6, xi, r).edge_count()];
    // binomial pmf by recurrence
    std::vector<double> pmf(slots + 1);
    pmf[0] = std::pow(1 - xi, slots);
    for (int k = 1; k <= slots; ++k)
      pmf[k] = pmf[k - 1] * (slots - k + 1) / static_cast<double>(k) * xi / (1 - xi);
    // merge tail bins with expected count < 5
    double stat = 0.0;
    int bins = 0;
    double obs_acc = 0.0, exp_acc = 0.0;
    for (int k = 0; k <= slots; ++k) {
      obs_acc += counts[k];
      exp_acc += pmf[k] * draws;
      if (exp_acc >= 5.0 || k == slots) {
        stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
        ++bins;
        obs_acc = exp_acc = 0.0;
      }
    }
    CHECK(stat < chi_sq_quantile(0.999, bins - 1));
  }
}

TEST_CASE("log_prior") {
  const double xi = 0.1;
  CHECK_THAT(log_prior(Dag(3), xi), Catch::Matchers::WithinAbs(3 * std::log(0.9), 1e-12));
  CHECK_THAT(log_prior(make_dag(3, {{1, 0}}), xi),
             Catch::Matchers::WithinAbs(std::log(0.1 * 0.9 * 0.9), 1e-12));
  CHECK_THAT(log_prior(make_dag(3, {{1, 0}, {2, 0}, {2, 1}}), 0.5),
             Catch::Matchers::WithinAbs(3 * std::log(0.5), 1e-12));
}

TEST_CASE("log_prior sums to one over parent-ordered dags (q <= 4)") {
  for (int q : {2, 3, 4}) {
    std::vector<std::pair<int, int>> slots;
    for (int i = 1; i < q; ++i)
      for (int j = 0; j < i; ++j) slots.emplace_back(i, j);
    const double xi = 0.23;
    double total = 0.0;
    for (unsigned mask = 0; mask < (1u << slots.size()); ++mask) {
      AdjacencyMatrix adj = AdjacencyMatrix::Zero(q, q);
      for (std::size_t b = 0; b < slots.size(); ++b)
        if (mask & (1u << b)) adj(slots[b].first, slots[b].second) = 1;
      total += std::exp(log_prior(Dag::from_adjacency(adj), xi));
    }
    CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("prior_ratio") {
  CHECK_THAT(prior_ratio({OperatorKind::Insert, 1, 0}, 0.5),
             Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK_THAT(prior_ratio({OperatorKind::Delete, 1, 0}, 0.1),
             Catch::Matchers::WithinAbs(9.0, 1e-12));
  CHECK_THAT(prior_ratio({OperatorKind::Reverse, 2, 1}, 0.37),
             Catch::Matchers::WithinAbs(1.0, 1e-15));
}

TEST_CASE("adjacency csv round trip") {
  Rng rng(5);
  const Dag dag = random_dag(7, 0.3, rng);
  std::stringstream ss;
  save_adjacency_csv(ss, dag);
  CHECK(load_adjacency_csv(ss) == dag);

  std::stringstream bad("0,1\nx,0\n");
  CHECK_THROWS_AS(load_adjacency_csv(bad), IoError);
}
