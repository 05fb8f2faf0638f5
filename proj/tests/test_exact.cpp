#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gibbsbp/exact.hpp"
#include "testutil.hpp"

using namespace gibbsbp;
using Catch::Matchers::WithinAbs;

namespace {

PairwiseModel two_node_equality() {
  ModelSpec spec;
  spec.nodes = {{"a", 2, {0.0, 0.0}}, {"b", 2, {0.0, 0.0}}};
  spec.edges = {{"a", "b", testutil::equality_matrix(std::log(2.0))}};
  return PairwiseModel::validate(spec);
}

}  // namespace

TEST_CASE("log partition values", "[exact]") {
  SECTION("zero potentials give zero (lambda is a probability measure)") {
    CHECK_THAT(log_partition(make_ising_grid(2, 3, 0.0, 0.0)), WithinAbs(0.0, 1e-12));
    CHECK_THAT(log_partition(make_random_model(5, 0.6, 4, 0.0, 9)), WithinAbs(0.0, 1e-12));
  }
  SECTION("single binary node with phi = [0, ln 2]") {
    ModelSpec spec;
    spec.nodes = {{"a", 2, {0.0, std::log(2.0)}}};
    // Z = (1/2) * (e^0 + e^{-ln 2}) = 3/4
    CHECK_THAT(log_partition(PairwiseModel::validate(spec)), WithinAbs(std::log(0.75), 1e-14));
  }
  SECTION("independent components add") {
    PairwiseModel left = make_random_model(3, 0.8, 3, 1.0, 21);
    PairwiseModel right = make_random_model(4, 0.8, 2, 1.0, 22);
    ModelSpec joint;
    auto append = [&joint](const PairwiseModel& m, const std::string& prefix) {
      for (int i = 0; i < m.num_nodes(); ++i)
        joint.nodes.push_back({prefix + m.node_name(i), m.num_states(i), m.node_potential(i)});
      for (int e = 0; e < m.num_edges(); ++e) {
        auto [u, v] = m.edge_endpoints(e);
        joint.edges.push_back(
            {prefix + m.node_name(u), prefix + m.node_name(v), m.edge_potential(e)});
      }
    };
    append(left, "L");
    append(right, "R");
    CHECK_THAT(log_partition(PairwiseModel::validate(joint)),
               WithinAbs(log_partition(left) + log_partition(right), 1e-12));
  }
  SECTION("cap is enforced") {
    PairwiseModel m = make_random_model(8, 0.5, 2, 1.0, 1);
    ExactOptions opts;
    opts.max_configurations = 100;  // 2^8 = 256 > 100
    CHECK_THROWS_AS(log_partition(m, opts), Error);
  }
}

TEST_CASE("exact distribution normalizes and is positive", "[exact]") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    PairwiseModel m = make_random_model(5, 0.6, 3, 2.5, seed);
    ExactDistribution mu(m);
    Configuration config(m.num_nodes(), 0);
    std::vector<int> radices(m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i) radices[i] = m.num_states(i);
    double total = 0.0;
    do {
      double p = mu.probability(config);
      CHECK(p > 0.0);
      total += p;
    } while (detail::next_configuration(config, radices));
    CHECK_THAT(total, WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("marginals", "[exact]") {
  SECTION("zero potentials give the uniform distribution") {
    PairwiseModel m = make_ising_grid(2, 2, 0.0, 0.0);
    for (double p : marginal(m, {0, 3})) CHECK_THAT(p, WithinAbs(0.25, 1e-13));
  }
  SECTION("equality edge: single-node marginal is uniform by symmetry") {
    PairwiseModel m = two_node_equality();
    std::vector<double> p = marginal(m, {0});
    CHECK_THAT(p[0], WithinAbs(0.5, 1e-13));
    CHECK_THAT(p[1], WithinAbs(0.5, 1e-13));
  }
  SECTION("equality edge: pair marginal weights (2,1,1,2)/6") {
    PairwiseModel m = two_node_equality();
    std::vector<double> p = marginal(m, {0, 1});
    CHECK_THAT(p[0], WithinAbs(1.0 / 3.0, 1e-13));
    CHECK_THAT(p[1], WithinAbs(1.0 / 6.0, 1e-13));
    CHECK_THAT(p[2], WithinAbs(1.0 / 6.0, 1e-13));
    CHECK_THAT(p[3], WithinAbs(1.0 / 3.0, 1e-13));
  }
  SECTION("unknown node is rejected") {
    CHECK_THROWS_AS(marginal(two_node_equality(), {5}), Error);
  }
}

TEST_CASE("marginal consistency under summing out", "[exact]") {
  for (std::uint64_t seed : {31u, 32u, 33u, 34u}) {
    PairwiseModel m = make_random_model(6, 0.5, 3, 2.0, seed);
    std::vector<double> joint = marginal(m, {0, 2, 4});
    int k2 = m.num_states(2), k4 = m.num_states(4);
    // sum out nodes 2 and 4 (the faster-running indices)
    std::vector<double> reduced(m.num_states(0), 0.0);
    for (int x0 = 0; x0 < m.num_states(0); ++x0)
      for (int x2 = 0; x2 < k2; ++x2)
        for (int x4 = 0; x4 < k4; ++x4) reduced[x0] += joint[(x0 * k2 + x2) * k4 + x4];
    std::vector<double> direct = marginal(m, {0});
    CHECK(testutil::max_abs_diff(reduced, direct) < 1e-12);
  }
}

TEST_CASE("adding a constant shifts the log partition and nothing else", "[exact]") {
  PairwiseModel base = make_random_model(5, 0.7, 3, 1.5, 55);
  const double shift = 0.83;
  ModelSpec spec;
  for (int i = 0; i < base.num_nodes(); ++i)
    spec.nodes.push_back({base.node_name(i), base.num_states(i), base.node_potential(i)});
  for (double& x : spec.nodes[2].phi) x += shift;
  for (int e = 0; e < base.num_edges(); ++e) {
    auto [u, v] = base.edge_endpoints(e);
    spec.edges.push_back({base.node_name(u), base.node_name(v), base.edge_potential(e)});
  }
  PairwiseModel shifted = PairwiseModel::validate(spec);
  CHECK_THAT(log_partition(shifted), WithinAbs(log_partition(base) - shift, 1e-12));
  CHECK(testutil::max_abs_diff(marginal(shifted, {0, 2}), marginal(base, {0, 2})) < 1e-12);
}

TEST_CASE("conditional Gibbs distributions", "[exact]") {
  SECTION("whole-graph region reproduces the unconditional measure") {
    PairwiseModel m = two_node_equality();
    std::vector<double> cond = conditional_gibbs(m, {0, 1}, {});
    CHECK(testutil::max_abs_diff(cond, marginal(m, {0, 1})) < 1e-13);
  }
  SECTION("zero potentials are boundary-independent") {
    PairwiseModel m = make_ising_grid(1, 3, 0.0, 0.0);
    for (int b = 0; b < 2; ++b) {
      std::vector<double> cond = conditional_gibbs(m, {1}, {{0, b}, {2, b}});
      CHECK_THAT(cond[0], WithinAbs(0.5, 1e-13));
    }
  }
  SECTION("chain with both boundary spins fixed to zero") {
    // n0 - n1 - n2 with equality bonus ln 2 on both edges:
    // P(n1 = 0 | n0 = 0, n2 = 0) = 4/5
    PairwiseModel m = testutil::make_chain(3, testutil::equality_matrix(std::log(2.0)));
    std::vector<double> cond = conditional_gibbs(m, {1}, {{0, 0}, {2, 0}});
    CHECK_THAT(cond[0], WithinAbs(0.8, 1e-13));
    CHECK_THAT(cond[1], WithinAbs(0.2, 1e-13));
  }
  SECTION("missing boundary value is rejected") {
    PairwiseModel m = testutil::make_chain(3, testutil::equality_matrix(1.0));
    CHECK_THROWS_AS(conditional_gibbs(m, {1}, {{0, 0}}), Error);
  }
}

TEST_CASE("DLR residual vanishes on finite models", "[exact]") {
  SECTION("zero-potential model") {
    PairwiseModel m = make_ising_grid(2, 2, 0.0, 0.0);
    CHECK(dlr_residual(m, {0, 1}) < 1e-14);
  }
  SECTION("3-cycle Ising at J = 0.5, singleton regions") {
    PairwiseModel m = testutil::make_triangle(0.5);
    for (int i = 0; i < 3; ++i) CHECK(dlr_residual(m, {i}) < 1e-12);
  }
  SECTION("randomized models and regions") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 15; ++trial) {
      PairwiseModel m = make_random_model(6, 0.5, 2, 2.0, 500 + trial);
      std::vector<int> lambda;
      for (int i = 0; i < m.num_nodes(); ++i)
        if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.45) lambda.push_back(i);
      if (lambda.empty()) lambda.push_back(0);
      CHECK(dlr_residual(m, lambda) < 1e-12);
    }
  }
}
