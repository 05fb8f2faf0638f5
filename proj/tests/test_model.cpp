#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "gibbsbp/model.hpp"
#include "testutil.hpp"

using namespace gibbsbp;
using Catch::Matchers::WithinAbs;

namespace {

ModelSpec two_node_spec() {
  ModelSpec spec;
  spec.nodes = {{"a", 2, {0.0, 0.0}}, {"b", 2, {0.0, 0.0}}};
  spec.edges = {{"a", "b", Matrix(2, 2, 0.0)}};
  return spec;
}

bool throws_with(const ModelSpec& spec, errc expected) {
  try {
    PairwiseModel::validate(spec);
  } catch (const Error& e) {
    return e.code() == expected;
  }
  return false;
}

}  // namespace

TEST_CASE("validate accepts a minimal well-formed model", "[model]") {
  PairwiseModel m = PairwiseModel::validate(two_node_spec());
  CHECK(m.num_nodes() == 2);
  CHECK(m.num_edges() == 1);
  CHECK(m.degree(0) == 1);
  CHECK(m.find_node("a").value() == 0);
  CHECK_FALSE(m.find_node("zz").has_value());
}

TEST_CASE("validate rejects each malformed input distinctly", "[model]") {
  SECTION("self-loop") {
    auto spec = two_node_spec();
    spec.edges[0].v = "a";
    CHECK(throws_with(spec, errc::self_loop));
  }
  SECTION("duplicate edge, either orientation") {
    auto spec = two_node_spec();
    spec.edges.push_back({"b", "a", Matrix(2, 2, 0.0)});
    CHECK(throws_with(spec, errc::duplicate_edge));
  }
  SECTION("edge shape mismatch") {
    auto spec = two_node_spec();
    spec.edges[0].phi = Matrix(3, 2, 0.0);
    CHECK(throws_with(spec, errc::shape_mismatch));
  }
  SECTION("self-potential shape mismatch") {
    auto spec = two_node_spec();
    spec.nodes[0].phi = {0.0, 0.0, 0.0};
    CHECK(throws_with(spec, errc::shape_mismatch));
  }
  SECTION("non-finite entries") {
    auto spec = two_node_spec();
    spec.edges[0].phi(0, 1) = std::numeric_limits<double>::infinity();
    CHECK(throws_with(spec, errc::non_finite));
    spec = two_node_spec();
    spec.nodes[1].phi[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK(throws_with(spec, errc::non_finite));
  }
  SECTION("duplicate node id") {
    auto spec = two_node_spec();
    spec.nodes.push_back({"a", 2, {0.0, 0.0}});
    CHECK(throws_with(spec, errc::duplicate_node));
  }
  SECTION("state count below two") {
    auto spec = two_node_spec();
    spec.nodes[0].states = 1;
    spec.nodes[0].phi = {0.0};
    CHECK(throws_with(spec, errc::bad_state_count));
  }
  SECTION("edge to unknown node") {
    auto spec = two_node_spec();
    spec.edges[0].v = "zz";
    CHECK(throws_with(spec, errc::unknown_node));
  }
}

TEST_CASE("energy sums self and pair potentials", "[model]") {
  SECTION("all-zero potentials give zero energy") {
    PairwiseModel m = PairwiseModel::validate(two_node_spec());
    CHECK(energy(m, {0, 1}) == 0.0);
    CHECK(energy(m, {1, 1}) == 0.0);
  }
  SECTION("single-node lookup") {
    ModelSpec spec;
    spec.nodes = {{"a", 2, {0.5, 1.5}}};
    PairwiseModel m = PairwiseModel::validate(spec);
    CHECK(energy(m, {1}) == 1.5);
  }
  SECTION("one equality edge") {
    auto spec = two_node_spec();
    spec.edges[0].phi = testutil::equality_matrix(std::log(2.0));
    PairwiseModel m = PairwiseModel::validate(spec);
    CHECK_THAT(energy(m, {0, 0}), WithinAbs(-std::log(2.0), 1e-15));
    CHECK(energy(m, {0, 1}) == 0.0);
  }
  SECTION("incomplete configuration is rejected") {
    PairwiseModel m = PairwiseModel::validate(two_node_spec());
    CHECK_THROWS_AS(energy(m, {0}), Error);
  }
}

TEST_CASE("energy is additive over disconnected components", "[model]") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    PairwiseModel left = make_random_model(4, 0.7, 3, 2.0, 100 + trial);
    PairwiseModel right = make_random_model(3, 0.7, 3, 2.0, 200 + trial);

    // splice the two specs into one disconnected model
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
    PairwiseModel both = PairwiseModel::validate(joint);

    Configuration cl(left.num_nodes()), cr(right.num_nodes()), cj;
    for (int i = 0; i < left.num_nodes(); ++i)
      cl[i] = std::uniform_int_distribution<int>(0, left.num_states(i) - 1)(rng);
    for (int i = 0; i < right.num_nodes(); ++i)
      cr[i] = std::uniform_int_distribution<int>(0, right.num_states(i) - 1)(rng);
    cj = cl;
    cj.insert(cj.end(), cr.begin(), cr.end());
    CHECK_THAT(energy(both, cj), WithinAbs(energy(left, cl) + energy(right, cr), 1e-12));
  }
}

TEST_CASE("oscillation is max minus min", "[model]") {
  CHECK(oscillation(Matrix(3, 4, 1.25)) == 0.0);
  CHECK(oscillation(std::vector<double>{-1.0, 3.0}) == 4.0);
  // Ising edge at J = 0.2: four entries are {-0.2, 0.2, 0.2, -0.2}
  CHECK_THAT(oscillation(testutil::ising_matrix(0.2)), WithinAbs(0.4, 1e-15));
  CHECK_THROWS_AS(oscillation(std::vector<double>{}), Error);
  CHECK_THROWS_AS(oscillation(std::vector<double>{1.0, std::nan("")}), Error);
}

TEST_CASE("oscillation shift and scale behavior", "[model]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + trial % 6);
    for (auto& x : v) x = dist(rng);
    double base = oscillation(v);
    double shift = dist(rng);
    double scale = std::abs(dist(rng));
    std::vector<double> shifted = v, scaled = v;
    for (auto& x : shifted) x += shift;
    for (auto& x : scaled) x *= scale;
    CHECK_THAT(oscillation(shifted), WithinAbs(base, 1e-12));
    CHECK_THAT(oscillation(scaled), WithinAbs(scale * base, 1e-12));
  }
}

TEST_CASE("ising grid construction", "[model]") {
  SECTION("1x1 grid is a single node") {
    PairwiseModel m = make_ising_grid(1, 1, 0.5, 0.1);
    CHECK(m.num_nodes() == 1);
    CHECK(m.num_edges() == 0);
  }
  SECTION("2x2 grid") {
    PairwiseModel m = make_ising_grid(2, 2, 0.5, 0.0);
    CHECK(m.num_nodes() == 4);
    CHECK(m.num_edges() == 4);
  }
  SECTION("3x3 grid has 12 edges and an interior node of degree 4") {
    PairwiseModel m = make_ising_grid(3, 3, 0.5, 0.0);
    CHECK(m.num_nodes() == 9);
    CHECK(m.num_edges() == 12);
    CHECK(m.degree(m.find_node("r1c1").value()) == 4);
  }
  SECTION("potential oscillations are 2|J| and 2|h|") {
    PairwiseModel m = make_ising_grid(2, 3, -0.7, 0.3);
    for (int e = 0; e < m.num_edges(); ++e)
      CHECK_THAT(oscillation(m.edge_potential(e)), WithinAbs(1.4, 1e-15));
    for (int i = 0; i < m.num_nodes(); ++i)
      CHECK_THAT(oscillation(m.node_potential(i)), WithinAbs(0.6, 1e-15));
  }
}

TEST_CASE("random model generator contracts", "[model]") {
  SECTION("scale zero means all-zero potentials") {
    PairwiseModel m = make_random_model(5, 0.8, 3, 0.0, 3);
    for (int i = 0; i < m.num_nodes(); ++i)
      for (double x : m.node_potential(i)) CHECK(x == 0.0);
    for (int e = 0; e < m.num_edges(); ++e)
      for (double x : m.edge_potential(e).entries()) CHECK(x == 0.0);
  }
  SECTION("same seed reproduces the model") {
    PairwiseModel a = make_random_model(6, 0.5, 4, 1.5, 77);
    PairwiseModel b = make_random_model(6, 0.5, 4, 1.5, 77);
    REQUIRE(a.num_nodes() == b.num_nodes());
    REQUIRE(a.num_edges() == b.num_edges());
    for (int i = 0; i < a.num_nodes(); ++i) {
      CHECK(a.num_states(i) == b.num_states(i));
      CHECK(a.node_potential(i) == b.node_potential(i));
    }
    for (int e = 0; e < a.num_edges(); ++e) {
      CHECK(a.edge_endpoints(e) == b.edge_endpoints(e));
      CHECK(a.edge_potential(e) == b.edge_potential(e));
    }
  }
  SECTION("edge probability one gives the complete graph") {
    PairwiseModel m = make_random_model(4, 1.0, 2, 1.0, 5);
    CHECK(m.num_edges() == 6);
  }
}

TEST_CASE("directed edge indexing round-trips", "[model]") {
  PairwiseModel m = testutil::make_triangle(0.4);
  REQUIRE(m.num_directed_edges() == 6);
  for (int d = 0; d < m.num_directed_edges(); ++d) {
    DirectedEdge de = m.directed_edge(d);
    CHECK(m.directed_index(de.from, de.to) == d);
  }
  CHECK_THROWS_AS(m.directed_index(0, 0), Error);
}
