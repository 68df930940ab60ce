#include "gnarspec/graph.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "gnarspec/errors.hpp"
#include "gnarspec/rng.hpp"

using namespace gnarspec;

namespace {

Network parse(const std::string& text) {
  std::istringstream in(text);
  return Network::parse_edge_list(in, "test");
}

// independent all-pairs oracle for the BFS distances
Eigen::MatrixXi floyd_warshall(const Network& g) {
  const int d = g.order();
  const int inf = 1 << 20;
  Eigen::MatrixXi dist = Eigen::MatrixXi::Constant(d, d, inf);
  for (int i = 0; i < d; ++i) dist(i, i) = 0;
  for (const auto& e : g.edges()) {
    dist(e.i - 1, e.j - 1) = 1;
    dist(e.j - 1, e.i - 1) = 1;
  }
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (dist(i, k) + dist(k, j) < dist(i, j))
          dist(i, j) = dist(i, k) + dist(k, j);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (dist(i, j) >= inf) dist(i, j) = -1;
  return dist;
}

Network random_graph(int d, double edge_prob, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Network::Edge> edges;
  for (int i = 1; i <= d; ++i)
    for (int j = i + 1; j <= d; ++j)
      if (rng.uniform() < edge_prob) edges.push_back({i, j, 1.0});
  return Network(d, std::move(edges));
}

}  // namespace

TEST_CASE("edge list parsing") {
  const Network g = parse("d=4\n# comment\n1 2\n2 3\n\n3 4\n");
  CHECK(g.order() == 4);
  CHECK(g.edge_count() == 3);
  CHECK(g.has_edge(1, 2));
  CHECK(g.has_edge(2, 1));
  CHECK_FALSE(g.has_edge(1, 3));
  CHECK_FALSE(g.has_weights());

  SUBCASE("largest label sets the order when there is no header") {
    const Network h = parse("1 2\n2 5\n");
    CHECK(h.order() == 5);
  }

  SUBCASE("weighted lines") {
    const Network h = parse("1 2 0.5\n2 3 1.5\n");
    CHECK(h.has_weights());
    CHECK(h.supplied_weights()(0, 1) == 0.5);
    CHECK(h.supplied_weights()(2, 1) == 1.5);
  }

  SUBCASE("rejects malformed input") {
    CHECK_THROWS_AS(parse("1 1\n"), InvalidArgument);         // self-loop
    CHECK_THROWS_AS(parse("0 2\n"), InvalidArgument);         // bad label
    CHECK_THROWS_AS(parse("d=3\n1 4\n"), InvalidArgument);    // above header
    CHECK_THROWS_AS(parse("1 2\n2 3 0.5\n"), InvalidArgument);  // mixed
    CHECK_THROWS_AS(parse("1 2 3 4\n"), InvalidArgument);     // extra token
    CHECK_THROWS_AS(parse("1 2 0.5\n1 2 0.7\n"), InvalidArgument);
  }

  SUBCASE("exact duplicate edges collapse") {
    const Network h = parse("1 2\n1 2\n2 3\n");
    CHECK(h.edge_count() == 2);
  }
}

TEST_CASE("edge list round trip") {
  const Network g = parse("d=5\n1 2 0.25\n2 3 1.0\n3 4 2.0\n4 5 0.5\n");
  const std::string path = "graph_roundtrip.edges";
  g.write_edge_list(path);
  const Network h = Network::read_edge_list(path);
  CHECK(h.order() == g.order());
  CHECK(h.edge_count() == g.edge_count());
  CHECK(h.has_weights());
  CHECK(h.supplied_weights().isApprox(g.supplied_weights()));
  std::remove(path.c_str());
}

TEST_CASE("shipped networks have the pinned geometry") {
  const Network net10 =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net10.edges");
  const StageStructure st10(net10);
  CHECK(net10.order() == 10);
  CHECK(st10.r_max() == 5);
  CHECK(st10.distance(1, 2) == 1);
  CHECK(st10.distance(1, 5) == 2);
  CHECK(st10.distance(1, 6) == 3);
  CHECK(st10.distance(1, 7) == 4);
  CHECK(st10.distance(1, 10) == 5);

  const Network net5 =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net5.edges");
  const StageStructure st5(net5);
  CHECK(net5.order() == 5);
  CHECK(st5.r_max() == 2);
}

TEST_CASE("distances match the Floyd-Warshall oracle") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const Network g = random_graph(12, 0.25, seed);
    const StageStructure st(g);
    const Eigen::MatrixXi oracle = floyd_warshall(g);
    CHECK((st.distances().array() == oracle.array()).all());
  }
}

TEST_CASE("stage adjacencies partition the connected pairs") {
  const Network g =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net10.edges");
  const StageStructure st(g);

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(g.order(), g.order());
  for (int r = 1; r <= st.r_max(); ++r) {
    const Eigen::MatrixXd& a = st.stage_adjacency(r);
    CHECK(a.isApprox(a.transpose()));
    CHECK(a.diagonal().isZero());
    CHECK((a.array() * sum.array()).sum() == 0.0);  // disjoint supports
    sum += a;
  }
  // every off-diagonal pair of a connected graph sits in exactly one stage
  for (int i = 0; i < g.order(); ++i)
    for (int j = 0; j < g.order(); ++j)
      CHECK(sum(i, j) == (i == j ? 0.0 : 1.0));

  CHECK(st.stage_adjacency(1).isApprox(g.adjacency()));
  CHECK_THROWS_AS(st.stage_adjacency(0), InvalidArgument);
  CHECK_THROWS_AS(st.stage_adjacency(st.r_max() + 1), InvalidArgument);
}

TEST_CASE("stage neighbours are sorted and consistent with distances") {
  const Network g =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net10.edges");
  const StageStructure st(g);
  for (int i = 1; i <= g.order(); ++i)
    for (int r = 1; r <= st.r_max(); ++r) {
      const auto nb = st.stage_neighbours(i, r);
      for (size_t k = 0; k < nb.size(); ++k) {
        CHECK(st.distance(i, nb[k]) == r);
        if (k > 0) CHECK(nb[k - 1] < nb[k]);
      }
      int count = 0;
      for (int j = 1; j <= g.order(); ++j)
        if (st.distance(i, j) == r) ++count;
      CHECK(count == static_cast<int>(nb.size()));
    }
}

TEST_CASE("equal stage weights satisfy the row-sum invariant") {
  for (std::uint64_t seed : {21u, 22u}) {
    const Network g = random_graph(9, 0.3, seed);
    const StageStructure st(g);
    const Eigen::MatrixXd w = equal_stage_weights(st);
    CHECK_NOTHROW(validate_stage_weights(w, st));
    CHECK(w.diagonal().isZero());

    for (int i = 1; i <= g.order(); ++i)
      for (int r = 1; r <= st.r_max(); ++r) {
        const auto nb = st.stage_neighbours(i, r);
        if (nb.empty()) continue;
        for (int j : nb)
          CHECK(w(i - 1, j - 1) == doctest::Approx(1.0 / nb.size()));
      }
  }
}

TEST_CASE("supplied edge weights shape stage one only") {
  const Network g = parse("d=4\n1 2 3.0\n1 3 1.0\n3 4 2.0\n");
  const StageStructure st(g);
  const Eigen::MatrixXd w = stage_weights_from_edges(st);
  CHECK_NOTHROW(validate_stage_weights(w, st));

  CHECK(w(0, 1) == doctest::Approx(0.75));  // 3 / (3 + 1)
  CHECK(w(0, 2) == doctest::Approx(0.25));
  CHECK(w(1, 0) == doctest::Approx(1.0));
  CHECK(w(3, 2) == doctest::Approx(1.0));

  // node 2's stage-2 neighbours {3} and node 4's {1} have no supplied
  // weights; the equal split applies
  CHECK(w(1, 2) == doctest::Approx(1.0));
  CHECK(w(3, 0) == doctest::Approx(1.0));
}

TEST_CASE("validate_stage_weights rejects broken matrices") {
  const Network g = parse("d=3\n1 2\n2 3\n");
  const StageStructure st(g);
  Eigen::MatrixXd w = equal_stage_weights(st);

  Eigen::MatrixXd bad = w;
  bad(0, 1) += 0.1;  // stage-1 row sum off
  CHECK_THROWS_AS(validate_stage_weights(bad, st), InvalidArgument);

  bad = w;
  bad(0, 0) = 0.5;  // nonzero diagonal
  CHECK_THROWS_AS(validate_stage_weights(bad, st), InvalidArgument);

  bad = w;
  bad(2, 0) += 0.05;  // stage-2 row perturbed
  CHECK_THROWS_AS(validate_stage_weights(bad, st), InvalidArgument);
}

TEST_CASE("disconnected networks carry infinite distances") {
  const Network g = parse("d=5\n1 2\n2 3\n4 5\n");
  const StageStructure st(g);
  CHECK(st.distance(1, 4) == -1);
  CHECK(st.distance(5, 2) == -1);
  CHECK(st.r_max() == 2);

  const Eigen::MatrixXd w = equal_stage_weights(st);
  CHECK_NOTHROW(validate_stage_weights(w, st));
  CHECK(w(0, 3) == 0.0);
  CHECK(w(4, 1) == 0.0);

  Eigen::MatrixXd bad = w;
  bad(0, 3) = 0.5;  // weight across components
  CHECK_THROWS_AS(validate_stage_weights(bad, st), InvalidArgument);
}

TEST_CASE("induced adjacency saturates at the diameter") {
  const Network g =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net10.edges");
  const StageStructure st(g);

  const Eigen::MatrixXd a1 = induced_adjacency(st, 1);
  CHECK(a1.isApprox(st.stage_adjacency(1) + st.stage_adjacency(2)));

  // min(2 r_star, r_max): depth 3 on a diameter-5 network covers everything
  const Eigen::MatrixXd a3 = induced_adjacency(st, 3);
  Eigen::MatrixXd all = Eigen::MatrixXd::Zero(10, 10);
  for (int r = 1; r <= 5; ++r) all += st.stage_adjacency(r);
  CHECK(a3.isApprox(all));
  CHECK(induced_adjacency(st, 100).isApprox(all));

  CHECK_THROWS_AS(induced_adjacency(st, 0), InvalidArgument);
}

TEST_CASE("augment_mask repeats the pattern in all four blocks") {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 1, 0;
  const Eigen::MatrixXd m = augment_mask(a);
  REQUIRE(m.rows() == 4);
  REQUIRE(m.cols() == 4);
  for (int bi = 0; bi < 2; ++bi)
    for (int bj = 0; bj < 2; ++bj)
      CHECK(m.block(2 * bi, 2 * bj, 2, 2).isApprox(a));
}
