#include <doctest.h>

#include <sstream>

#include "keep/ontology.hpp"
#include "support.hpp"

using namespace keep;
using testsupport::BruteGraph;
using testsupport::cid;

namespace {

// r -> a, b; a -> a1, a2; b -> b1, b2.
std::vector<IsAEdge> seven_node_tree() {
  return {{cid(2), cid(1)}, {cid(3), cid(1)}, {cid(4), cid(2)},
          {cid(5), cid(2)}, {cid(6), cid(3)}, {cid(7), cid(3)}};
}

Ontology load(const std::vector<IsAEdge>& edges, LoadReport* report = nullptr) {
  return Ontology::from_edges(edges, infer_root(edges), report);
}

}  // namespace

TEST_SUITE("ontology") {

TEST_CASE("two-leaf star") {
  std::vector<IsAEdge> e{{cid(10), cid(1)}, {cid(20), cid(1)}};
  const auto ont = Ontology::from_edges(e, cid(1));
  CHECK(ont.size() == 3);
  CHECK(ont.depth(ont.index(cid(1))) == 0);
  CHECK(ont.depth(ont.index(cid(10))) == 1);
  CHECK(ont.depth(ont.index(cid(20))) == 1);
}

TEST_CASE("two-cycle is rejected with the offending edge") {
  std::vector<IsAEdge> e{{cid(2), cid(1)}, {cid(1), cid(2)}};
  try {
    Ontology::from_edges(e, cid(1));
    FAIL("expected a cycle error");
  } catch (const CycleError& err) {
    const auto edge = err.edge();
    const bool on_cycle = (edge == IsAEdge{cid(2), cid(1)}) || (edge == IsAEdge{cid(1), cid(2)});
    CHECK(on_cycle);
  }
}

TEST_CASE("longer cycle below the root is rejected") {
  std::vector<IsAEdge> e{{cid(2), cid(1)}, {cid(3), cid(2)}, {cid(4), cid(3)}, {cid(2), cid(4)}};
  CHECK_THROWS_AS(Ontology::from_edges(e, cid(1)), CycleError);
}

TEST_CASE("missing root is rejected") {
  std::vector<IsAEdge> e{{cid(2), cid(1)}};
  CHECK_THROWS_AS(Ontology::from_edges(e, cid(99)), InputError);
}

TEST_CASE("unreachable nodes are reported and dropped") {
  std::vector<IsAEdge> e{{cid(2), cid(1)}, {cid(5), cid(4)}, {cid(2), cid(1)}};
  LoadReport rep;
  const auto ont = Ontology::from_edges(e, cid(1), &rep);
  CHECK(ont.size() == 2);
  CHECK(rep.unreachable.size() == 2);
  CHECK(rep.duplicate_edges == 1);
  CHECK_FALSE(ont.contains(cid(4)));
}

TEST_CASE("seven-node tree depth and indexing") {
  const auto ont = load(seven_node_tree());
  CHECK(ont.size() == 7);
  CHECK(ont.max_depth() == 2);
  for (std::size_t i = 0; i < ont.size(); ++i) CHECK(ont.id(static_cast<ConceptIndex>(i)) == cid(i + 1));
}

TEST_CASE("index assignment ignores edge order") {
  auto edges = testsupport::random_dag(60, 3);
  auto shuffled = edges;
  std::mt19937_64 rng(9);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto a = load(edges);
  const auto b = load(shuffled);
  REQUIRE(a.size() == b.size());
  for (ConceptIndex i = 0; i < a.size(); ++i) {
    CHECK(a.id(i) == b.id(i));
    CHECK(a.depth(i) == b.depth(i));
  }
  CHECK(a.edges() == b.edges());
}

TEST_CASE("edge list parsing skips comments and round-trips") {
  std::istringstream in("# child\tparent\n2\t1\n\n3\t1\n  # note\n4\t3\n");
  const auto edges = read_edge_list(in);
  REQUIRE(edges.size() == 3);
  const auto ont = load(edges);
  std::ostringstream out;
  write_edge_list(out, ont);
  std::istringstream back(out.str());
  CHECK(load(read_edge_list(back)).edges() == ont.edges());
}

TEST_CASE("malformed edge lines are rejected") {
  std::istringstream in("2\t1\nthree\t1\n");
  CHECK_THROWS_AS(read_edge_list(in), InputError);
}

TEST_CASE("vocabulary table round-trips with labels") {
  auto ont = load(seven_node_tree());
  ont.set_label(cid(2), "a");
  ont.set_label(cid(7), "b two");
  std::ostringstream out;
  write_vocabulary(out, ont);
  std::istringstream in(out.str());
  const auto vocab = read_vocabulary(in);
  REQUIRE(vocab.size() == 7);
  for (const auto& e : vocab) CHECK(ont.index(e.id) == e.index);
  auto fresh = load(seven_node_tree());
  apply_labels(fresh, vocab);
  CHECK(fresh.label(fresh.index(cid(7))) == "b two");
}

TEST_CASE("chain pruning") {
  // r(1) <- a(2) <- b(3) <- c(4)
  std::vector<IsAEdge> e{{cid(2), cid(1)}, {cid(3), cid(2)}, {cid(4), cid(3)}};
  const auto res = prune_to_depth(load(e), 2);
  CHECK(res.ontology.size() == 3);
  CHECK_FALSE(res.ontology.contains(cid(4)));
  REQUIRE(res.rollup.size() == 1);
  const auto t = res.rollup.targets(cid(4));
  REQUIRE(t.size() == 1);
  CHECK(t[0] == cid(3));
}

TEST_CASE("min-depth rule keeps a node reachable through a short path") {
  // Chain 1-2-3-4-5-6 (6 at depth 5), plus 7 -> 1 (depth 1), 8 -> 7 (depth 2),
  // 9 -> 8 (depth 3). d = 10 has parents 6 (depth 5) and 9 (depth 3).
  std::vector<IsAEdge> e{{cid(2), cid(1)}, {cid(3), cid(2)}, {cid(4), cid(3)}, {cid(5), cid(4)},
                         {cid(6), cid(5)}, {cid(7), cid(1)}, {cid(8), cid(7)}, {cid(9), cid(8)},
                         {cid(10), cid(6)}, {cid(10), cid(9)}};
  const auto ont = load(e);
  CHECK(ont.depth(ont.index(cid(10))) == 4);
  const auto res = prune_to_depth(ont, 5);
  CHECK(res.ontology.contains(cid(10)));
  CHECK(res.rollup.size() == 0);
}

TEST_CASE("pruning matches the brute-force roll-up oracle on random DAGs") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto edges = testsupport::random_dag(200, seed, 0.2);
    const auto ont = load(edges);
    const BruteGraph g(edges);
    const auto depth = g.min_depth(ont.id(ont.root()));
    const int limit = 5;
    REQUIRE(ont.max_depth() > limit);
    const auto res = prune_to_depth(ont, limit);

    std::set<ConceptId> retained;
    for (auto [c, d] : depth) {
      CHECK(ont.depth(ont.index(c)) == d);
      if (d <= limit) retained.insert(c);
    }
    CHECK(res.ontology.size() == retained.size());
    for (auto c : retained) CHECK(res.ontology.contains(c));

    std::size_t excluded = 0;
    for (auto c : g.nodes) {
      if (retained.contains(c)) {
        CHECK_FALSE(res.rollup.is_excluded(c));
        continue;
      }
      ++excluded;
      const auto want = g.rollup_targets(c, retained);
      const auto got = res.rollup.targets(c);
      CHECK(std::set<ConceptId>(got.begin(), got.end()) == want);
      CHECK(got.size() == want.size());
      for (auto t : got) CHECK(res.ontology.depth(res.ontology.index(t)) <= limit);
    }
    CHECK(res.rollup.size() == excluded);

    // Induced subgraph.
    std::set<std::pair<ConceptId, ConceptId>> induced;
    for (const auto& e : edges) {
      if (retained.contains(e.child) && retained.contains(e.parent)) induced.insert({e.child, e.parent});
    }
    std::set<std::pair<ConceptId, ConceptId>> kept;
    for (const auto& e : res.ontology.edges()) kept.insert({e.child, e.parent});
    CHECK(kept == induced);
  }
}

TEST_CASE("pruning is idempotent") {
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    const auto once = prune_to_depth(load(testsupport::random_dag(150, seed)), 5);
    const auto twice = prune_to_depth(once.ontology, 5);
    CHECK(twice.ontology.edges() == once.ontology.edges());
    CHECK(twice.ontology.size() == once.ontology.size());
    CHECK(twice.rollup.size() == 0);
  }
}

TEST_CASE("roll-up file round-trips") {
  const auto res = prune_to_depth(load(testsupport::random_dag(120, 5)), 4);
  std::ostringstream out;
  write_rollup(out, res.rollup);
  std::istringstream in(out.str());
  CHECK(read_rollup(in).entries() == res.rollup.entries());
}

TEST_CASE("information content on the seven-node tree") {
  const auto ont = load(seven_node_tree());
  const auto ic = information_content(ont);
  CHECK(ic.ic(ont.index(cid(1))) == doctest::Approx(0.0));
  CHECK(ic.ic(ont.index(cid(4))) == doctest::Approx(1.9459).epsilon(1e-4));
  CHECK(ic.ic(ont.index(cid(2))) == doctest::Approx(-std::log(3.0 / 7.0)));
  CHECK(ic.ic(ont.index(cid(2))) == doctest::Approx(0.8473).epsilon(1e-4));
}

TEST_CASE("Resnik on the seven-node tree") {
  const auto ont = load(seven_node_tree());
  const auto ic = information_content(ont);
  CHECK(resnik_similarity(ont, ic, cid(4), cid(5)) == doctest::Approx(0.8473).epsilon(1e-4));
  CHECK(resnik_similarity(ont, ic, cid(4), cid(6)) == 0.0);
  for (std::uint64_t c = 1; c <= 7; ++c) {
    CHECK(resnik_similarity(ont, ic, cid(c), cid(c)) == ic.ic(ont.index(cid(c))));
  }
  CHECK_THROWS_AS(resnik_similarity(ont, ic, cid(4), cid(99)), InputError);
}

TEST_CASE("IC is zero at the root and non-decreasing downward") {
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    const auto ont = load(testsupport::random_dag(100, seed));
    const auto ic = information_content(ont);
    CHECK(ic.ic(ont.root()) == 0.0);
    for (ConceptIndex i = 0; i < ont.size(); ++i) {
      for (auto p : ont.parents(i)) CHECK(ic.ic(p) <= ic.ic(i));
    }
  }
}

TEST_CASE("Resnik bounds and symmetry") {
  const auto ont = load(testsupport::random_dag(80, 41));
  const auto ic = information_content(ont);
  for (ConceptIndex a = 0; a < ont.size(); ++a) {
    for (ConceptIndex b = 0; b < ont.size(); ++b) {
      const double r = ic.resnik(a, b);
      CHECK(r >= 0.0);
      CHECK(r <= std::min(ic.ic(a), ic.ic(b)));
      CHECK(r == ic.resnik(b, a));
    }
  }
}

TEST_CASE("fast Resnik equals the ancestor-intersection oracle on random DAGs") {
  for (std::uint64_t seed = 100; seed < 150; ++seed) {
    const int n = 20 + static_cast<int>(seed % 81);
    const auto edges = testsupport::random_dag(n, seed, 0.25);
    const auto ont = load(edges);
    const BruteGraph g(edges);
    const auto ic = information_content(ont);
    for (ConceptIndex i = 0; i < ont.size(); ++i) {
      REQUIRE(ic.ic(i) == g.ic(ont.id(i)));
    }
    for (ConceptIndex a = 0; a < ont.size(); ++a) {
      for (ConceptIndex b = a; b < ont.size(); ++b) {
        REQUIRE(ic.resnik(a, b) == g.resnik(ont.id(a), ont.id(b)));
      }
    }
  }
}

TEST_CASE("every node reaches the root and depth obeys the parent bound") {
  const auto ont = load(testsupport::random_dag(150, 77, 0.3));
  const auto topo = ont.topological_order();
  REQUIRE(topo.size() == ont.size());
  CHECK(topo[0] == ont.root());
  std::vector<std::size_t> pos(ont.size());
  for (std::size_t k = 0; k < topo.size(); ++k) pos[topo[k]] = k;
  for (ConceptIndex i = 0; i < ont.size(); ++i) {
    if (i == ont.root()) continue;
    REQUIRE_FALSE(ont.parents(i).empty());
    for (auto p : ont.parents(i)) {
      CHECK(pos[p] < pos[i]);
      CHECK(ont.depth(i) <= ont.depth(p) + 1);
    }
  }
}

TEST_CASE("infer_root needs exactly one parentless node") {
  std::vector<IsAEdge> two_roots{{cid(2), cid(1)}, {cid(4), cid(3)}};
  CHECK_THROWS_AS(infer_root(two_roots), InputError);
  CHECK(infer_root(seven_node_tree()) == cid(1));
}

}  // TEST_SUITE
