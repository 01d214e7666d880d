#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace kgv;

TEST(Views, TriplesUseDisplayNames) {
  auto triples = to_triples(testutil::seed_graph());
  ASSERT_EQ(triples.size(), 4u);
  EXPECT_EQ(triples[0], (Triple{"Dhaka", "capital_of", "Bangladesh"}));
  EXPECT_EQ(render(to_triples(testutil::seed_graph(), "dhaka")), "(Dhaka, capital_of, Bangladesh)\n");
  EXPECT_EQ(render(std::vector<Triple>{}), "");
}

TEST(Views, TripleCountEqualsRelationCount) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    auto rg = oracle::random_graph(rng);
    EXPECT_EQ(to_triples(rg.graph).size(), rg.graph.relation_count());
  }
}

TEST(Views, SeedHierarchyMatchesGolden) {
  EXPECT_EQ(render(to_hierarchy(testutil::seed_graph(), "lalbagh_fort")),
            testutil::slurp(testutil::golden_path("seed_hierarchy.txt")));
}

TEST(Views, SeedBulletsMatchGolden) {
  auto facts = to_bullets(testutil::seed_graph(), "lalbagh_fort");
  ASSERT_EQ(facts.size(), 3u);
  EXPECT_EQ(facts[1].value_id, "dhaka");
  EXPECT_EQ(render(facts), testutil::slurp(testutil::golden_path("seed_bullets.txt")));
  EXPECT_EQ(render(to_bullets(testutil::seed_graph(), "mosque")), "");
}

TEST(Views, HierarchyMarksCyclesAsReferences) {
  GraphBuilder b;
  for (auto n : {"A", "B"}) b.add_entity({"", n, {}, Category::GPE});
  b.add_relation("a", "located_in", "b", RelationKind::spatial);
  b.add_relation("b", "located_in", "a", RelationKind::spatial);
  EXPECT_EQ(render(to_hierarchy(b.build(), "a")), "A\n  Located In: B\n    Located In: A [ref]\n");
}

TEST(Views, HierarchyDepthLimit) {
  const auto& g = testutil::seed_graph();
  auto shallow = to_hierarchy(g, "lalbagh_fort", g.containment_predicates(), 1);
  EXPECT_EQ(render(shallow),
            "Lalbagh Fort\n  Located In: Dhaka\n  Landmark Type: historical building\n"
            "  Religious Structure: mosque\n");
  EXPECT_EQ(render(to_hierarchy(g, "lalbagh_fort", g.containment_predicates(), 0)), "Lalbagh Fort\n");
}

namespace {

std::set<std::string> containment_descendants(const HierNode& root) {
  std::set<std::string> out;
  std::function<void(const HierNode&)> walk = [&](const HierNode& n) {
    for (const auto& e : n.children) {
      if (!e.containment || e.child.reference) continue;
      out.insert(e.child.entity_id);
      walk(e.child);
    }
  };
  walk(root);
  return out;
}

}  // namespace

TEST(Views, HierarchyReachesExactlyContainmentPaths) {
  std::mt19937_64 rng(9);
  const std::set<std::string> containment{"located_in", "capital_of"};
  for (int i = 0; i < 100; ++i) {
    auto rg = oracle::random_graph(rng);
    std::vector<Relation> edges(rg.graph.relations().begin(), rg.graph.relations().end());
    for (const auto& s : rg.ids) {
      auto reached = containment_descendants(to_hierarchy(rg.graph, s, rg.graph.containment_predicates(), 3));
      for (const auto& o : rg.ids) {
        if (o == s) continue;
        bool path = !oracle::all_paths(edges, s, o, 3, &containment).empty();
        EXPECT_EQ(reached.count(o) == 1, path) << s << " -> " << o;
      }
    }
  }
}
