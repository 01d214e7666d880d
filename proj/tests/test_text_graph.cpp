#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace kgv;

TEST(Text, NormalizeMention) {
  EXPECT_EQ(normalize_mention("  The  Lalbagh   Fort. "), "lalbagh fort");
  EXPECT_EQ(normalize_mention("an Old Fort"), "old fort");
  EXPECT_EQ(normalize_mention("The"), "the");
  EXPECT_EQ(normalize_mention("\"Dhaka,\""), "dhaka");
  EXPECT_EQ(normalize_mention("the the fort"), "fort");
  EXPECT_EQ(normalize_mention("a a eb"), normalize_mention(normalize_mention("a a eb")));
  EXPECT_EQ(normalize_mention(" ,. "), "");
}

TEST(Text, IdConventions) {
  EXPECT_EQ(id_from_name("Lalbagh Fort"), "lalbagh_fort");
  EXPECT_EQ(id_from_name("The Star Mosque"), "star_mosque");
  EXPECT_EQ(predicate_phrase("religious_structure"), "religious structure");
  EXPECT_EQ(predicate_title("located_in"), "Located In");
}

TEST(Text, Fnv1a64KnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Text, ScanWordsStripsPunctuation) {
  auto words = scan_words("Dhaka, Bangladesh.");
  ASSERT_EQ(words.size(), 2u);
  EXPECT_EQ(words[0].lower, "dhaka");
  EXPECT_EQ(words[0].begin, 0u);
  EXPECT_EQ(words[0].end, 5u);
  EXPECT_EQ(words[1].lower, "bangladesh");
  EXPECT_EQ(words[1].end, 17u);
}

namespace {

GraphBuilder two_places() {
  GraphBuilder b;
  b.add_entity({"dhaka", "Dhaka", {}, Category::GPE});
  b.add_entity({"", "Bangladesh", {}, Category::GPE});
  return b;
}

}  // namespace

TEST(GraphBuilder, DerivesIdFromName) {
  auto g = two_places().build();
  EXPECT_TRUE(g.contains("bangladesh"));
  EXPECT_EQ(g.at("bangladesh").name, "Bangladesh");
}

TEST(GraphBuilder, RejectsBadEntities) {
  auto b = two_places();
  EXPECT_THROW(b.add_entity({"dhaka", "Dhaka", {}, Category::GPE}), DuplicateEntity);
  EXPECT_THROW(b.add_entity({"dacca", "Dhaka City", {}, Category::GPE}), InvalidEntity);
  EXPECT_THROW(b.add_entity({"", "  ", {}, Category::GPE}), InvalidEntity);
  EXPECT_THROW(b.add_entity({"", "Agra", {"Agra City", "agra city"}, Category::GPE}), InvalidEntity);
  EXPECT_THROW(b.add_entity({"", "Agra", {""}, Category::GPE}), InvalidEntity);
}

TEST(GraphBuilder, RejectsBadRelations) {
  auto b = two_places();
  b.add_relation("dhaka", "capital_of", "bangladesh", RelationKind::spatial);
  EXPECT_THROW(b.add_relation("dhaka", "capital_of", "bangladesh", RelationKind::spatial), DuplicateRelation);
  EXPECT_THROW(b.add_relation("dhaka", "capital_of", "nowhere", RelationKind::spatial), UnknownEntity);
  EXPECT_THROW(b.add_relation("dhaka", "capital_of", "dhaka", RelationKind::structural), PredicateKindConflict);
  EXPECT_THROW(b.add_relation("dhaka", "", "bangladesh", RelationKind::spatial), InvalidEntity);
}

TEST(GraphBuilder, FrozenAfterBuild) {
  auto b = two_places();
  b.build();
  EXPECT_THROW(b.add_entity({"", "Agra", {}, Category::GPE}), GraphFrozen);
  EXPECT_THROW(b.build(), GraphFrozen);
}

TEST(KnowledgeGraph, CanonicalOrderAndLookup) {
  const auto& g = testutil::seed_graph();
  ASSERT_EQ(g.entity_count(), 5u);
  EXPECT_EQ(g.entities()[0].id, "bangladesh");
  EXPECT_EQ(g.relations()[0].subject, "dhaka");
  EXPECT_EQ(g.outgoing("lalbagh_fort").size(), 3u);
  EXPECT_EQ(g.incoming("dhaka").size(), 1u);
  EXPECT_TRUE(g.has_relation("lalbagh_fort", "located_in", "dhaka"));
  EXPECT_FALSE(g.has_relation("dhaka", "located_in", "lalbagh_fort"));
  EXPECT_EQ(g.resolve_surface("lalbagh fort"), std::vector<std::string>{"lalbagh_fort"});
  EXPECT_THROW(g.at("nowhere"), UnknownEntity);
  EXPECT_EQ(g.predicate_kind("landmark_type"), RelationKind::structural);
  EXPECT_TRUE(g.is_containment("capital_of"));
  EXPECT_FALSE(g.is_containment("landmark_type"));
}

TEST(FindPaths, SeedGraphChain) {
  const auto& g = testutil::seed_graph();
  auto paths = find_paths(g, "lalbagh_fort", "bangladesh", 3);
  ASSERT_EQ(paths.size(), 1u);
  ASSERT_EQ(paths[0].size(), 2u);
  EXPECT_EQ(paths[0][0].predicate, "located_in");
  EXPECT_EQ(paths[0][1].predicate, "capital_of");
  EXPECT_TRUE(find_paths(g, "lalbagh_fort", "bangladesh", 1).empty());
  EXPECT_TRUE(find_paths(g, "bangladesh", "lalbagh_fort", 3).empty());
}

TEST(FindPaths, SameNodeYieldsEmptyPath) {
  auto paths = find_paths(testutil::seed_graph(), "dhaka", "dhaka", 3);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_TRUE(paths[0].empty());
}

TEST(FindPaths, UnknownEndpointThrows) {
  EXPECT_THROW(find_paths(testutil::seed_graph(), "dhaka", "nowhere", 3), UnknownEntity);
}

TEST(FindPaths, ShortestFirst) {
  GraphBuilder b;
  for (auto n : {"A", "B", "C"}) b.add_entity({"", n, {}, Category::GPE});
  b.add_relation("a", "located_in", "b", RelationKind::spatial);
  b.add_relation("b", "located_in", "c", RelationKind::spatial);
  b.add_relation("a", "located_in", "c", RelationKind::spatial);
  auto paths = find_paths(b.build(), "a", "c", 3);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].size(), 1u);
  EXPECT_EQ(paths[1].size(), 2u);
}

TEST(FindPaths, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(11);
  const std::set<std::string> containment{"located_in", "capital_of"};
  for (int round = 0; round < 100; ++round) {
    auto rg = oracle::random_graph(rng);
    std::vector<Relation> edges(rg.graph.relations().begin(), rg.graph.relations().end());
    for (const auto& s : rg.ids) {
      for (const auto& o : rg.ids) {
        if (s == o) continue;
        for (std::size_t hops = 1; hops <= 3; ++hops) {
          auto got = find_paths(rg.graph, s, o, hops);
          auto want = oracle::all_paths(edges, s, o, hops);
          std::sort(got.begin(), got.end(), [](const Path& a, const Path& b) {
            return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), relation_less);
          });
          std::sort(want.begin(), want.end(), [](const Path& a, const Path& b) {
            return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), relation_less);
          });
          ASSERT_EQ(got, want) << s << " -> " << o << " within " << hops;
        }
        auto filtered = find_paths(rg.graph, s, o, 3, containment);
        ASSERT_EQ(filtered.size(), oracle::all_paths(edges, s, o, 3, &containment).size());
      }
    }
  }
}

TEST(GraphStats, SeedGraph) {
  auto s = graph_stats(testutil::seed_graph());
  EXPECT_EQ(s.node_count, 5u);
  EXPECT_EQ(s.edge_count, 4u);
  EXPECT_DOUBLE_EQ(s.avg_degree, 1.6);
  EXPECT_EQ(s.max_pairwise_path_length, 3u);
  EXPECT_DOUBLE_EQ(s.avg_clustering, 0.0);
}

TEST(GraphStats, TriangleIsFullyClustered) {
  GraphBuilder b;
  for (auto n : {"A", "B", "C"}) b.add_entity({"", n, {}, Category::GPE});
  b.add_relation("a", "near", "b", RelationKind::spatial);
  b.add_relation("b", "near", "c", RelationKind::spatial);
  b.add_relation("c", "near", "a", RelationKind::spatial);
  auto s = graph_stats(b.build());
  EXPECT_DOUBLE_EQ(s.avg_clustering, 1.0);
  EXPECT_EQ(s.max_pairwise_path_length, 1u);
  EXPECT_DOUBLE_EQ(s.avg_degree, 2.0);
}

TEST(GraphStats, EmptyGraph) {
  auto s = graph_stats(KnowledgeGraph{});
  EXPECT_EQ(s.node_count, 0u);
  EXPECT_DOUBLE_EQ(s.avg_degree, 0.0);
}

TEST(GraphIo, SaveOfLoadIsByteIdentical) {
  for (auto name : {"seed_kg.json", "landmarks_kg.json"}) {
    auto text = testutil::slurp(testutil::data_path(name));
    EXPECT_EQ(save_graph(load_graph(text, name)), text) << name;
  }
}

TEST(GraphIo, CanonicalizeSortsAndFillsAliases) {
  const std::string doc =
      R"({"relations":[{"subject":"b","predicate":"p","object":"a","kind":"spatial"}],)"
      R"("entities":[{"id":"b","name":"B","category":"GPE"},{"id":"a","name":"A","category":"GPE"}]})";
  auto canon = canonicalize_graph_document(doc);
  EXPECT_EQ(canon, save_graph(load_graph(doc)));
  EXPECT_LT(canon.find("\"a\""), canon.find("\"b\""));
}

namespace {

std::string error_of(const std::string& text) {
  try {
    load_graph(text, "bad.json");
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "no error";
}

}  // namespace

TEST(GraphIo, DiagnosticsAreLineAnchored) {
  const std::string unknown_field =
      "{\n"
      "  \"entities\": [\n"
      "    {\"id\": \"a\", \"name\": \"A\", \"category\": \"GPE\"},\n"
      "    {\"id\": \"b\", \"name\": \"B\", \"category\": \"GPE\", \"colour\": 1}\n"
      "  ],\n"
      "  \"relations\": []\n"
      "}\n";
  EXPECT_EQ(error_of(unknown_field), "bad.json:4: entities[1]: unknown field \"colour\"");

  const std::string dangling =
      "{\n"
      "  \"entities\": [{\"id\": \"a\", \"name\": \"A\", \"category\": \"GPE\"}],\n"
      "  \"relations\": [\n"
      "    {\"subject\": \"a\", \"predicate\": \"p\", \"object\": \"zz\", \"kind\": \"spatial\"}\n"
      "  ]\n"
      "}\n";
  EXPECT_EQ(error_of(dangling).rfind("bad.json:4: relations[0]:", 0), 0u) << error_of(dangling);
  EXPECT_THROW(load_graph(dangling), ReferentialIntegrityError);

  const std::string bad_category =
      "{\"entities\": [\n{\"id\": \"a\", \"name\": \"A\", \"category\": \"CITY\"}\n], \"relations\": []}";
  EXPECT_EQ(error_of(bad_category), "bad.json:2: entities[0]: unknown category \"CITY\"");

  const std::string broken = "{\n  \"entities\": [\n  oops\n";
  EXPECT_EQ(error_of(broken).rfind("bad.json:3: invalid JSON", 0), 0u) << error_of(broken);

  EXPECT_EQ(error_of("{\"entities\": []}"), "bad.json:1: \"relations\" must be an array");
  EXPECT_EQ(error_of("{\"entities\": [], \"relations\": [], \"x\": 1}"),
            "bad.json:1: unknown top-level field \"x\"");
}

TEST(GraphIo, BadIdIsSchemaError) {
  const std::string doc =
      "{\"entities\": [\n{\"id\": \"dacca\", \"name\": \"Dhaka\", \"category\": \"GPE\"}\n], \"relations\": []}";
  EXPECT_EQ(error_of(doc).rfind("bad.json:2: entities[0]: entity id 'dacca'", 0), 0u) << error_of(doc);
}
