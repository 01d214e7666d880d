#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace kgv;

namespace {

class CannedNer : public NerClient {
 public:
  explicit CannedNer(std::vector<NerEntity> reply) : reply_(std::move(reply)) {}
  std::vector<NerEntity> recognize(std::string_view) override { return reply_; }

 private:
  std::vector<NerEntity> reply_;
};

/// Embeds each text as a 2-d vector looked up by first letter.
class LetterEmbedder : public EmbeddingClient {
 public:
  EmbeddingBatch embed(const std::vector<std::string>& texts) override {
    EmbeddingBatch b;
    b.signed_cosine = true;
    for (const auto& t : texts) b.vectors.push_back(t[0] == 'd' ? std::vector<double>{1, 0} : std::vector<double>{0, 1});
    return b;
  }
};

EntityMention mention(const std::string& text) { return {text, normalize_mention(text), Category::GPE, {0, text.size()}}; }

}  // namespace

TEST(Gazetteer, FindsNamesAndAliases) {
  const std::string caption = "The Lalbagh Fort in Dhaka, Bangladesh is a historical building.";
  auto ms = gazetteer_extract(caption, testutil::seed_graph());
  ASSERT_EQ(ms.size(), 4u);
  EXPECT_EQ(ms[0].text, "Lalbagh Fort");
  EXPECT_EQ(ms[0].category, Category::FAC);
  EXPECT_EQ(ms[0].span, (Span{4, 16}));
  EXPECT_EQ(ms[1].text, "Dhaka");
  EXPECT_EQ(ms[2].text, "Bangladesh");
  EXPECT_EQ(ms[3].text, "historical building");

  ExtractorConfig config;
  auto filtered = extract_entities(caption, config, testutil::seed_graph());
  ASSERT_EQ(filtered.size(), 3u);
  EXPECT_EQ(filtered[2].normalized, "bangladesh");
}

TEST(Gazetteer, LongestMatchWins) {
  auto ms = gazetteer_extract("Fort Aurangabad and the Star Mosque", testutil::landmarks_graph());
  ASSERT_EQ(ms.size(), 2u);
  EXPECT_EQ(ms[0].normalized, "fort aurangabad");
  EXPECT_EQ(ms[1].text, "Star Mosque");
}

TEST(Gazetteer, RequiresWholeWords) {
  EXPECT_TRUE(gazetteer_extract("Dhakaland is far away", testutil::seed_graph()).empty());
}

TEST(Extractor, MergedPrefersLongerSpansThenGazetteer) {
  const std::string caption = "The Lalbagh Fort near Sonargaon Museum in Dhaka.";
  CannedNer ner({{"Lalbagh Fort near", "ORG", 4, 21},
                 {"Sonargaon Museum", "FAC", 22, 38},
                 {"Dhaka", "LOC", 42, 47}});
  ExtractorConfig config;
  config.mode = ExtractorMode::merged;
  auto ms = extract_entities(caption, config, testutil::seed_graph(), &ner);
  ASSERT_EQ(ms.size(), 3u);
  EXPECT_EQ(ms[0].text, "Lalbagh Fort near");
  EXPECT_EQ(ms[0].category, Category::ORG);
  EXPECT_EQ(ms[1].text, "Sonargaon Museum");
  EXPECT_EQ(ms[2].text, "Dhaka");
  EXPECT_EQ(ms[2].category, Category::GPE);  // gazetteer wins the tie
}

TEST(Extractor, ServiceModeFiltersCategories) {
  CannedNer ner({{"Monday", "DATE", 0, 6}, {"Paris", "GPE", 10, 15}});
  ExtractorConfig config;
  config.mode = ExtractorMode::external_service;
  auto ms = extract_entities("Monday in Paris", config, testutil::seed_graph(), &ner);
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_EQ(ms[0].text, "Paris");
}

TEST(Extractor, ServiceSpansAreChecked) {
  ExtractorConfig config;
  config.mode = ExtractorMode::external_service;
  CannedNer past_end({{"Paris", "GPE", 10, 99}});
  EXPECT_THROW(extract_entities("Monday in Paris", config, testutil::seed_graph(), &past_end), ProtocolError);
  CannedNer wrong_text({{"Rome", "GPE", 10, 15}});
  EXPECT_THROW(extract_entities("Monday in Paris", config, testutil::seed_graph(), &wrong_text), ProtocolError);
  EXPECT_THROW(extract_entities("Monday in Paris", config, testutil::seed_graph(), nullptr), ServiceUnavailable);
}

TEST(Trigram, KnownValues) {
  EXPECT_NEAR(trigram_cosine("Lalbag Fort", "Lalbagh Fort"), 0.737865, 1e-6);
  EXPECT_NEAR(trigram_cosine("Lalbagh Ford", "Lalbagh Fort"), 0.9, 1e-12);
  EXPECT_DOUBLE_EQ(trigram_cosine("Dhaka", "the dhaka"), 1.0);
  EXPECT_DOUBLE_EQ(trigram_cosine("ab", "xy"), 0.0);
  EXPECT_DOUBLE_EQ(trigram_cosine("ab", "ab"), 1.0);
}

TEST(Trigram, AgreesWithOracleAndIsSymmetricAndBounded) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(0, 12);
  std::uniform_int_distribution<int> letter(0, 4);
  auto word = [&] {
    std::string s;
    for (int i = len(rng); i > 0; --i) s.push_back(letter(rng) == 4 ? ' ' : static_cast<char>('a' + letter(rng)));
    return normalize_mention(s);
  };
  for (int i = 0; i < 2000; ++i) {
    auto a = word();
    auto b = word();
    double x = trigram_cosine(a, b);
    EXPECT_NEAR(x, oracle::trigram_cosine(a, b), 1e-12) << a << " | " << b;
    EXPECT_DOUBLE_EQ(x, trigram_cosine(b, a));
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
    EXPECT_DOUBLE_EQ(trigram_cosine(a, a), 1.0);
  }
}

TEST(Matcher, ExactHitsScoreOne) {
  auto m = resolve_mention(mention("the Lalbagh fort"), testutil::seed_graph(), MatcherConfig{});
  EXPECT_EQ(m.method, MatchMethod::exact);
  EXPECT_EQ(m.entity_id, "lalbagh_fort");
  EXPECT_DOUBLE_EQ(m.score, 1.0);
}

TEST(Matcher, FuzzyBelowThresholdIsHallucinated) {
  auto p = partition_entities({mention("Lalbag Fort"), mention("Lalbagh Ford"), mention("Dhaka")},
                              testutil::seed_graph(), MatcherConfig{});
  ASSERT_EQ(p.matches.size(), 3u);
  EXPECT_EQ(p.matches[0].method, MatchMethod::fuzzy);
  EXPECT_EQ(p.matches[0].entity_id, "lalbagh_fort");
  EXPECT_FALSE(p.is_verified(0));
  EXPECT_TRUE(p.is_verified(1));  // 0.9 clears 0.85
  EXPECT_TRUE(p.is_verified(2));
  EXPECT_EQ(p.verified_count(), 2u);
  EXPECT_EQ(p.hallucinated().front().mention.text, "Lalbag Fort");
}

TEST(Matcher, FuzzyTiesPickSmallestId) {
  GraphBuilder b;
  b.add_entity({"", "aaa c", {}, Category::GPE});
  b.add_entity({"", "aaa b", {}, Category::GPE});
  auto m = fuzzy_match(mention("aaa d"), b.build(), MatcherConfig{});
  EXPECT_EQ(m.entity_id, "aaa_b");
  EXPECT_NEAR(m.score, 2.0 / 3.0, 1e-12);
}

TEST(Matcher, EmptyGraphAndBadThreshold) {
  EXPECT_THROW(fuzzy_match(mention("x"), KnowledgeGraph{}, MatcherConfig{}), EmptyGraph);
  MatcherConfig bad;
  bad.threshold = 1.5;
  EXPECT_THROW(partition_entities({}, testutil::seed_graph(), bad), std::invalid_argument);
}

TEST(Matcher, ServiceEmbedderMapsSignedCosine) {
  MatcherConfig config;
  config.embedder = Embedder::service;
  LetterEmbedder embedder;
  auto m = fuzzy_match(mention("dacca"), testutil::seed_graph(), config, &embedder);
  EXPECT_EQ(m.entity_id, "dhaka");
  EXPECT_DOUBLE_EQ(m.score, 1.0);
  auto far = fuzzy_match(mention("zzz"), testutil::seed_graph(), config, &embedder);
  EXPECT_DOUBLE_EQ(far.score, 1.0);  // every non-'d' surface shares its vector
  EXPECT_THROW(fuzzy_match(mention("zzz"), testutil::seed_graph(), config, nullptr), ServiceUnavailable);
}

TEST(Matcher, VerifiedSetShrinksAsThresholdRises) {
  std::vector<EntityMention> ms;
  for (auto t : {"Lalbag Fort", "Lalbagh Ford", "Dhaka", "Dacca", "Bangla", "mosques", "Fort"}) ms.push_back(mention(t));
  std::vector<bool> prev(ms.size(), true);
  for (double th : {0.0, 0.5, 0.85, 1.0}) {
    MatcherConfig c;
    c.threshold = th;
    auto p = partition_entities(ms, testutil::seed_graph(), c);
    for (std::size_t i = 0; i < ms.size(); ++i) {
      EXPECT_FALSE(p.is_verified(i) && !prev[i]) << ms[i].text << " at " << th;
      prev[i] = p.is_verified(i);
    }
  }
  EXPECT_TRUE(prev[2]);  // exact hit survives 1.0
}
