#include <gtest/gtest.h>

#include <filesystem>

#include "test_util.hpp"

using namespace kgv;

namespace {

std::vector<CaptionRecord> plain_records(std::size_t n) {
  std::vector<CaptionRecord> rs;
  for (std::size_t i = 0; i < n; ++i) {
    CaptionRecord r;
    r.id = "x" + std::to_string(i);
    r.baseline_caption = "Dhaka.";
    rs.push_back(r);
  }
  return rs;
}

std::array<std::size_t, 3> split_sizes(const std::vector<CaptionRecord>& rs) {
  std::array<std::size_t, 3> n{};
  for (const auto& r : rs) ++n[static_cast<std::size_t>(*r.split)];
  return n;
}

std::string parse_error(const std::string& text) {
  try {
    parse_corpus(text, "c.jsonl");
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "no error";
}

struct Fixture {
  std::unique_ptr<ReplayClient> replay = replay_client(testutil::data_path("replay_fixture.json"));
  Clients clients{replay.get(), replay.get(), replay.get(), replay.get()};
  std::vector<CaptionRecord> records = load_corpus(testutil::data_path("corpus.jsonl"));
  RunConfig config = [] {
    RunConfig c;
    c.extractor.mode = ExtractorMode::merged;
    return c;
  }();
};

nlohmann::json expected() { return nlohmann::json::parse(testutil::slurp(testutil::golden_path("corpus_expected.json"))); }

class ThrowingGenerator : public GenerationClient {
 public:
  std::string generate(std::string_view, std::string_view, const std::optional<std::string>&) override {
    throw ServiceUnavailable("down for maintenance");
  }
};

}  // namespace

TEST(Corpus, ParsesBundledCorpus) {
  auto rs = load_corpus(testutil::data_path("corpus.jsonl"));
  ASSERT_EQ(rs.size(), 12u);
  EXPECT_EQ(rs[0].id, "r01");
  EXPECT_EQ(rs[0].coherence, 4);
  EXPECT_EQ(rs[0].gold->size(), 4u);
  EXPECT_EQ(rs[6].image, "images/r07.jpg");
  EXPECT_FALSE(rs[6].baseline_caption);
  EXPECT_EQ(parse_corpus(dump_corpus(rs)), rs);
}

TEST(Corpus, LineAnchoredErrors) {
  const std::string ok = "{\"id\":\"a\",\"baseline_caption\":\"x\"}\n";
  EXPECT_EQ(parse_error(ok + "\n{\"id\":\"b\",\"caption\":\"x\"}\n"), "c.jsonl:3: unknown field \"caption\"");
  EXPECT_EQ(parse_error(ok + ok), "c.jsonl:2: duplicate record id \"a\"");
  EXPECT_EQ(parse_error("{\"id\":\"a\"}"), "c.jsonl:1: record needs \"image\" or \"baseline_caption\"");
  EXPECT_EQ(parse_error(ok + "{oops}").rfind("c.jsonl:2: invalid JSON", 0), 0u);
  EXPECT_EQ(parse_error("{\"id\":\"../x\",\"image\":\"i\"}").rfind("c.jsonl:1: record id", 0), 0u);
  EXPECT_EQ(parse_error("{\"id\":\"a\",\"image\":\"i\",\"coherence\":7}"),
            "c.jsonl:1: field \"coherence\" must be an integer rating 1-5");
  EXPECT_EQ(parse_error("{\"id\":\"a\",\"image\":\"i\",\"split\":\"train\"}"), "c.jsonl:1: unknown split \"train\"");
  EXPECT_EQ(parse_error("{\"id\":\"a\",\"image\":\"i\",\"gold\":[{\"text\":\"x\",\"label\":\"maybe\"}]}"),
            "c.jsonl:1: gold label must be \"real\" or \"hallucinated\"");
}

TEST(Split, QuotasFollowRatios) {
  EXPECT_EQ(split_sizes(split_dataset(plain_records(10))), (std::array<std::size_t, 3>{6, 2, 2}));
  EXPECT_EQ(split_sizes(split_dataset(plain_records(5))), (std::array<std::size_t, 3>{3, 1, 1}));
  EXPECT_EQ(split_quotas(7, {0.5, 0.25, 0.25}), (std::array<std::size_t, 3>{3, 2, 2}));
  EXPECT_EQ(split_quotas(0, {0.6, 0.2, 0.2}), (std::array<std::size_t, 3>{0, 0, 0}));
}

TEST(Split, DeterministicPerSeed) {
  auto a = split_dataset(plain_records(20), {0.6, 0.2, 0.2}, 7);
  auto b = split_dataset(plain_records(20), {0.6, 0.2, 0.2}, 7);
  auto c = split_dataset(plain_records(20), {0.6, 0.2, 0.2}, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Split, KeepsExistingLabelsUnlessForced) {
  auto rs = plain_records(5);
  rs[0].split = Split::distractor;
  rs[1].split = Split::distractor;
  auto kept = split_dataset(rs);
  EXPECT_EQ(kept[0].split, Split::distractor);
  EXPECT_EQ(kept[1].split, Split::distractor);
  auto forced = split_sizes(split_dataset(rs, {0.6, 0.2, 0.2}, 7, true));
  EXPECT_EQ(forced, (std::array<std::size_t, 3>{3, 1, 1}));
}

TEST(Split, RejectsBadRatios) {
  EXPECT_THROW(split_dataset(plain_records(3), {0.5, 0.2, 0.2}), BadRatios);
  EXPECT_THROW(split_dataset(plain_records(3), {1.2, -0.1, -0.1}), BadRatios);
}

TEST(Pipeline, ReproducesHandDerivedCorpus) {
  Fixture f;
  auto want = expected();
  auto traces = run_corpus(f.records, testutil::landmarks_graph(), f.config, f.clients);
  ASSERT_EQ(traces.size(), 12u);
  for (const auto& t : traces) {
    SCOPED_TRACE(t.id);
    const auto& w = want["records"][t.id];
    EXPECT_FALSE(t.outcome.failed);
    EXPECT_EQ(t.outcome.counts.ntc, w["NTC"].get<std::size_t>());
    EXPECT_EQ(t.outcome.counts.ncv, w["NCV"].get<std::size_t>());
    EXPECT_EQ(t.outcome.baseline_hallucinations, w["baseline_h"].get<std::size_t>());
    EXPECT_EQ(t.outcome.corrected_hallucinations, w["corrected_h"].get<std::size_t>());
    EXPECT_EQ(t.document["corrected_caption"].get<std::string>(), w["corrected"].get<std::string>());
  }
  auto s = summarize(traces, true);
  const auto& tot = want["totals"];
  EXPECT_EQ(s.total.counts.ntc, tot["NTC"].get<std::size_t>());
  EXPECT_EQ(s.total.counts.ncv, tot["NCV"].get<std::size_t>());
  EXPECT_EQ(s.total.nte, tot["NTE"].get<std::size_t>());
  EXPECT_EQ(s.total.nme, tot["NME"].get<std::size_t>());
  EXPECT_EQ(s.total.nhc, tot["NHC"].get<std::size_t>());
  EXPECT_DOUBLE_EQ(*s.total.fi, 100.0 * (7.0 - 1.0) / 7.0);
  EXPECT_DOUBLE_EQ(*s.total.fvr, 100.0 * 33.0 / 43.0);
  EXPECT_DOUBLE_EQ(*s.total.ea, 100.0 * 7.0 / 9.0);
  EXPECT_EQ(mean_coherence(s.total.coherence_annotations), 4.5);
}

TEST(Pipeline, TraceShape) {
  Fixture f;
  auto t = run_pipeline(f.records[6], testutil::landmarks_graph(), f.config, f.clients);
  const auto& doc = t.document;
  std::vector<std::string> keys;
  for (const auto& [k, v] : doc.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"id", "split", "hops", "caption", "corrected_caption", "error",
                                            "assessment"}));
  ASSERT_EQ(doc["hops"].size(), 6u);
  EXPECT_EQ(doc["hops"][0]["source"], "service");
  EXPECT_EQ(doc["hops"][1]["mentions"][0]["id"], "m0");
  EXPECT_EQ(doc["hops"][3]["claims"][0]["id"], "c0");
  EXPECT_TRUE(doc["error"].is_null());
  EXPECT_EQ(trace::outcome_from_json(doc["assessment"], "t"), t.outcome);
}

TEST(Pipeline, BlankCaptionIsDegenerate) {
  CaptionRecord r;
  r.id = "blank";
  r.baseline_caption = "   ";
  auto t = run_pipeline(r, testutil::seed_graph(), RunConfig{}, Clients{});
  EXPECT_FALSE(t.outcome.failed);
  EXPECT_EQ(t.document["hops"][1]["status"], "degenerate");
  EXPECT_EQ(t.outcome.counts.ntc, 0u);
  EXPECT_EQ(t.document["corrected_caption"], "   ");
}

TEST(Pipeline, MissingCaptionServiceFailsRecord) {
  CaptionRecord r;
  r.id = "img";
  r.image = "images/r07.jpg";
  auto t = run_pipeline(r, testutil::seed_graph(), RunConfig{}, Clients{});
  EXPECT_TRUE(t.outcome.failed);
  EXPECT_TRUE(t.service_failure);
  EXPECT_EQ(t.document["error"]["hop"], "caption");
  EXPECT_EQ(t.document["error"]["kind"], "service");
  EXPECT_EQ(t.document["hops"][5]["status"], "skipped");
  EXPECT_TRUE(t.document["caption"].is_null());
}

TEST(Pipeline, ServiceCorrectionFallsBackToTemplate) {
  CaptionRecord r;
  r.id = "fb";
  r.baseline_caption = "The Lalbag Fort is a mosque in Dhaka.";
  RunConfig config;
  config.correction = CorrectionMode::service_with_template_fallback;
  config.extractor.mode = ExtractorMode::merged;
  testutil::PhraseNer ner({"Lalbag Fort"});
  auto none = run_pipeline(r, testutil::seed_graph(), config, Clients{nullptr, nullptr, nullptr, &ner});
  EXPECT_EQ(none.document["hops"][4]["fallback"], "no generation client configured");
  EXPECT_EQ(none.document["hops"][4]["method"], "templated");

  ThrowingGenerator gen;
  auto down = run_pipeline(r, testutil::seed_graph(), config, Clients{nullptr, &gen, nullptr, &ner});
  EXPECT_EQ(down.document["hops"][4]["fallback"], "down for maintenance");
  EXPECT_EQ(down.document["corrected_caption"], "The Lalbagh Fort is a mosque in Dhaka.");
  EXPECT_FALSE(down.outcome.failed);
}

TEST(Pipeline, ServiceCorrectionUsesGeneratedText) {
  CaptionRecord r;
  r.id = "gen";
  r.baseline_caption = "The Lalbag Fort is a mosque in Dhaka.";
  RunConfig config;
  config.correction = CorrectionMode::service_with_template_fallback;
  config.extractor.mode = ExtractorMode::merged;
  testutil::PhraseNer ner({"Lalbag Fort"});
  auto analysis =
      analyze_caption(*r.baseline_caption, testutil::seed_graph(), config, Clients{nullptr, nullptr, nullptr, &ner});
  auto bundle = assemble_prompt(*r.baseline_caption, analysis.report, config.facts_format, testutil::seed_graph());
  ReplayFixture fixture;
  fixture.add("generate", protocol::generation_request(bundle.system_text, bundle.user_text, std::nullopt),
              {{"text", "Lalbagh Fort, a mosque, stands in Dhaka."}});
  ReplayClient client(fixture);
  auto t = run_pipeline(r, testutil::seed_graph(), config, Clients{nullptr, &client, nullptr, &ner});
  EXPECT_EQ(t.document["hops"][4]["method"], "generated");
  EXPECT_EQ(t.document["corrected_caption"], "Lalbagh Fort, a mosque, stands in Dhaka.");
  EXPECT_EQ(t.outcome.corrected_hallucinations, 0u);
}

TEST(Pipeline, ParallelRunsMatchSerial) {
  Fixture f;
  auto serial = run_corpus(f.records, testutil::landmarks_graph(), f.config, f.clients);
  f.config.parallelism = 4;
  auto parallel = run_corpus(f.records, testutil::landmarks_graph(), f.config, f.clients);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) EXPECT_EQ(serial[i].document, parallel[i].document);
}

TEST(RunDirectory, WritesAndReloads) {
  Fixture f;
  auto dir = testutil::scratch_dir("rundir");
  std::filesystem::create_directories(dir / "traces");
  write_file(dir / "traces" / "stale.json", "{}");
  auto result = run_to_directory(f.records, testutil::landmarks_graph(), f.config, f.clients, dir);
  EXPECT_FALSE(std::filesystem::exists(dir / "traces" / "stale.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  auto outcomes = load_run_outcomes(dir);
  ASSERT_EQ(outcomes.size(), 12u);
  for (std::size_t i = 0; i < outcomes.size(); ++i) EXPECT_EQ(outcomes[i], result.traces[i].outcome);
  auto again = evaluate_corpus(outcomes, false);
  EXPECT_EQ(trace::summary_json(again).dump(2) + "\n", testutil::slurp((dir / "metrics.json").string()));
  auto manifest = nlohmann::json::parse(testutil::slurp((dir / "manifest.json").string()));
  EXPECT_EQ(manifest["service_failures"], 0);
  EXPECT_FALSE(manifest["config"].contains("parallelism"));
}

TEST(Compare, FormatsFollowHandDerivedCounts) {
  Fixture f;
  auto want = expected()["formats"];
  auto dir = testutil::scratch_dir("compare");
  auto cmp = compare_formats(f.records, testutil::landmarks_graph(), f.config, f.clients,
                             {FactsFormat::triple, FactsFormat::hierarchical, FactsFormat::bullet}, dir, true);
  ASSERT_EQ(cmp.rows.size(), 3u);
  for (const auto& row : cmp.rows) {
    SCOPED_TRACE(row.format);
    EXPECT_EQ(row.block.counts.ncv, want[row.format]["NCV"].get<std::size_t>());
    EXPECT_EQ(row.block.counts.ntc, want[row.format]["NTC"].get<std::size_t>());
    EXPECT_TRUE(row.block.ea.has_value());
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "triple" / "metrics.json"));
  EXPECT_EQ(testutil::slurp((dir / "comparison.txt").string()), render_table(cmp.rows));
  EXPECT_THROW(compare_formats({}, testutil::landmarks_graph(), f.config, f.clients), InputError);
}
