#ifndef KGV_PIPELINE_HPP
#define KGV_PIPELINE_HPP

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kgv/correct_hop.hpp"
#include "kgv/entity_hop.hpp"
#include "kgv/error.hpp"
#include "kgv/graph.hpp"
#include "kgv/graph_io.hpp"
#include "kgv/match_hop.hpp"
#include "kgv/metrics.hpp"
#include "kgv/service.hpp"
#include "kgv/trace.hpp"
#include "kgv/verify_hop.hpp"

namespace kgv {

struct CaptionRecord {
  std::string id;
  std::optional<std::string> image;
  std::optional<std::string> baseline_caption;
  std::optional<Split> split;
  std::optional<std::vector<EntityGold>> gold;
  std::optional<int> coherence;

  bool operator==(const CaptionRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Corpus I/O (JSONL)

namespace detail {

inline bool valid_record_id(std::string_view id) {
  if (id.empty() || id.front() == '.') return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

inline CaptionRecord parse_record(const nlohmann::json& j, const std::string& source, std::size_t line) {
  auto fail = [&](const std::string& msg) -> void { throw SchemaError(source, line, msg); };
  if (!j.is_object()) fail("record must be a JSON object");
  static const std::set<std::string> allowed{"id", "image", "baseline_caption", "split", "gold", "coherence"};
  for (const auto& [key, value] : j.items()) {
    if (allowed.count(key) == 0) fail("unknown field \"" + key + "\"");
  }
  CaptionRecord r;
  if (!j.contains("id") || !j["id"].is_string()) fail("field \"id\" must be a string");
  r.id = j["id"].get<std::string>();
  if (!valid_record_id(r.id)) fail("record id \"" + r.id + "\" must use only letters, digits, '_', '-' and '.'");
  auto opt_string = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) fail(std::string("field \"") + key + "\" must be a string");
    return j[key].get<std::string>();
  };
  r.image = opt_string("image");
  r.baseline_caption = opt_string("baseline_caption");
  if (!r.image && !r.baseline_caption) fail("record needs \"image\" or \"baseline_caption\"");
  if (auto s = opt_string("split")) {
    r.split = parse_split(*s);
    if (!r.split) fail("unknown split \"" + *s + "\"");
  }
  if (j.contains("gold") && !j["gold"].is_null()) {
    if (!j["gold"].is_array()) fail("field \"gold\" must be an array");
    std::vector<EntityGold> gold;
    for (const auto& g : j["gold"]) {
      if (!g.is_object() || g.size() != 2 || !g.contains("text") || !g.contains("label") || !g["text"].is_string() ||
          !g["label"].is_string()) {
        fail("gold entries must be {\"text\": string, \"label\": \"real\"|\"hallucinated\"}");
      }
      auto text = g["text"].get<std::string>();
      auto label = g["label"].get<std::string>();
      if (text.empty()) fail("gold entry text must be non-empty");
      if (label != "real" && label != "hallucinated") fail("gold label must be \"real\" or \"hallucinated\"");
      gold.push_back({text, label == "real" ? GoldLabel::real : GoldLabel::hallucinated});
    }
    r.gold = std::move(gold);
  }
  if (j.contains("coherence") && !j["coherence"].is_null()) {
    const auto& c = j["coherence"];
    if (!c.is_number_integer() || c.get<int>() < 1 || c.get<int>() > 5) {
      fail("field \"coherence\" must be an integer rating 1-5");
    }
    r.coherence = c.get<int>();
  }
  return r;
}

}  // namespace detail

inline std::vector<CaptionRecord> parse_corpus(std::string_view text, const std::string& source = "<corpus>") {
  std::vector<CaptionRecord> records;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line.begin(), line.end());
    } catch (const nlohmann::json::parse_error& e) {
      std::string what = e.what();
      auto colon = what.find(": ");
      throw SchemaError(source, line_no, "invalid JSON: " + (colon == std::string::npos ? what : what.substr(colon + 2)));
    }
    auto record = detail::parse_record(j, source, line_no);
    if (!ids.insert(record.id).second) throw SchemaError(source, line_no, "duplicate record id \"" + record.id + "\"");
    records.push_back(std::move(record));
  }
  return records;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::vector<CaptionRecord> load_corpus(const std::string& path) {
  return parse_corpus(read_text_file(path), path);
}

inline nlohmann::ordered_json record_json(const CaptionRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  if (r.image) j["image"] = *r.image;
  if (r.baseline_caption) j["baseline_caption"] = *r.baseline_caption;
  if (r.split) j["split"] = to_string(*r.split);
  if (r.gold) j["gold"] = trace::gold_json(*r.gold);
  if (r.coherence) j["coherence"] = *r.coherence;
  return j;
}

inline std::string dump_corpus(const std::vector<CaptionRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_json(r).dump() + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

namespace detail {

/// Uniform integer in [0, n) by rejection, independent of the standard
/// library's distribution implementation.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  while (true) {
    std::uint64_t x = rng();
    if (x < limit) return x % n;
  }
}

}  // namespace detail

/// Integer quotas for n items by largest remainder; ties go to the earlier
/// ratio.
inline std::array<std::size_t, 3> split_quotas(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> q{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    double exact = ratios[i] * static_cast<double>(n);
    q[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(q[i]);
    assigned += q[i];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (rem[i] > rem[best] + 1e-12) best = i;
    }
    ++q[best];
    rem[best] = -1.0;
    ++assigned;
  }
  return q;
}

inline void validate_ratios(const std::array<double, 3>& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw BadRatios("ratios must be non-negative");
    sum += r;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw BadRatios("ratios must sum to 1");
}

/// Seeded shuffle, then seen/unseen/distractor by quota. Records that already
/// carry a split keep it unless `force`.
inline std::vector<CaptionRecord> split_dataset(std::vector<CaptionRecord> records,
                                                const std::array<double, 3>& ratios = {0.6, 0.2, 0.2},
                                                std::uint64_t seed = 7, bool force = false) {
  validate_ratios(ratios);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (force || !records[i].split) pending.push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = pending.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(detail::uniform_below(rng, i));
    std::swap(pending[i - 1], pending[j]);
  }
  const auto quotas = split_quotas(pending.size(), ratios);
  std::size_t k = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t c = 0; c < quotas[s]; ++c) records[pending[k++]].split = static_cast<Split>(s);
  }
  return records;
}

// ---------------------------------------------------------------------------
// Running

enum class CorrectionMode { template_only, service_with_template_fallback };

inline std::string_view to_string(CorrectionMode m) {
  return m == CorrectionMode::template_only ? "template_only" : "service_with_template_fallback";
}

struct RunConfig {
  Strategy strategy = Strategy::cross_validated;
  FactsFormat facts_format = FactsFormat::bullet;
  MatcherConfig matcher;
  ExtractorConfig extractor;
  CorrectionMode correction = CorrectionMode::template_only;
  bool reverify = false;
  std::size_t parallelism = 1;
  std::uint64_t seed = 7;
  KeywordTable keywords = default_keyword_table();
  std::string caption_prompt = std::string(kDefaultCaptionPrompt);
};

/// Everything that can change outputs. Parallelism is left out on purpose.
inline nlohmann::ordered_json config_json(const RunConfig& c) {
  nlohmann::ordered_json cats = nlohmann::ordered_json::array();
  for (auto cat : c.extractor.categories) cats.push_back(to_string(cat));
  nlohmann::ordered_json kw = nlohmann::ordered_json::object();
  for (const auto& [k, v] : c.keywords) kw[k] = v;
  return {
      {"strategy", to_string(c.strategy)},
      {"facts_format", to_string(c.facts_format)},
      {"threshold", c.matcher.threshold},
      {"embedder", c.matcher.embedder == Embedder::service ? "service" : "trigram_fallback"},
      {"extractor", to_string(c.extractor.mode)},
      {"categories", cats},
      {"correction", to_string(c.correction)},
      {"reverify", c.reverify},
      {"seed", c.seed},
      {"keywords", kw},
      {"caption_prompt", c.caption_prompt},
  };
}

struct CaptionAnalysis {
  std::vector<EntityMention> mentions;
  VerificationReport report;
  HallucinationFlags flags;
};

inline bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

inline std::vector<EntityMention> extract_step(std::string_view caption, const RunConfig& config,
                                               const KnowledgeGraph& graph, const Clients& clients) {
  if (blank(caption)) return {};
  return extract_entities(caption, config.extractor, graph, clients.ner);
}

/// Extraction, matching, verification and flagging of one caption.
inline CaptionAnalysis analyze_caption(std::string_view caption, const KnowledgeGraph& graph, const RunConfig& config,
                                       const Clients& clients) {
  CaptionAnalysis a;
  a.mentions = extract_step(caption, config, graph, clients);
  auto partition = partition_entities(a.mentions, graph, config.matcher, clients.embedding);
  auto claims = extract_claims(caption, partition, graph, config.keywords);
  a.report = verify_claims(graph, std::move(claims), partition, config.strategy);
  a.flags = flag_hallucinations(a.report);
  return a;
}

struct PipelineTrace {
  std::string id;
  nlohmann::ordered_json document;
  RecordOutcome outcome;
  std::vector<std::pair<std::string, double>> timings_ms;
  bool service_failure = false;
};

namespace detail {

inline std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ServiceError*>(&e) != nullptr) return "service";
  if (dynamic_cast<const InputError*>(&e) != nullptr) return "input";
  return "internal";
}

inline std::string error_type(const std::exception& e) {
  if (dynamic_cast<const FixtureMiss*>(&e)) return "FixtureMiss";
  if (dynamic_cast<const EmptyGeneration*>(&e)) return "EmptyGeneration";
  if (dynamic_cast<const DimensionMismatch*>(&e)) return "DimensionMismatch";
  if (dynamic_cast<const ProtocolError*>(&e)) return "ProtocolError";
  if (dynamic_cast<const ServiceUnavailable*>(&e)) return "ServiceUnavailable";
  if (dynamic_cast<const EmptyGraph*>(&e)) return "EmptyGraph";
  if (dynamic_cast<const UnknownEntity*>(&e)) return "UnknownEntity";
  return error_kind(e) == "internal" ? "Error" : error_kind(e) == "service" ? "ServiceError" : "InputError";
}

inline void merge_into(nlohmann::ordered_json& out, const nlohmann::ordered_json& fields) {
  for (const auto& [k, v] : fields.items()) out[k] = v;
}

inline CorrectionResult correct_step(std::string_view caption, const VerificationReport& report,
                                     const KnowledgeGraph& graph, const RunConfig& config, const Clients& clients,
                                     const PromptBundle& bundle, std::optional<std::string>& fallback) {
  if (config.correction == CorrectionMode::service_with_template_fallback) {
    if (clients.generation == nullptr) {
      fallback = "no generation client configured";
    } else {
      try {
        return generate_correction(*clients.generation, bundle);
      } catch (const ServiceUnavailable& e) {
        fallback = e.what();
      } catch (const EmptyGeneration& e) {
        fallback = e.what();
      }
    }
  }
  return template_correct(caption, report, graph);
}

}  // namespace detail

/// Runs the hops for one record. Failures are recorded in the trace; the
/// failed hop's successors are marked skipped and C' falls back to C.
inline PipelineTrace run_pipeline(const CaptionRecord& record, const KnowledgeGraph& graph, const RunConfig& config,
                                  const Clients& clients) {
  using json = nlohmann::ordered_json;
  using clock = std::chrono::steady_clock;
  PipelineTrace t;
  t.id = record.id;
  t.outcome.id = record.id;
  t.outcome.split = record.split;
  t.outcome.gold = record.gold;
  t.outcome.coherence = record.coherence;

  static const std::vector<std::string> hop_names{"caption", "extract", "match", "verify", "correct", "assess"};
  json hops = json::array();
  json error = nullptr;
  std::string caption;
  std::string corrected;
  bool have_caption = false;
  std::vector<EntityMention> mentions;
  MatchPartition partition;
  VerificationReport report;
  HallucinationFlags baseline_flags;
  bool have_flags = false;

  auto run_hop = [&](const std::string& name, auto&& body) {
    if (!error.is_null()) {
      hops.push_back(json{{"hop", name}, {"status", "skipped"}});
      return;
    }
    auto start = clock::now();
    try {
      json out{{"hop", name}, {"status", "ok"}};
      body(out);
      hops.push_back(std::move(out));
    } catch (const std::exception& e) {
      error = json{{"hop", name}, {"kind", detail::error_kind(e)}, {"type", detail::error_type(e)}, {"message", e.what()}};
      if (detail::error_kind(e) == "service") t.service_failure = true;
      hops.push_back(json{{"hop", name}, {"status", "failed"}});
    }
    t.timings_ms.emplace_back(name, std::chrono::duration<double, std::milli>(clock::now() - start).count());
  };

  run_hop("caption", [&](json& out) {
    if (record.baseline_caption) {
      caption = *record.baseline_caption;
      out["source"] = "record";
    } else {
      if (clients.caption == nullptr) throw ServiceUnavailable("record has no caption and no caption client is configured");
      caption = caption_image(*clients.caption, *record.image, config.caption_prompt);
      out["source"] = "service";
      out["image"] = *record.image;
    }
    have_caption = true;
    out["caption"] = caption;
  });
  run_hop("extract", [&](json& out) {
    if (blank(caption)) out["status"] = "degenerate";
    mentions = extract_step(caption, config, graph, clients);
    out["mode"] = to_string(config.extractor.mode);
    out["mentions"] = trace::mentions_json(mentions);
  });
  run_hop("match", [&](json& out) {
    partition = partition_entities(mentions, graph, config.matcher, clients.embedding);
    out["threshold"] = config.matcher.threshold;
    detail::merge_into(out, trace::partition_json(partition));
  });
  run_hop("verify", [&](json& out) {
    auto claims = extract_claims(caption, partition, graph, config.keywords);
    report = verify_claims(graph, std::move(claims), partition, config.strategy);
    baseline_flags = flag_hallucinations(report);
    have_flags = true;
    out["strategy"] = to_string(config.strategy);
    detail::merge_into(out, trace::report_json(report));
    out["flags"] = trace::flags_json(baseline_flags);
  });
  CaptionAnalysis after;
  run_hop("correct", [&](json& out) {
    auto bundle = assemble_prompt(caption, report, config.facts_format, graph);
    std::optional<std::string> fallback;
    auto result = detail::correct_step(caption, report, graph, config, clients, bundle, fallback);
    corrected = result.corrected_caption;
    out["mode"] = to_string(config.correction);
    out["prompt"] = trace::prompt_json(bundle);
    out["fallback"] = fallback ? json(*fallback) : json(nullptr);
    detail::merge_into(out, trace::correction_json(result));
  });
  run_hop("assess", [&](json& out) {
    after = analyze_caption(corrected, graph, config, clients);
    if (config.reverify && after.flags.count() > 0) {
      auto bundle = assemble_prompt(corrected, after.report, config.facts_format, graph);
      std::optional<std::string> fallback;
      auto second = detail::correct_step(corrected, after.report, graph, config, clients, bundle, fallback);
      json pass{{"input_caption", corrected}, {"fallback", fallback ? json(*fallback) : json(nullptr)}};
      detail::merge_into(pass, trace::correction_json(second));
      out["reverify"] = pass;
      corrected = second.corrected_caption;
      after = analyze_caption(corrected, graph, config, clients);
    }
    out["caption"] = corrected;
    out["mentions"] = trace::mentions_json(after.mentions);
    detail::merge_into(out, trace::partition_json(after.report.partition));
    detail::merge_into(out, trace::report_json(after.report));
    out["flags"] = trace::flags_json(after.flags);
  });

  const bool ok = error.is_null();
  if (!ok) corrected = have_caption ? caption : std::string();
  t.outcome.failed = !ok;
  if (have_flags) {
    t.outcome.counts = report.counts;
    t.outcome.baseline_hallucinations = baseline_flags.count();
    t.outcome.corrected_hallucinations = ok ? after.flags.count() : baseline_flags.count();
    for (std::size_t i = 0; i < partition.matches.size(); ++i) {
      t.outcome.mentions.push_back(
          {partition.matches[i].mention.normalized, partition.is_verified(i), baseline_flags.flagged(i)});
    }
  }

  json doc;
  doc["id"] = record.id;
  doc["split"] = record.split ? json(to_string(*record.split)) : json(nullptr);
  doc["hops"] = std::move(hops);
  doc["caption"] = have_caption ? json(caption) : json(nullptr);
  doc["corrected_caption"] = corrected;
  doc["error"] = std::move(error);
  doc["assessment"] = trace::outcome_json(t.outcome);
  t.document = std::move(doc);
  return t;
}

/// Processes records on a pool of `config.parallelism` workers. Results come
/// back in input order regardless of scheduling.
inline std::vector<PipelineTrace> run_corpus(const std::vector<CaptionRecord>& records, const KnowledgeGraph& graph,
                                             const RunConfig& config, const Clients& clients) {
  config.matcher.validate();
  std::vector<PipelineTrace> out(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) out[i] = run_pipeline(records[i], graph, config, clients);
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.parallelism, records.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run directories

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

inline std::string document_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

struct RunResult {
  std::vector<PipelineTrace> traces;
  MetricsSummary summary;
  std::size_t service_failures = 0;
};

inline MetricsSummary summarize(const std::vector<PipelineTrace>& traces, bool gold_mode = false) {
  std::vector<RecordOutcome> outcomes;
  for (const auto& t : traces) outcomes.push_back(t.outcome);
  return evaluate_corpus(std::move(outcomes), gold_mode);
}

/// Writes manifest.json, traces/<id>.json and metrics.json under `dir`, and
/// per-hop timings to `timings_path` when given.
inline RunResult run_to_directory(const std::vector<CaptionRecord>& records, const KnowledgeGraph& graph,
                                  const RunConfig& config, const Clients& clients, const std::filesystem::path& dir,
                                  const std::optional<std::filesystem::path>& timings_path = std::nullopt) {
  namespace fs = std::filesystem;
  RunResult result;
  result.traces = run_corpus(records, graph, config, clients);
  result.summary = summarize(result.traces);

  fs::create_directories(dir / "traces");
  for (const auto& entry : fs::directory_iterator(dir / "traces")) {
    if (entry.path().extension() == ".json") fs::remove(entry.path());
  }
  nlohmann::ordered_json ids = nlohmann::ordered_json::array();
  for (const auto& t : result.traces) {
    write_file(dir / "traces" / (t.id + ".json"), document_text(t.document));
    ids.push_back(t.id);
    if (t.service_failure) ++result.service_failures;
  }
  const auto cfg = config_json(config);
  nlohmann::ordered_json manifest{
      {"config", cfg},
      {"config_hash", hex64(fnv1a64(cfg.dump()))},
      {"kg", {{"entities", graph.entity_count()}, {"relations", graph.relation_count()}, {"hash", hex64(fnv1a64(save_graph(graph)))}}},
      {"records", ids},
      {"failed_records", result.summary.total.failed_records},
      {"service_failures", result.service_failures},
  };
  write_file(dir / "manifest.json", document_text(manifest));
  write_file(dir / "metrics.json", document_text(trace::summary_json(result.summary)));

  if (timings_path) {
    nlohmann::ordered_json timings = nlohmann::ordered_json::object();
    for (const auto& t : result.traces) {
      nlohmann::ordered_json per = nlohmann::ordered_json::object();
      for (const auto& [hop, ms] : t.timings_ms) per[hop] = ms;
      timings[t.id] = per;
    }
    write_file(*timings_path, document_text(timings));
  }
  return result;
}

/// Outcomes stored in a run directory's traces, in manifest order.
inline std::vector<RecordOutcome> load_run_outcomes(const std::filesystem::path& dir) {
  const auto manifest_path = (dir / "manifest.json").string();
  const auto manifest = detail::parse_json_document(read_text_file(manifest_path), manifest_path);
  if (!manifest.is_object() || !manifest.contains("records") || !manifest["records"].is_array()) {
    throw SchemaError(manifest_path, 0, "manifest lacks a \"records\" array");
  }
  std::vector<RecordOutcome> out;
  for (const auto& id : manifest["records"]) {
    if (!id.is_string() || !detail::valid_record_id(id.get<std::string>())) {
      throw SchemaError(manifest_path, 0, "bad record id in manifest");
    }
    const auto path = (dir / "traces" / (id.get<std::string>() + ".json")).string();
    const auto doc = detail::parse_json_document(read_text_file(path), path);
    if (!doc.is_object() || !doc.contains("assessment")) throw SchemaError(path, 0, "trace lacks an assessment");
    out.push_back(trace::outcome_from_json(doc["assessment"], path));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Format comparison

inline Strategy strategy_for(FactsFormat f) {
  switch (f) {
    case FactsFormat::triple: return Strategy::triples_only;
    case FactsFormat::hierarchical: return Strategy::hierarchical_only;
    case FactsFormat::bullet: return Strategy::bullets_only;
  }
  return Strategy::cross_validated;
}

struct Comparison {
  std::vector<TableRow> rows;
  std::vector<std::string> warnings;
};

inline nlohmann::ordered_json comparison_json(const Comparison& c) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : c.rows) {
    auto f = parse_facts_format(r.format);
    rows.push_back({{"format", r.format},
                    {"strategy", f ? to_string(strategy_for(*f)) : std::string_view("cross_validated")},
                    {"metrics", trace::block_json(r.block)}});
  }
  return {{"rows", rows}, {"warnings", c.warnings}};
}

/// One full run per format with the matching single-format verifier. Writes
/// <dir>/<format>/ run directories plus comparison.json and comparison.txt.
inline Comparison compare_formats(const std::vector<CaptionRecord>& records, const KnowledgeGraph& graph,
                                  RunConfig config, const Clients& clients,
                                  const std::vector<FactsFormat>& formats = {FactsFormat::triple,
                                                                             FactsFormat::hierarchical,
                                                                             FactsFormat::bullet},
                                  const std::optional<std::filesystem::path>& dir = std::nullopt,
                                  bool gold_mode = false) {
  if (records.empty()) throw InputError("compare-formats needs a non-empty corpus");
  Comparison c;
  for (auto f : formats) {
    config.facts_format = f;
    config.strategy = strategy_for(f);
    MetricsSummary summary;
    if (dir) {
      auto run = run_to_directory(records, graph, config, clients, *dir / std::string(to_string(f)));
      summary = summarize(run.traces, gold_mode);
    } else {
      summary = summarize(run_corpus(records, graph, config, clients), gold_mode);
    }
    for (const auto& w : summary.warnings) c.warnings.push_back(std::string(to_string(f)) + ": " + w);
    c.rows.push_back({std::string(to_string(f)), summary.total});
  }
  if (dir) {
    write_file(*dir / "comparison.json", document_text(comparison_json(c)));
    write_file(*dir / "comparison.txt", render_table(c.rows));
  }
  return c;
}

}  // namespace kgv

#endif  // KGV_PIPELINE_HPP
