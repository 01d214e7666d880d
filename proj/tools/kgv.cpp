// kgv: command-line front end for the caption verification engine.

#include <array>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kgv/http_client.hpp"
#include "kgv/kgv.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitService = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::string kg_path;
  std::string format = "bullet";
  std::string strategy = "cross";
  double threshold = 0.85;
  std::string correction = "template";
  std::string extractor = "gazetteer";
  std::string embedder = "trigram";
  std::string replay;
  std::string ner_command;
  std::size_t parallelism = 1;
  std::uint64_t seed = 7;
  bool reverify = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o, bool with_format) {
  cmd->add_option("--kg", o.kg_path, "knowledge graph JSON")->required();
  if (with_format) {
    cmd->add_option("--format", o.format, "facts format for correction prompts")
        ->check(CLI::IsMember({"triple", "hierarchical", "bullet"}));
    cmd->add_option("--strategy", o.strategy, "verification strategy")
        ->check(CLI::IsMember({"cross", "triples", "hier", "bullets"}));
  }
  cmd->add_option("--threshold", o.threshold, "fuzzy match acceptance threshold")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--correction", o.correction, "correction mode")->check(CLI::IsMember({"template", "service"}));
  cmd->add_option("--extractor", o.extractor, "entity extractor")
      ->check(CLI::IsMember({"gazetteer", "service", "merged"}));
  cmd->add_option("--embedder", o.embedder, "similarity backend")->check(CLI::IsMember({"trigram", "service"}));
  cmd->add_option("--replay", o.replay, "answer all service calls from this fixture");
  cmd->add_option("--ner-command", o.ner_command, "line-oriented NER subprocess");
  cmd->add_option("--parallelism", o.parallelism, "worker count")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "seed recorded in the manifest");
  cmd->add_flag("--reverify", o.reverify, "re-verify and re-correct the corrected caption once");
}

kgv::RunConfig make_config(const RunOptions& o) {
  kgv::RunConfig c;
  c.facts_format = *kgv::parse_facts_format(o.format);
  if (o.strategy == "cross") c.strategy = kgv::Strategy::cross_validated;
  if (o.strategy == "triples") c.strategy = kgv::Strategy::triples_only;
  if (o.strategy == "hier") c.strategy = kgv::Strategy::hierarchical_only;
  if (o.strategy == "bullets") c.strategy = kgv::Strategy::bullets_only;
  c.matcher.threshold = o.threshold;
  c.matcher.embedder = o.embedder == "service" ? kgv::Embedder::service : kgv::Embedder::trigram_fallback;
  c.correction = o.correction == "service" ? kgv::CorrectionMode::service_with_template_fallback
                                           : kgv::CorrectionMode::template_only;
  if (o.extractor == "service") c.extractor.mode = kgv::ExtractorMode::external_service;
  if (o.extractor == "merged") c.extractor.mode = kgv::ExtractorMode::merged;
  c.parallelism = o.parallelism;
  c.seed = o.seed;
  c.reverify = o.reverify;
  return c;
}

/// Owns whichever clients the options ask for.
struct ClientSet {
  std::unique_ptr<kgv::ReplayClient> replay;
  std::unique_ptr<kgv::HttpServiceClient> http;
  std::unique_ptr<kgv::StdioNerClient> stdio_ner;
  kgv::Clients handles;
};

std::unique_ptr<ClientSet> make_clients(const RunOptions& o, const kgv::RunConfig& config) {
  auto set = std::make_unique<ClientSet>();
  if (!o.replay.empty()) {
    set->replay = kgv::replay_client(o.replay);
    set->handles = {set->replay.get(), set->replay.get(), set->replay.get(), set->replay.get()};
  } else {
    auto endpoints = kgv::endpoints_from_env();
    set->http = std::make_unique<kgv::HttpServiceClient>(endpoints);
    if (set->http->has_generation()) {
      set->handles.caption = set->http.get();
      set->handles.generation = set->http.get();
    }
    if (set->http->has_embedding()) set->handles.embedding = set->http.get();
    if (set->http->has_ner()) set->handles.ner = set->http.get();
  }
  if (!o.ner_command.empty()) {
    set->stdio_ner = std::make_unique<kgv::StdioNerClient>(o.ner_command);
    set->handles.ner = set->stdio_ner.get();
  }
  if (config.extractor.mode != kgv::ExtractorMode::gazetteer && set->handles.ner == nullptr) {
    throw UsageError("--extractor " + o.extractor + " needs --replay, --ner-command or KGV_NER_URL");
  }
  if (config.matcher.embedder == kgv::Embedder::service && set->handles.embedding == nullptr) {
    throw UsageError("--embedder service needs --replay or KGV_EMBED_URL");
  }
  return set;
}

std::array<double, 3> parse_ratios(const std::string& text) {
  std::array<double, 3> r{};
  std::stringstream in(text);
  std::string part;
  std::size_t i = 0;
  while (std::getline(in, part, ',')) {
    if (i == 3) throw UsageError("--ratios takes exactly three values");
    try {
      std::size_t used = 0;
      r[i++] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::logic_error&) {
      throw UsageError("--ratios: '" + part + "' is not a number");
    }
  }
  if (i != 3) throw UsageError("--ratios takes exactly three values");
  return r;
}

void print_summary(const kgv::MetricsSummary& s, const std::string& format) {
  std::cout << kgv::render_table({{format, s.total}});
  std::cout << "FI: " << kgv::format_percent(s.total.fi) << "  (hallucinations " << s.total.baseline_hallucinations
            << " -> " << s.total.corrected_hallucinations << ")\n";
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph caption verification"};
  app.require_subcommand(1);

  auto* kg = app.add_subcommand("kg", "inspect a knowledge graph");
  kg->require_subcommand(1);
  std::string kg_file;
  auto* kg_validate = kg->add_subcommand("validate", "check a knowledge graph file");
  kg_validate->add_option("file", kg_file, "knowledge graph JSON")->required();
  auto* kg_stats = kg->add_subcommand("stats", "structural statistics");
  kg_stats->add_option("file", kg_file, "knowledge graph JSON")->required();

  auto* split = app.add_subcommand("split", "assign seen/unseen/distractor splits");
  std::string split_corpus;
  std::string ratios_text = "0.6,0.2,0.2";
  std::uint64_t split_seed = 7;
  bool split_force = false;
  std::string split_out;
  split->add_option("corpus", split_corpus, "JSONL caption corpus")->required();
  split->add_option("--ratios", ratios_text, "seen,unseen,distractor fractions summing to 1");
  split->add_option("--seed", split_seed, "shuffle seed");
  split->add_flag("--force", split_force, "reassign records that already carry a split");
  split->add_option("--out", split_out, "output file (default stdout)");

  auto* run = app.add_subcommand("run", "run the pipeline over a corpus");
  std::string run_corpus;
  std::string run_out;
  std::string timings;
  RunOptions run_opts;
  run->add_option("corpus", run_corpus, "JSONL caption corpus")->required();
  run->add_option("--out", run_out, "run directory to (re)write")->required();
  run->add_option("--timings", timings, "write per-hop timings here");
  add_run_options(run, run_opts, true);

  auto* evaluate = app.add_subcommand("evaluate", "metrics for a run directory");
  std::string eval_dir;
  bool gold = false;
  evaluate->add_option("run-dir", eval_dir, "directory written by run")->required();
  evaluate->add_flag("--gold", gold, "compute entity accuracy from gold annotations");

  auto* compare = app.add_subcommand("compare-formats", "compare triple, hierarchical and bullet formats");
  std::string cmp_corpus;
  std::string cmp_out;
  bool cmp_gold = false;
  RunOptions cmp_opts;
  compare->add_option("corpus", cmp_corpus, "JSONL caption corpus")->required();
  compare->add_option("--out", cmp_out, "directory for per-format runs")->required();
  compare->add_flag("--gold", cmp_gold, "include entity accuracy");
  add_run_options(compare, cmp_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (kg_validate->parsed()) {
      auto g = kgv::load_graph_file(kg_file);
      std::cout << "ok: " << g.entity_count() << " entities, " << g.relation_count() << " relations\n";
    } else if (kg_stats->parsed()) {
      auto s = kgv::graph_stats(kgv::load_graph_file(kg_file));
      nlohmann::ordered_json j{{"node_count", s.node_count},
                               {"edge_count", s.edge_count},
                               {"avg_degree", s.avg_degree},
                               {"max_pairwise_path_length", s.max_pairwise_path_length},
                               {"avg_clustering", s.avg_clustering}};
      std::cout << j.dump(2) << "\n";
    } else if (split->parsed()) {
      auto records = kgv::split_dataset(kgv::load_corpus(split_corpus), parse_ratios(ratios_text), split_seed,
                                        split_force);
      auto text = kgv::dump_corpus(records);
      if (split_out.empty()) {
        std::cout << text;
      } else {
        kgv::write_file(split_out, text);
      }
    } else if (run->parsed()) {
      auto graph = kgv::load_graph_file(run_opts.kg_path);
      auto records = kgv::load_corpus(run_corpus);
      auto config = make_config(run_opts);
      auto clients = make_clients(run_opts, config);
      std::optional<std::filesystem::path> timings_path;
      if (!timings.empty()) timings_path = timings;
      auto result = kgv::run_to_directory(records, graph, config, clients->handles, run_out, timings_path);
      print_summary(result.summary, std::string(kgv::to_string(config.facts_format)));
      if (result.service_failures > 0) {
        std::cerr << "error: " << result.service_failures << " record(s) failed on a service call; see traces\n";
        return kExitService;
      }
    } else if (evaluate->parsed()) {
      auto summary = kgv::evaluate_corpus(kgv::load_run_outcomes(eval_dir), gold);
      std::cout << kgv::trace::summary_json(summary).dump(2) << "\n";
      std::string format = "-";
      try {
        auto manifest = nlohmann::json::parse(kgv::read_text_file((std::filesystem::path(eval_dir) / "manifest.json").string()));
        format = manifest.at("config").at("facts_format").get<std::string>();
      } catch (const std::exception&) {
      }
      print_summary(summary, format);
    } else if (compare->parsed()) {
      auto graph = kgv::load_graph_file(cmp_opts.kg_path);
      auto records = kgv::load_corpus(cmp_corpus);
      auto config = make_config(cmp_opts);
      auto clients = make_clients(cmp_opts, config);
      auto cmp = kgv::compare_formats(records, graph, config, clients->handles,
                                      {kgv::FactsFormat::triple, kgv::FactsFormat::hierarchical,
                                       kgv::FactsFormat::bullet},
                                      std::filesystem::path(cmp_out), cmp_gold);
      std::cout << kgv::render_table(cmp.rows);
      for (const auto& w : cmp.warnings) std::cerr << "warning: " << w << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const kgv::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const kgv::ServiceError& e) {
    std::cerr << "service error: " << e.what() << "\n";
    return kExitService;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
