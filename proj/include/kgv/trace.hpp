#ifndef KGV_TRACE_HPP
#define KGV_TRACE_HPP

// JSON shapes for hop outputs. Mentions are referred to as "m<i>" and claims
// as "c<i>" so that later hops point back at earlier ones.

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kgv/correct_hop.hpp"
#include "kgv/entity_hop.hpp"
#include "kgv/error.hpp"
#include "kgv/match_hop.hpp"
#include "kgv/metrics.hpp"
#include "kgv/verify_hop.hpp"

namespace kgv::trace {

using json = nlohmann::ordered_json;

inline std::string mention_ref(std::size_t i) { return "m" + std::to_string(i); }
inline std::string claim_ref(std::size_t i) { return "c" + std::to_string(i); }

inline json span_json(const Span& s) { return json::array({s.start, s.end}); }

inline json relation_json(const Relation& r) { return json::array({r.subject, r.predicate, r.object}); }

inline json mentions_json(const std::vector<EntityMention>& mentions) {
  json out = json::array();
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const auto& m = mentions[i];
    out.push_back(json{{"id", mention_ref(i)},
                       {"text", m.text},
                       {"normalized", m.normalized},
                       {"category", to_string(m.category)},
                       {"span", span_json(m.span)}});
  }
  return out;
}

inline json partition_json(const MatchPartition& p) {
  json matches = json::array();
  json verified = json::array();
  json hallucinated = json::array();
  for (std::size_t i = 0; i < p.matches.size(); ++i) {
    const auto& m = p.matches[i];
    matches.push_back(json{{"mention", mention_ref(i)},
                           {"entity", m.entity_id ? json(*m.entity_id) : json(nullptr)},
                           {"score", m.score},
                           {"method", to_string(m.method)},
                           {"verified", p.is_verified(i)}});
    (p.is_verified(i) ? verified : hallucinated).push_back(mention_ref(i));
  }
  return json{{"matches", matches}, {"verified", verified}, {"hallucinated", hallucinated}};
}

inline json evidence_json(const Evidence& e) {
  if (const auto* path = std::get_if<Path>(&e)) {
    json rels = json::array();
    for (const auto& r : *path) rels.push_back(relation_json(r));
    return json{{"type", "path"}, {"relations", rels}};
  }
  if (const auto* fact = std::get_if<BulletFact>(&e)) {
    return json{{"type", "bullet"},
                {"entity", fact->entity_id},
                {"attribute", fact->attribute},
                {"value", fact->value_id}};
  }
  const auto& m = std::get<EntityMatch>(e);
  return json{{"type", "match"},
              {"entity", m.entity_id ? json(*m.entity_id) : json(nullptr)},
              {"score", m.score}};
}

inline json counts_json(const ClaimCounts& c) {
  return json{{"NEC", c.nec}, {"NLC", c.nlc}, {"NAC", c.nac}, {"NRC", c.nrc}, {"NCV", c.ncv}, {"NTC", c.ntc}};
}

inline ClaimCounts counts_from_json(const nlohmann::json& j) {
  ClaimCounts c;
  c.nec = j.at("NEC").get<std::size_t>();
  c.nlc = j.at("NLC").get<std::size_t>();
  c.nac = j.at("NAC").get<std::size_t>();
  c.nrc = j.at("NRC").get<std::size_t>();
  c.ncv = j.at("NCV").get<std::size_t>();
  c.ntc = j.at("NTC").get<std::size_t>();
  return c;
}

inline json report_json(const VerificationReport& report) {
  json claims = json::array();
  for (std::size_t i = 0; i < report.claims.size(); ++i) {
    const auto& c = report.claims[i];
    const auto& v = report.verdicts[i];
    json evidence = json::array();
    for (const auto& e : v.evidence) evidence.push_back(evidence_json(e));
    claims.push_back(json{
        {"id", claim_ref(i)},
        {"kind", to_string(c.kind)},
        {"subject", mention_ref(c.subject_index)},
        {"predicate", c.predicate ? json(*c.predicate) : json(nullptr)},
        {"object", c.object_index ? json(mention_ref(*c.object_index)) : json(nullptr)},
        {"value", c.value ? json(*c.value) : json(nullptr)},
        {"span", span_json(c.source_span)},
        {"verdict",
         json{{"status", to_string(v.status)},
              {"confidence", v.confidence},
              {"format", to_string(v.format_used)},
              {"evidence", evidence}}},
    });
  }
  return json{{"claims", claims}, {"counts", counts_json(report.counts)}};
}

inline json flags_json(const HallucinationFlags& flags) {
  json out = json::array();
  for (const auto& f : flags.flags) {
    json criteria = json::array();
    for (auto c : f.criteria) criteria.push_back(to_string(c));
    out.push_back(json{{"mention", mention_ref(f.mention_index)},
                       {"text", f.text},
                       {"score", f.score},
                       {"criteria", criteria}});
  }
  return out;
}

inline json prompt_json(const PromptBundle& b) {
  return json{{"format", to_string(b.facts_format)}, {"system", b.system_text}, {"user", b.user_text}};
}

inline json correction_json(const CorrectionResult& r) {
  json reps = json::array();
  for (const auto& x : r.replacements) {
    reps.push_back(json{{"span", json::array({x.start, x.end})},
                        {"original", x.original},
                        {"replacement", x.replacement}});
  }
  return json{{"method", to_string(r.method)}, {"corrected_caption", r.corrected_caption}, {"replacements", reps}};
}

inline json gold_json(const std::vector<EntityGold>& gold) {
  json out = json::array();
  for (const auto& g : gold) {
    out.push_back(json{{"text", g.text}, {"label", g.label == GoldLabel::real ? "real" : "hallucinated"}});
  }
  return out;
}

inline json outcome_json(const RecordOutcome& r) {
  json mentions = json::array();
  for (const auto& m : r.mentions) {
    mentions.push_back(json{{"normalized", m.normalized}, {"verified", m.verified}, {"flagged", m.flagged}});
  }
  return json{
      {"id", r.id},
      {"split", r.split ? json(to_string(*r.split)) : json(nullptr)},
      {"failed", r.failed},
      {"counts", counts_json(r.counts)},
      {"mentions", mentions},
      {"baseline_hallucinations", r.baseline_hallucinations},
      {"corrected_hallucinations", r.corrected_hallucinations},
      {"gold", r.gold ? gold_json(*r.gold) : json(nullptr)},
      {"coherence", r.coherence ? json(*r.coherence) : json(nullptr)},
  };
}

inline RecordOutcome outcome_from_json(const nlohmann::json& j, const std::string& source) {
  try {
    RecordOutcome r;
    r.id = j.at("id").get<std::string>();
    if (!j.at("split").is_null()) {
      auto s = parse_split(j.at("split").get<std::string>());
      if (!s) throw SchemaError(source, 0, "unknown split in assessment");
      r.split = *s;
    }
    r.failed = j.at("failed").get<bool>();
    r.counts = counts_from_json(j.at("counts"));
    for (const auto& m : j.at("mentions")) {
      r.mentions.push_back({m.at("normalized").get<std::string>(), m.at("verified").get<bool>(),
                            m.at("flagged").get<bool>()});
    }
    r.baseline_hallucinations = j.at("baseline_hallucinations").get<std::size_t>();
    r.corrected_hallucinations = j.at("corrected_hallucinations").get<std::size_t>();
    if (!j.at("gold").is_null()) {
      std::vector<EntityGold> gold;
      for (const auto& g : j.at("gold")) {
        gold.push_back({g.at("text").get<std::string>(),
                        g.at("label").get<std::string>() == "real" ? GoldLabel::real : GoldLabel::hallucinated});
      }
      r.gold = std::move(gold);
    }
    if (!j.at("coherence").is_null()) r.coherence = j.at("coherence").get<int>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(source, 0, std::string("malformed assessment: ") + e.what());
  }
}

inline json block_json(const MetricsBlock& b) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{
      {"records", b.records},
      {"failed_records", b.failed_records},
      {"NME", b.nme},
      {"NHC", b.nhc},
      {"NTE", b.nte},
      {"NEC", b.counts.nec},
      {"NLC", b.counts.nlc},
      {"NAC", b.counts.nac},
      {"NRC", b.counts.nrc},
      {"NCV", b.counts.ncv},
      {"NTC", b.counts.ntc},
      {"EA", opt(b.ea)},
      {"FVR", opt(b.fvr)},
      {"FI", opt(b.fi)},
      {"baseline_hallucinations", b.baseline_hallucinations},
      {"corrected_hallucinations", b.corrected_hallucinations},
      {"coherence_annotations", b.coherence_annotations},
  };
}

inline json summary_json(const MetricsSummary& s) {
  json splits = json::object();
  for (const auto& [name, block] : s.per_split) splits[name] = block_json(block);
  json out = block_json(s.total);
  out["per_split"] = splits;
  out["warnings"] = s.warnings;
  return out;
}

}  // namespace kgv::trace

#endif  // KGV_TRACE_HPP
