#ifndef KGV_VERIFY_HOP_HPP
#define KGV_VERIFY_HOP_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgv/entity_hop.hpp"
#include "kgv/graph.hpp"
#include "kgv/match_hop.hpp"
#include "kgv/text.hpp"
#include "kgv/views.hpp"

namespace kgv {

enum class ClaimKind { entity, location, attribute, relationship };

inline std::string_view to_string(ClaimKind k) {
  switch (k) {
    case ClaimKind::entity: return "entity";
    case ClaimKind::location: return "location";
    case ClaimKind::attribute: return "attribute";
    case ClaimKind::relationship: return "relationship";
  }
  return "entity";
}

/// A factual assertion read off the caption. Subject and entity objects are
/// indices into the caption's mention list, with copies of their matches.
struct Claim {
  ClaimKind kind = ClaimKind::entity;
  EntityMatch subject;
  std::size_t subject_index = 0;
  std::optional<EntityMatch> object;
  std::optional<std::size_t> object_index;
  std::optional<std::string> value;
  std::optional<std::string> predicate;
  Span source_span;
};

enum class VerdictStatus { confirmed, refuted, unverifiable };
enum class VerificationFormat { triple, hierarchical, bullet, entity_match };

inline std::string_view to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::confirmed: return "confirmed";
    case VerdictStatus::refuted: return "refuted";
    case VerdictStatus::unverifiable: return "unverifiable";
  }
  return "unverifiable";
}

inline std::string_view to_string(VerificationFormat f) {
  switch (f) {
    case VerificationFormat::triple: return "triple";
    case VerificationFormat::hierarchical: return "hierarchical";
    case VerificationFormat::bullet: return "bullet";
    case VerificationFormat::entity_match: return "entity_match";
  }
  return "triple";
}

using Evidence = std::variant<Path, BulletFact, EntityMatch>;

struct Verdict {
  VerdictStatus status = VerdictStatus::unverifiable;
  double confidence = 0.0;
  std::vector<Evidence> evidence;
  VerificationFormat format_used = VerificationFormat::triple;
};

/// Claim totals. ntc is always the sum of the four kinds.
struct ClaimCounts {
  std::size_t nec = 0;
  std::size_t nlc = 0;
  std::size_t nac = 0;
  std::size_t nrc = 0;
  std::size_t ncv = 0;
  std::size_t ntc = 0;

  ClaimCounts& operator+=(const ClaimCounts& o) {
    nec += o.nec;
    nlc += o.nlc;
    nac += o.nac;
    nrc += o.nrc;
    ncv += o.ncv;
    ntc += o.ntc;
    return *this;
  }
  bool operator==(const ClaimCounts&) const = default;
};

/// Counts claims by kind (NEC, NLC, NAC, NRC) and their total NTC.
inline ClaimCounts count_claims(const std::vector<Claim>& claims) {
  ClaimCounts c;
  for (const auto& claim : claims) {
    switch (claim.kind) {
      case ClaimKind::entity: ++c.nec; break;
      case ClaimKind::location: ++c.nlc; break;
      case ClaimKind::attribute: ++c.nac; break;
      case ClaimKind::relationship: ++c.nrc; break;
    }
  }
  c.ntc = c.nec + c.nlc + c.nac + c.nrc;
  return c;
}

struct VerificationReport {
  std::vector<Claim> claims;
  std::vector<Verdict> verdicts;  // parallel to claims
  MatchPartition partition;
  ClaimCounts counts;
};

enum class Strategy { triples_only, hierarchical_only, bullets_only, cross_validated };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::triples_only: return "triples_only";
    case Strategy::hierarchical_only: return "hierarchical_only";
    case Strategy::bullets_only: return "bullets_only";
    case Strategy::cross_validated: return "cross_validated";
  }
  return "cross_validated";
}

inline constexpr std::size_t kMaxVerificationHops = 3;
inline constexpr double kHopConfidenceDecay = 0.95;

inline double hop_confidence(std::size_t hops) {
  return hops <= 1 ? 1.0 : std::pow(kHopConfidenceDecay, static_cast<double>(hops - 1));
}

/// Keyword -> predicate table for relationship claims.
using KeywordTable = std::map<std::string, std::string>;

inline const KeywordTable& default_keyword_table() {
  static const KeywordTable table{{"capital", "capital_of"}};
  return table;
}

// ---------------------------------------------------------------------------
// Claim extraction

namespace detail {

struct Sentence {
  std::size_t begin;
  std::size_t end;
};

/// Sentences end at . ! ? followed by whitespace or end of text, except
/// inside a mention.
inline std::vector<Sentence> split_sentences(std::string_view text, const std::vector<EntityMatch>& matches) {
  auto inside_mention = [&](std::size_t pos) {
    for (const auto& m : matches) {
      if (pos >= m.mention.span.start && pos < m.mention.span.end) return true;
    }
    return false;
  };
  std::vector<Sentence> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || is_space(text[i + 1])) &&
        !inside_mention(i)) {
      out.push_back({begin, i + 1});
      begin = i + 1;
    }
  }
  if (begin < text.size()) out.push_back({begin, text.size()});
  return out;
}

inline std::size_t sentence_of(const std::vector<Sentence>& sentences, std::size_t pos) {
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (pos >= sentences[i].begin && pos < sentences[i].end) return i;
  }
  return sentences.empty() ? 0 : sentences.size() - 1;
}

/// The alphabetic word ending just before `pos` (whitespace skipped), if it
/// is preceded by whitespace or the start of `floor`.
inline std::optional<Word> word_before(std::string_view text, std::size_t pos, std::size_t floor) {
  std::size_t end = pos;
  while (end > floor && is_space(text[end - 1])) --end;
  if (end == pos && pos > floor) return std::nullopt;  // no separating whitespace
  std::size_t begin = end;
  while (begin > floor && is_alpha(text[begin - 1])) --begin;
  if (begin == end) return std::nullopt;
  if (begin > floor && !is_space(text[begin - 1])) return std::nullopt;
  return Word{begin, end, to_lower(text.substr(begin, end - begin))};
}

/// The alphabetic word starting just after `pos` (whitespace skipped).
inline std::optional<Word> word_after(std::string_view text, std::size_t pos, std::size_t ceiling) {
  std::size_t begin = pos;
  while (begin < ceiling && is_space(text[begin])) ++begin;
  std::size_t end = begin;
  while (end < ceiling && is_alpha(text[end])) ++end;
  if (begin == end) return std::nullopt;
  return Word{begin, end, to_lower(text.substr(begin, end - begin))};
}

inline bool place_like(Category c) {
  return c == Category::GPE || c == Category::LOC || c == Category::FAC;
}

/// Normalized display names of objects of structural/attribute relations.
inline std::set<std::string> attribute_values(const KnowledgeGraph& graph) {
  std::set<std::string> values;
  for (const auto& r : graph.relations()) {
    if (r.kind == RelationKind::structural || r.kind == RelationKind::attribute) {
      values.insert(normalize_mention(graph.at(r.object).name));
    }
  }
  return values;
}

}  // namespace detail

/// Rule-based claim extraction:
///  (a) one entity claim per mention;
///  (b) location claims for "X ... in Y" / "X ... located in Y" (X the nearest
///      preceding place-like mention) and for comma-adjacent "Y, Z";
///  (c) attribute claims for "M is a/an <value>" and "M, a <value>," where
///      <value> names an object of a structural or attribute relation;
///  (d) relationship claims for a table keyword between two verified
///      mentions of one sentence, using the nearest mention on each side.
inline std::vector<Claim> extract_claims(std::string_view caption, const MatchPartition& partition,
                                         const KnowledgeGraph& graph,
                                         const KeywordTable& keywords = default_keyword_table()) {
  const auto& matches = partition.matches;
  std::vector<Claim> claims;
  if (matches.empty()) return claims;
  const auto sentences = detail::split_sentences(caption, matches);
  std::vector<std::size_t> sentence_idx;
  for (const auto& m : matches) sentence_idx.push_back(detail::sentence_of(sentences, m.mention.span.start));

  // (a)
  for (std::size_t i = 0; i < matches.size(); ++i) {
    Claim c;
    c.kind = ClaimKind::entity;
    c.subject = matches[i];
    c.subject_index = i;
    c.source_span = matches[i].mention.span;
    claims.push_back(std::move(c));
  }

  // (b)
  std::set<std::pair<std::size_t, std::size_t>> located;
  auto add_location = [&](std::size_t x, std::size_t y) {
    if (!located.insert({x, y}).second) return;
    Claim c;
    c.kind = ClaimKind::location;
    c.subject = matches[x];
    c.subject_index = x;
    c.object = matches[y];
    c.object_index = y;
    c.predicate = "located_in";
    c.source_span = {matches[x].mention.span.start, matches[y].mention.span.end};
    claims.push_back(std::move(c));
  };
  for (std::size_t y = 0; y < matches.size(); ++y) {
    const auto& my = matches[y].mention;
    if (!detail::place_like(my.category)) continue;
    const auto floor = sentences[sentence_idx[y]].begin;
    auto w = detail::word_before(caption, my.span.start, floor);
    if (w && w->lower == "the") w = detail::word_before(caption, w->begin, floor);
    if (!w || w->lower != "in") continue;
    for (std::size_t x = y; x-- > 0;) {
      if (sentence_idx[x] != sentence_idx[y]) break;
      if (matches[x].mention.span.end > w->begin) continue;
      if (!detail::place_like(matches[x].mention.category)) continue;
      add_location(x, y);
      break;
    }
  }
  for (std::size_t y = 0; y + 1 < matches.size(); ++y) {
    const auto z = y + 1;
    if (sentence_idx[y] != sentence_idx[z]) continue;
    if (!detail::place_like(matches[y].mention.category) || !detail::place_like(matches[z].mention.category)) {
      continue;
    }
    auto between = caption.substr(matches[y].mention.span.end,
                                  matches[z].mention.span.start - matches[y].mention.span.end);
    auto trimmed = std::string(between);
    std::erase_if(trimmed, [](char c) { return is_space(c); });
    if (trimmed == ",") add_location(y, z);
  }

  // (c)
  const auto values = detail::attribute_values(graph);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto& m = matches[i].mention;
    const auto ceiling = sentences[sentence_idx[i]].end;
    std::optional<std::string> value;
    std::size_t value_end = 0;

    auto is_word = detail::word_after(caption, m.span.end, ceiling);
    bool gap_is_space = is_word && caption.substr(m.span.end, is_word->begin - m.span.end)
                                           .find_first_not_of(" \t\r\n") == std::string_view::npos;
    if (gap_is_space && is_word->lower == "is") {
      auto article = detail::word_after(caption, is_word->end, ceiling);
      if (article && (article->lower == "a" || article->lower == "an")) {
        std::size_t stop = article->end;
        while (stop < ceiling && !(is_punct(caption[stop]) && caption[stop] != '-' && caption[stop] != '\'')) ++stop;
        auto region = caption.substr(article->end, stop - article->end);
        auto words = scan_words(region);
        for (std::size_t n = words.size(); n > 0 && !value; --n) {
          auto candidate = region.substr(0, words[n - 1].end);
          if (values.count(normalize_mention(candidate)) != 0) {
            value = normalize_mention(candidate);
            value_end = article->end + words[n - 1].end;
          }
        }
      }
    } else {
      std::size_t p = m.span.end;
      while (p < ceiling && is_space(caption[p])) ++p;
      if (p < ceiling && caption[p] == ',') {
        auto article = detail::word_after(caption, p + 1, ceiling);
        if (article && (article->lower == "a" || article->lower == "an")) {
          auto close = caption.find(',', article->end);
          if (close != std::string_view::npos && close < ceiling) {
            auto candidate = normalize_mention(caption.substr(article->end, close - article->end));
            if (values.count(candidate) != 0) {
              value = candidate;
              value_end = close;
            }
          }
        }
      }
    }
    if (value) {
      Claim c;
      c.kind = ClaimKind::attribute;
      c.subject = matches[i];
      c.subject_index = i;
      c.value = *value;
      c.source_span = {m.span.start, value_end};
      claims.push_back(std::move(c));
    }
  }

  // (d)
  std::set<std::tuple<std::size_t, std::size_t, std::string>> related;
  const auto words = scan_words(caption);
  for (const auto& w : words) {
    auto kw = keywords.find(w.lower);
    if (kw == keywords.end()) continue;
    const auto s = detail::sentence_of(sentences, w.begin);
    std::optional<std::size_t> before;
    std::optional<std::size_t> after;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      if (sentence_idx[i] != s || !partition.is_verified(i)) continue;
      if (matches[i].mention.span.end <= w.begin) before = i;
      if (!after && matches[i].mention.span.start >= w.end) after = i;
    }
    if (!before || !after) continue;
    if (!related.insert({*before, *after, kw->second}).second) continue;
    Claim c;
    c.kind = ClaimKind::relationship;
    c.subject = matches[*before];
    c.subject_index = *before;
    c.object = matches[*after];
    c.object_index = *after;
    c.predicate = kw->second;
    c.source_span = {matches[*before].mention.span.start, matches[*after].mention.span.end};
    claims.push_back(std::move(c));
  }
  return claims;
}

// ---------------------------------------------------------------------------
// Verification

namespace detail {

inline const std::string& subject_id(const Claim& claim) {
  if (!claim.subject.entity_id) throw std::invalid_argument("claim subject is not resolved to an entity");
  return *claim.subject.entity_id;
}

inline const std::string& object_id(const Claim& claim) {
  if (!claim.object || !claim.object->entity_id) {
    throw std::invalid_argument("claim object is not resolved to an entity");
  }
  return *claim.object->entity_id;
}

inline Verdict unverifiable(VerificationFormat f) { return Verdict{VerdictStatus::unverifiable, 0.0, {}, f}; }

}  // namespace detail

/// Triple check. Containment predicates are confirmed transitively through a
/// containment path of at most three hops. A functional predicate with a
/// different recorded object refutes. Attribute claims are confirmed by any
/// relation from the subject to the entity named by the value.
inline Verdict verify_triple(const KnowledgeGraph& graph, const Claim& claim) {
  const auto& s = detail::subject_id(claim);
  graph.at(s);

  if (claim.kind == ClaimKind::attribute) {
    if (!claim.value) throw std::invalid_argument("attribute claim without a value");
    Verdict v = detail::unverifiable(VerificationFormat::triple);
    for (const auto& o : graph.resolve_surface(normalize_mention(*claim.value))) {
      for (const auto* r : graph.outgoing(s)) {
        if (r->object == o) v.evidence.emplace_back(Path{*r});
      }
    }
    if (!v.evidence.empty()) {
      v.status = VerdictStatus::confirmed;
      v.confidence = 1.0;
    }
    return v;
  }

  if (claim.kind == ClaimKind::entity) throw std::invalid_argument("entity claims are judged by match, not triples");
  const auto& o = detail::object_id(claim);
  graph.at(o);
  const std::string predicate = claim.predicate.value_or("located_in");

  if (s != o) {
    if (graph.has_relation(s, predicate, o)) {
      for (const auto* r : graph.outgoing(s)) {
        if (r->predicate == predicate && r->object == o) {
          return Verdict{VerdictStatus::confirmed, 1.0, {Path{*r}}, VerificationFormat::triple};
        }
      }
    }
    if (graph.is_containment(predicate)) {
      const auto& cp = graph.containment_predicates();
      auto paths = find_paths(graph, s, o, kMaxVerificationHops, std::set<std::string>(cp.begin(), cp.end()));
      if (!paths.empty()) {
        double conf = hop_confidence(paths.front().size());
        return Verdict{VerdictStatus::confirmed, conf, {paths.front()}, VerificationFormat::triple};
      }
    }
  }
  if (graph.is_functional(predicate)) {
    for (const auto* r : graph.outgoing(s)) {
      if (r->predicate == predicate && r->object != o) {
        return Verdict{VerdictStatus::refuted, 1.0, {Path{*r}}, VerificationFormat::triple};
      }
    }
  }
  return detail::unverifiable(VerificationFormat::triple);
}

/// Ancestor check on the containment tree rooted at the subject, three
/// levels deep. Confidence decays by 0.95 per hop beyond the first.
inline Verdict verify_hierarchical(const KnowledgeGraph& graph, const Claim& claim) {
  if (claim.kind != ClaimKind::location) throw std::invalid_argument("hierarchical check needs a location claim");
  const auto& s = detail::subject_id(claim);
  const auto& o = detail::object_id(claim);
  graph.at(o);
  const auto tree = to_hierarchy(graph, s, graph.containment_predicates(), kMaxVerificationHops);

  // Breadth-first so the shallowest occurrence wins.
  struct Item {
    const HierNode* node;
    Path path;
  };
  std::vector<Item> frontier{{&tree, {}}};
  while (!frontier.empty()) {
    std::vector<Item> next;
    for (const auto& item : frontier) {
      for (const auto& edge : item.node->children) {
        if (!edge.containment || edge.child.reference) continue;
        Path p = item.path;
        const auto kind = graph.predicate_kind(edge.predicate).value_or(RelationKind::spatial);
        p.push_back({item.node->entity_id, edge.predicate, edge.child.entity_id, kind});
        if (edge.child.entity_id == o) {
          return Verdict{VerdictStatus::confirmed, hop_confidence(p.size()), {p}, VerificationFormat::hierarchical};
        }
        next.push_back({&edge.child, std::move(p)});
      }
    }
    frontier = std::move(next);
  }
  return detail::unverifiable(VerificationFormat::hierarchical);
}

/// Attribute check against the subject's bullet facts.
inline Verdict verify_bullet(const KnowledgeGraph& graph, const Claim& claim) {
  if (claim.kind != ClaimKind::attribute || !claim.value) {
    throw std::invalid_argument("bullet check needs an attribute claim");
  }
  const auto wanted = normalize_mention(*claim.value);
  Verdict v = detail::unverifiable(VerificationFormat::bullet);
  for (auto& fact : to_bullets(graph, detail::subject_id(claim))) {
    if (normalize_mention(fact.value) == wanted) v.evidence.emplace_back(std::move(fact));
  }
  if (!v.evidence.empty()) {
    v.status = VerdictStatus::confirmed;
    v.confidence = 1.0;
  }
  return v;
}

namespace detail {

inline bool resolved(const MatchPartition& p, std::size_t index) {
  return index < p.matches.size() && p.is_verified(index) && p.matches[index].entity_id.has_value();
}

inline Verdict judge_entity(const MatchPartition& p, const Claim& claim) {
  Verdict v;
  v.format_used = VerificationFormat::entity_match;
  v.confidence = claim.subject.score;
  if (resolved(p, claim.subject_index)) {
    v.status = VerdictStatus::confirmed;
    v.evidence.emplace_back(claim.subject);
  }
  return v;
}

}  // namespace detail

/// Verifies one non-entity claim under a strategy. Cross-validation consults
/// triples, then the hierarchy (location claims), then bullets (attribute
/// claims) and keeps the first verdict that is not unverifiable.
inline Verdict verify_claim(const KnowledgeGraph& graph, const Claim& claim, Strategy strategy) {
  switch (strategy) {
    case Strategy::triples_only:
      return verify_triple(graph, claim);
    case Strategy::hierarchical_only:
      return claim.kind == ClaimKind::location ? verify_hierarchical(graph, claim)
                                               : detail::unverifiable(VerificationFormat::hierarchical);
    case Strategy::bullets_only:
      return claim.kind == ClaimKind::attribute ? verify_bullet(graph, claim)
                                                : detail::unverifiable(VerificationFormat::bullet);
    case Strategy::cross_validated: {
      Verdict v = verify_triple(graph, claim);
      if (v.status != VerdictStatus::unverifiable) return v;
      if (claim.kind == ClaimKind::location) {
        v = verify_hierarchical(graph, claim);
        if (v.status != VerdictStatus::unverifiable) return v;
      }
      if (claim.kind == ClaimKind::attribute) v = verify_bullet(graph, claim);
      return v;
    }
  }
  return detail::unverifiable(VerificationFormat::triple);
}

inline VerificationFormat first_format(Strategy s) {
  switch (s) {
    case Strategy::hierarchical_only: return VerificationFormat::hierarchical;
    case Strategy::bullets_only: return VerificationFormat::bullet;
    default: return VerificationFormat::triple;
  }
}

/// Fact Verification hop. Entity claims are confirmed iff their mention is
/// in V; claims touching a mention outside V are unverifiable.
inline VerificationReport verify_claims(const KnowledgeGraph& graph, std::vector<Claim> claims,
                                        const MatchPartition& partition, Strategy strategy) {
  VerificationReport report;
  report.partition = partition;
  for (const auto& claim : claims) {
    if (claim.kind == ClaimKind::entity) {
      report.verdicts.push_back(detail::judge_entity(partition, claim));
      continue;
    }
    bool subject_ok = detail::resolved(partition, claim.subject_index);
    bool object_ok = !claim.object_index || detail::resolved(partition, *claim.object_index);
    if (!subject_ok || !object_ok) {
      report.verdicts.push_back(detail::unverifiable(first_format(strategy)));
      continue;
    }
    report.verdicts.push_back(verify_claim(graph, claim, strategy));
  }
  report.counts = count_claims(claims);
  report.counts.ncv = static_cast<std::size_t>(
      std::count_if(report.verdicts.begin(), report.verdicts.end(),
                    [](const Verdict& v) { return v.status == VerdictStatus::confirmed; }));
  report.claims = std::move(claims);
  return report;
}

}  // namespace kgv

#endif  // KGV_VERIFY_HOP_HPP
