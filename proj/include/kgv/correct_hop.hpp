#ifndef KGV_CORRECT_HOP_HPP
#define KGV_CORRECT_HOP_HPP

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kgv/error.hpp"
#include "kgv/graph.hpp"
#include "kgv/service.hpp"
#include "kgv/text.hpp"
#include "kgv/verify_hop.hpp"
#include "kgv/views.hpp"

namespace kgv {

enum class FactsFormat { triple, hierarchical, bullet };

inline std::string_view to_string(FactsFormat f) {
  switch (f) {
    case FactsFormat::triple: return "triple";
    case FactsFormat::hierarchical: return "hierarchical";
    case FactsFormat::bullet: return "bullet";
  }
  return "bullet";
}

inline std::optional<FactsFormat> parse_facts_format(std::string_view s) {
  if (s == "triple") return FactsFormat::triple;
  if (s == "hierarchical") return FactsFormat::hierarchical;
  if (s == "bullet") return FactsFormat::bullet;
  return std::nullopt;
}

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  FactsFormat facts_format = FactsFormat::bullet;
};

enum class CorrectionMethod { generated, templated };

inline std::string_view to_string(CorrectionMethod m) {
  return m == CorrectionMethod::generated ? "generated" : "templated";
}

struct Replacement {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string original;
  std::string replacement;

  bool operator==(const Replacement&) const = default;
};

struct CorrectionResult {
  std::string corrected_caption;
  CorrectionMethod method = CorrectionMethod::templated;
  std::vector<Replacement> replacements;
};

inline constexpr std::string_view kCorrectionSystemPrompt =
    "You correct image captions. Keep the caption's wording and style, but make every factual statement "
    "agree with the verified knowledge provided. Never introduce facts that are not listed.";

/// Facts block for one entity in the chosen format.
inline std::string render_entity_facts(const KnowledgeGraph& graph, const std::string& id, FactsFormat format) {
  std::string text;
  switch (format) {
    case FactsFormat::triple: text = render(to_triples(graph, id)); break;
    case FactsFormat::bullet: text = render(to_bullets(graph, id)); break;
    case FactsFormat::hierarchical: text = render(to_hierarchy(graph, id)); break;
  }
  if (text.empty()) text = "- " + graph.at(id).name + "\n";
  return text;
}

inline PromptBundle assemble_prompt(std::string_view caption, const VerificationReport& report, FactsFormat format,
                                    const KnowledgeGraph& graph) {
  const auto& p = report.partition;
  std::vector<std::string> verified_ids;
  std::set<std::string> seen;
  std::vector<std::string> hallucinated;
  for (std::size_t i = 0; i < p.matches.size(); ++i) {
    if (p.is_verified(i)) {
      const auto& id = *p.matches[i].entity_id;
      if (seen.insert(id).second) verified_ids.push_back(id);
    } else {
      hallucinated.push_back(p.matches[i].mention.text);
    }
  }

  std::string user = "Caption:\n" + std::string(caption) + "\n\nVerified facts:\n";
  for (const auto& id : verified_ids) user += render_entity_facts(graph, id, format);
  user += "\nUnsupported entities (remove them, or replace them with a verified entity):\n";
  for (const auto& h : hallucinated) user += "- " + h + "\n";
  user +=
      "\nInstructions:\nRewrite the caption so that it states only facts supported above. "
      "Return the corrected caption and nothing else.\n";
  return PromptBundle{std::string(kCorrectionSystemPrompt), std::move(user), format};
}

inline CorrectionResult generate_correction(GenerationClient& client, const PromptBundle& bundle) {
  std::string text = client.generate(bundle.system_text, bundle.user_text, std::nullopt);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw EmptyGeneration();
  auto last = text.find_last_not_of(" \t\r\n");
  return CorrectionResult{text.substr(first, last - first + 1), CorrectionMethod::generated, {}};
}

inline constexpr double kReplaceFloor = 0.5;

namespace detail {

inline bool is_article(std::string_view lower) { return lower == "the" || lower == "a" || lower == "an"; }

inline bool is_connective(std::string_view lower) {
  static const std::set<std::string, std::less<>> words{"and",  "or",   "in", "at", "of", "near", "from",
                                                        "with", "by",   "on", "is", "was", "as",  "to"};
  return words.count(lower) != 0;
}

inline bool at_sentence_start(std::string_view text, std::size_t pos) {
  while (pos > 0 && is_space(text[pos - 1])) --pos;
  if (pos == 0) return true;
  char c = text[pos - 1];
  return c == '.' || c == '!' || c == '?';
}

struct Edit {
  std::size_t start;
  std::size_t end;
  std::string replacement;
  bool deletion;
  bool capitalize_after = false;
};

/// Extends a deletion over a preceding article and any connective left
/// dangling before punctuation, end of text or another connective.
inline Edit widen_deletion(std::string_view text, std::size_t start, std::size_t end) {
  if (auto w = word_before(text, start, 0); w && is_article(w->lower)) start = w->begin;
  auto dangling_after = [&](std::size_t pos) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos == text.size() || is_punct(text[pos])) return true;
    auto next = word_after(text, pos, text.size());
    return next && is_connective(next->lower);
  };
  while (true) {
    auto w = word_before(text, start, 0);
    if (!w || !is_connective(w->lower) || !dangling_after(end)) break;
    start = w->begin;
  }
  Edit e{start, end, "", true};
  if (at_sentence_start(text, start)) {
    auto next = word_after(text, end, text.size());
    if (next && is_connective(next->lower)) e.end = next->end;
    e.capitalize_after = true;
  }
  return e;
}

inline std::string tidy(std::string s) {
  auto replace_all = [&](std::string_view from, std::string_view to) {
    bool changed = false;
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos)) {
      s.replace(pos, from.size(), to);
      changed = true;
    }
    return changed;
  };
  std::string collapsed;
  for (char c : s) {
    if (is_space(c) && (collapsed.empty() || collapsed.back() == ' ')) continue;
    collapsed += is_space(c) ? ' ' : c;
  }
  s = std::move(collapsed);
  bool again = true;
  while (again) {
    again = false;
    for (std::string_view p : {" ,", " .", " ;", " :", " !", " ?"}) again |= replace_all(p, p.substr(1));
    again |= replace_all(",,", ",");
    again |= replace_all(",.", ".");
  }
  while (!s.empty() && (s.front() == ' ' || s.front() == ',')) s.erase(0, 1);
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace detail

/// Deterministic correction from the verification report:
///  (1) unsupported mentions whose best entity scored at least 0.5 are
///      renamed to that entity's display name;
///  (2) the remaining unsupported mentions are deleted together with a
///      preceding article and any connective left dangling;
///  (3) the object of a refuted location claim is replaced by the object the
///      graph records for the subject.
inline CorrectionResult template_correct(std::string_view caption, const VerificationReport& report,
                                         const KnowledgeGraph& graph) {
  const auto& p = report.partition;
  std::vector<detail::Edit> edits;
  for (std::size_t i = 0; i < p.matches.size(); ++i) {
    if (p.is_verified(i)) continue;
    const auto& m = p.matches[i];
    auto span = m.mention.span;
    if (m.entity_id && m.score >= kReplaceFloor) {
      auto words = scan_words(m.mention.text);
      if (words.size() > 1 && detail::is_article(words.front().lower)) span.start += words[1].begin;
      edits.push_back({span.start, span.end, graph.at(*m.entity_id).name, false});
    } else {
      edits.push_back(detail::widen_deletion(caption, span.start, span.end));
    }
  }
  for (std::size_t c = 0; c < report.claims.size(); ++c) {
    const auto& claim = report.claims[c];
    const auto& verdict = report.verdicts[c];
    if (claim.kind != ClaimKind::location || verdict.status != VerdictStatus::refuted || !claim.object) continue;
    if (verdict.evidence.empty() || !std::holds_alternative<Path>(verdict.evidence.front())) continue;
    const auto& path = std::get<Path>(verdict.evidence.front());
    if (path.empty()) continue;
    const auto& span = claim.object->mention.span;
    edits.push_back({span.start, span.end, graph.at(path.front().object).name, false});
  }

  std::stable_sort(edits.begin(), edits.end(),
                   [](const detail::Edit& a, const detail::Edit& b) { return a.start < b.start; });
  std::vector<detail::Edit> merged;
  for (auto& e : edits) {
    if (!merged.empty() && e.start < merged.back().end) {
      auto& prev = merged.back();
      if (prev.deletion && e.deletion) {
        prev.end = std::max(prev.end, e.end);
        prev.capitalize_after = prev.capitalize_after || e.capitalize_after;
      }
      continue;
    }
    merged.push_back(std::move(e));
  }

  CorrectionResult result;
  result.method = CorrectionMethod::templated;
  if (merged.empty()) {
    result.corrected_caption = std::string(caption);
    return result;
  }

  constexpr char kMarker = '\x01';
  std::string out;
  std::size_t cursor = 0;
  bool deleted = false;
  for (const auto& e : merged) {
    out.append(caption.substr(cursor, e.start - cursor));
    if (e.capitalize_after) out += kMarker;
    out += e.replacement;
    deleted = deleted || e.deletion;
    result.replacements.push_back(
        {e.start, e.end, std::string(caption.substr(e.start, e.end - e.start)), e.replacement});
    cursor = e.end;
  }
  out.append(caption.substr(cursor));
  if (deleted) out = detail::tidy(std::move(out));

  for (auto pos = out.find(kMarker); pos != std::string::npos; pos = out.find(kMarker)) {
    out.erase(pos, 1);
    auto next = pos;
    while (next < out.size() && is_space(out[next])) ++next;
    if (next < out.size()) out[next] = to_upper(out[next]);
    out.erase(pos, next - pos);
  }
  result.corrected_caption = std::move(out);
  return result;
}

}  // namespace kgv

#endif  // KGV_CORRECT_HOP_HPP
