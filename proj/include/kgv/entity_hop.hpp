#ifndef KGV_ENTITY_HOP_HPP
#define KGV_ENTITY_HOP_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgv/error.hpp"
#include "kgv/graph.hpp"
#include "kgv/service.hpp"
#include "kgv/text.hpp"

namespace kgv {

/// Caption span [start, end) in bytes.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }
  auto operator<=>(const Span&) const = default;
};

struct EntityMention {
  std::string text;
  std::string normalized;
  Category category = Category::OTHER;
  Span span;

  bool operator==(const EntityMention&) const = default;
};

enum class ExtractorMode { gazetteer, external_service, merged };

inline std::string_view to_string(ExtractorMode m) {
  switch (m) {
    case ExtractorMode::gazetteer: return "gazetteer";
    case ExtractorMode::external_service: return "external_service";
    case ExtractorMode::merged: return "merged";
  }
  return "gazetteer";
}

inline const std::set<Category>& default_mention_categories() {
  static const std::set<Category> cats{Category::FAC, Category::GPE, Category::ORG, Category::LOC};
  return cats;
}

struct ExtractorConfig {
  ExtractorMode mode = ExtractorMode::gazetteer;
  std::optional<std::string> service_endpoint;
  std::set<Category> categories = default_mention_categories();
};

/// Longest-match, left-to-right scan of the caption against every entity
/// name and alias. Matches are word aligned and must normalize to the
/// surface they matched.
inline std::vector<EntityMention> gazetteer_extract(std::string_view caption, const KnowledgeGraph& graph) {
  struct Surface {
    std::vector<std::string> words;
    std::string normalized;
    std::string entity_id;
  };
  std::map<std::string, std::vector<Surface>> by_first_word;
  for (const auto& [normalized, ids] : graph.surface_index()) {
    auto words = split_spaces(normalized);
    if (words.empty()) continue;
    by_first_word[words.front()].push_back({words, normalized, *ids.begin()});
  }
  for (auto& [first, list] : by_first_word) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Surface& a, const Surface& b) { return a.words.size() > b.words.size(); });
  }

  const auto words = scan_words(caption);
  std::vector<EntityMention> mentions;
  std::size_t i = 0;
  while (i < words.size()) {
    bool matched = false;
    auto it = by_first_word.find(words[i].lower);
    if (it != by_first_word.end()) {
      for (const auto& surface : it->second) {
        const auto n = surface.words.size();
        if (i + n > words.size()) continue;
        bool same = true;
        for (std::size_t k = 0; k < n && same; ++k) same = words[i + k].lower == surface.words[k];
        if (!same) continue;
        Span span{words[i].begin, words[i + n - 1].end};
        std::string text(caption.substr(span.start, span.length()));
        if (normalize_mention(text) != surface.normalized) continue;
        mentions.push_back({text, surface.normalized, graph.at(surface.entity_id).category, span});
        i += n;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return mentions;
}

namespace detail {

/// Longest span wins, then earliest start, then earlier source; result is
/// sorted by start.
inline std::vector<EntityMention> resolve_overlaps(std::vector<EntityMention> candidates) {
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = candidates[a].span;
    const auto& y = candidates[b].span;
    if (x.length() != y.length()) return x.length() > y.length();
    return x.start < y.start;
  });
  std::vector<EntityMention> kept;
  for (auto i : order) {
    bool clash = false;
    for (const auto& k : kept) clash = clash || k.span.overlaps(candidates[i].span);
    if (!clash) kept.push_back(std::move(candidates[i]));
  }
  std::sort(kept.begin(), kept.end(),
            [](const EntityMention& a, const EntityMention& b) { return a.span < b.span; });
  return kept;
}

inline std::vector<EntityMention> service_mentions(std::string_view caption, NerClient& ner) {
  std::vector<EntityMention> out;
  for (const auto& e : ner.recognize(caption)) {
    if (e.start >= e.end || e.end > caption.size()) {
      throw ProtocolError("NER span [" + std::to_string(e.start) + ", " + std::to_string(e.end) +
                          ") outside caption of length " + std::to_string(caption.size()));
    }
    if (caption.substr(e.start, e.end - e.start) != e.text) {
      throw ProtocolError("NER span text '" + e.text + "' does not match caption bytes");
    }
    out.push_back({e.text, normalize_mention(e.text), category_from_label(e.label), {e.start, e.end}});
  }
  return out;
}

}  // namespace detail

/// Entity Recognition hop.
inline std::vector<EntityMention> extract_entities(std::string_view caption, const ExtractorConfig& config,
                                                   const KnowledgeGraph& graph, NerClient* ner = nullptr) {
  std::vector<EntityMention> candidates;
  if (config.mode != ExtractorMode::gazetteer) {
    if (ner == nullptr) throw ServiceUnavailable("extractor mode requires an NER service");
    candidates = detail::service_mentions(caption, *ner);
  }
  if (config.mode != ExtractorMode::external_service) {
    // Gazetteer candidates go first so they win exact ties with the service.
    auto gaz = gazetteer_extract(caption, graph);
    candidates.insert(candidates.begin(), gaz.begin(), gaz.end());
  }
  std::erase_if(candidates, [&](const EntityMention& m) {
    return config.categories.count(m.category) == 0 || m.normalized.empty();
  });
  return detail::resolve_overlaps(std::move(candidates));
}

}  // namespace kgv

#endif  // KGV_ENTITY_HOP_HPP
