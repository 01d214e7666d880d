#ifndef KGV_MATCH_HOP_HPP
#define KGV_MATCH_HOP_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgv/entity_hop.hpp"
#include "kgv/error.hpp"
#include "kgv/graph.hpp"
#include "kgv/service.hpp"

namespace kgv {

enum class MatchMethod { exact, fuzzy, none };

inline std::string_view to_string(MatchMethod m) {
  switch (m) {
    case MatchMethod::exact: return "exact";
    case MatchMethod::fuzzy: return "fuzzy";
    case MatchMethod::none: return "none";
  }
  return "none";
}

/// Resolution of one mention. exact => score 1 and an entity; none => no entity.
struct EntityMatch {
  EntityMention mention;
  std::optional<std::string> entity_id;
  double score = 0.0;
  MatchMethod method = MatchMethod::none;

  bool operator==(const EntityMatch&) const = default;
};

enum class Embedder { trigram_fallback, service };

struct MatcherConfig {
  double threshold = 0.85;
  Embedder embedder = Embedder::trigram_fallback;
  std::optional<std::string> service_endpoint;

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      throw std::invalid_argument("matcher threshold must lie in [0, 1]");
    }
  }
};

inline std::optional<EntityMatch> exact_match(const EntityMention& mention, const KnowledgeGraph& graph) {
  auto ids = graph.resolve_surface(mention.normalized);
  if (ids.empty()) return std::nullopt;
  return EntityMatch{mention, ids.front(), 1.0, MatchMethod::exact};
}

/// Cosine similarity of character-trigram count vectors of the normalized
/// strings. Strings shorter than three characters compare by equality.
inline double trigram_cosine(std::string_view a, std::string_view b) {
  const std::string x = normalize_mention(a);
  const std::string y = normalize_mention(b);
  if (x == y) return 1.0;
  if (x.size() < 3 || y.size() < 3) return 0.0;
  auto grams = [](const std::string& s) {
    std::map<std::string_view, long long> counts;
    std::string_view v(s);
    for (std::size_t i = 0; i + 3 <= v.size(); ++i) ++counts[v.substr(i, 3)];
    return counts;
  };
  const auto gx = grams(x);
  const auto gy = grams(y);
  long long dot = 0;
  long long nx = 0;
  long long ny = 0;
  for (const auto& [g, c] : gx) {
    nx += c * c;
    auto it = gy.find(g);
    if (it != gy.end()) dot += c * it->second;
  }
  for (const auto& [g, c] : gy) ny += c * c;
  if (dot == 0) return 0.0;
  return std::min(1.0, static_cast<double>(dot) / std::sqrt(static_cast<double>(nx * ny)));
}

namespace detail {

inline double vector_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace detail

/// Closest entity by name or alias. Ties go to the smallest entity id.
inline EntityMatch fuzzy_match(const EntityMention& mention, const KnowledgeGraph& graph,
                               const MatcherConfig& config, EmbeddingClient* embedder = nullptr) {
  if (graph.empty()) throw EmptyGraph();
  if (mention.normalized.empty()) return EntityMatch{mention, std::nullopt, 0.0, MatchMethod::none};

  const auto& surfaces = graph.surface_index();
  std::vector<double> surface_scores;
  surface_scores.reserve(surfaces.size());
  if (config.embedder == Embedder::service) {
    if (embedder == nullptr) throw ServiceUnavailable("service embedder selected but no embedding client");
    std::vector<std::string> texts{mention.normalized};
    for (const auto& [s, ids] : surfaces) texts.push_back(s);
    auto batch = embed_text(*embedder, texts);
    for (std::size_t i = 1; i < batch.vectors.size(); ++i) {
      double cos = detail::vector_cosine(batch.vectors[0], batch.vectors[i]);
      double score = batch.signed_cosine ? (1.0 + cos) / 2.0 : cos;
      surface_scores.push_back(std::clamp(score, 0.0, 1.0));
    }
  } else {
    for (const auto& [s, ids] : surfaces) surface_scores.push_back(trigram_cosine(mention.normalized, s));
  }

  std::map<std::string, double> best_per_entity;
  std::size_t k = 0;
  for (const auto& [s, ids] : surfaces) {
    for (const auto& id : ids) {
      auto [it, inserted] = best_per_entity.emplace(id, surface_scores[k]);
      if (!inserted) it->second = std::max(it->second, surface_scores[k]);
    }
    ++k;
  }
  // std::map iterates ids ascending, so strict '>' keeps the smallest id on ties.
  std::string best_id;
  double best = -1.0;
  for (const auto& [id, score] : best_per_entity) {
    if (score > best) {
      best = score;
      best_id = id;
    }
  }
  return EntityMatch{mention, best_id, best, MatchMethod::fuzzy};
}

/// Resolved mentions in input order plus the verified/hallucinated split.
struct MatchPartition {
  std::vector<EntityMatch> matches;
  std::vector<bool> verified_flags;

  bool is_verified(std::size_t i) const { return verified_flags.at(i); }

  std::vector<EntityMatch> verified() const { return select(true); }
  std::vector<EntityMatch> hallucinated() const { return select(false); }

  std::size_t verified_count() const {
    return static_cast<std::size_t>(std::count(verified_flags.begin(), verified_flags.end(), true));
  }
  std::size_t hallucinated_count() const { return matches.size() - verified_count(); }

 private:
  std::vector<EntityMatch> select(bool flag) const {
    std::vector<EntityMatch> out;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      if (verified_flags[i] == flag) out.push_back(matches[i]);
    }
    return out;
  }
};

inline EntityMatch resolve_mention(const EntityMention& mention, const KnowledgeGraph& graph,
                                   const MatcherConfig& config, EmbeddingClient* embedder = nullptr) {
  if (auto hit = exact_match(mention, graph)) return *hit;
  return fuzzy_match(mention, graph, config, embedder);
}

/// Knowledge Graph Navigation hop: V holds matches scoring at least the
/// threshold, H everything else.
inline MatchPartition partition_entities(const std::vector<EntityMention>& mentions, const KnowledgeGraph& graph,
                                         const MatcherConfig& config, EmbeddingClient* embedder = nullptr) {
  config.validate();
  MatchPartition p;
  for (const auto& m : mentions) {
    auto match = resolve_mention(m, graph, config, embedder);
    bool verified = match.entity_id.has_value() && match.score >= config.threshold;
    p.matches.push_back(std::move(match));
    p.verified_flags.push_back(verified);
  }
  return p;
}

}  // namespace kgv

#endif  // KGV_MATCH_HOP_HPP
