#ifndef KGV_GRAPH_HPP
#define KGV_GRAPH_HPP

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "kgv/error.hpp"
#include "kgv/text.hpp"

namespace kgv {

enum class Category { FAC, GPE, ORG, LOC, OTHER };
enum class RelationKind { spatial, structural, attribute };

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::FAC: return "FAC";
    case Category::GPE: return "GPE";
    case Category::ORG: return "ORG";
    case Category::LOC: return "LOC";
    case Category::OTHER: return "OTHER";
  }
  return "OTHER";
}

inline std::optional<Category> parse_category(std::string_view s) {
  for (auto c : {Category::FAC, Category::GPE, Category::ORG, Category::LOC, Category::OTHER}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

/// Service labels outside the fixed set map to OTHER.
inline Category category_from_label(std::string_view label) {
  return parse_category(label).value_or(Category::OTHER);
}

inline std::string_view to_string(RelationKind k) {
  switch (k) {
    case RelationKind::spatial: return "spatial";
    case RelationKind::structural: return "structural";
    case RelationKind::attribute: return "attribute";
  }
  return "attribute";
}

inline std::optional<RelationKind> parse_relation_kind(std::string_view s) {
  for (auto k : {RelationKind::spatial, RelationKind::structural, RelationKind::attribute}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct Entity {
  std::string id;
  std::string name;
  std::vector<std::string> aliases;
  Category category = Category::OTHER;

  bool operator==(const Entity&) const = default;
};

struct Relation {
  std::string subject;
  std::string predicate;
  std::string object;
  RelationKind kind = RelationKind::attribute;

  bool operator==(const Relation&) const = default;
};

/// Canonical relation order: (subject, predicate, object).
inline bool relation_less(const Relation& a, const Relation& b) {
  return std::tie(a.subject, a.predicate, a.object) < std::tie(b.subject, b.predicate, b.object);
}

using Path = std::vector<Relation>;

inline const std::vector<std::string>& default_containment_predicates() {
  static const std::vector<std::string> preds{"located_in", "capital_of"};
  return preds;
}

inline const std::vector<std::string>& default_functional_predicates() {
  static const std::vector<std::string> preds{"located_in", "capital_of"};
  return preds;
}

class GraphBuilder;

/// Typed directed multigraph of entities. Immutable once built; every
/// accessor is const and safe to call from many threads.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  std::span<const Entity> entities() const { return entities_; }
  std::span<const Relation> relations() const { return relations_; }
  std::size_t entity_count() const { return entities_.size(); }
  std::size_t relation_count() const { return relations_.size(); }
  bool empty() const { return entities_.empty(); }

  const Entity* find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &entities_[it->second];
  }

  bool contains(std::string_view id) const { return find(id) != nullptr; }

  const Entity& at(std::string_view id) const {
    const Entity* e = find(id);
    if (e == nullptr) throw UnknownEntity(std::string(id));
    return *e;
  }

  /// Outgoing relations of `id` in canonical order.
  std::vector<const Relation*> outgoing(std::string_view id) const {
    std::vector<const Relation*> out;
    auto it = out_.find(std::string(id));
    if (it != out_.end()) {
      for (auto i : it->second) out.push_back(&relations_[i]);
    }
    return out;
  }

  std::vector<const Relation*> incoming(std::string_view id) const {
    std::vector<const Relation*> in;
    auto it = in_.find(std::string(id));
    if (it != in_.end()) {
      for (auto i : it->second) in.push_back(&relations_[i]);
    }
    return in;
  }

  bool has_relation(std::string_view s, std::string_view p, std::string_view o) const {
    for (const auto* r : outgoing(s)) {
      if (r->predicate == p && r->object == o) return true;
    }
    return false;
  }

  /// Entity ids whose normalized name or alias equals `normalized`, sorted.
  std::vector<std::string> resolve_surface(std::string_view normalized) const {
    auto it = surfaces_.find(std::string(normalized));
    if (it == surfaces_.end()) return {};
    return {it->second.begin(), it->second.end()};
  }

  /// Every normalized name/alias and the entities carrying it.
  const std::map<std::string, std::set<std::string>>& surface_index() const { return surfaces_; }

  std::optional<RelationKind> predicate_kind(std::string_view predicate) const {
    auto it = predicate_kinds_.find(std::string(predicate));
    if (it == predicate_kinds_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, RelationKind>& predicate_kinds() const { return predicate_kinds_; }
  const std::vector<std::string>& containment_predicates() const { return containment_; }
  const std::vector<std::string>& functional_predicates() const { return functional_; }

  bool is_containment(std::string_view p) const {
    return std::find(containment_.begin(), containment_.end(), p) != containment_.end();
  }
  bool is_functional(std::string_view p) const {
    return std::find(functional_.begin(), functional_.end(), p) != functional_.end();
  }

 private:
  friend class GraphBuilder;

  std::vector<Entity> entities_;  // sorted by id
  std::map<std::string, std::size_t> index_;
  std::vector<Relation> relations_;  // canonical order
  std::map<std::string, std::vector<std::size_t>> out_;
  std::map<std::string, std::vector<std::size_t>> in_;
  std::map<std::string, std::set<std::string>> surfaces_;
  std::map<std::string, RelationKind> predicate_kinds_;
  std::vector<std::string> containment_ = default_containment_predicates();
  std::vector<std::string> functional_ = default_functional_predicates();
};

/// Single-owner construction of a KnowledgeGraph.
class GraphBuilder {
 public:
  GraphBuilder& add_entity(Entity entity) {
    check_open();
    if (normalize_mention(entity.name).empty()) {
      throw InvalidEntity("entity '" + entity.id + "' has an empty name");
    }
    if (entity.id.empty()) entity.id = id_from_name(entity.name);
    if (entity.id != id_from_name(entity.name)) {
      throw InvalidEntity("entity id '" + entity.id + "' does not match its name (expected '" +
                          id_from_name(entity.name) + "')");
    }
    if (entities_.count(entity.id) != 0) throw DuplicateEntity(entity.id);
    std::set<std::string> seen;
    for (const auto& alias : entity.aliases) {
      if (normalize_mention(alias).empty()) {
        throw InvalidEntity("entity '" + entity.id + "' has an empty alias");
      }
      if (!seen.insert(normalize_mention(alias)).second) {
        throw InvalidEntity("entity '" + entity.id + "' lists alias '" + alias + "' twice");
      }
    }
    std::string id = entity.id;
    entities_.emplace(std::move(id), std::move(entity));
    return *this;
  }

  GraphBuilder& add_relation(std::string subject, std::string predicate, std::string object,
                             RelationKind kind) {
    check_open();
    if (entities_.count(subject) == 0) throw UnknownEntity(subject);
    if (entities_.count(object) == 0) throw UnknownEntity(object);
    if (predicate.empty()) throw InvalidEntity("relation predicate is empty");
    auto [it, inserted] = kinds_.emplace(predicate, kind);
    if (!inserted && it->second != kind) {
      throw PredicateKindConflict("predicate '" + predicate + "' already declared as " +
                                  std::string(to_string(it->second)) + ", not " +
                                  std::string(to_string(kind)));
    }
    auto key = std::make_tuple(subject, predicate, object);
    if (!triples_.insert(key).second) {
      throw DuplicateRelation("duplicate relation (" + subject + ", " + predicate + ", " +
                              object + ")");
    }
    relations_.push_back({std::move(subject), std::move(predicate), std::move(object), kind});
    return *this;
  }

  GraphBuilder& add_relation(const Relation& r) {
    return add_relation(r.subject, r.predicate, r.object, r.kind);
  }

  GraphBuilder& set_containment_predicates(std::vector<std::string> predicates) {
    check_open();
    containment_ = std::move(predicates);
    return *this;
  }

  GraphBuilder& set_functional_predicates(std::vector<std::string> predicates) {
    check_open();
    functional_ = std::move(predicates);
    return *this;
  }

  std::size_t entity_count() const { return entities_.size(); }
  std::size_t relation_count() const { return relations_.size(); }
  bool contains(const std::string& id) const { return entities_.count(id) != 0; }

  /// Freezes the builder and returns the immutable graph.
  KnowledgeGraph build() {
    check_open();
    frozen_ = true;
    KnowledgeGraph g;
    for (auto& [id, e] : entities_) {
      g.index_.emplace(id, g.entities_.size());
      g.surfaces_[normalize_mention(e.name)].insert(id);
      for (const auto& alias : e.aliases) g.surfaces_[normalize_mention(alias)].insert(id);
      g.entities_.push_back(std::move(e));
    }
    std::sort(relations_.begin(), relations_.end(), relation_less);
    g.relations_ = std::move(relations_);
    for (std::size_t i = 0; i < g.relations_.size(); ++i) {
      g.out_[g.relations_[i].subject].push_back(i);
      g.in_[g.relations_[i].object].push_back(i);
    }
    g.predicate_kinds_ = std::move(kinds_);
    g.containment_ = std::move(containment_);
    g.functional_ = std::move(functional_);
    return g;
  }

 private:
  void check_open() const {
    if (frozen_) throw GraphFrozen();
  }

  std::map<std::string, Entity> entities_;
  std::vector<Relation> relations_;
  std::set<std::tuple<std::string, std::string, std::string>> triples_;
  std::map<std::string, RelationKind> kinds_;
  std::vector<std::string> containment_ = default_containment_predicates();
  std::vector<std::string> functional_ = default_functional_predicates();
  bool frozen_ = false;
};

/// All simple directed paths from `from` to `to` with at most `max_hops`
/// edges, optionally restricted to a predicate set. Ordered shortest first,
/// then by predicate sequence, then by the sequence of visited nodes.
inline std::vector<Path> find_paths(const KnowledgeGraph& graph, std::string_view from,
                                    std::string_view to, std::size_t max_hops,
                                    const std::optional<std::set<std::string>>& predicate_filter =
                                        std::nullopt) {
  graph.at(from);
  graph.at(to);

  std::vector<Path> paths;
  if (from == to) paths.emplace_back();

  Path current;
  std::set<std::string> on_path{std::string(from)};
  auto walk = [&](auto&& self, const std::string& node) -> void {
    if (current.size() == max_hops) return;
    for (const Relation* r : graph.outgoing(node)) {
      if (predicate_filter && predicate_filter->count(r->predicate) == 0) continue;
      if (on_path.count(r->object) != 0) continue;
      current.push_back(*r);
      if (r->object == to) {
        paths.push_back(current);
      } else {
        on_path.insert(r->object);
        self(self, r->object);
        on_path.erase(r->object);
      }
      current.pop_back();
    }
  };
  walk(walk, std::string(from));

  auto sort_key = [](const Path& p) {
    std::vector<std::string> preds;
    std::vector<std::string> nodes;
    for (const auto& r : p) {
      preds.push_back(r.predicate);
      nodes.push_back(r.object);
    }
    return std::make_tuple(p.size(), std::move(preds), std::move(nodes));
  };
  std::stable_sort(paths.begin(), paths.end(),
                   [&](const Path& a, const Path& b) { return sort_key(a) < sort_key(b); });
  return paths;
}

struct GraphStats {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  double avg_degree = 0.0;
  std::size_t max_pairwise_path_length = 0;
  double avg_clustering = 0.0;
};

/// Structural statistics. Degree uses the undirected 2|E|/|V| convention;
/// distances and clustering use the undirected simple projection (parallel
/// edges merged, self-loops dropped).
inline GraphStats graph_stats(const KnowledgeGraph& graph) {
  GraphStats stats;
  stats.node_count = graph.entity_count();
  stats.edge_count = graph.relation_count();
  if (stats.node_count == 0) return stats;
  stats.avg_degree =
      2.0 * static_cast<double>(stats.edge_count) / static_cast<double>(stats.node_count);

  std::map<std::string, std::size_t> idx;
  for (const auto& e : graph.entities()) idx.emplace(e.id, idx.size());
  const std::size_t n = idx.size();
  std::vector<std::set<std::size_t>> adj(n);
  for (const auto& r : graph.relations()) {
    auto a = idx.at(r.subject);
    auto b = idx.at(r.object);
    if (a == b) continue;
    adj[a].insert(b);
    adj[b].insert(a);
  }

  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> dist(n, SIZE_MAX);
    std::queue<std::size_t> q;
    dist[s] = 0;
    q.push(s);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      stats.max_pairwise_path_length = std::max(stats.max_pairwise_path_length, dist[u]);
      for (auto v : adj[u]) {
        if (dist[v] == SIZE_MAX) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
      }
    }
  }

  double total = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const auto k = adj[v].size();
    if (k < 2) continue;
    std::size_t links = 0;
    for (auto a = adj[v].begin(); a != adj[v].end(); ++a) {
      for (auto b = std::next(a); b != adj[v].end(); ++b) {
        if (adj[*a].count(*b) != 0) ++links;
      }
    }
    total += 2.0 * static_cast<double>(links) / static_cast<double>(k * (k - 1));
  }
  stats.avg_clustering = total / static_cast<double>(n);
  return stats;
}

}  // namespace kgv

#endif  // KGV_GRAPH_HPP
