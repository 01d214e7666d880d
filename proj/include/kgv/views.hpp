#ifndef KGV_VIEWS_HPP
#define KGV_VIEWS_HPP

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kgv/graph.hpp"
#include "kgv/text.hpp"

namespace kgv {

/// Flat (subject, relation, object) statement using display names.
struct Triple {
  std::string subject;
  std::string relation;
  std::string object;

  bool operator==(const Triple&) const = default;
};

struct HierEdge;

/// Node of a containment tree rooted at one entity. Containment edges nest;
/// other outgoing relations hang off their subject as leaves.
struct HierNode {
  std::string entity_id;
  std::string label;
  bool reference = false;  // repeated ancestor, not expanded
  std::vector<HierEdge> children;

  bool operator==(const HierNode&) const = default;
};

struct HierEdge {
  std::string predicate;
  bool containment = false;
  HierNode child;

  bool operator==(const HierEdge&) const = default;
};

/// Attribute-value pair attached to one entity.
struct BulletFact {
  std::string entity;
  std::string attribute;
  std::string value;
  std::string entity_id;
  std::string value_id;

  bool operator==(const BulletFact&) const = default;
};

inline std::vector<Triple> to_triples(const KnowledgeGraph& graph) {
  std::vector<Triple> triples;
  triples.reserve(graph.relation_count());
  for (const auto& r : graph.relations()) {
    triples.push_back({graph.at(r.subject).name, r.predicate, graph.at(r.object).name});
  }
  return triples;
}

/// Triples whose subject is `id`.
inline std::vector<Triple> to_triples(const KnowledgeGraph& graph, std::string_view id) {
  const auto& subject = graph.at(id);
  std::vector<Triple> triples;
  for (const auto* r : graph.outgoing(id)) {
    triples.push_back({subject.name, r->predicate, graph.at(r->object).name});
  }
  return triples;
}

namespace detail {

inline void expand_hierarchy(const KnowledgeGraph& graph, HierNode& node,
                             const std::set<std::string>& containment, std::set<std::string>& ancestors,
                             std::size_t depth, std::size_t max_depth) {
  if (depth >= max_depth) return;
  std::vector<HierEdge> nested;
  std::vector<HierEdge> leaves;
  for (const auto* r : graph.outgoing(node.entity_id)) {
    HierEdge edge;
    edge.predicate = r->predicate;
    edge.child.entity_id = r->object;
    edge.child.label = graph.at(r->object).name;
    if (containment.count(r->predicate) == 0) {
      leaves.push_back(std::move(edge));
      continue;
    }
    edge.containment = true;
    if (ancestors.count(r->object) != 0) {
      edge.child.reference = true;
    } else {
      ancestors.insert(r->object);
      expand_hierarchy(graph, edge.child, containment, ancestors, depth + 1, max_depth);
      ancestors.erase(r->object);
    }
    nested.push_back(std::move(edge));
  }
  node.children = std::move(nested);
  for (auto& leaf : leaves) node.children.push_back(std::move(leaf));
}

}  // namespace detail

/// Containment tree below `root`. Only nodes on the current branch count as
/// repeats, so every simple containment path of length <= max_depth appears.
inline HierNode to_hierarchy(const KnowledgeGraph& graph, std::string_view root,
                             const std::vector<std::string>& containment_predicates,
                             std::optional<std::size_t> max_depth = std::nullopt) {
  HierNode node;
  node.entity_id = std::string(root);
  node.label = graph.at(root).name;
  std::set<std::string> containment(containment_predicates.begin(), containment_predicates.end());
  std::set<std::string> ancestors{node.entity_id};
  detail::expand_hierarchy(graph, node, containment, ancestors, 0,
                           max_depth.value_or(graph.entity_count()));
  return node;
}

inline HierNode to_hierarchy(const KnowledgeGraph& graph, std::string_view root) {
  return to_hierarchy(graph, root, graph.containment_predicates());
}

inline std::vector<BulletFact> to_bullets(const KnowledgeGraph& graph, std::string_view id) {
  const auto& entity = graph.at(id);
  std::vector<BulletFact> facts;
  for (const auto* r : graph.outgoing(id)) {
    facts.push_back({entity.name, r->predicate, graph.at(r->object).name, entity.id, r->object});
  }
  return facts;
}

// Rendering. Every line ends with '\n'; an empty view renders as "".

inline std::string render(const std::vector<Triple>& triples) {
  std::string out;
  for (const auto& t : triples) out += "(" + t.subject + ", " + t.relation + ", " + t.object + ")\n";
  return out;
}

inline std::string render(const std::vector<BulletFact>& facts) {
  std::string out;
  for (const auto& f : facts) out += "- " + f.entity + ": " + predicate_phrase(f.attribute) + " " + f.value + "\n";
  return out;
}

namespace detail {

inline void render_node(const HierNode& node, std::size_t indent, std::string& out) {
  for (const auto& edge : node.children) {
    out.append(indent * 2, ' ');
    out += predicate_title(edge.predicate) + ": " + edge.child.label;
    if (edge.child.reference) out += " [ref]";
    out += "\n";
    render_node(edge.child, indent + 1, out);
  }
}

}  // namespace detail

inline std::string render(const HierNode& root) {
  std::string out = root.label + "\n";
  detail::render_node(root, 1, out);
  return out;
}

}  // namespace kgv

#endif  // KGV_VIEWS_HPP
