#ifndef KGV_GRAPH_IO_HPP
#define KGV_GRAPH_IO_HPP

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgv/error.hpp"
#include "kgv/graph.hpp"

namespace kgv {

namespace detail {

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Start lines of the elements of the top-level arrays in a JSON object
/// document, keyed by member name. Assumes `text` is syntactically valid.
inline std::map<std::string, std::vector<std::size_t>> top_level_element_lines(std::string_view text) {
  std::map<std::string, std::vector<std::size_t>> lines;
  int depth = 0;
  std::size_t line = 1;
  std::string last_key;
  std::string current_array;
  std::string token;
  bool in_string = false;
  bool escaped = false;
  bool expect_value = false;  // at depth 1, after a key's ':'
  bool at_element_start = false;

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') ++line;
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
        if (depth == 1 && !expect_value) last_key = token;
      } else {
        token.push_back(c);
      }
      continue;
    }
    if (is_space(c)) continue;
    if (depth == 2 && !current_array.empty() && at_element_start && c != ']') {
      lines[current_array].push_back(line);
      at_element_start = false;
    }
    switch (c) {
      case '"':
        in_string = true;
        token.clear();
        break;
      case ':':
        if (depth == 1) expect_value = true;
        break;
      case ',':
        if (depth == 1) expect_value = false;
        if (depth == 2 && !current_array.empty()) at_element_start = true;
        break;
      case '{':
      case '[':
        ++depth;
        if (depth == 2 && c == '[' && expect_value) {
          current_array = last_key;
          lines[current_array];
          at_element_start = true;
        }
        break;
      case '}':
      case ']':
        if (depth == 2) current_array.clear();
        --depth;
        if (depth == 1) expect_value = false;
        break;
      default:
        break;
    }
  }
  return lines;
}

class DocumentContext {
 public:
  DocumentContext(std::string_view text, std::string source)
      : source_(std::move(source)), lines_(top_level_element_lines(text)) {}

  std::size_t line(const std::string& array, std::size_t index) const {
    auto it = lines_.find(array);
    if (it == lines_.end() || index >= it->second.size()) return 0;
    return it->second[index];
  }

  [[noreturn]] void fail(const std::string& array, std::size_t index, const std::string& msg) const {
    throw SchemaError(source_, line(array, index), array + "[" + std::to_string(index) + "]: " + msg);
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, std::vector<std::size_t>> lines_;
};

inline nlohmann::json parse_json_document(std::string_view text, const std::string& source) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    std::string what = e.what();
    // nlohmann prefixes "[json.exception.parse_error.101] parse error at line L, column C: ".
    auto pos = what.find(": ");
    std::string msg = pos == std::string::npos ? what : what.substr(pos + 2);
    throw SchemaError(source, line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1),
                      "invalid JSON: " + msg);
  }
}

inline void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                       const std::set<std::string>& required, const DocumentContext& ctx,
                       const std::string& array, std::size_t index) {
  if (!obj.is_object()) ctx.fail(array, index, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key) == 0) ctx.fail(array, index, "unknown field \"" + key + "\"");
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) ctx.fail(array, index, "missing field \"" + key + "\"");
  }
}

inline std::string string_field(const nlohmann::json& obj, const char* key, const DocumentContext& ctx,
                                const std::string& array, std::size_t index) {
  const auto& v = obj.at(key);
  if (!v.is_string()) ctx.fail(array, index, std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace detail

/// Parses a KG document. Raises SchemaError (line-anchored) on shape
/// problems and ReferentialIntegrityError for dangling relation endpoints.
inline KnowledgeGraph load_graph(std::string_view text, const std::string& source = "<input>") {
  using nlohmann::json;
  const json doc = detail::parse_json_document(text, source);
  if (!doc.is_object()) throw SchemaError(source, 1, "top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "entities" && key != "relations") {
      throw SchemaError(source, 1, "unknown top-level field \"" + key + "\"");
    }
  }
  if (!doc.contains("entities") || !doc["entities"].is_array()) {
    throw SchemaError(source, 1, "\"entities\" must be an array");
  }
  if (!doc.contains("relations") || !doc["relations"].is_array()) {
    throw SchemaError(source, 1, "\"relations\" must be an array");
  }

  detail::DocumentContext ctx(text, source);
  GraphBuilder builder;
  const auto& entities = doc["entities"];
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const auto& e = entities[i];
    detail::check_keys(e, {"id", "name", "aliases", "category"}, {"id", "name", "category"}, ctx,
                       "entities", i);
    Entity entity;
    entity.id = detail::string_field(e, "id", ctx, "entities", i);
    entity.name = detail::string_field(e, "name", ctx, "entities", i);
    auto category = parse_category(detail::string_field(e, "category", ctx, "entities", i));
    if (!category) ctx.fail("entities", i, "unknown category \"" + e["category"].get<std::string>() + "\"");
    entity.category = *category;
    if (e.contains("aliases")) {
      if (!e["aliases"].is_array()) ctx.fail("entities", i, "\"aliases\" must be an array");
      for (const auto& a : e["aliases"]) {
        if (!a.is_string()) ctx.fail("entities", i, "aliases must be strings");
        entity.aliases.push_back(a.get<std::string>());
      }
    }
    if (entity.id.empty()) ctx.fail("entities", i, "empty id");
    try {
      builder.add_entity(std::move(entity));
    } catch (const InputError& err) {
      ctx.fail("entities", i, err.what());
    }
  }

  const auto& relations = doc["relations"];
  for (std::size_t i = 0; i < relations.size(); ++i) {
    const auto& r = relations[i];
    detail::check_keys(r, {"subject", "predicate", "object", "kind"},
                       {"subject", "predicate", "object", "kind"}, ctx, "relations", i);
    auto subject = detail::string_field(r, "subject", ctx, "relations", i);
    auto predicate = detail::string_field(r, "predicate", ctx, "relations", i);
    auto object = detail::string_field(r, "object", ctx, "relations", i);
    auto kind = parse_relation_kind(detail::string_field(r, "kind", ctx, "relations", i));
    if (!kind) ctx.fail("relations", i, "unknown kind \"" + r["kind"].get<std::string>() + "\"");
    try {
      builder.add_relation(subject, predicate, object, *kind);
    } catch (const UnknownEntity& err) {
      throw ReferentialIntegrityError(source, ctx.line("relations", i),
                                      "relations[" + std::to_string(i) + "]: " + err.what());
    } catch (const InputError& err) {
      ctx.fail("relations", i, err.what());
    }
  }
  return builder.build();
}

inline KnowledgeGraph load_graph_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path, 0, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_graph(buf.str(), path);
}

namespace detail {

inline nlohmann::ordered_json entity_document(const std::string& id, const std::string& name,
                                              const nlohmann::json& aliases,
                                              const std::string& category) {
  nlohmann::ordered_json e;
  e["id"] = id;
  e["name"] = name;
  e["aliases"] = aliases;
  e["category"] = category;
  return e;
}

inline nlohmann::ordered_json relation_document(const std::string& s, const std::string& p,
                                                const std::string& o, const std::string& kind) {
  nlohmann::ordered_json r;
  r["subject"] = s;
  r["predicate"] = p;
  r["object"] = o;
  r["kind"] = kind;
  return r;
}

inline std::string dump_document(const nlohmann::ordered_json& doc) { return doc.dump(2) + "\n"; }

}  // namespace detail

/// Canonical KG document: entities by id, relations by (subject, predicate,
/// object), fixed key order, two-space indentation, trailing newline.
inline std::string save_graph(const KnowledgeGraph& graph) {
  nlohmann::ordered_json doc;
  doc["entities"] = nlohmann::ordered_json::array();
  doc["relations"] = nlohmann::ordered_json::array();
  for (const auto& e : graph.entities()) {
    doc["entities"].push_back(
        detail::entity_document(e.id, e.name, e.aliases, std::string(to_string(e.category))));
  }
  for (const auto& r : graph.relations()) {
    doc["relations"].push_back(
        detail::relation_document(r.subject, r.predicate, r.object, std::string(to_string(r.kind))));
  }
  return detail::dump_document(doc);
}

/// Rewrites a KG document into canonical layout without building a graph.
/// Missing "aliases" become an empty list; nothing is validated beyond shape.
inline std::string canonicalize_graph_document(std::string_view text,
                                               const std::string& source = "<input>") {
  const auto doc = detail::parse_json_document(text, source);
  auto entities = doc.at("entities");
  auto relations = doc.at("relations");
  std::vector<nlohmann::json> es(entities.begin(), entities.end());
  std::vector<nlohmann::json> rs(relations.begin(), relations.end());
  std::stable_sort(es.begin(), es.end(), [](const auto& a, const auto& b) {
    return a.at("id").template get<std::string>() < b.at("id").template get<std::string>();
  });
  auto rkey = [](const nlohmann::json& r) {
    return std::make_tuple(r.at("subject").get<std::string>(), r.at("predicate").get<std::string>(),
                           r.at("object").get<std::string>());
  };
  std::stable_sort(rs.begin(), rs.end(), [&](const auto& a, const auto& b) { return rkey(a) < rkey(b); });

  nlohmann::ordered_json out;
  out["entities"] = nlohmann::ordered_json::array();
  out["relations"] = nlohmann::ordered_json::array();
  for (const auto& e : es) {
    out["entities"].push_back(detail::entity_document(
        e.at("id").get<std::string>(), e.at("name").get<std::string>(),
        e.contains("aliases") ? e.at("aliases") : nlohmann::json::array(),
        e.at("category").get<std::string>()));
  }
  for (const auto& r : rs) {
    out["relations"].push_back(detail::relation_document(
        r.at("subject").get<std::string>(), r.at("predicate").get<std::string>(),
        r.at("object").get<std::string>(), r.at("kind").get<std::string>()));
  }
  return detail::dump_document(out);
}

}  // namespace kgv

#endif  // KGV_GRAPH_IO_HPP
