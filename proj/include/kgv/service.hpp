#ifndef KGV_SERVICE_HPP
#define KGV_SERVICE_HPP

#include <cstddef>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgv/error.hpp"
#include "kgv/text.hpp"

namespace kgv {

// Wire-level payloads shared by the live, subprocess and replay clients.

struct NerEntity {
  std::string text;
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const NerEntity&) const = default;
};

struct EmbeddingBatch {
  std::vector<std::vector<double>> vectors;
  bool signed_cosine = true;  // reply's "signed" flag
};

class CaptionClient {
 public:
  virtual ~CaptionClient() = default;
  virtual std::string caption_image(std::string_view image_ref, std::string_view prompt) = 0;
};

class GenerationClient {
 public:
  virtual ~GenerationClient() = default;
  virtual std::string generate(std::string_view system, std::string_view prompt,
                               const std::optional<std::string>& image) = 0;
};

class EmbeddingClient {
 public:
  virtual ~EmbeddingClient() = default;
  virtual EmbeddingBatch embed(const std::vector<std::string>& texts) = 0;
};

class NerClient {
 public:
  virtual ~NerClient() = default;
  virtual std::vector<NerEntity> recognize(std::string_view text) = 0;
};

/// Non-owning handles to whatever capabilities a run has configured.
struct Clients {
  CaptionClient* caption = nullptr;
  GenerationClient* generation = nullptr;
  EmbeddingClient* embedding = nullptr;
  NerClient* ner = nullptr;
};

namespace protocol {

using nlohmann::json;

inline json ner_request(std::string_view text) { return json{{"text", std::string(text)}}; }

inline json embed_request(const std::vector<std::string>& texts) { return json{{"texts", texts}}; }

inline json generation_request(std::string_view system, std::string_view prompt,
                               const std::optional<std::string>& image) {
  json body{{"system", std::string(system)}, {"prompt", std::string(prompt)}};
  if (image) body["image"] = *image;
  return body;
}

/// Caption requests are keyed by image reference rather than image bytes, so
/// fixtures can be authored without the images themselves.
inline json caption_request(std::string_view image_ref, std::string_view prompt) {
  return json{{"image", std::string(image_ref)}, {"prompt", std::string(prompt)}};
}

/// "<capability>\n<compact JSON with sorted keys>"
inline std::string canonical_request(std::string_view capability, const json& body) {
  return std::string(capability) + "\n" + body.dump();
}

inline std::string request_key(std::string_view capability, const json& body) {
  return hex64(fnv1a64(canonical_request(capability, body)));
}

inline std::string parse_text_reply(const json& reply) {
  if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
    throw ProtocolError("generation reply must be an object with a string \"text\"");
  }
  return reply["text"].get<std::string>();
}

inline EmbeddingBatch parse_embed_reply(const json& reply, std::size_t expected_count) {
  if (!reply.is_object() || !reply.contains("vectors") || !reply["vectors"].is_array()) {
    throw ProtocolError("embedding reply must carry a \"vectors\" array");
  }
  EmbeddingBatch batch;
  if (reply.contains("signed")) {
    if (!reply["signed"].is_boolean()) throw ProtocolError("\"signed\" must be a boolean");
    batch.signed_cosine = reply["signed"].get<bool>();
  }
  for (const auto& v : reply["vectors"]) {
    if (!v.is_array()) throw ProtocolError("embedding vectors must be arrays");
    std::vector<double> vec;
    for (const auto& x : v) {
      if (!x.is_number()) throw ProtocolError("embedding components must be numbers");
      vec.push_back(x.get<double>());
    }
    if (!batch.vectors.empty() && vec.size() != batch.vectors.front().size()) {
      throw DimensionMismatch("embedding reply is ragged: dimension " + std::to_string(vec.size()) +
                              " after " + std::to_string(batch.vectors.front().size()));
    }
    batch.vectors.push_back(std::move(vec));
  }
  if (batch.vectors.size() != expected_count) {
    throw ProtocolError("embedding reply has " + std::to_string(batch.vectors.size()) +
                        " vectors for " + std::to_string(expected_count) + " texts");
  }
  return batch;
}

inline std::vector<NerEntity> parse_ner_reply(const json& reply) {
  if (!reply.is_object() || !reply.contains("entities") || !reply["entities"].is_array()) {
    throw ProtocolError("NER reply must carry an \"entities\" array");
  }
  std::vector<NerEntity> out;
  for (const auto& e : reply["entities"]) {
    if (!e.is_object() || !e.contains("text") || !e.contains("label") || !e.contains("start") ||
        !e.contains("end") || !e["text"].is_string() || !e["label"].is_string() ||
        !e["start"].is_number_unsigned() || !e["end"].is_number_unsigned()) {
      throw ProtocolError("malformed NER entity: " + e.dump());
    }
    out.push_back({e["text"].get<std::string>(), e["label"].get<std::string>(),
                   e["start"].get<std::size_t>(), e["end"].get<std::size_t>()});
  }
  return out;
}

}  // namespace protocol

/// Request-hash -> response map for deterministic offline runs.
class ReplayFixture {
 public:
  ReplayFixture() = default;

  static ReplayFixture parse(std::string_view text, const std::string& source = "<fixture>") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(source, 0, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError(source, 0, "fixture must be a JSON object");
    ReplayFixture fixture;
    for (auto& [key, value] : doc.items()) {
      if (key.size() != 16 || key.find_first_not_of("0123456789abcdef") != std::string::npos) {
        throw SchemaError(source, 0, "fixture key \"" + key + "\" is not a 16-digit hex hash");
      }
      if (!value.is_object()) throw SchemaError(source, 0, "fixture entry " + key + " must be an object");
      fixture.entries_.emplace(key, value);
    }
    return fixture;
  }

  static ReplayFixture load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(path, 0, "cannot open fixture");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
  }

  void add(std::string_view capability, const nlohmann::json& request, nlohmann::json response) {
    entries_[protocol::request_key(capability, request)] = std::move(response);
  }

  const nlohmann::json& lookup(std::string_view capability, const nlohmann::json& request) const {
    auto key = protocol::request_key(capability, request);
    auto it = entries_.find(key);
    if (it == entries_.end()) throw FixtureMiss(key + " (" + std::string(capability) + ")");
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }

  std::string dump() const {
    nlohmann::json doc(entries_);
    return doc.dump(2) + "\n";
  }

 private:
  std::map<std::string, nlohmann::json> entries_;
};

/// Answers all four capabilities from a fixture. Read-only after
/// construction, so one instance may serve many threads.
class ReplayClient final : public CaptionClient,
                           public GenerationClient,
                           public EmbeddingClient,
                           public NerClient {
 public:
  explicit ReplayClient(ReplayFixture fixture) : fixture_(std::move(fixture)) {}

  std::string caption_image(std::string_view image_ref, std::string_view prompt) override {
    return protocol::parse_text_reply(
        fixture_.lookup("caption", protocol::caption_request(image_ref, prompt)));
  }

  std::string generate(std::string_view system, std::string_view prompt,
                       const std::optional<std::string>& image) override {
    return protocol::parse_text_reply(
        fixture_.lookup("generate", protocol::generation_request(system, prompt, image)));
  }

  /// Each text is looked up as its own single-element request, so fixtures
  /// do not depend on batch composition.
  EmbeddingBatch embed(const std::vector<std::string>& texts) override {
    EmbeddingBatch out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto one = protocol::parse_embed_reply(fixture_.lookup("embed", protocol::embed_request({texts[i]})), 1);
      if (i == 0) out.signed_cosine = one.signed_cosine;
      if (!out.vectors.empty() && one.vectors.front().size() != out.vectors.front().size()) {
        throw DimensionMismatch("replayed embeddings differ in dimension");
      }
      out.vectors.push_back(std::move(one.vectors.front()));
    }
    return out;
  }

  std::vector<NerEntity> recognize(std::string_view text) override {
    return protocol::parse_ner_reply(fixture_.lookup("ner", protocol::ner_request(text)));
  }

  const ReplayFixture& fixture() const { return fixture_; }

 private:
  ReplayFixture fixture_;
};

inline std::unique_ptr<ReplayClient> replay_client(const std::string& fixture_path) {
  return std::make_unique<ReplayClient>(ReplayFixture::load(fixture_path));
}

inline constexpr std::string_view kDefaultCaptionPrompt =
    "Describe this image in one sentence, naming any landmark and where it is located.";

/// Base caption for an image. Blank replies raise EmptyGeneration.
inline std::string caption_image(CaptionClient& client, std::string_view image_ref,
                                 std::string_view prompt = kDefaultCaptionPrompt) {
  std::string caption = client.caption_image(image_ref, prompt);
  if (caption.find_first_not_of(" \t\r\n") == std::string::npos) throw EmptyGeneration();
  return caption;
}

/// One vector per text, all of one dimension.
inline EmbeddingBatch embed_text(EmbeddingClient& client, const std::vector<std::string>& texts) {
  if (texts.empty()) throw std::invalid_argument("embed_text needs at least one text");
  auto batch = client.embed(texts);
  if (batch.vectors.size() != texts.size()) {
    throw ProtocolError("embedding service returned " + std::to_string(batch.vectors.size()) +
                        " vectors for " + std::to_string(texts.size()) + " texts");
  }
  for (const auto& v : batch.vectors) {
    if (v.size() != batch.vectors.front().size()) throw DimensionMismatch("ragged embedding batch");
  }
  return batch;
}

}  // namespace kgv

#endif  // KGV_SERVICE_HPP
