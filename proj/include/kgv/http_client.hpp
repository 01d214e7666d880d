#ifndef KGV_HTTP_CLIENT_HPP
#define KGV_HTTP_CLIENT_HPP

// Live service clients: HTTP endpoints speaking the JSON wire protocol and a
// line-oriented subprocess NER extractor. Kept out of kgv.hpp so that users
// of the pure engine do not pull in cpp-httplib.

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "kgv/error.hpp"
#include "kgv/service.hpp"

namespace kgv {

struct ServiceEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080/v1/generate
  std::chrono::milliseconds timeout{30000};
  int max_in_flight = 4;
  int max_retries = 1;
  std::optional<std::string> auth_token;
};

struct ServiceEndpoints {
  std::optional<ServiceEndpoint> generation;  // also serves captioning
  std::optional<ServiceEndpoint> embedding;
  std::optional<ServiceEndpoint> ner;
};

/// Endpoints from KGV_GEN_URL, KGV_EMBED_URL, KGV_NER_URL and KGV_AUTH_TOKEN.
inline ServiceEndpoints endpoints_from_env() {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  auto token = env("KGV_AUTH_TOKEN");
  auto make = [&](const char* name) -> std::optional<ServiceEndpoint> {
    auto url = env(name);
    if (!url) return std::nullopt;
    ServiceEndpoint ep;
    ep.base_url = *url;
    ep.auth_token = token;
    return ep;
  };
  return {make("KGV_GEN_URL"), make("KGV_EMBED_URL"), make("KGV_NER_URL")};
}

namespace detail {

/// One endpoint: connection settings, an in-flight limit and retry policy.
class JsonEndpoint {
 public:
  explicit JsonEndpoint(ServiceEndpoint ep) : ep_(std::move(ep)), slots_(ep_.max_in_flight) {
    if (ep_.timeout.count() <= 0) throw std::invalid_argument("endpoint timeout must be positive");
    if (ep_.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
    auto scheme_end = ep_.base_url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint URL needs a scheme: " + ep_.base_url);
    auto path_start = ep_.base_url.find('/', scheme_end + 3);
    origin_ = ep_.base_url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : ep_.base_url.substr(path_start);
  }

  nlohmann::json post(const nlohmann::json& body) {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};

    std::string last_error;
    for (int attempt = 0; attempt <= ep_.max_retries; ++attempt) {
      httplib::Client client(origin_);
      client.set_connection_timeout(ep_.timeout);
      client.set_read_timeout(ep_.timeout);
      client.set_write_timeout(ep_.timeout);
      httplib::Headers headers;
      if (ep_.auth_token) headers.emplace("Authorization", "Bearer " + *ep_.auth_token);
      auto res = client.Post(path_, headers, body.dump(), "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw ServiceUnavailable(ep_.base_url + " answered HTTP " + std::to_string(res->status));
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError(ep_.base_url + " returned invalid JSON: " + e.what());
      }
    }
    throw ServiceUnavailable(ep_.base_url + " unreachable: " + last_error);
  }

 private:
  ServiceEndpoint ep_;
  std::counting_semaphore<> slots_;
  std::string origin_;
  std::string path_;
};

inline std::string read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

/// HTTP client for the generation, embedding and NER protocols. Captioning
/// goes through the generation endpoint with the image attached as base64.
class HttpServiceClient final : public CaptionClient,
                                public GenerationClient,
                                public EmbeddingClient,
                                public NerClient {
 public:
  explicit HttpServiceClient(const ServiceEndpoints& endpoints) {
    if (endpoints.generation) generation_ = std::make_unique<detail::JsonEndpoint>(*endpoints.generation);
    if (endpoints.embedding) embedding_ = std::make_unique<detail::JsonEndpoint>(*endpoints.embedding);
    if (endpoints.ner) ner_ = std::make_unique<detail::JsonEndpoint>(*endpoints.ner);
  }

  bool has_generation() const { return generation_ != nullptr; }
  bool has_embedding() const { return embedding_ != nullptr; }
  bool has_ner() const { return ner_ != nullptr; }

  std::string caption_image(std::string_view image_ref, std::string_view prompt) override {
    std::string bytes = detail::read_binary(std::string(image_ref));
    if (bytes.empty()) throw ServiceUnavailable("image '" + std::string(image_ref) + "' is not a readable file");
    return generate("", prompt, httplib::detail::base64_encode(bytes));
  }

  std::string generate(std::string_view system, std::string_view prompt,
                       const std::optional<std::string>& image) override {
    return protocol::parse_text_reply(
        require(generation_, "generation").post(protocol::generation_request(system, prompt, image)));
  }

  EmbeddingBatch embed(const std::vector<std::string>& texts) override {
    return protocol::parse_embed_reply(require(embedding_, "embedding").post(protocol::embed_request(texts)),
                                       texts.size());
  }

  std::vector<NerEntity> recognize(std::string_view text) override {
    return protocol::parse_ner_reply(require(ner_, "NER").post(protocol::ner_request(text)));
  }

 private:
  static detail::JsonEndpoint& require(const std::unique_ptr<detail::JsonEndpoint>& ep, const char* what) {
    if (!ep) throw ServiceUnavailable(std::string("no ") + what + " endpoint configured");
    return *ep;
  }

  std::unique_ptr<detail::JsonEndpoint> generation_;
  std::unique_ptr<detail::JsonEndpoint> embedding_;
  std::unique_ptr<detail::JsonEndpoint> ner_;
};

/// NER over a long-lived subprocess: one JSON request per line on stdin,
/// one JSON reply per line on stdout.
class StdioNerClient final : public NerClient {
 public:
  explicit StdioNerClient(const std::string& command,
                          std::chrono::milliseconds timeout = std::chrono::milliseconds(10000))
      : timeout_(timeout) {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) throw ServiceUnavailable("pipe() failed");
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw ServiceUnavailable("pipe() failed");
    }
    pid_ = fork();
    if (pid_ < 0) throw ServiceUnavailable("fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    signal(SIGPIPE, SIG_IGN);
  }

  StdioNerClient(const StdioNerClient&) = delete;
  StdioNerClient& operator=(const StdioNerClient&) = delete;

  ~StdioNerClient() override {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == 0) {
        kill(pid_, SIGTERM);
        waitpid(pid_, &status, 0);
      }
    }
  }

  std::vector<NerEntity> recognize(std::string_view text) override {
    std::lock_guard lock(mutex_);
    std::string line = protocol::ner_request(text).dump() + "\n";
    std::size_t sent = 0;
    while (sent < line.size()) {
      auto n = ::write(write_fd_, line.data() + sent, line.size() - sent);
      if (n <= 0) throw ServiceUnavailable("NER subprocess closed its input");
      sent += static_cast<std::size_t>(n);
    }
    std::string reply = read_line();
    try {
      return protocol::parse_ner_reply(nlohmann::json::parse(reply));
    } catch (const nlohmann::json::parse_error& e) {
      throw ProtocolError(std::string("NER subprocess sent invalid JSON: ") + e.what());
    }
  }

 private:
  std::string read_line() {
    auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (true) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw ServiceUnavailable("NER subprocess timed out");
      pollfd pfd{read_fd_, POLLIN, 0};
      int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready == 0) throw ServiceUnavailable("NER subprocess timed out");
      if (ready < 0) throw ServiceUnavailable("poll() failed on NER subprocess");
      char chunk[4096];
      auto n = ::read(read_fd_, chunk, sizeof chunk);
      if (n <= 0) throw ServiceUnavailable("NER subprocess exited");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
  std::mutex mutex_;
};

}  // namespace kgv

#endif  // KGV_HTTP_CLIENT_HPP
