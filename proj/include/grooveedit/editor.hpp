#pragma once

// Chat-completions editor: prompt -> provider -> extracted groove.
//
// The wire format is the OpenAI-compatible schema
//   request:  {"model", "messages": [{"role": "user", "content": prompt}], "temperature"}
//   reply:    {"choices": [{"message": {"content": ...}}], "usage": {...}}
// The HTTP layer is a plain function so tests and offline runs can swap it.

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "grooveedit/notation.hpp"
#include "grooveedit/prompt.hpp"

namespace grooveedit::editor {

struct ProviderConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4.1-mini";
  /// Name of the environment variable holding the API key; empty for none.
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_seconds = 120.0;
  int max_retries = 3;
  double temperature = 0.0;
  /// First backoff delay; doubles on every retry.
  std::chrono::milliseconds initial_backoff{500};

  void validate() const {
    if (!(timeout_seconds > 0)) throw std::invalid_argument("timeout must be positive");
    if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
    if (model.empty()) throw std::invalid_argument("model must be set");
  }
};

struct HttpRequest {
  std::string url;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
  double timeout_seconds = 120.0;
};

/// status == 0 means the request never produced an HTTP response.
struct HttpReply {
  int status = 0;
  std::string body;
  std::string error;
};

using Transport = std::function<HttpReply(const HttpRequest&)>;

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct EditResult {
  std::string raw;
  Extraction outcome = Malformed{MalformedKind::NoFence, {}};
  double latency_ms = 0.0;
  std::optional<TokenUsage> usage;
  bool from_cache = false;

  bool extracted() const noexcept { return std::holds_alternative<Groove>(outcome); }
  const Groove* edited() const noexcept { return std::get_if<Groove>(&outcome); }
  const Malformed* malformed() const noexcept { return std::get_if<Malformed>(&outcome); }
};

enum class EditorErrorKind { TransportError, AuthError, ProviderError };

class EditorError : public std::runtime_error {
 public:
  EditorError(EditorErrorKind kind, int status, const std::string& detail)
      : std::runtime_error(detail), kind_(kind), status_(status) {}
  EditorErrorKind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }

 private:
  EditorErrorKind kind_;
  int status_;
};

/// 64-bit FNV-1a, hex encoded. Stable across platforms and runs.
inline std::string stable_hash(std::string_view a, std::string_view b = {}) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  mix(a);
  mix(std::string_view("\0", 1));
  mix(b);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct CachedResponse {
  std::string raw;
  double latency_ms = 0.0;
  std::optional<TokenUsage> usage;
  bool from_cache = false;
};

/// Responses on disk at <root>/<model>/<hash(model, prompt)>.json. Each file
/// stores the prompt too, so a hash collision reads as a miss.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const noexcept { return root_; }

  std::filesystem::path path_for(std::string_view model, std::string_view prompt) const {
    std::string dir(model);
    for (char& c : dir) {
      if (c == '/' || c == '\\' || c == ':') c = '_';
    }
    return root_ / dir / (stable_hash(model, prompt) + ".json");
  }

  std::optional<CachedResponse> load(std::string_view model, std::string_view prompt) const {
    std::lock_guard lock(stripe(model, prompt));
    std::ifstream in(path_for(model, prompt), std::ios::binary);
    if (!in) return std::nullopt;
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || doc.value("model", "") != model || doc.value("prompt", "") != prompt ||
        !doc.contains("raw") || !doc["raw"].is_string()) {
      return std::nullopt;
    }
    CachedResponse r;
    r.raw = doc["raw"].get<std::string>();
    r.latency_ms = doc.value("latency_ms", 0.0);
    if (doc.contains("usage") && doc["usage"].is_object()) {
      r.usage = TokenUsage{doc["usage"].value("prompt_tokens", std::int64_t{0}),
                           doc["usage"].value("completion_tokens", std::int64_t{0})};
    }
    return r;
  }

  void store(std::string_view model, std::string_view prompt, const CachedResponse& r) const {
    std::lock_guard lock(stripe(model, prompt));
    const auto path = path_for(model, prompt);
    std::filesystem::create_directories(path.parent_path());
    nlohmann::json doc = {{"model", model}, {"prompt", prompt}, {"raw", r.raw}, {"latency_ms", r.latency_ms}};
    if (r.usage) {
      doc["usage"] = {{"prompt_tokens", r.usage->prompt_tokens},
                      {"completion_tokens", r.usage->completion_tokens}};
    }
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << doc.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  std::mutex& stripe(std::string_view model, std::string_view prompt) const {
    const std::string h = stable_hash(model, prompt);
    return locks_[std::stoull(h.substr(12), nullptr, 16) % locks_.size()];
  }

  std::filesystem::path root_;
  mutable std::array<std::mutex, 16> locks_;
};

inline std::string chat_request_body(const ProviderConfig& cfg, std::string_view prompt) {
  nlohmann::json body = {
      {"model", cfg.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg.temperature},
  };
  return body.dump();
}

inline std::string chat_completions_url(std::string_view base_url) {
  std::string url(base_url);
  while (!url.empty() && url.back() == '/') url.pop_back();
  return url + "/chat/completions";
}

/// Reply text and usage from a chat-completions response body.
inline std::pair<std::string, std::optional<TokenUsage>> parse_chat_reply(std::string_view body) {
  auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw EditorError(EditorErrorKind::ProviderError, 200, "reply is not a JSON object");
  }
  const auto* content = [&]() -> const nlohmann::json* {
    auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty()) return nullptr;
    const auto& first = (*choices)[0];
    if (!first.contains("message") || !first["message"].contains("content")) return nullptr;
    return &first["message"]["content"];
  }();
  if (!content || !content->is_string()) {
    throw EditorError(EditorErrorKind::ProviderError, 200, "reply has no choices[0].message.content");
  }
  std::optional<TokenUsage> usage;
  if (auto u = doc.find("usage"); u != doc.end() && u->is_object()) {
    usage = TokenUsage{u->value("prompt_tokens", std::int64_t{0}), u->value("completion_tokens", std::int64_t{0})};
  }
  return {content->get<std::string>(), usage};
}

inline std::string excerpt(std::string_view s, std::size_t n = 200) {
  return std::string(s.substr(0, n)) + (s.size() > n ? "..." : "");
}

/// One configured model behind a transport. Safe to share between threads;
/// the only mutable state is the optional cache, which locks per key.
class ChatEditor {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  ChatEditor(ProviderConfig cfg, Transport transport, const ResponseCache* cache = nullptr)
      : cfg_(std::move(cfg)), transport_(std::move(transport)), cache_(cache) {
    cfg_.validate();
    sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }

  void set_sleeper(Sleeper s) { sleep_ = std::move(s); }
  const ProviderConfig& config() const noexcept { return cfg_; }

  /// Raw completion for a prompt, served from the cache when present.
  CachedResponse complete(const std::string& prompt) const {
    if (cache_) {
      if (auto hit = cache_->load(cfg_.model, prompt)) {
        hit->from_cache = true;
        return *hit;
      }
    }
    HttpRequest req{chat_completions_url(cfg_.base_url), chat_request_body(cfg_, prompt),
                    {{"Content-Type", "application/json"}}, cfg_.timeout_seconds};
    if (!cfg_.api_key_env.empty()) {
      const char* key = std::getenv(cfg_.api_key_env.c_str());
      if (!key || !*key) {
        throw EditorError(EditorErrorKind::AuthError, 0, "environment variable " + cfg_.api_key_env + " is not set");
      }
      req.headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }

    auto backoff = cfg_.initial_backoff;
    HttpReply reply;
    for (int attempt = 0;; ++attempt) {
      const auto start = std::chrono::steady_clock::now();
      reply = transport_(req);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (reply.status >= 200 && reply.status < 300) {
        auto [text, usage] = parse_chat_reply(reply.body);
        CachedResponse r{std::move(text), ms, usage, false};
        if (cache_) cache_->store(cfg_.model, prompt, r);
        return r;
      }
      if (reply.status == 401 || reply.status == 403) {
        throw EditorError(EditorErrorKind::AuthError, reply.status, "provider rejected credentials: " + excerpt(reply.body));
      }
      const bool retryable = reply.status == 0 || reply.status == 429 || reply.status >= 500;
      if (!retryable) {
        throw EditorError(EditorErrorKind::ProviderError, reply.status,
                          "HTTP " + std::to_string(reply.status) + ": " + excerpt(reply.body));
      }
      if (attempt >= cfg_.max_retries) break;
      sleep_(backoff);
      backoff *= 2;
    }
    if (reply.status == 0) {
      throw EditorError(EditorErrorKind::TransportError, 0, "transport failed: " + reply.error);
    }
    throw EditorError(EditorErrorKind::ProviderError, reply.status,
                      "HTTP " + std::to_string(reply.status) + ": " + excerpt(reply.body));
  }

  /// Asks the model to edit `g`. A reply without a usable groove is returned
  /// as Malformed, never retried.
  EditResult edit(const Groove& g, std::string_view instruction) const {
    const std::string prompt = build_prompt(g, instruction);
    CachedResponse r = complete(prompt);
    EditResult out;
    out.outcome = extract_groove(r.raw);
    out.raw = std::move(r.raw);
    out.latency_ms = r.latency_ms;
    out.usage = r.usage;
    out.from_cache = r.from_cache;
    return out;
  }

 private:
  ProviderConfig cfg_;
  Transport transport_;
  const ResponseCache* cache_;
  Sleeper sleep_;
};

}  // namespace grooveedit::editor
