#pragma once

// In-process chat-completions providers for offline runs and tests. Each one
// answers with a well-formed OpenAI-style body built from a reply function.

#include <functional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "grooveedit/editor.hpp"
#include "grooveedit/prompt.hpp"

namespace grooveedit::editor {

using ReplyFn = std::function<std::string(const std::string& prompt)>;

inline std::string chat_reply_body(std::string_view content) {
  nlohmann::json body = {
      {"object", "chat.completion"},
      {"choices", nlohmann::json::array({{{"index", 0},
                                          {"message", {{"role", "assistant"}, {"content", content}}},
                                          {"finish_reason", "stop"}}})},
      {"usage", {{"prompt_tokens", 0}, {"completion_tokens", 0}}},
  };
  return body.dump();
}

/// Wraps a reply function as a transport. Requests that are not valid
/// chat-completions bodies get a 400, like a real provider would give.
inline Transport mock_transport(ReplyFn reply) {
  return [reply = std::move(reply)](const HttpRequest& req) -> HttpReply {
    auto doc = nlohmann::json::parse(req.body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("messages") || !doc["messages"].is_array() ||
        doc["messages"].empty() || !doc["messages"].back().contains("content")) {
      return {400, R"({"error":{"message":"bad request"}})", {}};
    }
    return {200, chat_reply_body(reply(doc["messages"].back()["content"].get<std::string>())), {}};
  };
}

/// The groove text the prompt asks to edit, or empty if absent.
inline std::string given_groove_text(std::string_view prompt) {
  const std::string marker = std::string(kGivenGrooveHeader) + std::string(kFence) + "\n";
  const auto start = prompt.find(marker);
  if (start == std::string_view::npos) return {};
  const auto body = start + marker.size();
  const auto end = prompt.find(std::string("\n") + std::string(kFence), body);
  if (end == std::string_view::npos) return {};
  return std::string(prompt.substr(body, end - body));
}

/// Returns the original groove unchanged.
inline ReplyFn echo_reply() {
  return [](const std::string& prompt) {
    return "No change needed.\n" + fenced(given_groove_text(prompt)) + "\n";
  };
}

/// Prose only, never a fence.
inline ReplyFn no_fence_reply() {
  return [](const std::string&) { return std::string("I would remove the kick drum and keep the rest."); };
}

/// Always the same text.
inline ReplyFn fixed_reply(std::string text) {
  return [text = std::move(text)](const std::string&) { return text; };
}

}  // namespace grooveedit::editor
