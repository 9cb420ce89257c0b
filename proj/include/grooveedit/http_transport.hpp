#pragma once

// cpp-httplib backed transport for ChatEditor. https:// URLs need the build
// to define CPPHTTPLIB_OPENSSL_SUPPORT.

#include <string>
#include <string_view>

#include <httplib.h>

#include "grooveedit/editor.hpp"

namespace grooveedit::editor {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // begins with '/'
};

inline SplitUrl split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  const std::size_t host_start = scheme_end == std::string_view::npos ? 0 : scheme_end + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

inline Transport http_transport() {
  return [](const HttpRequest& req) -> HttpReply {
    const SplitUrl target = split_url(req.url);
    httplib::Client client(target.origin);
    const auto whole = static_cast<time_t>(req.timeout_seconds);
    const auto micros = static_cast<time_t>((req.timeout_seconds - static_cast<double>(whole)) * 1e6);
    client.set_connection_timeout(whole, micros);
    client.set_read_timeout(whole, micros);
    client.set_write_timeout(whole, micros);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : req.headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        headers.emplace(k, v);
      }
    }
    auto res = client.Post(target.path, headers, req.body, content_type);
    if (!res) return {0, {}, httplib::to_string(res.error())};
    return {res->status, res->body, {}};
  };
}

}  // namespace grooveedit::editor
