#pragma once

// JSON-over-HTTP facade for the editing UI and scripts.
//
//   POST /api/validate  {groove}                         -> {ok, normalized?, errors?}
//   POST /api/edit      {groove, instruction, model?}    -> {edited, raw, malformed_reason}
//   POST /api/test      {original, edited, test}         -> {pass}
//   POST /api/midi      {groove, bpm?, repeats?}         -> audio/midi bytes
//   GET  /api/dataset/<split>                            -> [example, ...]
//
// Every non-2xx body is {"error": {"code", "message", "detail"?}} with code
// one of bad_groove, bad_test, provider_error, not_found.

#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "grooveedit/dataset.hpp"
#include "grooveedit/dsl.hpp"
#include "grooveedit/editor.hpp"
#include "grooveedit/midi.hpp"
#include "grooveedit/notation.hpp"

namespace grooveedit::service {

using nlohmann::json;

struct ServiceConfig {
  std::string default_model = "gpt-4.1-mini";
  std::set<std::string> allowed_models = {"gpt-4.1-mini"};
  std::string cors_origin = "*";
  std::map<std::string, std::vector<dataset::Example>> splits;
};

/// Builds the editor for an allowlisted model.
using EditorFactory = std::function<std::shared_ptr<const editor::ChatEditor>(const std::string& model)>;

/// Reads GROOVEEDIT_MODELS (comma separated; first is the default) and
/// GROOVEEDIT_CORS_ORIGIN on top of `base`.
inline ServiceConfig config_from_env(ServiceConfig base = {}) {
  if (const char* models = std::getenv("GROOVEEDIT_MODELS"); models && *models) {
    base.allowed_models.clear();
    std::string list(models);
    std::size_t start = 0;
    bool first = true;
    while (start <= list.size()) {
      auto comma = list.find(',', start);
      std::string m(detail::trim(std::string_view(list).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (!m.empty()) {
        if (first) base.default_model = m;
        first = false;
        base.allowed_models.insert(m);
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (const char* origin = std::getenv("GROOVEEDIT_CORS_ORIGIN"); origin && *origin) base.cors_origin = origin;
  return base;
}

class Service {
 public:
  Service(ServiceConfig cfg, EditorFactory factory) : cfg_(std::move(cfg)), factory_(std::move(factory)) {}

  void mount(httplib::Server& server) const {
    server.set_default_headers({{"Access-Control-Allow-Origin", cfg_.cors_origin},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Post("/api/validate", [this](const auto& req, auto& res) { validate(req, res); });
    server.Post("/api/edit", [this](const auto& req, auto& res) { edit(req, res); });
    server.Post("/api/test", [this](const auto& req, auto& res) { test(req, res); });
    server.Post("/api/midi", [this](const auto& req, auto& res) { midi(req, res); });
    server.Get(R"(/api/dataset/([A-Za-z0-9_-]+))", [this](const auto& req, auto& res) { dataset(req, res); });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty() && res.status == 404) error(res, 404, "not_found", "no such endpoint");
    });
  }

  static void error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                    std::optional<json> detail = std::nullopt) {
    json body = {{"error", {{"code", code}, {"message", message}}}};
    if (detail) body["error"]["detail"] = *detail;
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

 private:
  static void ok(httplib::Response& res, const json& body) {
    res.status = 200;
    res.set_content(body.dump(), "application/json");
  }

  // Parses the body as a JSON object; on failure writes a 400 with `code`.
  static std::optional<json> body_of(const httplib::Request& req, httplib::Response& res, std::string_view code) {
    json doc = json::parse(req.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      error(res, 400, code, "request body must be a JSON object");
      return std::nullopt;
    }
    return doc;
  }

  static std::optional<std::string> string_field(const json& doc, const char* key, httplib::Response& res,
                                                 std::string_view code) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) {
      error(res, 400, code, std::string("missing string field '") + key + "'");
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  static std::optional<Groove> groove_field(const json& doc, const char* key, httplib::Response& res) {
    auto text = string_field(doc, key, res, "bad_groove");
    if (!text) return std::nullopt;
    try {
      return parse_groove(*text);
    } catch (const NotationError& e) {
      error(res, 400, "bad_groove", e.what(),
            json{{"field", key}, {"kind", to_string(e.kind())}, {"line", e.line()}});
      return std::nullopt;
    }
  }

  void validate(const httplib::Request& req, httplib::Response& res) const {
    auto doc = body_of(req, res, "bad_groove");
    if (!doc) return;
    auto text = string_field(*doc, "groove", res, "bad_groove");
    if (!text) return;
    try {
      ok(res, {{"ok", true}, {"normalized", serialize_groove(parse_groove(*text))}});
    } catch (const NotationError& e) {
      ok(res, {{"ok", false},
               {"errors", json::array({{{"kind", to_string(e.kind())}, {"line", e.line()}, {"message", e.what()}}})}});
    }
  }

  void edit(const httplib::Request& req, httplib::Response& res) const {
    auto doc = body_of(req, res, "bad_groove");
    if (!doc) return;
    auto groove = groove_field(*doc, "groove", res);
    if (!groove) return;
    auto instruction = string_field(*doc, "instruction", res, "bad_groove");
    if (!instruction) return;
    std::string model = cfg_.default_model;
    if (auto m = doc->find("model"); m != doc->end() && m->is_string()) model = m->get<std::string>();
    if (!cfg_.allowed_models.count(model)) {
      error(res, 404, "not_found", "model '" + model + "' is not available");
      return;
    }
    try {
      auto ed = factory_(model);
      const editor::EditResult r = ed->edit(*groove, *instruction);
      json body = {{"raw", r.raw}, {"model", model}, {"latency_ms", r.latency_ms}};
      if (const Groove* g = r.edited()) {
        body["edited"] = serialize_groove(*g);
        body["malformed_reason"] = nullptr;
      } else {
        body["edited"] = nullptr;
        body["malformed_reason"] = std::string(to_string(r.malformed()->kind));
        body["malformed_detail"] = r.malformed()->detail;
      }
      ok(res, body);
    } catch (const editor::EditorError& e) {
      error(res, 502, "provider_error", e.what(), json{{"status", e.status()}});
    }
  }

  void test(const httplib::Request& req, httplib::Response& res) const {
    auto doc = body_of(req, res, "bad_test");
    if (!doc) return;
    auto original = groove_field(*doc, "original", res);
    if (!original) return;
    auto edited = groove_field(*doc, "edited", res);
    if (!edited) return;
    auto source = string_field(*doc, "test", res, "bad_test");
    if (!source) return;
    try {
      const auto expr = dsl::parse_test_expr(*source);
      ok(res, {{"pass", dsl::evaluate(expr, {*original, *edited})}});
    } catch (const dsl::ExprError& e) {
      error(res, 400, "bad_test", e.what(), json{{"kind", to_string(e.kind())}, {"offset", e.offset()}});
    }
  }

  void midi(const httplib::Request& req, httplib::Response& res) const {
    auto doc = body_of(req, res, "bad_groove");
    if (!doc) return;
    auto groove = groove_field(*doc, "groove", res);
    if (!groove) return;
    midi::MidiConfig cfg;
    for (auto [key, slot] : {std::pair{"bpm", &cfg.bpm}, std::pair{"repeats", &cfg.repeats}}) {
      if (auto it = doc->find(key); it != doc->end()) {
        if (!it->is_number_integer()) {
          error(res, 400, "bad_groove", std::string("'") + key + "' must be an integer");
          return;
        }
        *slot = it->get<int>();
      }
    }
    try {
      const auto bytes = midi::groove_to_midi(*groove, cfg);
      res.status = 200;
      res.set_header("Content-Disposition", "attachment; filename=\"groove.mid\"");
      res.set_content(std::string(bytes.begin(), bytes.end()), "audio/midi");
    } catch (const std::invalid_argument& e) {
      error(res, 400, "bad_groove", e.what());
    }
  }

  void dataset(const httplib::Request& req, httplib::Response& res) const {
    const std::string split = req.matches[1];
    auto it = cfg_.splits.find(split);
    if (it == cfg_.splits.end()) {
      error(res, 404, "not_found", "unknown split '" + split + "'");
      return;
    }
    json rows = json::array();
    for (const auto& ex : it->second) rows.push_back(dataset::example_to_json(ex));
    ok(res, rows);
  }

  ServiceConfig cfg_;
  EditorFactory factory_;
};

}  // namespace grooveedit::service
