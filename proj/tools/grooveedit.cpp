// grooveedit: command-line front end for the groove editing toolkit.
//
//   grooveedit validate <file>
//   grooveedit expand --templates T --seeds S --out F
//   grooveedit run --split dev|test --model M --out results.jsonl
//   grooveedit score --results results.jsonl --dataset F [--out report.json]
//   grooveedit report --input report.json --format table|csv|json
//   grooveedit render --groove G --out F.mid
//   grooveedit prompt --groove G --instruction TEXT
//   grooveedit mapping
//   grooveedit serve --bind 127.0.0.1:8080

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "grooveedit/dataset.hpp"
#include "grooveedit/editor.hpp"
#include "grooveedit/harness.hpp"
#include "grooveedit/http_transport.hpp"
#include "grooveedit/midi.hpp"
#include "grooveedit/mock_provider.hpp"
#include "grooveedit/notation.hpp"
#include "grooveedit/prompt.hpp"
#include "grooveedit/service.hpp"

namespace fs = std::filesystem;
using namespace grooveedit;

namespace {

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, std::string_view text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// Published split sizes, shown next to expansion counts for comparison.
constexpr dataset::DatasetStats kReferenceTest{1023, 83, 11, 1116};

void print_stats(const dataset::DatasetStats& s, const dataset::DatasetStats* reference = nullptr) {
  const auto line = [&](std::string_view name, std::size_t n, std::size_t ref) {
    std::cout << "  " << std::left << std::setw(12) << name << std::right << std::setw(6) << n;
    if (reference) std::cout << "   (reference " << ref << ")";
    std::cout << '\n';
  };
  line("specific", s.specific, reference ? reference->specific : 0);
  line("descriptive", s.descriptive, reference ? reference->descriptive : 0);
  line("stylistic", s.stylistic, reference ? reference->stylistic : 0);
  line("total", s.total, reference ? reference->total : 0);
}

struct DataPaths {
  std::string dir = GROOVEEDIT_DATA_DIR;
  fs::path dev() const { return fs::path(dir) / "dev.jsonl"; }
  fs::path templates() const { return fs::path(dir) / "templates.jsonl"; }
  fs::path seeds() const { return fs::path(dir) / "seeds.jsonl"; }
};

std::vector<dataset::Example> load_split(const DataPaths& data, const std::string& split) {
  if (split == "dev") return dataset::load_examples(data.dev());
  if (split == "test") {
    return dataset::expand_templates(dataset::load_templates(data.templates()), dataset::load_seeds(data.seeds()));
  }
  throw CLI::ValidationError("--split", "must be dev or test");
}

struct ProviderOptions {
  editor::ProviderConfig cfg;
  std::string provider = "http";
  std::string cache_dir = "cache";
  bool no_cache = false;

  void add_to(CLI::App* app) {
    cfg.base_url = env_or("GROOVEEDIT_PROVIDER_URL", cfg.base_url);
    cfg.api_key_env = env_or("GROOVEEDIT_API_KEY_ENV", cfg.api_key_env);
    app->add_option("--model,-m", cfg.model, "Model name sent to the provider")->capture_default_str();
    app->add_option("--base-url", cfg.base_url, "OpenAI-compatible API base URL")->capture_default_str();
    app->add_option("--api-key-env", cfg.api_key_env, "Environment variable holding the API key ('' for none)")
        ->capture_default_str();
    app->add_option("--timeout", cfg.timeout_seconds, "Request timeout in seconds")->capture_default_str();
    app->add_option("--retries", cfg.max_retries, "Retries on transport/5xx/429 errors")->capture_default_str();
    app->add_option("--temperature", cfg.temperature)->capture_default_str();
    app->add_option("--provider", provider, "http, mock-echo or mock-nofence")
        ->check(CLI::IsMember({"http", "mock-echo", "mock-nofence"}))
        ->capture_default_str();
    app->add_option("--cache", cache_dir, "Response cache directory")->capture_default_str();
    app->add_flag("--no-cache", no_cache, "Do not read or write the response cache");
  }

  editor::Transport transport() const {
    if (provider == "mock-echo") return editor::mock_transport(editor::echo_reply());
    if (provider == "mock-nofence") return editor::mock_transport(editor::no_fence_reply());
    return editor::http_transport();
  }

  editor::ProviderConfig config() const {
    auto c = cfg;
    if (provider != "http") c.api_key_env.clear();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instruction-driven drum groove editing: notation, unit tests, LLM runs and MIDI export"};
  app.require_subcommand(1);
  DataPaths data;
  app.add_option("--data", data.dir, "Directory holding dev.jsonl, templates.jsonl and seeds.jsonl")
      ->capture_default_str();

  // validate
  std::string validate_path;
  std::string validate_kind = "auto";
  auto* validate = app.add_subcommand("validate", "Check a groove file or a dataset file");
  validate->add_option("file", validate_path, "Groove text, examples, templates or seeds ('-' for stdin)")->required();
  validate->add_option("--kind", validate_kind, "groove, examples, templates, seeds or auto")
      ->check(CLI::IsMember({"auto", "groove", "examples", "templates", "seeds"}));

  // expand
  std::string templates_path, seeds_path, expand_out = "-";
  auto* expand = app.add_subcommand("expand", "Instantiate templates over seed grooves");
  expand->add_option("--templates,-t", templates_path)->required();
  expand->add_option("--seeds,-s", seeds_path)->required();
  expand->add_option("--out,-o", expand_out)->capture_default_str();

  // run
  std::string split = "dev", run_dataset, run_out = "results.jsonl";
  int parallelism = 4;
  ProviderOptions run_provider;
  auto* run = app.add_subcommand("run", "Ask a model to edit every example and record verdicts");
  run->add_option("--split", split, "dev or test")->check(CLI::IsMember({"dev", "test"}))->capture_default_str();
  run->add_option("--dataset", run_dataset, "Examples JSONL (overrides --split)");
  run->add_option("--out,-o", run_out)->capture_default_str();
  run->add_option("--parallelism,-j", parallelism)->check(CLI::PositiveNumber)->capture_default_str();
  run_provider.add_to(run);

  // score
  std::string results_path, score_dataset, score_out, score_model, score_format = "table";
  std::string score_split = "dev";
  auto* score = app.add_subcommand("score", "Aggregate a results file into a pass-rate report");
  score->add_option("--results,-r", results_path)->required();
  score->add_option("--dataset", score_dataset, "Examples JSONL (overrides --split)");
  score->add_option("--split", score_split)->check(CLI::IsMember({"dev", "test"}))->capture_default_str();
  score->add_option("--model", score_model, "Model name recorded in the report");
  score->add_option("--out,-o", score_out, "Also write the report as JSON here");
  score->add_option("--format", score_format)->check(CLI::IsMember({"table", "csv", "json"}))->capture_default_str();

  // report
  std::string report_in, report_format = "table";
  auto* report = app.add_subcommand("report", "Render a saved report");
  report->add_option("--input,-i", report_in, "Report JSON from 'score --out'")->required();
  report->add_option("--format", report_format)->check(CLI::IsMember({"table", "csv", "json"}))->capture_default_str();

  // render
  std::string render_groove, render_out;
  midi::MidiConfig midi_cfg;
  auto* render = app.add_subcommand("render", "Write a groove as a Standard MIDI File");
  render->add_option("--groove,-g", render_groove, "Drumroll text file ('-' for stdin)")->required();
  render->add_option("--out,-o", render_out)->required();
  render->add_option("--bpm", midi_cfg.bpm)->capture_default_str();
  render->add_option("--repeats", midi_cfg.repeats)->capture_default_str();
  render->add_option("--ppq", midi_cfg.ppq)->capture_default_str();

  // prompt
  std::string prompt_groove, prompt_instruction;
  auto* prompt = app.add_subcommand("prompt", "Print the edit prompt for a groove and instruction");
  prompt->add_option("--groove,-g", prompt_groove)->required();
  prompt->add_option("--instruction,-i", prompt_instruction)->required();

  auto* mapping = app.add_subcommand("mapping", "Print the General MIDI drum map");

  // serve
  std::string bind = env_or("GROOVEEDIT_BIND", "127.0.0.1:8080");
  ProviderOptions serve_provider;
  auto* serve = app.add_subcommand("serve", "Start the HTTP API");
  serve->add_option("--bind", bind, "host:port")->capture_default_str();
  serve_provider.add_to(serve);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const std::string text = read_text(validate_path);
      std::string kind = validate_kind;
      if (kind == "auto") {
        const std::string name = fs::path(validate_path).filename().string();
        if (name.find("template") != std::string::npos) {
          kind = "templates";
        } else if (name.find("seed") != std::string::npos) {
          kind = "seeds";
        } else {
          kind = fs::path(validate_path).extension() == ".jsonl" ? "examples" : "groove";
        }
      }
      if (kind == "groove") {
        std::cout << serialize_groove(parse_groove(text)) << '\n';
      } else if (kind == "examples") {
        auto rows = dataset::parse_examples(text);
        std::cout << rows.size() << " examples OK\n";
        print_stats(dataset::dataset_stats(rows));
      } else if (kind == "templates") {
        std::cout << dataset::parse_templates(text).size() << " templates OK\n";
      } else {
        std::cout << dataset::parse_seeds(text).size() << " seeds OK\n";
      }
      return 0;
    }

    if (*expand) {
      auto rows = dataset::expand_templates(dataset::load_templates(templates_path), dataset::load_seeds(seeds_path));
      write_text(expand_out, dataset::examples_to_jsonl(rows));
      if (expand_out != "-") {
        std::cout << "wrote " << rows.size() << " examples to " << expand_out << '\n';
        print_stats(dataset::dataset_stats(rows), &kReferenceTest);
      }
      return 0;
    }

    if (*run) {
      auto examples = run_dataset.empty() ? load_split(data, split) : dataset::load_examples(run_dataset);
      std::unique_ptr<editor::ResponseCache> cache;
      if (!run_provider.no_cache) cache = std::make_unique<editor::ResponseCache>(run_provider.cache_dir);
      editor::ChatEditor ed(run_provider.config(), run_provider.transport(), cache.get());
      auto records = harness::run_eval(examples, harness::edit_fn(ed), parallelism);
      write_text(run_out, harness::records_to_jsonl(records));
      auto rep = harness::score(records, examples, run_provider.cfg.model, run_dataset.empty() ? split : run_dataset);
      std::cout << harness::render_report(rep, harness::ReportFormat::Table);
      return 0;
    }

    if (*score) {
      auto examples = score_dataset.empty() ? load_split(data, score_split) : dataset::load_examples(score_dataset);
      auto records = harness::parse_records(read_text(results_path));
      auto rep = harness::score(records, examples, score_model, score_dataset.empty() ? score_split : score_dataset);
      if (!score_out.empty()) write_text(score_out, harness::render_report(rep, harness::ReportFormat::Json));
      std::cout << harness::render_report(rep, *harness::report_format_from_string(score_format));
      return 0;
    }

    if (*report) {
      auto rep = harness::report_from_json(nlohmann::json::parse(read_text(report_in)));
      std::cout << harness::render_report(rep, *harness::report_format_from_string(report_format));
      return 0;
    }

    if (*render) {
      const auto bytes = midi::groove_to_midi(parse_groove(read_text(render_groove)), midi_cfg);
      write_text(render_out, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      return 0;
    }

    if (*prompt) {
      std::cout << build_prompt(parse_groove(read_text(prompt_groove)), prompt_instruction) << '\n';
      return 0;
    }

    if (*mapping) {
      std::cout << midi::describe_mapping();
      return 0;
    }

    if (*serve) {
      auto cfg = service::config_from_env();
      cfg.allowed_models.insert(serve_provider.cfg.model);
      if (!std::getenv("GROOVEEDIT_MODELS")) cfg.default_model = serve_provider.cfg.model;
      cfg.splits["dev"] = dataset::load_examples(data.dev());
      cfg.splits["test"] = load_split(data, "test");
      auto cache = std::make_shared<editor::ResponseCache>(serve_provider.cache_dir);
      const bool use_cache = !serve_provider.no_cache;
      service::Service svc(cfg, [&serve_provider, cache, use_cache](const std::string& model) {
        auto pc = serve_provider.config();
        pc.model = model;
        return std::make_shared<const editor::ChatEditor>(pc, serve_provider.transport(),
                                                          use_cache ? cache.get() : nullptr);
      });
      httplib::Server server;
      svc.mount(server);
      const auto colon = bind.rfind(':');
      const std::string host = colon == std::string::npos ? bind : bind.substr(0, colon);
      const int port = colon == std::string::npos ? 8080 : std::stoi(bind.substr(colon + 1));
      std::cerr << "listening on " << host << ':' << port << '\n';
      return server.listen(host, port) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
