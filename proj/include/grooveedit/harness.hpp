#pragma once

// Runs an editor over a list of examples, applies each example's unit test
// and aggregates pass rates per category.
//
// A reply without a parseable groove fails without its test being run.
// Malformed replies count in every denominator.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "grooveedit/dataset.hpp"
#include "grooveedit/dsl.hpp"
#include "grooveedit/editor.hpp"

namespace grooveedit::harness {

enum class Verdict { Pass, UnitTestFailed, Malformed };

constexpr std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pass: return "Pass";
    case Verdict::UnitTestFailed: return "UnitTestFailed";
    case Verdict::Malformed: return "Malformed";
  }
  return "?";
}

struct RunRecord {
  std::string id;
  editor::EditResult result;
  Verdict verdict = Verdict::Malformed;

  bool passed() const noexcept { return verdict == Verdict::Pass; }
};

/// Verdict of an edit against an example's test.
inline Verdict judge(const dataset::Example& ex, const editor::EditResult& r) {
  const Groove* edited = r.edited();
  if (!edited) return Verdict::Malformed;
  return dsl::evaluate(ex.test, {ex.original, *edited}) ? Verdict::Pass : Verdict::UnitTestFailed;
}

using EditFn = std::function<editor::EditResult(const Groove&, const std::string&)>;

inline EditFn edit_fn(const editor::ChatEditor& ed) {
  return [&ed](const Groove& g, const std::string& instruction) { return ed.edit(g, instruction); };
}

/// One record per example, sorted by example id. Transport and provider
/// failures become Malformed(Transport) records; authentication failures
/// abort the run since every later request would fail the same way.
inline std::vector<RunRecord> run_eval(const std::vector<dataset::Example>& examples, const EditFn& edit,
                                       int parallelism = 4) {
  if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  std::vector<RunRecord> records(examples.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= examples.size()) return;
      const auto& ex = examples[i];
      RunRecord rec;
      rec.id = ex.id;
      try {
        rec.result = edit(ex.original, ex.instruction);
      } catch (const editor::EditorError& e) {
        if (e.kind() == editor::EditorErrorKind::AuthError) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
          abort = true;
          return;
        }
        rec.result.outcome = Malformed{MalformedKind::Transport, e.what()};
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        abort = true;
        return;
      }
      rec.verdict = judge(ex, rec.result);
      records[i] = std::move(rec);
    }
  };

  const auto threads = static_cast<std::size_t>(parallelism);
  if (threads == 1 || examples.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, examples.size()); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return records;
}

struct CategoryScore {
  std::size_t n = 0;
  std::size_t passed = 0;

  double pass_rate() const noexcept { return n == 0 ? 0.0 : static_cast<double>(passed) / static_cast<double>(n); }
  friend bool operator==(const CategoryScore&, const CategoryScore&) = default;
};

struct Report {
  std::string model;
  std::string split;
  std::map<dataset::Category, CategoryScore> categories;
  CategoryScore overall;
  std::size_t malformed = 0;

  friend bool operator==(const Report&, const Report&) = default;
};

class ScoreError : public std::runtime_error {
 public:
  explicit ScoreError(const std::string& id)
      : std::runtime_error("MissingRecord: no record for example " + id), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

inline Report score(const std::vector<RunRecord>& records, const std::vector<dataset::Example>& examples,
                    std::string model = {}, std::string split = {}) {
  std::map<std::string, const RunRecord*, std::less<>> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);
  Report rep;
  rep.model = std::move(model);
  rep.split = std::move(split);
  for (auto c : dataset::kAllCategories) rep.categories[c] = {};
  for (const auto& ex : examples) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) throw ScoreError(ex.id);
    auto& cat = rep.categories[ex.category];
    ++cat.n;
    ++rep.overall.n;
    if (it->second->passed()) {
      ++cat.passed;
      ++rep.overall.passed;
    }
    if (it->second->verdict == Verdict::Malformed) ++rep.malformed;
  }
  return rep;
}

enum class ReportFormat { Table, Csv, Json };

inline std::optional<ReportFormat> report_format_from_string(std::string_view s) {
  if (s == "table") return ReportFormat::Table;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  return std::nullopt;
}

namespace detail {

inline std::string percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", rate * 100.0);
  return buf;
}

inline double round_to(double v, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(v * scale) / scale;
}

}  // namespace detail

inline nlohmann::json report_to_json(const Report& rep) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& [c, s] : rep.categories) {
    cats.push_back({{"category", std::string(dataset::to_string(c))},
                    {"n", s.n},
                    {"passed", s.passed},
                    {"pass_rate", detail::round_to(s.pass_rate(), 6)}});
  }
  return {{"model", rep.model},
          {"split", rep.split},
          {"categories", cats},
          {"overall",
           {{"n", rep.overall.n},
            {"passed", rep.overall.passed},
            {"pass_rate", detail::round_to(rep.overall.pass_rate(), 6)}}},
          {"malformed", rep.malformed}};
}

inline Report report_from_json(const nlohmann::json& doc) {
  Report rep;
  rep.model = doc.at("model").get<std::string>();
  rep.split = doc.at("split").get<std::string>();
  for (const auto& c : doc.at("categories")) {
    auto cat = dataset::category_from_string(c.at("category").get<std::string>());
    if (!cat) throw std::runtime_error("unknown category in report");
    rep.categories[*cat] = {c.at("n").get<std::size_t>(), c.at("passed").get<std::size_t>()};
  }
  rep.overall = {doc.at("overall").at("n").get<std::size_t>(), doc.at("overall").at("passed").get<std::size_t>()};
  rep.malformed = doc.at("malformed").get<std::size_t>();
  return rep;
}

/// One row per category plus an "overall" row. Rates are percentages with
/// one decimal in table and csv form.
inline std::string render_report(const Report& rep, ReportFormat fmt) {
  std::ostringstream out;
  switch (fmt) {
    case ReportFormat::Table: {
      out << "model: " << (rep.model.empty() ? "-" : rep.model) << "   split: " << (rep.split.empty() ? "-" : rep.split)
          << "   malformed: " << rep.malformed << '\n';
      out << std::left << std::setw(13) << "category" << std::right << std::setw(6) << "n" << std::setw(8) << "passed"
          << std::setw(9) << "% pass" << '\n';
      const auto row = [&](std::string_view name, const CategoryScore& s) {
        out << std::left << std::setw(13) << name << std::right << std::setw(6) << s.n << std::setw(8) << s.passed
            << std::setw(9) << detail::percent(s.pass_rate()) << '\n';
      };
      for (const auto& [c, s] : rep.categories) row(dataset::to_string(c), s);
      row("overall", rep.overall);
      break;
    }
    case ReportFormat::Csv: {
      out << "category,n,passed,pass_rate_pct\n";
      for (const auto& [c, s] : rep.categories) {
        out << dataset::to_string(c) << ',' << s.n << ',' << s.passed << ',' << detail::percent(s.pass_rate()) << '\n';
      }
      out << "overall," << rep.overall.n << ',' << rep.overall.passed << ',' << detail::percent(rep.overall.pass_rate())
          << '\n';
      break;
    }
    case ReportFormat::Json: out << report_to_json(rep).dump(2) << '\n'; break;
  }
  return out.str();
}

// Results file: one JSON object per record,
//   {"id", "raw", "edited" (drumroll or null), "malformed_reason" (or null),
//    "pass", "latency_ms"}

inline nlohmann::json record_to_json(const RunRecord& r) {
  nlohmann::json j = {{"id", r.id}, {"raw", r.result.raw}, {"pass", r.passed()}, {"latency_ms", r.result.latency_ms}};
  if (const Groove* g = r.result.edited()) {
    j["edited"] = serialize_groove(*g);
    j["malformed_reason"] = nullptr;
  } else {
    j["edited"] = nullptr;
    j["malformed_reason"] = r.result.malformed()->reason();
  }
  return j;
}

inline std::string records_to_jsonl(const std::vector<RunRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

namespace detail {

inline Malformed malformed_from_reason(const std::string& reason) {
  const auto colon = reason.find(": ");
  const std::string head = reason.substr(0, colon);
  const std::string rest = colon == std::string::npos ? std::string() : reason.substr(colon + 2);
  for (auto k : {MalformedKind::NoFence, MalformedKind::UnclosedFence, MalformedKind::ParseError, MalformedKind::Transport}) {
    if (to_string(k) == head) return {k, rest};
  }
  return {MalformedKind::ParseError, reason};
}

}  // namespace detail

/// Reads a results file. The stored verdict is kept as written; use
/// recheck() to recompute it independently.
inline std::vector<RunRecord> parse_records(std::string_view jsonl) {
  std::vector<RunRecord> out;
  dataset::detail::for_each_json_line(jsonl, [&](std::size_t line, const nlohmann::json& obj) {
    RunRecord r;
    try {
      r.id = obj.at("id").get<std::string>();
      r.result.raw = obj.at("raw").get<std::string>();
      r.result.latency_ms = obj.value("latency_ms", 0.0);
      const auto& edited = obj.at("edited");
      if (edited.is_string()) {
        r.result.outcome = parse_groove(edited.get<std::string>());
      } else {
        r.result.outcome = detail::malformed_from_reason(obj.at("malformed_reason").get<std::string>());
      }
      const bool pass = obj.at("pass").get<bool>();
      r.verdict = pass ? Verdict::Pass : (edited.is_string() ? Verdict::UnitTestFailed : Verdict::Malformed);
    } catch (const std::exception& e) {
      throw dataset::DatasetError(dataset::DatasetErrorKind::RowParseError, line, e.what());
    }
    out.push_back(std::move(r));
  });
  return out;
}

/// Re-extracts the groove from the stored raw reply and re-runs the test.
inline Verdict recheck(const RunRecord& r, const dataset::Example& ex) {
  if (const auto* m = r.result.malformed(); m && m->kind == MalformedKind::Transport) return Verdict::Malformed;
  editor::EditResult fresh;
  fresh.outcome = extract_groove(r.result.raw);
  return judge(ex, fresh);
}

}  // namespace grooveedit::harness
