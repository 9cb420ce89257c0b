#pragma once

// Benchmark rows, instruction templates and seed grooves, stored as JSONL.
//
//   example:  {"id", "category", "original", "instruction", "test"}
//   template: {"id", "category", "slots", "instruction_template", "test_template"}
//   seed:     {"genre", "groove"}  (optional "id", otherwise derived from genre)
//
// Templates name slot N as @instN@ in the instruction (expanded to the
// instrument's name) and as @iN@ in the test (expanded to its letter).

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "grooveedit/dsl.hpp"
#include "grooveedit/notation.hpp"

namespace grooveedit::dataset {

enum class Category { Specific, Descriptive, Stylistic };

inline constexpr std::array<Category, 3> kAllCategories = {Category::Specific, Category::Descriptive,
                                                          Category::Stylistic};

constexpr std::string_view to_string(Category c) noexcept {
  switch (c) {
    case Category::Specific: return "specific";
    case Category::Descriptive: return "descriptive";
    case Category::Stylistic: return "stylistic";
  }
  return "?";
}

inline std::optional<Category> category_from_string(std::string_view s) noexcept {
  for (Category c : kAllCategories) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

enum class Provenance { ManualDev, TemplateExpanded };

struct Example {
  std::string id;
  Category category = Category::Specific;
  Groove original;
  std::string instruction;
  std::string test_source;
  dsl::TestExpr test = dsl::TestExpr::leaf({});
  Provenance provenance = Provenance::ManualDev;
};

struct Template {
  std::string id;
  Category category = Category::Specific;
  int slots = 0;
  std::string instruction_template;
  std::string test_template;
};

struct SeedGroove {
  std::string id;
  std::string genre;
  Groove groove;
};

enum class DatasetErrorKind { IoError, RowParseError, GrooveInvalid, TestInvalid, TemplateInvalid };

constexpr std::string_view to_string(DatasetErrorKind k) noexcept {
  switch (k) {
    case DatasetErrorKind::IoError: return "IoError";
    case DatasetErrorKind::RowParseError: return "RowParseError";
    case DatasetErrorKind::GrooveInvalid: return "GrooveInvalid";
    case DatasetErrorKind::TestInvalid: return "TestInvalid";
    case DatasetErrorKind::TemplateInvalid: return "TemplateInvalid";
  }
  return "?";
}

class DatasetError : public std::runtime_error {
 public:
  DatasetError(DatasetErrorKind kind, std::size_t line, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) +
                           (line ? " (line " + std::to_string(line) + ")" : std::string()) + ": " + detail),
        kind_(kind),
        line_(line) {}

  DatasetErrorKind kind() const noexcept { return kind_; }
  /// 1-based line in the source file; 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  DatasetErrorKind kind_;
  std::size_t line_;
};

namespace detail {

using nlohmann::json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetErrorKind::IoError, 0, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Calls fn(line_no, object) for every non-blank line.
template <typename Fn>
void for_each_json_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    std::string_view line = grooveedit::detail::trim(text.substr(start, nl - start));
    start = nl + 1;
    if (line.empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw DatasetError(DatasetErrorKind::RowParseError, line_no, "not a JSON object");
    }
    fn(line_no, obj);
  }
}

inline std::string string_field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw DatasetError(DatasetErrorKind::RowParseError, line, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

inline Category category_field(const json& obj, std::size_t line) {
  auto c = category_from_string(string_field(obj, "category", line));
  if (!c) throw DatasetError(DatasetErrorKind::RowParseError, line, "unknown category");
  return *c;
}

inline Groove groove_field(const json& obj, const char* key, std::size_t line) {
  try {
    return parse_groove(string_field(obj, key, line));
  } catch (const NotationError& e) {
    throw DatasetError(DatasetErrorKind::GrooveInvalid, line, e.what());
  }
}

inline std::string slugify(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

// Slot indices referenced as @<prefix>N@.
inline std::set<int> slot_indices(std::string_view text, std::string_view prefix) {
  std::set<int> out;
  std::size_t i = 0;
  while ((i = text.find('@', i)) != std::string_view::npos) {
    std::size_t close = text.find('@', i + 1);
    if (close == std::string_view::npos) break;
    std::string_view name = text.substr(i + 1, close - i - 1);
    if (name.substr(0, prefix.size()) == prefix && name.size() > prefix.size() &&
        std::all_of(name.begin() + static_cast<long>(prefix.size()), name.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      out.insert(std::stoi(std::string(name.substr(prefix.size()))));
      i = close + 1;
    } else {
      i = close;
    }
  }
  return out;
}

}  // namespace detail

/// Validates one example row given as JSON. `line` is used in errors only.
inline Example example_from_json(const nlohmann::json& obj, std::size_t line,
                                 Provenance provenance = Provenance::ManualDev) {
  Example ex;
  ex.id = detail::string_field(obj, "id", line);
  ex.category = detail::category_field(obj, line);
  ex.original = detail::groove_field(obj, "original", line);
  ex.instruction = detail::string_field(obj, "instruction", line);
  if (ex.instruction.empty()) throw DatasetError(DatasetErrorKind::RowParseError, line, "empty instruction");
  ex.test_source = detail::string_field(obj, "test", line);
  try {
    ex.test = dsl::parse_test_expr(ex.test_source);
  } catch (const dsl::ExprError& e) {
    throw DatasetError(DatasetErrorKind::TestInvalid, line, e.what());
  }
  ex.provenance = provenance;
  return ex;
}

inline nlohmann::json example_to_json(const Example& ex) {
  return {{"id", ex.id},
          {"category", std::string(to_string(ex.category))},
          {"original", serialize_groove(ex.original)},
          {"instruction", ex.instruction},
          {"test", ex.test_source}};
}

inline std::vector<Example> parse_examples(std::string_view jsonl, Provenance provenance = Provenance::ManualDev) {
  std::vector<Example> out;
  detail::for_each_json_line(jsonl, [&](std::size_t line, const nlohmann::json& obj) {
    out.push_back(example_from_json(obj, line, provenance));
  });
  return out;
}

inline std::vector<Example> load_examples(const std::filesystem::path& path) {
  return parse_examples(detail::read_file(path));
}

inline std::string examples_to_jsonl(const std::vector<Example>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += example_to_json(ex).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<Template> parse_templates(std::string_view jsonl) {
  std::vector<Template> out;
  detail::for_each_json_line(jsonl, [&](std::size_t line, const nlohmann::json& obj) {
    Template t;
    t.id = detail::string_field(obj, "id", line);
    t.category = detail::category_field(obj, line);
    auto slots = obj.find("slots");
    if (slots == obj.end() || !slots->is_number_integer() || slots->get<int>() < 0 ||
        slots->get<int>() > static_cast<int>(kInstrumentCount)) {
      throw DatasetError(DatasetErrorKind::RowParseError, line, "'slots' must be an integer in 0..6");
    }
    t.slots = slots->get<int>();
    t.instruction_template = detail::string_field(obj, "instruction_template", line);
    t.test_template = detail::string_field(obj, "test_template", line);
    std::set<int> expected;
    for (int i = 0; i < t.slots; ++i) expected.insert(i);
    if (detail::slot_indices(t.instruction_template, "inst") != expected ||
        detail::slot_indices(t.test_template, "i") != expected) {
      throw DatasetError(DatasetErrorKind::TemplateInvalid, line,
                         "template " + t.id + " must reference slots 0.." + std::to_string(t.slots - 1) +
                             " in both instruction and test");
    }
    out.push_back(std::move(t));
  });
  return out;
}

inline std::vector<Template> load_templates(const std::filesystem::path& path) {
  return parse_templates(detail::read_file(path));
}

inline std::vector<SeedGroove> parse_seeds(std::string_view jsonl) {
  std::vector<SeedGroove> out;
  detail::for_each_json_line(jsonl, [&](std::size_t line, const nlohmann::json& obj) {
    SeedGroove s;
    s.genre = detail::string_field(obj, "genre", line);
    s.id = obj.contains("id") ? detail::string_field(obj, "id", line) : detail::slugify(s.genre);
    s.groove = detail::groove_field(obj, "groove", line);
    s.groove.set_label(s.genre);
    out.push_back(std::move(s));
  });
  return out;
}

inline std::vector<SeedGroove> load_seeds(const std::filesystem::path& path) {
  return parse_seeds(detail::read_file(path));
}

/// Ordered k-tuples of distinct instruments, lexicographic in universe order.
inline std::vector<std::vector<Instrument>> ordered_bindings(std::span<const Instrument> universe, int k) {
  std::vector<std::vector<Instrument>> out;
  std::vector<Instrument> current;
  std::vector<bool> used(universe.size(), false);
  auto rec = [&](auto&& self) -> void {
    if (static_cast<int>(current.size()) == k) {
      out.push_back(current);
      return;
    }
    for (std::size_t i = 0; i < universe.size(); ++i) {
      if (used[i]) continue;
      used[i] = true;
      current.push_back(universe[i]);
      self(self);
      current.pop_back();
      used[i] = false;
    }
  };
  rec(rec);
  return out;
}

/// Crosses every template with every seed and every ordered tuple of
/// distinct instruments. Ids are "<template>/<seed>/<letters>", with "-" for
/// zero-slot templates.
inline std::vector<Example> expand_templates(const std::vector<Template>& templates,
                                             const std::vector<SeedGroove>& seeds,
                                             std::span<const Instrument> universe = kAllInstruments) {
  std::vector<Example> out;
  for (const Template& t : templates) {
    const auto bindings = ordered_bindings(universe, t.slots);
    for (const SeedGroove& seed : seeds) {
      for (const auto& binding : bindings) {
        std::map<std::string, std::string, std::less<>> names;
        std::map<std::string, std::string, std::less<>> letters;
        std::string tag;
        for (std::size_t i = 0; i < binding.size(); ++i) {
          names.emplace("inst" + std::to_string(i), std::string(instrument_name(binding[i])));
          letters.emplace("i" + std::to_string(i), std::string(1, instrument_letter(binding[i])));
          tag.push_back(instrument_letter(binding[i]));
        }
        Example ex;
        ex.id = t.id + "/" + seed.id + "/" + (tag.empty() ? "-" : tag);
        ex.category = t.category;
        ex.original = seed.groove;
        ex.instruction = dsl::substitute_placeholders(t.instruction_template, names);
        ex.test_source = dsl::substitute_placeholders(t.test_template, letters);
        try {
          ex.test = dsl::parse_test_expr(ex.test_source);
        } catch (const dsl::ExprError& e) {
          throw DatasetError(DatasetErrorKind::TemplateInvalid, 0, ex.id + ": " + e.what());
        }
        ex.provenance = Provenance::TemplateExpanded;
        out.push_back(std::move(ex));
      }
    }
  }
  return out;
}

struct DatasetStats {
  std::size_t specific = 0;
  std::size_t descriptive = 0;
  std::size_t stylistic = 0;
  std::size_t total = 0;

  std::size_t count(Category c) const noexcept {
    switch (c) {
      case Category::Specific: return specific;
      case Category::Descriptive: return descriptive;
      case Category::Stylistic: return stylistic;
    }
    return 0;
  }

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

inline DatasetStats dataset_stats(std::span<const Example> examples) noexcept {
  DatasetStats s;
  for (const auto& ex : examples) {
    switch (ex.category) {
      case Category::Specific: ++s.specific; break;
      case Category::Descriptive: ++s.descriptive; break;
      case Category::Stylistic: ++s.stylistic; break;
    }
  }
  s.total = s.specific + s.descriptive + s.stylistic;
  return s;
}

}  // namespace grooveedit::dataset
