#pragma once

// Unit-test expressions over (original, edited) grooves.
//
//   expr := term (('&&' | '||') term)*        '&&' binds tighter than '||'
//   term := '!'? (call | '(' expr ')')
//   call := ident '(' arg (',' arg)* ')'
//   arg  := integer | "string" | ident
//
// A leading "t :=" is accepted and ignored. Argument types are checked
// against the predicate registry at parse time, so an expression that parses
// always evaluates.

#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "grooveedit/notation.hpp"

namespace grooveedit::dsl {

enum class ExprErrorKind { SyntaxError, UnknownPredicate, ArityMismatch, BadArgumentType, UnboundPlaceholder };

constexpr std::string_view to_string(ExprErrorKind kind) noexcept {
  switch (kind) {
    case ExprErrorKind::SyntaxError: return "SyntaxError";
    case ExprErrorKind::UnknownPredicate: return "UnknownPredicate";
    case ExprErrorKind::ArityMismatch: return "ArityMismatch";
    case ExprErrorKind::BadArgumentType: return "BadArgumentType";
    case ExprErrorKind::UnboundPlaceholder: return "UnboundPlaceholder";
  }
  return "?";
}

class ExprError : public std::runtime_error {
 public:
  ExprError(ExprErrorKind kind, std::size_t offset, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + " at offset " + std::to_string(offset) +
                           ": " + detail),
        kind_(kind),
        offset_(offset) {}

  ExprErrorKind kind() const noexcept { return kind_; }
  /// 0-based byte offset into the source text.
  std::size_t offset() const noexcept { return offset_; }

 private:
  ExprErrorKind kind_;
  std::size_t offset_;
};

enum class Predicate {
  HaveInstOnNote,
  NoInstOnNote,
  HaveInstInBeat,
  NoInstInBeat,
  NoInstAnywhere,
  CountCmp,
  HasBackbeatNotes,
  HaveArticOnNote,
};

enum class ArgType { Instrument, Position, Beat, Count, CmpOp, CountReference, ArticClass };

struct PredicateSignature {
  Predicate predicate;
  std::string_view name;
  std::vector<ArgType> params;
};

inline const std::vector<PredicateSignature>& predicate_registry() {
  using A = ArgType;
  static const std::vector<PredicateSignature> registry = {
      {Predicate::HaveInstOnNote, "have_inst_on_note", {A::Instrument, A::Position}},
      {Predicate::NoInstOnNote, "no_inst_on_note", {A::Instrument, A::Position}},
      {Predicate::HaveInstInBeat, "have_inst_in_beat", {A::Instrument, A::Beat}},
      {Predicate::NoInstInBeat, "no_inst_in_beat", {A::Instrument, A::Beat}},
      {Predicate::NoInstAnywhere, "no_inst_anywhere", {A::Instrument}},
      {Predicate::CountCmp, "count_cmp", {A::Instrument, A::CmpOp, A::CountReference}},
      {Predicate::HasBackbeatNotes, "has_backbeat_notes", {A::Count}},
      {Predicate::HaveArticOnNote, "have_artic_on_note", {A::Instrument, A::Position, A::ArticClass}},
  };
  return registry;
}

inline const PredicateSignature* find_predicate(std::string_view name) noexcept {
  for (const auto& sig : predicate_registry()) {
    if (sig.name == name) return &sig;
  }
  return nullptr;
}

inline const PredicateSignature& signature_of(Predicate p) {
  for (const auto& sig : predicate_registry()) {
    if (sig.predicate == p) return sig;
  }
  throw std::logic_error("predicate missing from registry");
}

enum class CmpOp { Lt, Le, Gt, Ge, Eq };

constexpr std::string_view to_string(CmpOp op) noexcept {
  switch (op) {
    case CmpOp::Lt: return "lt";
    case CmpOp::Le: return "le";
    case CmpOp::Gt: return "gt";
    case CmpOp::Ge: return "ge";
    case CmpOp::Eq: return "eq";
  }
  return "?";
}

constexpr std::optional<CmpOp> cmp_op_from_name(std::string_view s) noexcept {
  for (CmpOp op : {CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq}) {
    if (to_string(op) == s) return op;
  }
  return std::nullopt;
}

constexpr bool compare(std::size_t lhs, CmpOp op, std::size_t rhs) noexcept {
  switch (op) {
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Le: return lhs <= rhs;
    case CmpOp::Gt: return lhs > rhs;
    case CmpOp::Ge: return lhs >= rhs;
    case CmpOp::Eq: return lhs == rhs;
  }
  return false;
}

enum class Dynamic { Any, Hard, Soft };

/// Articulation class filter: optional timbre plus dynamic. Spelled as
/// `any`, `hard`, `soft`, `<timbre>`, `<timbre>_hard` or `<timbre>_soft`.
struct ArticClass {
  std::optional<Timbre> timbre;
  Dynamic dynamic = Dynamic::Any;

  bool matches(Instrument inst, Articulation a) const noexcept {
    if (timbre && a.timbre(inst) != *timbre) return false;
    if (dynamic == Dynamic::Hard) return a.hard();
    if (dynamic == Dynamic::Soft) return !a.hard();
    return true;
  }

  std::string spelling() const {
    const char* dyn = dynamic == Dynamic::Hard ? "hard" : dynamic == Dynamic::Soft ? "soft" : "";
    if (!timbre) return *dyn ? dyn : "any";
    std::string out(timbre_name(*timbre));
    if (*dyn) out = out + "_" + dyn;
    return out;
  }

  static std::optional<ArticClass> parse(std::string_view s) {
    if (s == "any") return ArticClass{};
    if (s == "hard") return ArticClass{std::nullopt, Dynamic::Hard};
    if (s == "soft") return ArticClass{std::nullopt, Dynamic::Soft};
    Dynamic dyn = Dynamic::Any;
    if (auto us = s.find('_'); us != std::string_view::npos) {
      std::string_view suffix = s.substr(us + 1);
      if (suffix == "hard") {
        dyn = Dynamic::Hard;
      } else if (suffix == "soft") {
        dyn = Dynamic::Soft;
      } else {
        return std::nullopt;
      }
      s = s.substr(0, us);
    }
    auto t = timbre_from_name(s);
    if (!t) return std::nullopt;
    return ArticClass{t, dyn};
  }

  friend bool operator==(const ArticClass&, const ArticClass&) = default;
};

/// Predicate with its arguments bound and type-checked. Fields that the
/// predicate does not take keep their defaults.
struct PredicateCall {
  Predicate predicate = Predicate::HaveInstOnNote;
  Instrument instrument = Instrument::Kick;
  std::size_t position = 0;   // Position or Beat, by signature
  std::size_t count = 0;      // Count, or the literal CountReference
  CmpOp op = CmpOp::Le;
  bool against_original = false;
  ArticClass artic;

  friend bool operator==(const PredicateCall&, const PredicateCall&) = default;
};

/// Source form of a call, e.g. `have_inst_on_note("C", 0)`.
inline std::string to_source(const PredicateCall& call) {
  const auto& sig = signature_of(call.predicate);
  std::string out(sig.name);
  out += '(';
  bool first = true;
  for (ArgType t : sig.params) {
    if (!first) out += ", ";
    first = false;
    switch (t) {
      case ArgType::Instrument:
        out += '"';
        out += instrument_letter(call.instrument);
        out += '"';
        break;
      case ArgType::Position:
      case ArgType::Beat: out += std::to_string(call.position); break;
      case ArgType::Count: out += std::to_string(call.count); break;
      case ArgType::CmpOp: out += to_string(call.op); break;
      case ArgType::CountReference:
        out += call.against_original ? std::string("original") : std::to_string(call.count);
        break;
      case ArgType::ArticClass: out += call.artic.spelling(); break;
    }
  }
  out += ')';
  return out;
}

/// Immutable boolean expression tree; copies share nodes.
class TestExpr {
 public:
  enum class Kind { Call, And, Or, Not };

  static TestExpr leaf(PredicateCall call) {
    return TestExpr(std::make_shared<const Node>(Node{Kind::Call, call, {}, {}}));
  }
  static TestExpr conj(TestExpr l, TestExpr r) {
    return TestExpr(std::make_shared<const Node>(Node{Kind::And, {}, std::move(l.node_), std::move(r.node_)}));
  }
  static TestExpr disj(TestExpr l, TestExpr r) {
    return TestExpr(std::make_shared<const Node>(Node{Kind::Or, {}, std::move(l.node_), std::move(r.node_)}));
  }
  static TestExpr negate(TestExpr child) {
    return TestExpr(std::make_shared<const Node>(Node{Kind::Not, {}, std::move(child.node_), nullptr}));
  }

  Kind kind() const noexcept { return node_->kind; }
  /// Precondition: kind() == Call.
  const PredicateCall& call() const noexcept { return node_->call; }
  /// Left operand of And/Or, or the operand of Not.
  TestExpr lhs() const { return TestExpr(node_->lhs); }
  TestExpr rhs() const { return TestExpr(node_->rhs); }

  friend bool operator==(const TestExpr& a, const TestExpr& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
      case Kind::Call: return a.call() == b.call();
      case Kind::Not: return a.lhs() == b.lhs();
      default: return a.lhs() == b.lhs() && a.rhs() == b.rhs();
    }
  }

 private:
  struct Node {
    Kind kind;
    PredicateCall call;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };
  explicit TestExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Fully parenthesized source form; re-parses to an equal tree.
inline std::string to_source(const TestExpr& e) {
  switch (e.kind()) {
    case TestExpr::Kind::Call: return to_source(e.call());
    case TestExpr::Kind::Not: return "!" + to_source(e.lhs());
    case TestExpr::Kind::And: return "(" + to_source(e.lhs()) + " && " + to_source(e.rhs()) + ")";
    case TestExpr::Kind::Or: return "(" + to_source(e.lhs()) + " || " + to_source(e.rhs()) + ")";
  }
  return {};
}

namespace detail {

enum class Tok { Ident, Integer, String, LParen, RParen, Comma, AndAnd, OrOr, Bang, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  const auto is_ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < src.size() && is_ident(src[i])) ++i;
      out.push_back({Tok::Ident, std::string(src.substr(start, i - start)), start});
    } else if (std::isdigit(static_cast<unsigned char>(c)) || (c == '-' && i + 1 < src.size() &&
                                                               std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      ++i;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      out.push_back({Tok::Integer, std::string(src.substr(start, i - start)), start});
    } else if (c == '"') {
      ++i;
      std::string text;
      while (i < src.size() && src[i] != '"') {
        if (src[i] == '\\' && i + 1 < src.size()) ++i;
        text.push_back(src[i++]);
      }
      if (i >= src.size()) throw ExprError(ExprErrorKind::SyntaxError, start, "unterminated string");
      ++i;
      out.push_back({Tok::String, std::move(text), start});
    } else if (c == '&' || c == '|') {
      if (i + 1 >= src.size() || src[i + 1] != c) {
        throw ExprError(ExprErrorKind::SyntaxError, start, std::string("expected '") + c + c + "'");
      }
      i += 2;
      out.push_back({c == '&' ? Tok::AndAnd : Tok::OrOr, std::string(2, c), start});
    } else if (c == '(' || c == ')' || c == ',' || c == '!') {
      ++i;
      const Tok k = c == '(' ? Tok::LParen : c == ')' ? Tok::RParen : c == ',' ? Tok::Comma : Tok::Bang;
      out.push_back({k, std::string(1, c), start});
    } else {
      throw ExprError(ExprErrorKind::SyntaxError, start, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, "", src.size()});
  return out;
}

struct RawArg {
  Tok kind;  // Ident, Integer or String
  std::string text;
  std::size_t offset;
};

inline PredicateCall bind_call(const PredicateSignature& sig, const std::vector<RawArg>& args,
                               std::size_t call_offset) {
  if (args.size() != sig.params.size()) {
    throw ExprError(ExprErrorKind::ArityMismatch, call_offset,
                    std::string(sig.name) + " takes " + std::to_string(sig.params.size()) +
                        " argument(s), got " + std::to_string(args.size()));
  }
  PredicateCall call;
  call.predicate = sig.predicate;
  const auto bad = [&](const RawArg& a, const std::string& want) {
    return ExprError(ExprErrorKind::BadArgumentType, a.offset,
                     std::string(sig.name) + ": expected " + want + ", got '" + a.text + "'");
  };
  const auto as_int = [&](const RawArg& a, long lo, long hi, const std::string& want) -> std::size_t {
    if (a.kind != Tok::Integer) throw bad(a, want);
    long v = 0;
    try {
      v = std::stol(a.text);
    } catch (const std::exception&) {
      throw bad(a, want);
    }
    if (v < lo || v > hi) throw bad(a, want);
    return static_cast<std::size_t>(v);
  };
  std::optional<std::size_t> artic_arg;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const RawArg& a = args[i];
    switch (sig.params[i]) {
      case ArgType::Instrument: {
        if (a.kind == Tok::Integer || a.text.size() != 1) throw bad(a, "instrument letter");
        auto inst = instrument_from_letter(a.text[0]);
        if (!inst) throw bad(a, "instrument letter");
        call.instrument = *inst;
        break;
      }
      case ArgType::Position: call.position = as_int(a, 0, 15, "position 0..15"); break;
      case ArgType::Beat: call.position = as_int(a, 0, 3, "beat 0..3"); break;
      case ArgType::Count: call.count = as_int(a, 0, 96, "count 0..96"); break;
      case ArgType::CmpOp: {
        auto op = a.kind == Tok::Integer ? std::nullopt : cmp_op_from_name(a.text);
        if (!op) throw bad(a, "one of lt, le, gt, ge, eq");
        call.op = *op;
        break;
      }
      case ArgType::CountReference:
        if (a.kind != Tok::Integer && a.text == "original") {
          call.against_original = true;
        } else {
          call.count = as_int(a, 0, 16, "'original' or a count 0..16");
        }
        break;
      case ArgType::ArticClass: {
        auto cls = a.kind == Tok::Integer ? std::nullopt : ArticClass::parse(a.text);
        if (!cls) throw bad(a, "articulation class");
        call.artic = *cls;
        artic_arg = i;
        break;
      }
    }
  }
  if (artic_arg && call.artic.timbre && !supports_timbre(call.instrument, *call.artic.timbre)) {
    throw bad(args[*artic_arg], std::string("a timbre that ") + instrument_letter(call.instrument) + " can play");
  }
  return call;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  TestExpr parse_all() {
    TestExpr e = parse_or();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ExprError(ExprErrorKind::SyntaxError, peek().offset, msg);
  }
  void expect(Tok k, const char* what) {
    if (peek().kind != k) fail(std::string("expected ") + what);
    ++pos_;
  }

  TestExpr parse_or() {
    TestExpr lhs = parse_and();
    while (peek().kind == Tok::OrOr) {
      ++pos_;
      lhs = TestExpr::disj(std::move(lhs), parse_and());
    }
    return lhs;
  }

  TestExpr parse_and() {
    TestExpr lhs = parse_term();
    while (peek().kind == Tok::AndAnd) {
      ++pos_;
      lhs = TestExpr::conj(std::move(lhs), parse_term());
    }
    return lhs;
  }

  TestExpr parse_term() {
    if (peek().kind == Tok::Bang) {
      ++pos_;
      return TestExpr::negate(parse_term());
    }
    if (peek().kind == Tok::LParen) {
      ++pos_;
      TestExpr inner = parse_or();
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (peek().kind == Tok::Ident) return parse_call();
    fail(peek().kind == Tok::End ? "unexpected end of expression" : "unexpected '" + peek().text + "'");
  }

  TestExpr parse_call() {
    const Token name = next();
    const PredicateSignature* sig = find_predicate(name.text);
    if (peek().kind != Tok::LParen) fail("expected '(' after " + name.text);
    ++pos_;
    std::vector<RawArg> args;
    if (peek().kind != Tok::RParen) {
      for (;;) {
        const Token& a = peek();
        if (a.kind != Tok::Ident && a.kind != Tok::Integer && a.kind != Tok::String) fail("expected argument");
        args.push_back({a.kind, a.text, a.offset});
        ++pos_;
        if (peek().kind == Tok::Comma) {
          ++pos_;
          continue;
        }
        break;
      }
    }
    expect(Tok::RParen, "')'");
    if (!sig) throw ExprError(ExprErrorKind::UnknownPredicate, name.offset, "unknown predicate '" + name.text + "'");
    return TestExpr::leaf(bind_call(*sig, args, name.offset));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Drops an optional leading "t :=" (or any "<ident> :=") binding prefix.
inline std::string_view strip_binding_prefix(std::string_view text) noexcept {
  auto assign = text.find(":=");
  if (assign == std::string_view::npos) return text;
  std::string_view head = text.substr(0, assign);
  std::size_t b = 0;
  while (b < head.size() && std::isspace(static_cast<unsigned char>(head[b]))) ++b;
  std::size_t e = head.size();
  while (e > b && std::isspace(static_cast<unsigned char>(head[e - 1]))) --e;
  if (b == e) return text;
  for (std::size_t i = b; i < e; ++i) {
    char c = head[i];
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return text;
  }
  return text.substr(assign + 2);
}

inline TestExpr parse_test_expr(std::string_view text) {
  std::string_view body = strip_binding_prefix(text);
  const std::size_t shift = static_cast<std::size_t>(body.data() - text.data());
  try {
    return detail::Parser(detail::tokenize(body)).parse_all();
  } catch (const ExprError& e) {
    if (shift == 0) throw;
    // Report offsets against the caller's text, prefix included.
    const std::string what = e.what();
    throw ExprError(e.kind(), e.offset() + shift, what.substr(what.find(": ") + 2));
  }
}

struct EvalContext {
  const Groove& original;
  const Groove& edited;
};

inline bool evaluate(const PredicateCall& c, const EvalContext& ctx) noexcept {
  const Groove& g = ctx.edited;
  const auto hit = [&](std::size_t pos) { return g.row(c.instrument)[pos].has_value(); };
  const auto beat_has_hit = [&] {
    for (std::size_t i = 0; i < kStepsPerBeat; ++i) {
      if (hit(c.position * kStepsPerBeat + i)) return true;
    }
    return false;
  };
  switch (c.predicate) {
    case Predicate::HaveInstOnNote: return hit(c.position);
    case Predicate::NoInstOnNote: return !hit(c.position);
    case Predicate::HaveInstInBeat: return beat_has_hit();
    case Predicate::NoInstInBeat: return !beat_has_hit();
    case Predicate::NoInstAnywhere: return count_hits(g, c.instrument) == 0;
    case Predicate::CountCmp: {
      const std::size_t ref = c.against_original ? count_hits(ctx.original, c.instrument) : c.count;
      return compare(count_hits(g, c.instrument), c.op, ref);
    }
    case Predicate::HasBackbeatNotes: return backbeat_hit_count(g) >= c.count;
    case Predicate::HaveArticOnNote: {
      const Cell& cell = g.row(c.instrument)[c.position];
      return cell && c.artic.matches(c.instrument, *cell);
    }
  }
  return false;
}

inline bool evaluate(const TestExpr& e, const EvalContext& ctx) {
  switch (e.kind()) {
    case TestExpr::Kind::Call: return evaluate(e.call(), ctx);
    case TestExpr::Kind::Not: return !evaluate(e.lhs(), ctx);
    case TestExpr::Kind::And: return evaluate(e.lhs(), ctx) && evaluate(e.rhs(), ctx);
    case TestExpr::Kind::Or: return evaluate(e.lhs(), ctx) || evaluate(e.rhs(), ctx);
  }
  return false;
}

/// True when any leaf compares against the original groove.
inline bool reads_original(const TestExpr& e) {
  switch (e.kind()) {
    case TestExpr::Kind::Call: return e.call().predicate == Predicate::CountCmp && e.call().against_original;
    case TestExpr::Kind::Not: return reads_original(e.lhs());
    default: return reads_original(e.lhs()) || reads_original(e.rhs());
  }
}

/// Replaces every `@name@` with the text bound to `name`. Throws
/// UnboundPlaceholder for a name with no binding or an unterminated '@'.
inline std::string substitute_placeholders(std::string_view text,
                                           const std::map<std::string, std::string, std::less<>>& bindings) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '@') {
      out.push_back(text[i++]);
      continue;
    }
    const std::size_t close = text.find('@', i + 1);
    if (close == std::string_view::npos) {
      throw ExprError(ExprErrorKind::UnboundPlaceholder, i, "unterminated placeholder");
    }
    const std::string_view name = text.substr(i + 1, close - i - 1);
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw ExprError(ExprErrorKind::UnboundPlaceholder, i, "no binding for @" + std::string(name) + "@");
    }
    out += it->second;
    i = close + 1;
  }
  return out;
}

using SlotBindings = std::map<std::string, Instrument, std::less<>>;

/// Binds instrument placeholders (`"@i0@"` style) to instrument letters and
/// parses the result.
inline TestExpr instantiate(std::string_view expr_template, const SlotBindings& bindings) {
  std::map<std::string, std::string, std::less<>> text;
  for (const auto& [slot, inst] : bindings) text.emplace(slot, std::string(1, instrument_letter(inst)));
  return parse_test_expr(substitute_placeholders(expr_template, text));
}

}  // namespace grooveedit::dsl
