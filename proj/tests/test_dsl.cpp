#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "grooveedit/dsl.hpp"
#include "support/oracles.hpp"

using namespace grooveedit;
using namespace grooveedit::dsl;

namespace {

const char* kWorkedExample =
    "K: O---|----|O---|----\n"
    "S: ----|O---|----|O---\n"
    "H: x---|x---|x---|x---\n"
    "T: ----|----|----|----\n"
    "C: O---|----|----|----\n"
    "R: ----|----|----|----";

bool eval_on(const std::string& src, const Groove& original, const Groove& edited) {
  return evaluate(parse_test_expr(src), EvalContext{original, edited});
}

bool eval_on(const std::string& src, const Groove& g) { return eval_on(src, g, g); }

ExprError expr_error(const std::string& src) {
  try {
    parse_test_expr(src);
  } catch (const ExprError& e) {
    return e;
  }
  ADD_FAILURE() << "expected an ExprError for " << src;
  return ExprError(ExprErrorKind::SyntaxError, 0, "");
}

// Reference parser: shunting-yard over calls and the three operators. Calls
// are taken as opaque text up to their closing ')'. The output uses the same
// fully parenthesized shape as to_source.
std::string shunting_yard(const std::string& src) {
  std::vector<std::string> out;
  std::vector<std::string> ops;
  auto prec = [](const std::string& op) { return op == "!" ? 3 : op == "&&" ? 2 : op == "||" ? 1 : 0; };
  auto reduce = [&] {
    const std::string op = ops.back();
    ops.pop_back();
    if (op == "!") {
      out.back() = "!" + out.back();
      return;
    }
    std::string rhs = out.back();
    out.pop_back();
    out.back() = "(" + out.back() + " " + op + " " + rhs + ")";
  };
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (c == ' ') {
      ++i;
    } else if (c == '!') {
      ops.push_back("!");
      ++i;
    } else if (c == '(') {
      ops.push_back("(");
      ++i;
    } else if (c == ')') {
      while (ops.back() != "(") reduce();
      ops.pop_back();
      ++i;
      while (!ops.empty() && ops.back() == "!") reduce();
    } else if (c == '&' || c == '|') {
      const std::string op = src.substr(i, 2);
      // Left associative: reduce while the stack top binds at least as tightly.
      while (!ops.empty() && ops.back() != "(" && prec(ops.back()) >= prec(op)) reduce();
      ops.push_back(op);
      i += 2;
    } else {
      const std::size_t close = src.find(')', i);
      out.push_back(src.substr(i, close + 1 - i));
      i = close + 1;
      while (!ops.empty() && ops.back() == "!") reduce();
    }
  }
  while (!ops.empty()) reduce();
  return out.back();
}

// Expressions that lean on precedence rather than parentheses.
std::string random_flat_expr(std::mt19937& rng, int depth) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  if (depth <= 0 || pick(0, 2) == 0) return (pick(0, 3) == 0 ? "!" : "") + oracle::random_call(rng);
  switch (pick(0, 3)) {
    case 0: return random_flat_expr(rng, depth - 1) + " && " + random_flat_expr(rng, depth - 1);
    case 1: return random_flat_expr(rng, depth - 1) + " || " + random_flat_expr(rng, depth - 1);
    case 2: return "(" + random_flat_expr(rng, depth - 1) + ")";
    default: return "!(" + random_flat_expr(rng, depth - 1) + ")";
  }
}

}  // namespace

TEST(Registry, EightPredicatesWithSignatures) {
  EXPECT_EQ(predicate_registry().size(), 8u);
  ASSERT_NE(find_predicate("count_cmp"), nullptr);
  EXPECT_EQ(find_predicate("count_cmp")->params.size(), 3u);
  EXPECT_EQ(find_predicate("no_inst_anywhere")->params.size(), 1u);
  EXPECT_EQ(find_predicate("have_inst_on_beat"), nullptr);
}

TEST(Parse, SingleCall) {
  const TestExpr e = parse_test_expr("have_inst_on_note(\"C\", 0)");
  ASSERT_EQ(e.kind(), TestExpr::Kind::Call);
  EXPECT_EQ(e.call().predicate, Predicate::HaveInstOnNote);
  EXPECT_EQ(e.call().instrument, Instrument::Crash);
  EXPECT_EQ(e.call().position, 0u);
}

TEST(Parse, PrecedenceOfAndOverOr) {
  const TestExpr e = parse_test_expr(
      "have_inst_on_note(\"K\", 0) || have_inst_on_note(\"S\", 4) && !no_inst_anywhere(\"H\")");
  ASSERT_EQ(e.kind(), TestExpr::Kind::Or);
  EXPECT_EQ(e.rhs().kind(), TestExpr::Kind::And);
  EXPECT_EQ(e.rhs().rhs().kind(), TestExpr::Kind::Not);
}

TEST(Parse, BindingPrefixIsIgnored) {
  EXPECT_EQ(parse_test_expr("t := no_inst_anywhere(\"K\")"), parse_test_expr("no_inst_anywhere(\"K\")"));
  EXPECT_EQ(parse_test_expr("  t:=no_inst_anywhere(\"K\")"), parse_test_expr("no_inst_anywhere(\"K\")"));
}

TEST(Parse, ArgumentSpellings) {
  // Quoted or bare instrument letters both bind.
  EXPECT_EQ(parse_test_expr("no_inst_anywhere(K)"), parse_test_expr("no_inst_anywhere(\"K\")"));
  const TestExpr c = parse_test_expr("count_cmp(\"H\", le, original)");
  EXPECT_TRUE(c.call().against_original);
  EXPECT_EQ(c.call().op, CmpOp::Le);
  EXPECT_TRUE(reads_original(c));
  EXPECT_FALSE(reads_original(parse_test_expr("count_cmp(\"H\", ge, 4)")));
  const TestExpr a = parse_test_expr("have_artic_on_note(\"R\", 15, bell_soft)");
  EXPECT_EQ(a.call().artic.timbre, Timbre::Bell);
  EXPECT_EQ(a.call().artic.dynamic, Dynamic::Soft);
  EXPECT_EQ(to_source(a), "have_artic_on_note(\"R\", 15, bell_soft)");
}

TEST(ParseErrors, SyntaxErrorWithOffset) {
  const auto e = expr_error("have_inst_on_note(\"C\", 0) &&");
  EXPECT_EQ(e.kind(), ExprErrorKind::SyntaxError);
  EXPECT_EQ(e.offset(), 28u);
  EXPECT_EQ(expr_error("have_inst_on_note(\"C\", 0) & no_inst_anywhere(\"K\")").offset(), 26u);
  EXPECT_EQ(expr_error("(no_inst_anywhere(\"K\")").kind(), ExprErrorKind::SyntaxError);
  EXPECT_EQ(expr_error("no_inst_anywhere(\"K)").kind(), ExprErrorKind::SyntaxError);
  EXPECT_EQ(expr_error("").kind(), ExprErrorKind::SyntaxError);
  EXPECT_EQ(expr_error("no_inst_anywhere(\"K\") no_inst_anywhere(\"S\")").offset(), 22u);
}

TEST(ParseErrors, UnknownPredicate) {
  const auto e = expr_error("no_inst_anywhere(\"K\") && have_inst_on_beat(\"K\", 1)");
  EXPECT_EQ(e.kind(), ExprErrorKind::UnknownPredicate);
  EXPECT_EQ(e.offset(), 25u);
}

TEST(ParseErrors, ArityMismatch) {
  const auto e = expr_error("have_inst_on_note(\"C\")");
  EXPECT_EQ(e.kind(), ExprErrorKind::ArityMismatch);
  EXPECT_EQ(e.offset(), 0u);
  EXPECT_EQ(expr_error("no_inst_anywhere()").kind(), ExprErrorKind::ArityMismatch);
}

TEST(ParseErrors, BadArgumentTypes) {
  auto kind_at = [](const std::string& src, std::size_t offset) {
    const auto e = expr_error(src);
    EXPECT_EQ(e.kind(), ExprErrorKind::BadArgumentType) << src;
    EXPECT_EQ(e.offset(), offset) << src;
  };
  kind_at("have_inst_on_note(\"Z\", 0)", 18);
  kind_at("have_inst_on_note(\"K\", 16)", 23);
  kind_at("have_inst_on_note(\"K\", -1)", 23);
  kind_at("have_inst_in_beat(\"K\", 4)", 23);
  kind_at("have_inst_on_note(3, 0)", 18);
  kind_at("count_cmp(\"K\", ne, 3)", 15);
  kind_at("count_cmp(\"K\", le, 17)", 19);
  kind_at("have_artic_on_note(\"K\", 0, sidestick)", 27);
  kind_at("have_artic_on_note(\"H\", 0, loud)", 27);
}

TEST(ParseErrors, OffsetsCountTheBindingPrefix) {
  const auto e = expr_error("t := have_inst_on_note(\"Z\", 0)");
  EXPECT_EQ(e.kind(), ExprErrorKind::BadArgumentType);
  EXPECT_EQ(e.offset(), 23u);
}

TEST(Parse, AgreesWithReferenceParser) {
  std::mt19937 rng(99);
  std::vector<std::string> corpus = {
      "have_inst_on_note(\"K\", 0) || have_inst_on_note(\"S\", 4) && have_inst_on_note(\"H\", 8)",
      "!have_inst_on_note(\"K\", 0) && !no_inst_anywhere(\"S\")",
      "!!no_inst_anywhere(\"S\")",
      "no_inst_anywhere(\"K\") || no_inst_anywhere(\"S\") || no_inst_anywhere(\"H\")",
      "no_inst_anywhere(\"K\") && no_inst_anywhere(\"S\") && no_inst_anywhere(\"H\")",
      "!(no_inst_anywhere(\"K\") || no_inst_anywhere(\"S\")) && has_backbeat_notes(2)",
  };
  while (corpus.size() < 50) corpus.push_back(random_flat_expr(rng, 4));
  for (const auto& src : corpus) EXPECT_EQ(to_source(parse_test_expr(src)), shunting_yard(src)) << src;
}

TEST(Parse, SourceFormRoundTrips) {
  std::mt19937 rng(5);
  for (int i = 0; i < 300; ++i) {
    const TestExpr e = parse_test_expr(oracle::random_expr(rng, 4));
    EXPECT_EQ(parse_test_expr(to_source(e)), e);
  }
}

TEST(Evaluate, WorkedExampleRemoveKick) {
  const Groove given = parse_groove(kWorkedExample);
  Groove edited = given;
  for (int p = 0; p < 16; ++p) edited.clear(Instrument::Kick, NotePosition::at(p));
  EXPECT_FALSE(eval_on("no_inst_anywhere(\"K\")", given));
  EXPECT_TRUE(eval_on("no_inst_anywhere(\"K\")", given, edited));
  EXPECT_TRUE(eval_on("have_inst_on_note(\"C\", 0)", given));
  EXPECT_FALSE(eval_on("have_inst_on_note(\"C\", 1)", given));
  EXPECT_TRUE(eval_on("have_inst_in_beat(\"S\", 1) && no_inst_in_beat(\"S\", 0)", given));
  EXPECT_TRUE(eval_on("have_artic_on_note(\"H\", 4, closed_soft)", given));
  EXPECT_FALSE(eval_on("have_artic_on_note(\"H\", 4, hard)", given));
  EXPECT_FALSE(eval_on("has_backbeat_notes(1)", given));
  EXPECT_TRUE(eval_on("has_backbeat_notes(0)", given));
}

TEST(Evaluate, CountAgainstOriginal) {
  const Groove given = parse_groove(kWorkedExample);
  Groove busier = given;
  busier.set(Instrument::HiHat, NotePosition::at(2), Articulation::from_glyph('x'));
  EXPECT_TRUE(eval_on("count_cmp(\"H\", le, original)", given, given));
  EXPECT_FALSE(eval_on("count_cmp(\"H\", le, original)", given, busier));
  EXPECT_TRUE(eval_on("count_cmp(\"H\", gt, original)", given, busier));
  EXPECT_TRUE(eval_on("count_cmp(\"H\", eq, 5)", given, busier));
  EXPECT_TRUE(eval_on("count_cmp(\"H\", lt, 5)", busier, given));
}

TEST(Evaluate, IdentityEditSatisfiesLeOriginal) {
  std::mt19937 rng(21);
  for (int i = 0; i < 200; ++i) {
    const Groove g = parse_groove(oracle::random_groove_text(rng));
    for (char l : oracle::kLetters) {
      const std::string q = std::string("\"") + l + "\"";
      EXPECT_TRUE(eval_on("count_cmp(" + q + ", le, original)", g));
      EXPECT_TRUE(eval_on("count_cmp(" + q + ", ge, original)", g));
      EXPECT_FALSE(eval_on("count_cmp(" + q + ", lt, original)", g));
    }
  }
}

TEST(Evaluate, AbsolutePredicatesIgnoreOriginal) {
  std::mt19937 rng(33);
  for (int i = 0; i < 200; ++i) {
    TestExpr e = parse_test_expr(oracle::random_expr(rng, 3));
    if (reads_original(e)) continue;
    const Groove edited = parse_groove(oracle::random_groove_text(rng));
    const Groove a = parse_groove(oracle::random_groove_text(rng));
    const Groove b = parse_groove(oracle::random_groove_text(rng));
    EXPECT_EQ(evaluate(e, {a, edited}), evaluate(e, {b, edited})) << to_source(e);
  }
}

TEST(Evaluate, HaveInstOnNoteMatchesReferencePseudocode) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> inst(0, 5), pos(0, 15);
  for (int i = 0; i < 1000; ++i) {
    const std::string text = oracle::random_groove_text(rng, 0.1 * (i % 10));
    const std::string letter(1, oracle::kLetters[static_cast<std::size_t>(inst(rng))]);
    const int p = pos(rng);
    const bool want = oracle::have_inst_on_note(oracle::to_drum_dict(text), letter, static_cast<std::size_t>(p));
    const Groove g = parse_groove(text);
    ASSERT_EQ(eval_on("have_inst_on_note(\"" + letter + "\", " + std::to_string(p) + ")", g), want)
        << text << "\n" << letter << " " << p;
  }
}

TEST(Evaluate, BooleanLaws) {
  std::mt19937 rng(77);
  for (int i = 0; i < 500; ++i) {
    const std::string a = oracle::random_expr(rng, 3);
    const std::string b = oracle::random_expr(rng, 3);
    const Groove o = parse_groove(oracle::random_groove_text(rng));
    const Groove g = parse_groove(oracle::random_groove_text(rng));
    const auto ev = [&](const std::string& s) { return eval_on(s, o, g); };
    EXPECT_EQ(ev("!(" + a + " && " + b + ")"), ev("!(" + a + ") || !(" + b + ")"));
    EXPECT_EQ(ev("!(" + a + " || " + b + ")"), ev("!(" + a + ") && !(" + b + ")"));
    EXPECT_EQ(ev("!!(" + a + ")"), ev(a));
    EXPECT_EQ(ev(a + " && " + b), ev(b + " && " + a));
    EXPECT_EQ(ev(a + " || " + b), ev(b + " || " + a));
  }
}

TEST(Placeholders, Substitution) {
  EXPECT_EQ(substitute_placeholders("no @a@ and @b@", {{"a", "kick"}, {"b", "snare"}}), "no kick and snare");
  try {
    substitute_placeholders("no @a@ and @c@", {{"a", "kick"}});
    FAIL();
  } catch (const ExprError& e) {
    EXPECT_EQ(e.kind(), ExprErrorKind::UnboundPlaceholder);
    EXPECT_EQ(e.offset(), 11u);
  }
  EXPECT_THROW(substitute_placeholders("no @a", {{"a", "kick"}}), ExprError);
}

TEST(Placeholders, InstantiateOverOrderedPairs) {
  const std::string tmpl = "have_inst_on_note(\"@i0@\", 0) && have_inst_on_note(\"@i1@\", 0)";
  std::set<std::string> seen;
  for (auto a : kAllInstruments) {
    for (auto b : kAllInstruments) {
      if (a == b) continue;
      const TestExpr e = instantiate(tmpl, {{"i0", a}, {"i1", b}});
      EXPECT_EQ(e.lhs().call().instrument, a);
      EXPECT_EQ(e.rhs().call().instrument, b);
      seen.insert(to_source(e));
    }
  }
  EXPECT_EQ(seen.size(), 30u);
  try {
    instantiate(tmpl, {{"i0", Instrument::Kick}});
    FAIL();
  } catch (const ExprError& e) {
    EXPECT_EQ(e.kind(), ExprErrorKind::UnboundPlaceholder);
  }
}
