#include <catch2/catch_amalgamated.hpp>

#include "epiq/formula.hpp"
#include "epiq/parser.hpp"
#include "helpers.hpp"

using namespace epiq;
using epiq_tests::Rng;

TEST_CASE("parse: knowledge operator over an implication") {
  FormulaPtr f = parse("K[A@1] (a=1 -> w=fail)");
  REQUIRE(f->kind == Kind::Knows);
  CHECK(f->agent.name == "A");
  CHECK(f->agent.time == 1);
  CHECK_FALSE(f->mode.has_value());
  REQUIRE(f->lhs->kind == Kind::Implies);
  CHECK(equal(f->lhs->lhs, outcome("a", "1")));
  CHECK(equal(f->lhs->rhs, outcome("w", "fail")));
}

TEST_CASE("parse: context tags") {
  FormulaPtr f = parse("ctx[(A@1,l);(B@2,l)] a=1");
  REQUIRE(f->kind == Kind::Tagged);
  REQUIRE(f->context.size() == 2);
  CHECK(f->context[0].agent == AgentInstance("A", 1));
  CHECK(f->context[0].mode == Mode::Local);
  CHECK(f->context[1].agent == AgentInstance("B", 2));
  CHECK(equal(f->lhs, outcome("a", "1")));
}

TEST_CASE("parse: mode-annotated knowledge and bare propositions") {
  FormulaPtr f = parse("K[W@4,g] !p");
  REQUIRE(f->kind == Kind::Knows);
  CHECK(f->mode == Mode::Global);
  CHECK(f->lhs->kind == Kind::Not);
  CHECK(equal(f->lhs->lhs, prop("p")));
}

TEST_CASE("parse: precedence and right-associative implication") {
  // ! binds tightest, then &, |, ->; -> is right associative.
  FormulaPtr f = parse("!p & q | r -> p -> q");
  REQUIRE(f->kind == Kind::Implies);
  REQUIRE(f->rhs->kind == Kind::Implies);  // p -> q
  REQUIRE(f->lhs->kind == Kind::Or);
  CHECK(f->lhs->lhs->kind == Kind::And);
  CHECK(f->lhs->lhs->lhs->kind == Kind::Not);
}

TEST_CASE("parse: dangling arrow is an error at the dangling token") {
  try {
    parse("a=1 -> ");
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(e.column >= 7);
    CHECK_FALSE(e.expected.empty());
    CHECK(std::string(e.what()).find("expected") != std::string::npos);
  }
}

TEST_CASE("parse: error positions are 1-based line/column") {
  try {
    parse("p &\n& q");
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(e.column == 1);
  }
}

TEST_CASE("parse: outcome values validated against declared domains") {
  OutcomeDomains domains{{"a", {"0", "1"}}, {"w", {"ok", "fail"}}};
  CHECK_NOTHROW(parse("a=1 & w=fail", &domains));
  CHECK_THROWS_AS(parse("a=2", &domains), Error);
  CHECK_THROWS_AS(parse("z=1", &domains), Error);
}

TEST_CASE("outcome atom construction rejects out-of-domain values") {
  OutcomeDomains domains{{"w", {"ok", "fail"}}};
  CHECK_NOTHROW(outcome(domains, "w", "ok"));
  CHECK_THROWS_AS(outcome(domains, "w", "maybe"), Error);
  CHECK_THROWS_AS(outcome(domains, "v", "ok"), Error);
}

TEST_CASE("print: canonical forms") {
  CHECK(print(knows(AgentInstance("A", 1), outcome("a", "1"))) ==
        "K[A@1] (a=1)");
  CHECK(print(conjunction(outcome("w", "ok"), outcome("w", "fail"))) ==
        "(w=ok) & (w=fail)");
  CHECK(print(knows(AgentInstance("W", 4),
                    conjunction(outcome("w", "ok"), outcome("w", "fail")))) ==
        "K[W@4] ((w=ok) & (w=fail))");
  CHECK(print(prop("p")) == "p");
  CHECK(print(tagged({{AgentInstance("A", 1), Mode::Local}},
                     outcome("a", "1"))) == "ctx[(A@1,l)] (a=1)");
}

TEST_CASE("print: round-trips through parse on 1000 random formulas") {
  Rng rng(20260816);
  for (int i = 0; i < 1000; ++i) {
    FormulaPtr f = epiq_tests::random_formula(rng, epiq_tests::pick(rng, 1, 6));
    std::string s = print(f);
    FormulaPtr g = parse(s);
    INFO("formula: " << s);
    REQUIRE(equal(f, g));
    // The canonical form is a fixed point of print . parse.
    REQUIRE(print(g) == s);
  }
}

TEST_CASE("tagged: empty tag is identity, nesting flattens") {
  FormulaPtr base = outcome("a", "1");
  CHECK(equal(tagged({}, base), base));

  ContextVector inner{{AgentInstance("A", 1), Mode::Local}};
  ContextVector outer{{AgentInstance("B", 2), Mode::Local}};
  FormulaPtr t = tagged(outer, tagged(inner, base));
  REQUIRE(t->kind == Kind::Tagged);
  REQUIRE(t->context.size() == 2);
  // Inner tags stay closest to the payload.
  CHECK(t->context[0].agent == AgentInstance("A", 1));
  CHECK(t->context[1].agent == AgentInstance("B", 2));
  CHECK(t->lhs->kind != Kind::Tagged);
}

TEST_CASE("tagged: no nested Tagged node survives random construction") {
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    FormulaPtr f = epiq_tests::random_formula(rng, 6);
    for (const auto& sub : subformulas(f)) {
      if (sub->kind == Kind::Tagged) {
        CHECK(sub->lhs->kind != Kind::Tagged);
        CHECK_FALSE(sub->context.empty());
      }
    }
  }
}

TEST_CASE("subformulas: includes the formula itself") {
  FormulaPtr f = knows(AgentInstance("A"),
                       conjunction(prop("p"), prop("q")));
  FormulaSet subs = subformulas(f);
  CHECK(subs.size() == 4);  // K[A](p&q), p&q, p, q
  CHECK(subs.count(f) == 1);
  CHECK(subs.count(prop("p")) == 1);
}

TEST_CASE("subformulas: set size equals node count when all nodes distinct") {
  // A right-leaning spine of implications over pairwise distinct atoms:
  // every node is structurally unique.
  FormulaPtr f = prop("x0");
  for (int i = 1; i <= 10; ++i) f = implication(prop("x" + std::to_string(i)), f);
  CHECK(depth(f) == 11);
  CHECK(subformulas(f).size() == node_count(f));
}

TEST_CASE("subformulas: shared structure collapses in the set") {
  FormulaPtr pq = conjunction(prop("p"), prop("q"));
  FormulaPtr f = disjunction(pq, pq);
  CHECK(node_count(f) == 7);
  CHECK(subformulas(f).size() == 4);  // f, p&q, p, q
}

TEST_CASE("structural equality is independent of construction path") {
  FormulaPtr a = parse("K[A@1] (a=1 -> w=fail)");
  FormulaPtr b = knows(AgentInstance("A", 1),
                       implication(outcome("a", "1"), outcome("w", "fail")));
  CHECK(equal(a, b));
  CHECK(compare(*a, *b) == 0);
  CHECK_FALSE(equal(a, parse("K[A@2] (a=1 -> w=fail)")));
  CHECK_FALSE(equal(a, parse("K[A] (a=1 -> w=fail)")));
  CHECK_FALSE(equal(parse("K[A,l] p"), parse("K[A,g] p")));
  CHECK_FALSE(equal(parse("K[A,l] p"), parse("K[A] p")));
}

TEST_CASE("atoms helper collects exactly the atoms") {
  FormulaPtr f = parse("K[A] ((a=1) -> (p & !a=0))");
  FormulaSet at = atoms(f);
  CHECK(at.size() == 3);
  CHECK(at.count(outcome("a", "1")) == 1);
  CHECK(at.count(outcome("a", "0")) == 1);
  CHECK(at.count(prop("p")) == 1);
}
