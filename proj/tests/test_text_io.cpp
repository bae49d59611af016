#include <gtest/gtest.h>

#include "mucalc/generator.hpp"
#include "mucalc/text_io.hpp"

using namespace mucalc;

TEST(Parse, Examples) {
  EXPECT_EQ(parse_formula("mu x. (p | <>x)"),
            Formula::mu("x", Formula::lor(Formula::atom("p"), Formula::diamond(Formula::atom("x")))));
  EXPECT_EQ(parse_formula("!(<>p)"), Formula::box(Formula::neg_atom("p")));
  Formula f = parse_formula("mu x. []x");
  EXPECT_FALSE(in_mucml(f));
}

TEST(Parse, PrecedenceAndScope) {
  EXPECT_EQ(parse_formula("p | q & r"), parse_formula("p | (q & r)"));
  EXPECT_EQ(parse_formula("p & q & r"), parse_formula("(p & q) & r"));
  EXPECT_EQ(parse_formula("<>p & q"), parse_formula("(<>p) & q"));
  // Binders extend as far right as possible.
  EXPECT_EQ(parse_formula("mu x. p | <>x"), parse_formula("mu x.(p | <>x)"));
  EXPECT_EQ(parse_formula("p -> q"), parse_formula("!p | q"));
  EXPECT_EQ(parse_formula("p -> q -> r"), parse_formula("!p | (!q | r)"));
  EXPECT_EQ(parse_formula("μx.◇x ∨ ¬p"), parse_formula("mu x.(<>x | !p)"));
  EXPECT_EQ(parse_formula("!!p"), parse_formula("p"));
}

TEST(Parse, ErrorsCarrySpans) {
  try {
    parse_formula("p & (q | ");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.span().start, 9u);
  }
  try {
    parse_formula("p $ q");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.span().start, 2u);
    EXPECT_EQ(e.span().end, 3u);
  }
  EXPECT_THROW(parse_formula("mu . p"), ParseError);
  EXPECT_THROW(parse_formula("P"), ParseError);
  EXPECT_THROW(parse_formula(""), ParseError);
}

TEST(Print, Examples) {
  EXPECT_EQ(print_formula(Formula::mu("x", Formula::diamond(Formula::atom("x")))), "mu x. <>x");
  EXPECT_EQ(print_formula(parse_formula("p & (q | r)")), "p & (q | r)");
  EXPECT_EQ(print_formula(negate(parse_formula("<>p"))), "[]!p");
  EXPECT_EQ(print_formula(parse_formula("(mu x. <>x) & p")), "(mu x. <>x) & p");
  EXPECT_EQ(print_formula(parse_formula("p & mu x. <>x")), "p & mu x. <>x");
  EXPECT_EQ(print_formula(parse_formula("<>(mu x. <>x) | q")), "<>(mu x. <>x) | q");
  EXPECT_EQ(print_formula(parse_formula("p & (q & r)")), "p & (q & r)");
}

TEST(Print, RoundTripOnRandomFormulas) {
  FormulaGenerator gen(GeneratorConfig{}, 21);
  for (int i = 0; i < 1000; ++i) {
    Formula f = gen.next();
    std::string text = print_formula(f);
    Formula g = parse_formula(text);
    ASSERT_TRUE(alpha_equal(f, g)) << text;
    ASSERT_EQ(print_formula(g), text);
  }
}

TEST(FormulaList, SkipsCommentsAndBlankLines) {
  auto fs = parse_formula_list("# sigma\np\n\n<>p  # comment\n");
  ASSERT_EQ(fs.size(), 2u);
  EXPECT_EQ(fs[1], parse_formula("<>p"));
  EXPECT_THROW(parse_formula_list("p\n(q"), ParseError);
}

TEST(Model, Examples) {
  KripkeModel m = read_model(R"({"states":["s0"],"edges":[],"valuation":{}})");
  EXPECT_EQ(m.size(), 1u);
  EXPECT_EQ(m.edge_count(), 0u);
  KripkeModel c = read_model(R"({"states":["s0","s1"],"edges":[["s0","s1"]],"valuation":{"p":["s1"]}})");
  EXPECT_TRUE(c.has_edge(0, 1));
  EXPECT_TRUE(c.valuation("p").test(1));
  EXPECT_FALSE(c.valuation("p").test(0));
  try {
    read_model(R"({"states":["s0"],"edges":[["s0","s9"]],"valuation":{}})");
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("undeclared state"), std::string::npos);
  }
  EXPECT_THROW(read_model(R"({"states":["s0","s0"],"edges":[],"valuation":{}})"), ModelError);
  EXPECT_THROW(read_model(R"({"states":["s0"],"edges":[],"valuation":{"p":["s3"]}})"), ModelError);
  EXPECT_THROW(read_model(R"({"states":[],"edges":[]})"), ModelError);
  EXPECT_THROW(read_model("{"), ModelError);
}

TEST(Model, CanonicalDocumentsRoundTrip) {
  const char* doc = R"({"states":["a","b"],"edges":[["a","a"],["a","b"]],"valuation":{"p":["b"],"q":[]}})";
  EXPECT_EQ(write_model(read_model(doc)), doc);
}

TEST(Model, RandomModelsRoundTrip) {
  Rng rng(22);
  for (int i = 0; i < 500; ++i) {
    KripkeModel m = random_model(rng, 6, {"p", "q", "r"}, FrameClass::K);
    KripkeModel back = read_model(write_model(m));
    ASSERT_EQ(back, m);
    ASSERT_EQ(write_model(back), write_model(m));
  }
}
