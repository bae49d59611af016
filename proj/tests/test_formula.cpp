#include <gtest/gtest.h>

#include <set>
#include <string>

#include "mucalc/closure.hpp"
#include "mucalc/formula.hpp"
#include "mucalc/generator.hpp"
#include "mucalc/text_io.hpp"

using namespace mucalc;

namespace {

Formula P(const std::string& s) { return parse_formula(s); }

std::set<std::string> keys(const ClosureSet& cl) {
  std::set<std::string> out;
  for (const auto& f : cl) out.insert(alpha_key(f));
  return out;
}

std::set<std::string> keys(std::initializer_list<const char*> fs) {
  std::set<std::string> out;
  for (const char* f : fs) out.insert(alpha_key(P(f)));
  return out;
}

std::vector<Formula> corpus(std::size_t n, std::uint64_t seed) {
  FormulaGenerator gen(GeneratorConfig{}, seed);
  std::vector<Formula> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(gen.next());
  return out;
}

}  // namespace

TEST(Negate, Examples) {
  EXPECT_EQ(negate(P("p")), P("!p"));
  EXPECT_EQ(negate(P("<>p")), P("[]!p"));
  EXPECT_EQ(negate(P("mu x.(p | <>x)")), P("nu x.(!p & []x)"));
  EXPECT_EQ(negate(P("true")), P("false"));
}

TEST(Negate, InvolutionAndFragmentDuality) {
  for (const auto& f : corpus(500, 11)) {
    EXPECT_TRUE(alpha_equal(negate(negate(f)), f)) << print_formula(f);
    EXPECT_TRUE(in_mucml(negate(f))) << print_formula(f);
  }
  // ~phi[!x/x] is cocontinuous in x whenever phi is continuous in x.
  Formula body = P("<>x | mu y.(x & <>y)");
  ASSERT_TRUE(in_con(body, {"x"}));
  EXPECT_TRUE(in_cocon(substitute(negate(body), "x", Formula::neg_atom("x")), {"x"}));
}

TEST(Substitute, Examples) {
  EXPECT_EQ(substitute(P("<>x"), "x", P("p")), P("<>p"));
  EXPECT_EQ(substitute(P("p"), "x", P("q")), P("p"));
  Formula r = substitute(P("mu y.(x | <>y)"), "x", P("<>y"));
  // The binder is renamed; y stays free.
  ASSERT_EQ(r.kind(), Kind::Mu);
  EXPECT_NE(r.name(), "y");
  EXPECT_TRUE(r.has_free("y"));
  EXPECT_TRUE(alpha_equal(r, P("mu w.(<>y | <>w)")));
  EXPECT_EQ(print_formula(r), "mu y_1. <>y | <>y_1");
}

TEST(Substitute, NegatedOccurrenceTakesComplement) {
  EXPECT_EQ(substitute(P("!x & x"), "x", P("<>p")), P("[]!p & <>p"));
}

TEST(Substitute, NoCapture) {
  for (const auto& f : corpus(200, 12)) {
    for (const auto& a : f.free_names()) {
      Formula psi = P("<>x | y");
      Formula r = substitute(f, a, psi);
      // Free names of the result: those of f minus a, plus those of psi.
      std::set<std::string> expect(f.free_names().begin(), f.free_names().end());
      expect.erase(a);
      expect.insert({"x", "y"});
      std::set<std::string> got(r.free_names().begin(), r.free_names().end());
      EXPECT_EQ(got, expect) << print_formula(f);
    }
  }
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify_fragment(P("<>x"), {"x"}).membership, Membership::InCon);
  EXPECT_EQ(classify_fragment(P("[]x"), {"x"}).membership, Membership::InCocon);
  EXPECT_EQ(classify_fragment(P("x | p"), {"x"}).membership, Membership::InBoth);
  EXPECT_EQ(classify_fragment(P("!x"), {"x"}).membership, Membership::Neither);
  EXPECT_FALSE(classify_fragment(P("mu x.[]x"), {}).in_mucml);
  EXPECT_TRUE(classify_fragment(P("mu x.(p | <>x)"), {}).in_mucml);
  EXPECT_FALSE(in_mucml(P("mu x.nu y.(x & []y)")));
  EXPECT_TRUE(in_mucml(P("mu x.((nu y.(q & []y)) | <>x)")));
}

TEST(Classify, GeneratedBindersAreContinuous) {
  for (const auto& f : corpus(1000, 13)) {
    ASSERT_TRUE(in_mucml(f)) << print_formula(f);
    ASSERT_TRUE(is_clean(f)) << print_formula(f);
    ASSERT_LE(formula_depth(f), 5u);
  }
}

TEST(Clean, RenamesDuplicateBinders) {
  Formula f = P("mu x.<>x & mu x.[]x");
  EXPECT_FALSE(is_clean(f));
  auto res = make_clean(f);
  EXPECT_TRUE(is_clean(res.formula));
  EXPECT_TRUE(alpha_equal(res.formula, f));
  ASSERT_EQ(res.renamings.size(), 1u);
  EXPECT_EQ(res.renamings[0].to, "x_1");
  Formula g = P("x & mu x.<>x");
  EXPECT_FALSE(is_tidy(g));
  EXPECT_TRUE(is_tidy(clean(g)));
}

TEST(AlphaKey, IdentifiesVariants) {
  EXPECT_TRUE(alpha_equal(P("mu x.<>x"), P("mu y.<>y")));
  EXPECT_FALSE(alpha_equal(P("mu x.<>x"), P("nu y.<>y")));
  EXPECT_FALSE(alpha_equal(P("mu x.(y | <>x)"), P("mu y.(y | <>y)")));
}

TEST(Closure, Examples) {
  EXPECT_EQ(keys(fl_closure(P("p"))), keys({"p"}));
  EXPECT_EQ(keys(fl_closure(P("mu x.<>x"))), keys({"mu x.<>x", "<>(mu x.<>x)"}));
  EXPECT_EQ(keys(fl_closure(P("<>p"), true)), keys({"<>p", "p", "!p", "[]!p"}));
  EXPECT_EQ(fl_closure(P("mu x.(p | <>x)")).size(), 4u);
  EXPECT_EQ(fl_closure(P("mu x.(p | <>x)"), true).size(), 8u);
}

TEST(Closure, IdempotentAndClosed) {
  for (const auto& f : corpus(300, 14)) {
    ClosureSet cl = fl_closure(f, true);
    EXPECT_TRUE(is_closed(cl)) << print_formula(f);
    ClosureSet again = fl_closure(cl.members(), true);
    EXPECT_EQ(keys(again), keys(cl));
    for (const auto& g : cl) EXPECT_TRUE(is_tidy(g));
  }
}

TEST(SubformulaIndex, DependencyOrder) {
  // y's body mentions x, and delta_y sits inside delta_x.
  SubformulaIndex idx(P("mu x.(p | <>mu y.(x | <>y))"));
  EXPECT_TRUE(idx.less("y", "x"));
  EXPECT_FALSE(idx.less("x", "y"));
  EXPECT_EQ(idx.enumeration(), (std::vector<std::string>{"y", "x"}));
  SubformulaIndex ind(P("mu x.(p | <>x) & nu y.(q & []y)"));
  EXPECT_FALSE(ind.less("x", "y"));
  EXPECT_FALSE(ind.less("y", "x"));
  EXPECT_EQ(ind.enumeration(), (std::vector<std::string>{"x", "y"}));
}

TEST(SubformulaIndex, OrderInvariantsOnCorpus) {
  for (const auto& f : corpus(500, 15)) {
    SubformulaIndex idx(f);
    const auto& en = idx.enumeration();
    for (std::size_t i = 0; i < en.size(); ++i) {
      EXPECT_FALSE(idx.less(en[i], en[i]));
      for (std::size_t j = 0; j < en.size(); ++j) {
        if (!idx.less(en[i], en[j])) {
          continue;
        }
        EXPECT_LT(i, j);
        // Alternation freeness.
        EXPECT_EQ(idx.var(en[i]).is_mu, idx.var(en[j]).is_mu) << print_formula(f);
        for (std::size_t k = 0; k < en.size(); ++k) {
          if (idx.less(en[j], en[k])) {
            EXPECT_TRUE(idx.less(en[i], en[k]));
          }
        }
      }
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      bool free = true;
      for (const auto& n : idx.node(i).free_names())
        if (!f.has_free(n)) free = false;
      EXPECT_EQ(idx.is_free_subformula(i), free);
    }
  }
}

TEST(Expansion, Examples) {
  Formula xi = P("mu x.<>x");
  EXPECT_EQ(expansion(xi, P("x")), xi);
  EXPECT_EQ(expansion(xi, P("<>x")), P("<>(mu x.<>x)"));
  Formula big = P("p & mu x.(q | <>x)");
  EXPECT_EQ(expansion(big, P("p")), P("p"));
  EXPECT_THROW(expansion(xi, P("q")), std::invalid_argument);
}

TEST(Expansion, ClosesBoundVariables) {
  for (const auto& f : corpus(300, 16)) {
    SubformulaIndex idx(f);
    for (const auto& phi : idx.nodes()) {
      Formula e = expansion(idx, phi);
      for (const auto& v : idx.vars()) EXPECT_FALSE(e.has_free(v.name)) << print_formula(f);
    }
  }
}

TEST(ClosureIdentity, Examples) {
  EXPECT_TRUE(closure_identity_check(P("p")).equal);
  auto r = closure_identity_check(P("mu x.<>x"));
  EXPECT_TRUE(r.equal);
  EXPECT_EQ(r.closure_size, 2u);
  // !p's closure adds p, which is not a subformula.
  auto neg = closure_identity_check(P("[]!p"));
  EXPECT_TRUE(neg.equal);
  EXPECT_EQ(neg.closure_size, 3u);
  auto r2 = closure_identity_check(P("mu x.(p | <>x)"));
  EXPECT_TRUE(r2.equal);
  EXPECT_EQ(r2.closure_size, 4u);
}

TEST(ClosureIdentity, HoldsOnCorpus) {
  for (const auto& f : corpus(500, 17)) {
    auto r = closure_identity_check(f);
    EXPECT_TRUE(r.equal) << print_formula(f);
  }
}

TEST(Generator, ShippedConfigMatchesDefaults) {
  auto j = nlohmann::json::parse(read_file(std::string(MUCALC_CORPUS_DIR) + "/generator.json"));
  GeneratorConfig c = GeneratorConfig::from_json(j);
  GeneratorConfig d;
  EXPECT_EQ(c.max_depth, d.max_depth);
  EXPECT_EQ(c.atoms, d.atoms);
  EXPECT_EQ(c.variables, d.variables);
  EXPECT_EQ(c.binder_rate, d.binder_rate);
  EXPECT_EQ(c.variable_rate, d.variable_rate);
  FormulaGenerator a(c, 5), b(d, 5);
  for (int i = 0; i < 50; ++i) {
    Formula f = a.next();
    EXPECT_EQ(f, b.next());
    EXPECT_TRUE(in_mucml(f) && is_clean(f)) << print_formula(f);
  }
}
