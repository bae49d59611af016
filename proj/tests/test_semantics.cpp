#include <gtest/gtest.h>

#include <cstdint>
#include <map>

#include "mucalc/game.hpp"
#include "mucalc/generator.hpp"
#include "mucalc/semantics.hpp"
#include "mucalc/text_io.hpp"

using namespace mucalc;

namespace {

Formula P(const std::string& s) { return parse_formula(s); }

KripkeModel chain(std::size_t n) {
  KripkeModel m(n);
  for (std::size_t i = 0; i + 1 < n; ++i) m.add_edge(i, i + 1);
  return m;
}

// Reference semantics: least fixpoints as the intersection of all
// prefixpoints and greatest fixpoints as the union of all postfixpoints,
// enumerating every subset of the state space. Bit masks over <= 6 states.
struct Oracle {
  const KripkeModel& m;
  std::map<std::string, std::uint32_t> env;

  std::uint32_t full() const { return (1u << m.size()) - 1; }
  std::uint32_t val(const std::string& a) const {
    if (auto it = env.find(a); it != env.end()) return it->second;
    std::uint32_t x = 0;
    StateSet v = m.valuation(a);
    for (std::size_t s = 0; s < m.size(); ++s)
      if (v.test(s)) x |= 1u << s;
    return x;
  }
  std::uint32_t eval(const Formula& f) {
    switch (f.kind()) {
      case Kind::Atom: return val(f.name());
      case Kind::NegAtom: return full() & ~val(f.name());
      case Kind::Top: return full();
      case Kind::Bottom: return 0;
      case Kind::Or: return eval(f.left()) | eval(f.right());
      case Kind::And: return eval(f.left()) & eval(f.right());
      case Kind::Diamond:
      case Kind::Box: {
        std::uint32_t b = eval(f.body()), out = 0;
        for (std::size_t s = 0; s < m.size(); ++s) {
          std::uint32_t succ = 0;
          for (std::size_t t = 0; t < m.size(); ++t)
            if (m.has_edge(s, t)) succ |= 1u << t;
          bool hit = f.kind() == Kind::Diamond ? (succ & b) != 0 : (succ & ~b) == 0;
          if (hit) out |= 1u << s;
        }
        return out;
      }
      case Kind::Mu:
      case Kind::Nu: {
        auto saved = env.find(f.name()) == env.end() ? std::optional<std::uint32_t>{} : env[f.name()];
        std::uint32_t acc = f.kind() == Kind::Mu ? full() : 0;
        for (std::uint32_t x = 0; x <= full(); ++x) {
          env[f.name()] = x;
          std::uint32_t y = eval(f.body());
          if (f.kind() == Kind::Mu && (y & ~x) == 0) acc &= x;
          if (f.kind() == Kind::Nu && (x & ~y) == 0) acc |= x;
        }
        if (saved) env[f.name()] = *saved; else env.erase(f.name());
        return acc;
      }
    }
    return 0;
  }
};

std::uint32_t mask(const StateSet& x) {
  std::uint32_t out = 0;
  for (std::size_t s = 0; s < x.size(); ++s)
    if (x.test(s)) out |= 1u << s;
  return out;
}

}  // namespace

TEST(Eval, Examples) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    KripkeModel m = random_model(rng, 5, {"p"}, FrameClass::K);
    EXPECT_TRUE(eval_algebraic(P("mu x.<>x"), m).none());
  }
  KripkeModel c = chain(3);
  c.set_valuation("p", c.singleton(2));
  EvalStats st;
  EXPECT_TRUE(eval_algebraic(P("mu x.(p | <>x)"), c, &st).all());
  // {s2}, {s1,s2}, {s0,s1,s2}, then the stable round.
  EXPECT_EQ(st.max_rounds, 4u);
  KripkeModel loop(1);
  loop.add_edge(0, 0);
  EXPECT_TRUE(eval_algebraic(P("nu x.<>x"), loop).all());
  EXPECT_THROW(eval_algebraic(P("mu x.!x"), loop), EvalError);
}

TEST(Eval, AgreesWithSubsetOracle) {
  FormulaGenerator gen(GeneratorConfig{}, 41);
  Rng rng(42);
  for (int i = 0; i < 400; ++i) {
    Formula f = gen.next();
    KripkeModel m = random_model(rng, 4, {"p", "q", "r"}, FrameClass::K);
    EvalStats st;
    StateSet x = eval_algebraic(f, m, &st);
    EXPECT_EQ(mask(x), (Oracle{m, {}}.eval(f))) << print_formula(f);
    EXPECT_LE(st.max_rounds, m.size() + 1);
  }
}

TEST(Eval, ComplementLaw) {
  FormulaGenerator gen(GeneratorConfig{}, 43);
  Rng rng(44);
  for (int i = 0; i < 500; ++i) {
    Formula f = gen.next();
    KripkeModel m = random_model(rng, 5, {"p", "q", "r"}, FrameClass::K);
    EXPECT_EQ(eval_algebraic(negate(f), m), ~eval_algebraic(f, m)) << print_formula(f);
  }
}

TEST(Eval, MonotoneInContinuousVariable) {
  FormulaGenerator gen(GeneratorConfig{}, 45);
  Rng rng(46);
  int checked = 0;
  for (int i = 0; i < 2000 && checked < 300; ++i) {
    Formula f = gen.next();
    if (f.kind() != Kind::Mu) continue;
    ++checked;
    const Formula& body = f.body();
    KripkeModel m = random_model(rng, 4, {"p", "q", "r"}, FrameClass::K);
    StateSet y = m.empty_set(), x = m.empty_set();
    for (std::size_t s = 0; s < m.size(); ++s) {
      if (coin(rng)) y.set(s);
      if (y.test(s) && coin(rng)) x.set(s);
    }
    StateSet lo = eval_algebraic(body, update_valuation(m, f.name(), x));
    StateSet hi = eval_algebraic(body, update_valuation(m, f.name(), y));
    EXPECT_TRUE(lo.is_subset_of(hi)) << print_formula(f);
  }
  EXPECT_GT(checked, 50);
}

TEST(Arena, TableRows) {
  KripkeModel m = chain(2);
  m.set_valuation("p", m.singleton(1));
  Formula xi = P("(p | <>p) & []p");
  GameArena a = build_arena(xi, m);
  const auto& idx = a.index;
  std::size_t orr = *idx.id(P("p | <>p")), box = *idx.id(P("[]p")), p = *idx.id(P("p"));
  EXPECT_EQ(a.game.owner[a.position(orr, 0)], Player::Exists);
  EXPECT_EQ(a.game.moves[a.position(orr, 0)].size(), 2u);
  EXPECT_EQ(a.game.owner[a.position(box, 0)], Player::Forall);
  EXPECT_EQ(a.game.moves[a.position(box, 0)], (std::vector<std::size_t>{a.position(p, 1)}));
  EXPECT_EQ(a.game.owner[a.position(p, 1)], Player::Forall);
  EXPECT_TRUE(a.game.moves[a.position(p, 1)].empty());
  EXPECT_EQ(a.game.owner[a.position(p, 0)], Player::Exists);
  EXPECT_EQ(a.game.owner[a.position(idx.root(), 0)], Player::Forall);
}

TEST(Arena, Priorities) {
  KripkeModel m(1);
  Formula xi = P("mu x.(p | <>mu y.(x | <>y))");
  GameArena a = build_arena(xi, m);
  // Enumeration is y, x.
  EXPECT_EQ(a.game.priority[a.position(*a.index.id(P("y")), 0)], 3u);
  EXPECT_EQ(a.game.priority[a.position(*a.index.id(P("x")), 0)], 5u);
  EXPECT_EQ(a.game.priority[a.position(a.index.root(), 0)], 0u);
  GameArena b = build_arena(P("nu z.(q & []z)"), m);
  EXPECT_EQ(b.game.priority[b.position(*b.index.id(P("z")), 0)], 2u);
}

TEST(Solve, Examples) {
  KripkeModel loop(1);
  loop.add_edge(0, 0);
  auto mu = solve_arena(build_arena(P("mu x.<>x"), loop));
  for (bool w : mu.regions.exists_wins) EXPECT_FALSE(w);
  auto nu = solve_arena(build_arena(P("nu x.<>x"), loop));
  for (bool w : nu.regions.exists_wins) EXPECT_TRUE(w);
  KripkeModel one(1);
  one.set_valuation("p", one.singleton(0));
  auto lit = solve_arena(build_arena(P("p & !q"), one));
  EXPECT_TRUE(lit.exists_wins(lit.arena.index.root(), 0));
  EXPECT_TRUE(lit.exists_wins(*lit.arena.index.id(P("!q")), 0));
  auto lit2 = solve_arena(build_arena(P("q | false"), one));
  EXPECT_FALSE(lit2.exists_wins(lit2.arena.index.root(), 0));
}

TEST(Solve, HandBuiltParityGame) {
  // 0 (E, 1) -> 1 (A, 2) -> 0 ; 1 -> 2 (E, 3) -> 2
  ParityGame g;
  g.add(Player::Exists, 1);
  g.add(Player::Forall, 2);
  g.add(Player::Exists, 3);
  g.moves = {{1}, {0, 2}, {2}};
  auto w = solve_parity_game(g);
  EXPECT_FALSE(w.exists_wins[0]);
  EXPECT_FALSE(w.exists_wins[2]);
  EXPECT_EQ(w.strategy[1], 2u);
  EXPECT_TRUE(strategies_closed(g, w));
}

TEST(ModelCheckEquiv, Examples) {
  KripkeModel c = chain(3);
  c.set_valuation("p", c.singleton(2));
  EXPECT_TRUE(model_check_equiv(P("p"), c).ok());
  auto r = model_check_equiv(P("mu x.(p | <>x)"), c);
  EXPECT_TRUE(r.ok());
  // Subformulas: the binder, p | <>x, p, <>x and x.
  EXPECT_EQ(r.positions, 5u * 3u);
  KripkeModel cyc(2);
  cyc.add_edge(0, 1);
  cyc.add_edge(1, 0);
  cyc.set_valuation("p", cyc.full_set());
  EXPECT_TRUE(model_check_equiv(P("nu x.(p & []x)"), cyc).ok());
  EXPECT_TRUE(eval_game(P("nu x.(p & []x)"), cyc).all());
}

TEST(ModelCheckEquiv, RandomPairsAndStrategies) {
  FormulaGenerator gen(GeneratorConfig{}, 47);
  Rng rng(48);
  for (int i = 0; i < 300; ++i) {
    Formula f = gen.next();
    KripkeModel m = random_model(rng, 5, {"p", "q", "r"}, FrameClass::K);
    auto r = model_check_equiv(f, m);
    ASSERT_TRUE(r.ok()) << print_formula(f) << " " << write_model(m);
    auto sol = solve_arena(build_arena(f, m));
    EXPECT_TRUE(strategies_closed(sol.arena.game, sol.regions));
  }
}

TEST(TraceProperties, Examples) {
  EXPECT_TRUE(trace_property_check(P("mu x.(p | <>x)")).ok());
  EXPECT_TRUE(trace_property_check(P("(mu x.(p | <>x)) & nu y.(q & []y)")).ok());
  auto bad = trace_property_check(P("mu x.[]x"));
  EXPECT_TRUE(bad.holds(1));
  EXPECT_TRUE(bad.holds(2));
  EXPECT_FALSE(bad.holds(3));
  ASSERT_FALSE(bad.violations.empty());
  EXPECT_EQ(bad.violations[0].path.size(), 2u);
  EXPECT_FALSE(trace_property_check(P("mu x.nu y.(x & []y)")).holds(2));
}

TEST(TraceProperties, HoldOnGeneratedFormulas) {
  FormulaGenerator gen(GeneratorConfig{}, 49);
  for (int i = 0; i < 1000; ++i) {
    Formula f = gen.next();
    EXPECT_TRUE(trace_property_check(f).ok()) << print_formula(f);
  }
}
