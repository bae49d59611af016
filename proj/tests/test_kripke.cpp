#include <gtest/gtest.h>

#include <map>
#include <set>

#include "mucalc/kripke.hpp"
#include "mucalc/semantics.hpp"
#include "mucalc/text_io.hpp"

using namespace mucalc;

namespace {

KripkeModel chain(std::size_t n) {
  KripkeModel m(n);
  for (std::size_t i = 0; i + 1 < n; ++i) m.add_edge(i, i + 1);
  return m;
}

const FrameClass kAll[] = {FrameClass::K, FrameClass::T, FrameClass::KB, FrameClass::K4, FrameClass::S4, FrameClass::S5};

}  // namespace

TEST(UpdateValuation, Basics) {
  KripkeModel m = chain(3);
  StateSet a = m.singleton(0), b = m.singleton(2);
  KripkeModel twice = update_valuation(update_valuation(m, "x", a), "x", b);
  EXPECT_EQ(twice.valuation("x"), b);
  KripkeModel same = update_valuation(twice, "x", twice.valuation("x"));
  EXPECT_EQ(same, twice);
  EXPECT_EQ(eval_algebraic(Formula::atom("x"), twice), b);
  EXPECT_THROW(update_valuation(m, "x", StateSet(5)), std::invalid_argument);
}

TEST(FrameClassCheck, Examples) {
  KripkeModel loop(1);
  loop.add_edge(0, 0);
  for (FrameClass c : kAll) EXPECT_TRUE(frame_class_check(loop, c).ok);

  KripkeModel two = chain(2);
  EXPECT_TRUE(frame_class_check(two, FrameClass::K).ok);
  auto t = frame_class_check(two, FrameClass::T);
  EXPECT_FALSE(t.ok);
  EXPECT_EQ(t.witness, (std::vector<std::size_t>{0}));

  KripkeModel cyc(2);
  cyc.add_edge(0, 1);
  cyc.add_edge(1, 0);
  EXPECT_TRUE(frame_class_check(cyc, FrameClass::KB).ok);
  auto k4 = frame_class_check(cyc, FrameClass::K4);
  EXPECT_FALSE(k4.ok);
  EXPECT_EQ(k4.witness, (std::vector<std::size_t>{0, 1, 0}));
}

TEST(FrameClassCheck, S5IsConjunctionOfProperties) {
  Rng rng(31);
  for (int i = 0; i < 500; ++i) {
    auto r = random_relation(rng, 1 + i % 4, FrameClass::K);
    bool all = check_reflexive(r).ok && check_symmetric(r).ok && check_transitive(r).ok;
    EXPECT_EQ(frame_class_check(r, FrameClass::S5).ok, all);
  }
}

TEST(Enumerate, Counts) {
  std::size_t n = 0;
  enumerate_models(1, {"p"}, FrameClass::K, [&](const KripkeModel&) { return ++n, true; });
  EXPECT_EQ(n, 4u);
  n = 0;
  enumerate_models(1, {}, FrameClass::T, [&](const KripkeModel&) { return ++n, true; });
  EXPECT_EQ(n, 1u);
  n = 0;
  enumerate_models(2, {}, FrameClass::K, [&](const KripkeModel&) { return ++n, true; });
  EXPECT_EQ(n, 16u + 2u);
}

TEST(Enumerate, ClassCountsMatchTables) {
  // Labelled relations per class; the transitive, preorder and equivalence
  // counts are the known integer sequences.
  for (FrameClass c : kAll)
    for (std::size_t n = 1; n <= 4; ++n) {
      std::size_t count = 0;
      KripkeModel dummy;
      enumerate_models(n, {}, c, [&](const KripkeModel& m) {
        if (m.size() == n) ++count;
        return true;
      });
      EXPECT_EQ(static_cast<long double>(count), class_relation_count(c, n)) << to_string(c) << " " << n;
    }
}

TEST(Enumerate, DuplicateFreeAndOrdered) {
  std::set<std::string> seen;
  std::size_t prev_n = 0;
  enumerate_models(2, {"p"}, FrameClass::K, [&](const KripkeModel& m) {
    EXPECT_TRUE(seen.insert(write_model(m)).second);
    EXPECT_GE(m.size(), prev_n);
    prev_n = m.size();
    return true;
  });
  EXPECT_EQ(seen.size(), 2u * 2u + 16u * 4u);
}

TEST(Enumerate, RefusesOverBudget) {
  EXPECT_THROW(enumerate_models(5, {"p", "q"}, FrameClass::K, [](const KripkeModel&) { return true; }),
               BudgetExceeded);
  EXPECT_THROW(enumerate_models(3, {"p"}, FrameClass::K, [](const KripkeModel&) { return true; }, 100),
               BudgetExceeded);
}

TEST(RandomModel, StaysInClassAndIsDeterministic) {
  for (FrameClass c : kAll) {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) {
      KripkeModel m = random_model(a, 5, {"p"}, c);
      EXPECT_TRUE(frame_class_check(m, c).ok);
      EXPECT_EQ(m, random_model(b, 5, {"p"}, c));
    }
  }
}

TEST(RandomModel, UniformOverSmallSpace) {
  // 1-state and 2-state K-models over no atoms: 2 + 16 of them.
  Rng rng(5);
  std::map<std::string, int> freq;
  const int draws = 18000;
  for (int i = 0; i < draws; ++i) ++freq[write_model(random_model(rng, 2, {}, FrameClass::K))];
  EXPECT_EQ(freq.size(), 18u);
  for (const auto& [_, f] : freq) {
    EXPECT_GT(f, 800);
    EXPECT_LT(f, 1200);
  }
}

TEST(RandomModel, S5PartitionsAreUniform) {
  Rng rng(9);
  std::map<std::string, int> freq;
  for (int i = 0; i < 15000; ++i) {
    auto r = random_relation(rng, 4, FrameClass::S5);
    std::string key;
    for (const auto& row : r) {
      std::string bits;
      boost::to_string(row, bits);
      key += bits;
    }
    ++freq[key];
  }
  EXPECT_EQ(freq.size(), 15u);
  for (const auto& [_, f] : freq) {
    EXPECT_GT(f, 800);
    EXPECT_LT(f, 1200);
  }
}
