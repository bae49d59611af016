#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "mucalc/canonical.hpp"
#include "mucalc/generator.hpp"
#include "mucalc/text_io.hpp"

using namespace mucalc;
namespace fs = std::filesystem;

namespace {

Formula P(const std::string& s) { return parse_formula(s); }

ClosureSet neg_closure(const std::string& s) { return fl_closure(P(s), true); }

// Test-side model search: all models with 1..n states over the given atoms,
// filtered by frame class. Written independently of enumerate_models.
std::optional<KripkeModel> find_model(const Formula& phi, FrameClass cls, std::size_t n) {
  std::vector<std::string> atoms(phi.free_names().begin(), phi.free_names().end());
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t edges = k * k, bits = k * atoms.size();
    for (std::uint64_t r = 0; r < (std::uint64_t{1} << edges); ++r) {
      std::vector<StateSet> rel(k, StateSet(k));
      for (std::size_t e = 0; e < edges; ++e)
        if ((r >> e) & 1u) rel[e / k].set(e % k);
      if (!frame_class_check(rel, cls).ok) continue;
      for (std::uint64_t v = 0; v < (std::uint64_t{1} << bits); ++v) {
        KripkeModel m(k);
        m.set_relation(rel);
        for (std::size_t a = 0; a < atoms.size(); ++a) {
          StateSet x(k);
          for (std::size_t s = 0; s < k; ++s)
            if ((v >> (a * k + s)) & 1u) x.set(s);
          m.set_valuation(atoms[a], x);
        }
        if (eval_algebraic(phi, m).any()) return m;
      }
    }
  }
  return std::nullopt;
}

std::set<std::string> member_set(const CanonicalModel& cm, std::size_t a) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < cm.sigma().size(); ++i)
    if (cm.atoms.atoms[a].contains(i)) out.insert(print_formula(cm.sigma()[i]));
  return out;
}

std::optional<std::size_t> atom_with(const CanonicalModel& cm, const std::set<std::string>& members) {
  for (std::size_t a = 0; a < cm.size(); ++a)
    if (member_set(cm, a) == members) return a;
  return std::nullopt;
}

const std::vector<FrameClass> kAllClasses = {FrameClass::K,  FrameClass::T,  FrameClass::KB,
                                              FrameClass::K4, FrameClass::S4, FrameClass::S5};

}  // namespace

// ---------------------------------------------------------------------------
// Oracle

TEST(Oracle, Examples) {
  auto a = sat_search(P("p & !p"), FrameClass::K);
  EXPECT_EQ(a.kind, Verdict::Unsat);
  EXPECT_EQ(a.method, "refuter");

  auto b = sat_search(P("p & []!p"), FrameClass::K);
  ASSERT_TRUE(b.sat());
  EXPECT_TRUE(replays(b, P("p & []!p")));
  auto one = find_model(P("p & []!p"), FrameClass::K, 1);
  ASSERT_TRUE(one);
  EXPECT_TRUE(one->successors(0).none());

  auto c = sat_search(P("p & []!p & <>(p & <>p)"), FrameClass::K);
  EXPECT_EQ(c.kind, Verdict::Unsat);
  EXPECT_EQ(c.method, "refuter");
}

TEST(Oracle, WellFoundednessNeedsElimination) {
  SatConfig no_elim;
  no_elim.elimination = false;
  for (const char* s : {"mu x.<>x", "(mu x.(p | <>x)) & nu y.(!p & !q & []y)"}) {
    auto plain = sat_search(P(s), FrameClass::K, no_elim);
    EXPECT_EQ(plain.kind, Verdict::Unknown) << s;
    auto v = sat_search(P(s), FrameClass::K);
    EXPECT_EQ(v.kind, Verdict::Unsat) << s;
    EXPECT_EQ(v.method, "elimination") << s;
  }
  // A syntactic complement is caught by the refuter already.
  EXPECT_EQ(sat_search(P("(mu x.(p | <>x)) & nu y.(!p & []y)"), FrameClass::K, no_elim).method, "refuter");
  // Cl(mu x.<>x) has two members, so four states exhaust the bound.
  EXPECT_FALSE(find_model(P("mu x.<>x"), FrameClass::K, 4));
}

TEST(Oracle, ClassRules) {
  EXPECT_TRUE(sat_search(P("[]p & !p"), FrameClass::K).sat());
  EXPECT_TRUE(sat_search(P("[]p & !p"), FrameClass::T).unsat());
  EXPECT_TRUE(sat_search(P("[]p & <>!p"), FrameClass::K).unsat());
  EXPECT_TRUE(sat_search(P("[]p & <><>!p"), FrameClass::K).sat());
  EXPECT_TRUE(sat_search(P("[]p & <><>!p"), FrameClass::K4).unsat());
  EXPECT_TRUE(sat_search(P("[]p & <>[]!p"), FrameClass::K4).sat());
  EXPECT_TRUE(sat_search(P("[]p & <><>!p & [][]p"), FrameClass::K).unsat());
  EXPECT_TRUE(sat_search(P("p & <>[]!p"), FrameClass::KB).unsat());
  EXPECT_TRUE(sat_search(P("<>p & <>!p & []<>p"), FrameClass::S5).sat());
  EXPECT_TRUE(sat_search(P("<>p & []<>!p & [][]p"), FrameClass::S5).unsat());
}

// Every decisive verdict agrees with an independent small-model search.
TEST(Oracle, AgreesWithSmallModelSearch) {
  GeneratorConfig gc;
  gc.atoms = {"p", "q"};
  gc.max_depth = 4;
  FormulaGenerator gen(gc, 7);
  std::size_t sat = 0, unsat = 0, unknown = 0;
  for (int i = 0; i < 150; ++i) {
    Formula f = gen.next();
    for (const Formula& g : {f, negate(f)})
      for (FrameClass cls : kAllClasses) {
        std::size_t n = (cls == FrameClass::K || cls == FrameClass::T) ? 2 : 3;
        auto v = sat_search(g, cls);
        auto m = find_model(g, cls, n);
        if (v.sat()) {
          ++sat;
          ASSERT_TRUE(replays(v, clean(g))) << print_formula(g);
          ASSERT_TRUE(frame_class_check(*v.witness, cls).ok) << print_formula(g);
        } else if (v.unsat()) {
          ++unsat;
          ASSERT_FALSE(m) << print_formula(g) << " in " << to_string(cls) << " via " << v.method << "\n"
                          << write_model(*m);
        } else {
          ++unknown;
        }
      }
  }
  EXPECT_GT(sat, 500u);
  EXPECT_GT(unsat, 20u);
  EXPECT_EQ(unknown, 0u);
}

TEST(Oracle, CacheRoundTrip) {
  fs::path dir = fs::temp_directory_path() / "mucalc_cache_test";
  fs::remove_all(dir);
  VerdictCache cache(dir);
  Formula f = P("<>p & <>!p");
  auto v = sat_search(f, FrameClass::KB, {}, &cache);
  ASSERT_TRUE(v.sat());
  auto hit = cache.get(clean(f), FrameClass::KB, {});
  ASSERT_TRUE(hit);
  EXPECT_EQ(to_json(*hit).dump(), to_json(v).dump());
  EXPECT_FALSE(cache.get(clean(f), FrameClass::K, {}));
  auto again = sat_search(f, FrameClass::KB, {}, &cache);
  EXPECT_EQ(to_json(again).dump(), to_json(v).dump());
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Atoms and canonical models

TEST(Atoms, DiamondP) {
  ClosureSet sigma = neg_closure("<>p");
  ASSERT_EQ(sigma.size(), 4u);
  auto as = enumerate_atoms(sigma, FrameClass::K);
  EXPECT_EQ(as.candidates, 4u);
  ASSERT_EQ(as.atoms.size(), 4u);
  for (const auto& a : as.atoms) EXPECT_TRUE(a.verdict.sat());
}

TEST(Atoms, SingleLetter) {
  auto as = enumerate_atoms(neg_closure("p"), FrameClass::K);
  EXPECT_EQ(as.atoms.size(), 2u);
}

TEST(Atoms, IncoherentChoicesNeverReachTheOracle) {
  ClosureSet sigma = neg_closure("p & q");
  auto as = enumerate_atoms(sigma, FrameClass::K);
  // 3 pairs; p & q forces both, its negation at least one negated letter.
  EXPECT_EQ(as.candidates, 8u);
  EXPECT_EQ(as.coherent, 4u);
  EXPECT_EQ(as.atoms.size(), 4u);
  EXPECT_THROW(enumerate_atoms(fl_closure(P("<>p")), FrameClass::K), FiltrationError);
}

TEST(Canonical, DiamondPInK) {
  auto cm = build_canonical(neg_closure("<>p"), FrameClass::K, Strategy::Min);
  ASSERT_EQ(cm.size(), 4u);
  auto boxed = atom_with(cm, {"p", "[]!p"});
  auto dia = atom_with(cm, {"p", "<>p"});
  ASSERT_TRUE(boxed && dia);
  std::size_t p_idx = *cm.sigma().find(P("p"));
  const StateSet& succ = cm.model.successors(*boxed);
  for (std::size_t b = succ.find_first(); b != StateSet::npos; b = succ.find_next(b))
    EXPECT_FALSE(cm.atoms.atoms[b].contains(p_idx));
  EXPECT_TRUE(cm.rmin[*dia].test(*dia));
  EXPECT_TRUE(relation_subset(cm.rmin, cm.model.relation()));
  EXPECT_TRUE(relation_subset(cm.model.relation(), cm.rmax));
  for (std::size_t a = 0; a < cm.size(); ++a)
    EXPECT_EQ(cm.model.valuation("p").test(a), cm.atoms.atoms[a].contains(p_idx));
}

TEST(Canonical, ReflexiveStrategyInT) {
  auto cm = build_canonical(neg_closure("<>p"), FrameClass::T, Strategy::Reflexive);
  for (std::size_t a = 0; a < cm.size(); ++a) EXPECT_TRUE(cm.model.successors(a).test(a));
  EXPECT_TRUE(frame_class_check(cm.model, FrameClass::T).ok);
  // In T the atom {p, []!p} is inconsistent.
  EXPECT_FALSE(atom_with(cm, {"p", "[]!p"}));
}

TEST(Canonical, StrategyOutsideClassIsRejected) {
  // In K the atom {p, []!p} cannot see itself.
  EXPECT_THROW(build_canonical(neg_closure("<>p"), FrameClass::K, Strategy::Reflexive), CanonicalError);
  // In T the minimal relation is already reflexive.
  auto t = build_canonical(neg_closure("<>p"), FrameClass::T, Strategy::Min);
  EXPECT_TRUE(check_reflexive(t.rmin).ok);
}

TEST(Canonical, LemmaChecksOnSmallSigmas) {
  for (const char* s : {"p", "<>p", "mu x.(p | <>x)"})
    for (FrameClass cls : {FrameClass::K, FrameClass::T, FrameClass::KB}) {
      auto cm = build_canonical(neg_closure(s), cls, default_strategy(cls));
      EXPECT_TRUE(cm.warnings.empty()) << s;
      EXPECT_TRUE(frame_class_check(cm.model, cls).ok) << s;
      auto e = existence_check(cm), d = distinctness_check(cm), t = truth_lemma_check(cm);
      EXPECT_TRUE(e.ok()) << s << " " << to_string(cls) << ": " << (e.violations.empty() ? "" : e.violations[0]);
      EXPECT_TRUE(d.ok()) << s << " " << to_string(cls) << ": " << (d.violations.empty() ? "" : d.violations[0]);
      EXPECT_TRUE(t.ok()) << s << " " << to_string(cls) << ": " << (t.violations.empty() ? "" : t.violations[0]);
      EXPECT_EQ(t.checked, cm.size() * cm.sigma().size());
    }
}

TEST(Canonical, DeletingAnEdgeBreaksExistence) {
  auto cm = build_canonical(neg_closure("<>p"), FrameClass::K, Strategy::Min);
  auto dia = atom_with(cm, {"!p", "<>p"});
  ASSERT_TRUE(dia);
  auto r = cm.model.relation();
  std::size_t p_idx = *cm.sigma().find(P("p"));
  for (std::size_t b = 0; b < cm.size(); ++b)
    if (cm.atoms.atoms[b].contains(p_idx)) r[*dia].reset(b);
  cm.model.set_relation(r);
  EXPECT_FALSE(existence_check(cm).ok());
}

TEST(Canonical, AtomsSidecar) {
  auto cm = build_canonical(neg_closure("<>p"), FrameClass::K, Strategy::Min);
  auto j = atoms_sidecar(cm);
  ASSERT_EQ(j["atoms"].size(), 4u);
  EXPECT_EQ(j["atoms"][0]["id"], "A0");
  EXPECT_EQ(j["logic"], "K");
  for (const auto& a : j["atoms"]) {
    EXPECT_EQ(a["verdict"], "SAT");
    EXPECT_EQ(a["members"].size(), 2u);
  }
}

TEST(NameExpansion, Examples) {
  Formula xi = P("mu x.(p | <>x)");
  auto cm = build_canonical(fl_closure(xi, true), FrameClass::K, Strategy::Min);
  // No bound variable free: unchanged.
  EXPECT_TRUE(alpha_equal(name_expansion(xi, P("p"), cm), P("p")));
  // U_1 = [[p | <>mu x.(p | <>x)]] in the canonical model.
  StateSet u = eval_algebraic(P("p | <>mu x.(p | <>x)"), cm.model);
  EXPECT_TRUE(alpha_equal(name_expansion(xi, P("x"), cm), psi_of(cm, u)));
  EXPECT_TRUE(alpha_equal(psi_of(cm, cm.model.empty_set()), Formula::bottom()));
  StateSet all = cm.model.empty_set();
  all.set();
  Formula full = psi_of(cm, all);
  EXPECT_EQ(full.kind(), cm.size() > 1 ? Kind::Or : full.kind());
}

// ---------------------------------------------------------------------------
// Completeness pipeline

TEST(Pipeline, Examples) {
  auto a = completeness_pipeline(P("<>p"), FrameClass::K);
  ASSERT_EQ(a.status, PipelineStatus::Model);
  EXPECT_TRUE(satisfies(a.canonical->model, a.state, P("<>p")));
  auto b = completeness_pipeline(P("p & !p"), FrameClass::K);
  EXPECT_EQ(b.status, PipelineStatus::Inconsistent);
  auto c = completeness_pipeline(P("<>p"), FrameClass::KB);
  ASSERT_EQ(c.status, PipelineStatus::Model);
  EXPECT_TRUE(check_symmetric(c.canonical->model.relation()).ok);
  EXPECT_TRUE(satisfies(c.canonical->model, c.state, P("<>p")));
}

// Labels in corpus/completeness.json are frozen; this re-derives them with
// the small-model search and, for UNSAT, either the refuter alone or the
// FMP bound. Four labels rest on the arguments noted below.
TEST(Pipeline, CorpusLabelsAreDerivable) {
  auto corpus = nlohmann::json::parse(read_file(std::string(MUCALC_CORPUS_DIR) + "/completeness.json"));
  ASSERT_EQ(corpus.size(), 20u);
  const std::set<std::pair<std::string, std::string>> argued = {
      // mu forces a reachable p, nu forbids p everywhere reachable.
      {"(mu x.(p | <>x)) & nu y.(!p & !q & []y)", "K"},
      {"(mu x.(p | <>x)) & nu y.(!p & !q & []y)", "KB"},
      // A symmetric successor sees the root back, which carries p.
      {"p & <>true & [][]!p", "KB"},
      {"p & <>[]!p", "KB"},
  };
  for (const auto& e : corpus) {
    Formula f = P(e["formula"]);
    for (const char* logic : {"K", "KB"}) {
      FrameClass cls = *frame_class_from(logic);
      auto m = find_model(f, cls, 3);
      if (e[logic] == "SAT") {
        EXPECT_TRUE(m) << e["formula"] << " " << logic;
        continue;
      }
      EXPECT_FALSE(m) << e["formula"] << " " << logic;
      SatConfig rc;
      rc.depth = 4;
      Refuter ref(cls, rc);
      bool refuted = ref.refute(clean(f));
      bool bounded = std::pow(2.0, fl_closure(f).size()) <= 4 && !find_model(f, cls, 4);
      bool by_hand = argued.count({e["formula"], logic}) > 0;
      EXPECT_TRUE(refuted || bounded || by_hand) << e["formula"] << " " << logic;
    }
  }
}

TEST(Pipeline, CorpusVerdictsMatchLabels) {
  auto corpus = nlohmann::json::parse(read_file(std::string(MUCALC_CORPUS_DIR) + "/completeness.json"));
  for (const auto& e : corpus) {
    Formula f = P(e["formula"]);
    for (const char* logic : {"K", "KB"}) {
      FrameClass cls = *frame_class_from(logic);
      auto r = completeness_pipeline(f, cls);
      if (e[logic] == "SAT") {
        ASSERT_EQ(r.status, PipelineStatus::Model) << e["formula"] << " " << logic << " " << r.detail;
        EXPECT_TRUE(satisfies(r.canonical->model, r.state, f));
        EXPECT_TRUE(frame_class_check(r.canonical->model, cls).ok);
      } else {
        EXPECT_EQ(r.status, PipelineStatus::Inconsistent) << e["formula"] << " " << logic << " " << r.detail;
      }
    }
  }
}

TEST(Pipeline, ParallelMatchesSerial) {
  CanonicalConfig serial, par;
  par.jobs = 4;
  for (const char* s : {"<>p", "mu x.(p | <>x)"}) {
    auto a = build_canonical(neg_closure(s), FrameClass::KB, Strategy::Symmetric, serial);
    auto b = build_canonical(neg_closure(s), FrameClass::KB, Strategy::Symmetric, par);
    EXPECT_EQ(write_model(a.model), write_model(b.model));
    EXPECT_EQ(atoms_sidecar(a).dump(), atoms_sidecar(b).dump());
  }
}

// Negated corpus theorems never get a model.
TEST(Pipeline, TheoremNegationsAreInconsistent) {
  for (const char* s : {"<>p -> mu x.(p | <>x)", "<>(p | q) -> <>p | <>q", "[]p & []q -> [](p & q)"}) {
    auto r = completeness_pipeline(negate(P(s)), FrameClass::K);
    EXPECT_EQ(r.status, PipelineStatus::Inconsistent) << s;
  }
}
