// The acceptance sweep behind `mucalc selftest`. The rendered report is a
// pure function of the seed; timings are kept out of it.
#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mucalc/canonical.hpp"
#include "mucalc/filtration.hpp"
#include "mucalc/game.hpp"
#include "mucalc/generator.hpp"
#include "mucalc/parallel.hpp"
#include "mucalc/proof.hpp"
#include "mucalc/text_io.hpp"

namespace mucalc {

struct SelftestConfig {
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
  std::filesystem::path corpus = MUCALC_CORPUS_DIR;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::size_t instances = 0;
  std::size_t violations = 0;
  std::string detail;     // deterministic
  double seconds = 0;     // not part of the report
};

// Byte-exact report for the mu x.[]x boundary example.
inline constexpr const char* kBoundaryReport =
    R"J({"sigma":4,"classes":1,"strategy":"min","checked":0,"violations":[],)J"
    R"J("skipped":["mu x. []x","[]mu x. []x","nu x. <>x","<>nu x. <>x"],)J"
    R"J("boundary_disagreements":[)J"
    R"J({"formula":"mu x. []x","state":"s0","class":"{s0,s1}","source":true,"quotient":false},)J"
    R"J({"formula":"mu x. []x","state":"s1","class":"{s0,s1}","source":true,"quotient":false},)J"
    R"J({"formula":"[]mu x. []x","state":"s0","class":"{s0,s1}","source":true,"quotient":false},)J"
    R"J({"formula":"[]mu x. []x","state":"s1","class":"{s0,s1}","source":true,"quotient":false},)J"
    R"J({"formula":"nu x. <>x","state":"s0","class":"{s0,s1}","source":false,"quotient":true},)J"
    R"J({"formula":"nu x. <>x","state":"s1","class":"{s0,s1}","source":false,"quotient":true},)J"
    R"J({"formula":"<>nu x. <>x","state":"s0","class":"{s0,s1}","source":false,"quotient":true},)J"
    R"J({"formula":"<>nu x. <>x","state":"s1","class":"{s0,s1}","source":false,"quotient":true}]})J";

namespace detail {

inline const std::vector<std::string> kSelftestAtoms = {"p", "q", "r"};

// Per-instance outcome; the first failing instance by index supplies the
// detail line.
struct Outcome {
  std::size_t count = 0;
  std::size_t bad = 0;
  std::string witness;
};

inline void reduce(CriterionResult& r, const std::vector<Outcome>& outs) {
  for (const auto& o : outs) {
    r.instances += o.count;
    r.violations += o.bad;
    if (o.bad && r.detail.empty()) r.detail = o.witness;
  }
}

inline std::vector<std::filesystem::path> drv_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".drv") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string class_label(FrameClass c) { return to_string(c); }

}  // namespace detail

inline CriterionResult criterion_semantics(const SelftestConfig& cfg) {
  CriterionResult r{1, "semantics-equivalence", false, 0, 0, {}, 0};
  const std::size_t n = 1000;
  std::vector<detail::Outcome> outs(n);
  std::vector<std::size_t> positions(n);
  parallel_for(n, cfg.jobs, [&](std::size_t i) {
    FormulaGenerator gen(GeneratorConfig{}, mix_seed(cfg.seed, 1, i));
    Formula f = gen.next();
    KripkeModel m = random_model(gen.rng(), 6, detail::kSelftestAtoms, FrameClass::K);
    auto rep = model_check_equiv(f, m);
    positions[i] = rep.positions;
    outs[i].count = 1;
    if (!rep.ok() || formula_depth(f) > 5) {
      outs[i].bad = 1;
      outs[i].witness = "pair " + std::to_string(i) + ": " + print_formula(f) + " on " + write_model(m);
    }
  });
  detail::reduce(r, outs);
  std::size_t total = 0;
  for (auto p : positions) total += p;
  r.pass = r.violations == 0;
  if (r.detail.empty()) r.detail = std::to_string(total) + " positions";
  return r;
}

// Runs the literal sweep (sigma = FL-closure) and, as a diagnostic, the same
// instances over the negation-closed closure. Only the literal sweep decides
// the verdict.
inline CriterionResult criterion_filtration(const SelftestConfig& cfg) {
  CriterionResult r{2, "filtration-theorem", false, 0, 0, {}, 0};
  const std::size_t n = 500;
  struct Row {
    bool min_bad = false, max_bad = false, neg_bad = false, too_big = false;
    std::size_t comparisons = 0;
    std::string formula;
  };
  std::vector<Row> rows(n);
  parallel_for(n, cfg.jobs, [&](std::size_t i) {
    FormulaGenerator gen(GeneratorConfig{}, mix_seed(cfg.seed, 2, i));
    Formula f = gen.next();
    for (int tries = 0; fl_closure(f).size() > 24 && tries < 100; ++tries) f = gen.next();
    KripkeModel m = random_model(gen.rng(), 8, detail::kSelftestAtoms, FrameClass::K);
    Row& row = rows[i];
    row.formula = print_formula(f);
    ClosureSet sigma = fl_closure(f);
    if (sigma.size() > 24) {
      row.too_big = true;
      return;
    }
    auto run = [&](const ClosureSet& s, Strategy st) {
      auto fr = build_filtration(m, s, st);
      auto rep = filtration_agreement_check(fr);
      row.comparisons += rep.comparisons;
      return rep.ok() && validate_filtration(fr).valid;
    };
    row.min_bad = !run(sigma, Strategy::Min);
    row.max_bad = !run(sigma, Strategy::Max);
    ClosureSet neg = fl_closure(f, true);
    row.neg_bad = !run(neg, Strategy::Min) || !run(neg, Strategy::Max);
  });
  std::size_t min_bad = 0, max_bad = 0, neg_bad = 0, too_big = 0, comparisons = 0;
  std::string first;
  for (std::size_t i = 0; i < n; ++i) {
    const Row& row = rows[i];
    min_bad += row.min_bad;
    max_bad += row.max_bad;
    neg_bad += row.neg_bad;
    too_big += row.too_big;
    comparisons += row.comparisons;
    if (first.empty() && (row.min_bad || row.max_bad || row.too_big))
      first = "first: instance " + std::to_string(i) + " " + (row.min_bad ? "min" : row.max_bad ? "max" : "size") +
              " " + row.formula;
  }
  r.instances = n;
  r.violations = min_bad + max_bad + too_big;
  r.pass = r.violations == 0;
  r.detail = "min " + std::to_string(min_bad) + ", max " + std::to_string(max_bad) + " instances disagree; " +
             "negation-closed sigma: " + std::to_string(neg_bad) + " disagree; " + std::to_string(comparisons) +
             " comparisons";
  if (!first.empty()) r.detail += "; " + first;
  return r;
}

inline CriterionResult criterion_boundary(const SelftestConfig&) {
  CriterionResult r{3, "fragment-boundary", false, 0, 0, {}, 0};
  Formula f = parse_formula("mu x.[]x");
  KripkeModel m(2);
  m.add_edge(0, 1);
  auto fr = build_filtration(m, fl_closure(f, true), Strategy::Min);
  auto rep = filtration_agreement_check(fr);
  std::string bytes = to_json(rep, fr).dump();
  r.instances = 1;
  std::vector<std::string> bad;
  if (classify_fragment(f, {}).in_mucml) bad.push_back("mu x.[]x classified inside the fragment");
  if (!eval_algebraic(f, m).all()) bad.push_back("mu x.[]x not true on the 2-chain");
  if (fr.quotient.size() != 1 || eval_algebraic(f, fr.quotient).any()) bad.push_back("quotient does not refute it");
  if (bytes != kBoundaryReport) bad.push_back("report bytes differ: " + bytes);
  r.violations = bad.size();
  r.pass = bad.empty();
  r.detail = bad.empty() ? "pinned report matches (" + std::to_string(bytes.size()) + " bytes)" : bad.front();
  return r;
}

inline CriterionResult criterion_fmp(const SelftestConfig& cfg) {
  CriterionResult r{4, "fmp-bound", false, 0, 0, {}, 0};
  auto corpus = nlohmann::json::parse(read_file((cfg.corpus / "fmp.json").string()));
  std::vector<detail::Outcome> outs(corpus.size());
  parallel_for(corpus.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = corpus[i];
    outs[i].count = 1;
    try {
      auto res = fmp_search(parse_formula(e.at("formula").get<std::string>()),
                            *frame_class_from(e.at("class").get<std::string>()), model_from_json(e.at("witness")));
      if (!res.ok()) {
        outs[i].bad = 1;
        outs[i].witness = e.at("name").get<std::string>() + ": refutes=" + std::to_string(res.refutes) +
                          " in_class=" + std::to_string(res.in_class) + " within_bound=" +
                          std::to_string(res.within_bound);
      }
    } catch (const std::exception& ex) {
      outs[i].bad = 1;
      outs[i].witness = e.value("name", "?") + ": " + ex.what();
    }
  });
  detail::reduce(r, outs);
  r.pass = r.violations == 0 && r.instances > 0;
  if (r.detail.empty()) r.detail = std::to_string(r.instances) + " corpus instances";
  return r;
}

inline CriterionResult criterion_translation(const SelftestConfig& cfg) {
  CriterionResult r{5, "translation-lemmas", false, 0, 0, {}, 0};
  const std::size_t n = 100;
  const FrameClass classes[] = {FrameClass::K, FrameClass::T, FrameClass::KB,
                                FrameClass::K4, FrameClass::S4, FrameClass::S5};
  std::vector<detail::Outcome> outs(n);
  parallel_for(n, cfg.jobs, [&](std::size_t i) {
    FormulaGenerator gen(GeneratorConfig{}, mix_seed(cfg.seed, 5, i));
    auto has_fix = [](const ClosureSet& s) {
      return std::any_of(s.begin(), s.end(), [](const Formula& f) { return f.is_fixpoint(); });
    };
    Formula f = gen.next();
    for (int tries = 0; !has_fix(fl_closure(f, true)) && tries < 100; ++tries) f = gen.next();
    FrameClass c = classes[i % 6];
    KripkeModel m = random_model(gen.rng(), 5, detail::kSelftestAtoms, c);
    ClosureSet sigma = fl_closure(f, true);
    outs[i].count = 1;
    auto tr = ml_translation(m, sigma, c);
    if (!has_fix(sigma) || !tr.ok()) {
      outs[i].bad = 1;
      outs[i].witness = "instance " + std::to_string(i) + ": " + print_formula(f) + " " +
                        (tr.failures.empty() ? "no fixpoint member" : tr.failures.front());
    }
  });
  detail::reduce(r, outs);
  r.pass = r.violations == 0;
  if (r.detail.empty()) r.detail = "5 conditions on " + std::to_string(r.instances) + " instances";
  return r;
}

inline CriterionResult criterion_proof(const SelftestConfig& cfg) {
  CriterionResult r{6, "proof-kernel", false, 0, 0, {}, 0};
  auto dir = cfg.corpus / "derivations";
  auto files = detail::drv_files(dir);
  std::vector<std::string> bad;
  std::set<std::string> used;
  std::vector<Theorem> theorems;
  std::size_t mutations = 0;
  for (const auto& f : files) {
    Derivation d = read_derivation(read_file(f.string()));
    auto res = check_derivation(d);
    if (!res.ok()) {
      bad.push_back(f.filename().string() + " rejected at step " + std::to_string(res.violation->step));
      continue;
    }
    theorems.push_back(*res.theorem);
    for (const auto& s : d.steps) used.insert(s.rule == Rule::Axiom ? s.schema : to_string(s.rule));
    for (std::size_t k = 0; k < d.steps.size(); ++k)
      for (Mutation m : kMutations) {
        auto mut = mutate(d, k, m);
        if (!mut) continue;
        ++mutations;
        auto mr = check_derivation(*mut);
        if (mr.ok() || mr.violation->step != k)
          bad.push_back(f.filename().string() + ": mutation " + to_string(m) + " at step " + std::to_string(k) +
                        " not rejected there");
      }
  }
  for (const char* need : {"taut", "normality", "additivity", "prefixpoint", "mp", "mono", "us", "lfp"})
    if (!used.count(need)) bad.push_back("no accepted derivation uses " + std::string(need));
  bool con_rejection = false;
  for (const auto& f : detail::drv_files(dir / "reject")) {
    auto res = check_derivation(read_derivation(read_file(f.string())));
    if (res.ok()) bad.push_back(f.filename().string() + " accepted");
    else if (res.violation->reason.find("Con_") != std::string::npos) con_rejection = true;
  }
  if (!con_rejection) bad.push_back("no Con_x side-condition rejection in the corpus");
  if (files.size() < 10) bad.push_back("fewer than 10 derivations");

  std::vector<SoundnessReport> sound(theorems.size());
  parallel_for(theorems.size(), cfg.jobs,
               [&](std::size_t k) { sound[k] = soundness_sample(theorems[k], 500, 4, mix_seed(cfg.seed, 6, k)); });
  std::size_t models = 0;
  for (std::size_t k = 0; k < sound.size(); ++k) {
    models += sound[k].models;
    if (!sound[k].ok()) bad.push_back("theorem " + print_formula(theorems[k].formula) + " refuted");
  }
  r.instances = files.size();
  r.violations = bad.size();
  r.pass = bad.empty();
  r.detail = bad.empty() ? std::to_string(files.size()) + " derivations, " + std::to_string(mutations) +
                               " mutations rejected, " + std::to_string(models) + " sampled models"
                         : bad.front();
  return r;
}

inline CriterionResult criterion_canonical(const SelftestConfig& cfg) {
  CriterionResult r{7, "canonical-model", false, 0, 0, {}, 0};
  CanonicalConfig cc;
  cc.jobs = cfg.jobs;
  std::vector<std::string> bad;
  std::size_t atoms = 0;
  for (const char* s : {"p", "<>p", "mu x.(p | <>x)"})
    for (FrameClass logic : {FrameClass::K, FrameClass::T, FrameClass::KB}) {
      ++r.instances;
      std::string tag = std::string(s) + " in " + to_string(logic) + ": ";
      try {
        auto cm = build_canonical(fl_closure(parse_formula(s), true), logic, default_strategy(logic), cc);
        atoms += cm.size();
        if (!frame_class_check(cm.model, logic).ok) bad.push_back(tag + "frame check fails");
        auto e = existence_check(cm);
        auto d = distinctness_check(cm, cc);
        auto t = truth_lemma_check(cm);
        if (!e.ok()) bad.push_back(tag + "existence: " + e.violations.front());
        if (!d.ok()) bad.push_back(tag + "distinctness: " + (d.violations.empty() ? "UNKNOWN" : d.violations.front()));
        if (!t.ok()) bad.push_back(tag + "truth lemma: " + t.violations.front());
      } catch (const UnknownVerdictError& ex) {
        bad.push_back(tag + ex.what());
      }
    }
  r.violations = bad.size();
  r.pass = bad.empty();
  r.detail = bad.empty() ? std::to_string(atoms) + " atoms over 9 models" : bad.front();
  return r;
}

inline CriterionResult criterion_completeness(const SelftestConfig& cfg) {
  CriterionResult r{8, "completeness-pipeline", false, 0, 0, {}, 0};
  auto corpus = nlohmann::json::parse(read_file((cfg.corpus / "completeness.json").string()));
  CanonicalConfig cc;
  cc.jobs = cfg.jobs;
  std::vector<std::string> bad;
  std::size_t sat = 0, unsat = 0;
  for (const auto& e : corpus)
    for (const char* logic : {"K", "KB"}) {
      ++r.instances;
      std::string text = e.at("formula").get<std::string>();
      Formula f = parse_formula(text);
      FrameClass cls = *frame_class_from(logic);
      std::string label = e.at(logic).get<std::string>();
      auto res = completeness_pipeline(f, cls, cc);
      bool ok = false;
      if (label == "SAT") {
        ++sat;
        ok = res.status == PipelineStatus::Model && satisfies(res.canonical->model, res.state, f) &&
             frame_class_check(res.canonical->model, cls).ok;
      } else {
        ++unsat;
        ok = res.status == PipelineStatus::Inconsistent;
      }
      if (!ok) bad.push_back(text + " in " + logic + ": labelled " + label + ", got " + to_string(res.status));
    }
  r.violations = bad.size();
  r.pass = bad.empty() && corpus.size() == 20;
  r.detail = bad.empty() ? std::to_string(sat) + " SAT, " + std::to_string(unsat) + " UNSAT" : bad.front();
  return r;
}

using CriterionFn = CriterionResult (*)(const SelftestConfig&);
inline constexpr CriterionFn kCriteria[] = {criterion_semantics, criterion_filtration, criterion_boundary,
                                            criterion_fmp,       criterion_translation, criterion_proof,
                                            criterion_canonical, criterion_completeness};

inline CriterionResult run_criterion(CriterionFn fn, const SelftestConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  CriterionResult r = fn(cfg);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::vector<CriterionResult> run_selftest(const SelftestConfig& cfg,
                                                 const std::function<void(const CriterionResult&)>& progress = {}) {
  std::vector<CriterionResult> out;
  for (CriterionFn fn : kCriteria) {
    out.push_back(run_criterion(fn, cfg));
    if (progress) progress(out.back());
  }
  return out;
}

inline std::string render_line(const CriterionResult& r) {
  std::ostringstream os;
  os << "criterion " << r.id << " " << (r.pass ? "PASS" : "FAIL") << " " << r.name << ": " << r.instances
     << " instances, " << r.violations << " violations; " << r.detail;
  return os.str();
}

inline nlohmann::ordered_json to_json(const CriterionResult& r) {
  nlohmann::ordered_json j;
  j["criterion"] = r.id;
  j["name"] = r.name;
  j["pass"] = r.pass;
  j["instances"] = r.instances;
  j["violations"] = r.violations;
  j["detail"] = r.detail;
  return j;
}

inline std::string render_report(const std::vector<CriterionResult>& rs, std::uint64_t seed, bool json = false) {
  std::ostringstream os;
  if (json) {
    for (const auto& r : rs) {
      auto j = to_json(r);
      j["seed"] = seed;
      os << j.dump() << "\n";
    }
    return os.str();
  }
  os << "selftest seed " << seed << "\n";
  for (const auto& r : rs) os << render_line(r) << "\n";
  return os.str();
}

}  // namespace mucalc
