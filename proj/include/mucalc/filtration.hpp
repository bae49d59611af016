// Filtrations through finite FL-closed sets, the agreement harness, the
// translation into basic modal formulas with fresh atoms, and the finite
// model pipeline.
#pragma once

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <stdexcept>
#include <string>
#include <vector>

#include "mucalc/closure.hpp"
#include "mucalc/formula.hpp"
#include "mucalc/kripke.hpp"
#include "mucalc/semantics.hpp"
#include "mucalc/text_io.hpp"

namespace mucalc {

enum class Strategy { Min, Max, Reflexive, Symmetric, Transitive, ReflTrans, Equivalence };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Min: return "min";
    case Strategy::Max: return "max";
    case Strategy::Reflexive: return "reflexive";
    case Strategy::Symmetric: return "symmetric";
    case Strategy::Transitive: return "transitive";
    case Strategy::ReflTrans: return "refl-trans";
    case Strategy::Equivalence: return "equivalence";
  }
  return "?";
}

inline std::optional<Strategy> strategy_from(const std::string& s) {
  for (Strategy st : {Strategy::Min, Strategy::Max, Strategy::Reflexive, Strategy::Symmetric, Strategy::Transitive,
                      Strategy::ReflTrans, Strategy::Equivalence})
    if (s == to_string(st)) return st;
  return std::nullopt;
}

inline Strategy default_strategy(FrameClass c) {
  switch (c) {
    case FrameClass::K: return Strategy::Min;
    case FrameClass::T: return Strategy::Reflexive;
    case FrameClass::KB: return Strategy::Symmetric;
    case FrameClass::K4: return Strategy::Transitive;
    case FrameClass::S4: return Strategy::ReflTrans;
    case FrameClass::S5: return Strategy::Equivalence;
  }
  return Strategy::Min;
}

// The named closure of a base relation (the maximal relation for Max).
inline std::vector<StateSet> apply_strategy(Strategy s, const std::vector<StateSet>& rmin,
                                            const std::vector<StateSet>& rmax) {
  switch (s) {
    case Strategy::Min: return rmin;
    case Strategy::Max: return rmax;
    case Strategy::Reflexive: return reflexive_closure(rmin);
    case Strategy::Symmetric: return symmetric_closure(rmin);
    case Strategy::Transitive: return transitive_closure(rmin);
    case Strategy::ReflTrans: return transitive_closure(reflexive_closure(rmin));
    case Strategy::Equivalence: return equivalence_closure(rmin);
  }
  return rmin;
}

class FiltrationError : public std::runtime_error {
 public:
  FiltrationError(const std::string& msg, std::optional<std::pair<std::size_t, std::size_t>> pair = std::nullopt)
      : std::runtime_error(msg), witness(pair) {}
  std::optional<std::pair<std::size_t, std::size_t>> witness;
};

inline void require_fl_closed(const ClosureSet& sigma) {
  for (const auto& f : sigma)
    for (const auto& g : closure_successors(f))
      if (!sigma.contains(g))
        throw FiltrationError("sigma is not FL-closed: " + print_formula(g) + " is missing (from " + print_formula(f) +
                              ")");
}

// Satisfaction table of a set of formulas: truth[i] = [[sigma_i]].
inline std::vector<StateSet> truth_table(const KripkeModel& m, const ClosureSet& sigma) {
  std::vector<StateSet> t;
  t.reserve(sigma.size());
  for (const auto& f : sigma) t.push_back(eval_algebraic(f, m));
  return t;
}

struct Partition {
  std::vector<std::size_t> class_of;            // per source state
  std::vector<std::vector<std::size_t>> classes;  // members, ordered by first member
};

inline Partition sigma_partition(const KripkeModel& m, const std::vector<StateSet>& truth) {
  Partition p;
  p.class_of.assign(m.size(), 0);
  std::map<std::vector<bool>, std::size_t> seen;
  for (std::size_t s = 0; s < m.size(); ++s) {
    std::vector<bool> sig;
    sig.reserve(truth.size());
    for (const auto& t : truth) sig.push_back(t.test(s));
    auto [it, added] = seen.emplace(sig, p.classes.size());
    if (added) p.classes.emplace_back();
    p.classes[it->second].push_back(s);
    p.class_of[s] = it->second;
  }
  return p;
}

struct FiltrationResult {
  KripkeModel source;
  ClosureSet sigma;
  std::vector<StateSet> truth;  // per sigma member, over source states
  Partition partition;
  KripkeModel quotient;
  std::vector<StateSet> rmin;
  std::vector<StateSet> rmax;
  Strategy strategy = Strategy::Min;

  std::size_t class_of(std::size_t s) const { return partition.class_of[s]; }
};

// Quotient relation bounds for a partition.
inline std::pair<std::vector<StateSet>, std::vector<StateSet>> filtration_bounds(const KripkeModel& m,
                                                                                 const ClosureSet& sigma,
                                                                                 const std::vector<StateSet>& truth,
                                                                                 const Partition& p) {
  const std::size_t k = p.classes.size();
  std::vector<StateSet> rmin(k, StateSet(k)), rmax(k, StateSet(k));
  for (std::size_t s = 0; s < m.size(); ++s)
    for (std::size_t t = m.successors(s).find_first(); t != StateSet::npos; t = m.successors(s).find_next(t))
      rmin[p.class_of[s]].set(p.class_of[t]);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < k; ++d) {
      std::size_t s = p.classes[c].front(), t = p.classes[d].front();
      bool ok = true;
      for (std::size_t i = 0; i < sigma.size() && ok; ++i) {
        if (sigma[i].kind() != Kind::Box || !truth[i].test(s)) continue;
        auto body = sigma.find(sigma[i].body());
        if (!body || !truth[*body].test(t)) ok = false;
      }
      if (ok) rmax[c].set(d);
    }
  return {rmin, rmax};
}

inline std::string class_name(const KripkeModel& m, const std::vector<std::size_t>& members) {
  std::string out = "{";
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) out += ",";
    out += m.name(members[i]);
  }
  return out + "}";
}

inline FiltrationResult build_filtration(const KripkeModel& m, const ClosureSet& sigma, Strategy strategy) {
  require_fl_closed(sigma);
  FiltrationResult fr;
  fr.source = m;
  fr.sigma = sigma;
  fr.strategy = strategy;
  fr.truth = truth_table(m, sigma);
  fr.partition = sigma_partition(m, fr.truth);
  std::tie(fr.rmin, fr.rmax) = filtration_bounds(m, sigma, fr.truth, fr.partition);
  std::vector<StateSet> r = apply_strategy(strategy, fr.rmin, fr.rmax);
  const std::size_t k = fr.partition.classes.size();
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < k; ++d)
      if (r[c].test(d) && !fr.rmax[c].test(d))
        throw FiltrationError(std::string("strategy ") + to_string(strategy) + " escapes R^max at (" +
                                  class_name(m, fr.partition.classes[c]) + "," +
                                  class_name(m, fr.partition.classes[d]) + ")",
                              std::make_pair(c, d));
  KripkeModel q;
  for (const auto& members : fr.partition.classes) q.add_state(class_name(m, members));
  q.set_relation(r);
  for (const auto& f : sigma)
    if (f.kind() == Kind::Atom) {
      StateSet v = q.empty_set();
      for (std::size_t c = 0; c < k; ++c)
        if (m.valuation(f.name()).test(fr.partition.classes[c].front())) v.set(c);
      q.set_valuation(f.name(), v);
    }
  fr.quotient = std::move(q);
  return fr;
}

struct ValidationReport {
  bool valid = true;
  std::vector<std::string> violations;
};

// Checks the three filtration conditions for a candidate quotient, where
// class_map sends each source state to a candidate state.
inline ValidationReport validate_filtration(const KripkeModel& m, const ClosureSet& sigma, const KripkeModel& candidate,
                                            const std::vector<std::size_t>& class_map) {
  ValidationReport rep;
  auto fail = [&](std::string v) {
    rep.valid = false;
    rep.violations.push_back(std::move(v));
  };
  if (class_map.size() != m.size()) {
    fail("class map does not cover the source states");
    return rep;
  }
  auto truth = truth_table(m, sigma);
  Partition p = sigma_partition(m, truth);
  // (i) the candidate's states are exactly the equivalence classes.
  std::vector<std::optional<std::size_t>> class_for(candidate.size());
  for (std::size_t s = 0; s < m.size(); ++s) {
    std::size_t c = class_map[s];
    if (c >= candidate.size()) {
      fail("state " + m.name(s) + " maps outside the candidate");
      return rep;
    }
    if (!class_for[c]) class_for[c] = p.class_of[s];
    if (*class_for[c] != p.class_of[s])
      fail("candidate state " + candidate.name(c) + " merges inequivalent states");
  }
  for (std::size_t c = 0; c < candidate.size(); ++c)
    if (!class_for[c]) fail("candidate state " + candidate.name(c) + " has no source state");
  for (std::size_t s = 0; s < m.size(); ++s)
    for (std::size_t t = 0; t < m.size(); ++t)
      if (p.class_of[s] == p.class_of[t] && class_map[s] != class_map[t])
        fail("equivalent states " + m.name(s) + " and " + m.name(t) + " are split");
  if (!rep.valid) return rep;
  // (ii) R^min <= R <= R^max, with bounds computed on the true partition.
  auto [rmin, rmax] = filtration_bounds(m, sigma, truth, p);
  std::vector<std::size_t> cls_to_cand(p.classes.size());
  for (std::size_t s = 0; s < m.size(); ++s) cls_to_cand[p.class_of[s]] = class_map[s];
  for (std::size_t c = 0; c < p.classes.size(); ++c)
    for (std::size_t d = 0; d < p.classes.size(); ++d) {
      bool has = candidate.has_edge(cls_to_cand[c], cls_to_cand[d]);
      std::string edge = "(" + candidate.name(cls_to_cand[c]) + "," + candidate.name(cls_to_cand[d]) + ")";
      if (rmin[c].test(d) && !has) fail("missing R^min edge " + edge);
      if (has && !rmax[c].test(d)) fail("edge outside R^max " + edge);
    }
  // (iii) valuation on the atoms of sigma.
  for (const auto& f : sigma) {
    if (f.kind() != Kind::Atom) continue;
    for (std::size_t c = 0; c < p.classes.size(); ++c) {
      bool want = m.valuation(f.name()).test(p.classes[c].front());
      if (candidate.valuation(f.name()).test(cls_to_cand[c]) != want)
        fail("valuation of " + f.name() + " wrong at " + candidate.name(cls_to_cand[c]));
    }
  }
  return rep;
}

inline ValidationReport validate_filtration(const FiltrationResult& fr) {
  return validate_filtration(fr.source, fr.sigma, fr.quotient, fr.partition.class_of);
}

// ---------------------------------------------------------------------------
// Agreement between a model and its filtration

struct Disagreement {
  Formula formula;
  std::size_t state = 0;  // source state
  bool source = false;
  bool quotient = false;
};

struct AgreementReport {
  std::size_t checked = 0;                   // clean continuous members compared
  std::size_t comparisons = 0;               // (member, state) pairs compared
  std::vector<Disagreement> violations;      // among checked members
  std::vector<Formula> skipped;              // members outside the continuous fragment
  std::vector<Disagreement> boundary;        // disagreements on skipped members
  bool ok() const { return violations.empty(); }
};

inline AgreementReport filtration_agreement_check(const FiltrationResult& fr) {
  AgreementReport rep;
  for (std::size_t i = 0; i < fr.sigma.size(); ++i) {
    const Formula& f = fr.sigma[i];
    bool in_scope = in_mucml(f) && is_clean(f);
    StateSet q = eval_algebraic(f, fr.quotient);
    if (in_scope) ++rep.checked; else rep.skipped.push_back(f);
    for (std::size_t s = 0; s < fr.source.size(); ++s) {
      bool a = fr.truth[i].test(s), b = q.test(fr.class_of(s));
      if (in_scope) ++rep.comparisons;
      if (a == b) continue;
      (in_scope ? rep.violations : rep.boundary).push_back({f, s, a, b});
    }
  }
  return rep;
}

inline nlohmann::ordered_json to_json(const AgreementReport& rep, const FiltrationResult& fr) {
  auto dis = [&](const std::vector<Disagreement>& ds) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& d : ds)
      arr.push_back({{"formula", print_formula(d.formula)},
                     {"state", fr.source.name(d.state)},
                     {"class", fr.quotient.name(fr.class_of(d.state))},
                     {"source", d.source},
                     {"quotient", d.quotient}});
    return arr;
  };
  nlohmann::ordered_json j;
  j["sigma"] = fr.sigma.size();
  j["classes"] = fr.partition.classes.size();
  j["strategy"] = to_string(fr.strategy);
  j["checked"] = rep.checked;
  j["violations"] = dis(rep.violations);
  auto sk = nlohmann::ordered_json::array();
  for (const auto& f : rep.skipped) sk.push_back(print_formula(f));
  j["skipped"] = sk;
  j["boundary_disagreements"] = dis(rep.boundary);
  return j;
}

inline nlohmann::ordered_json to_json(const FiltrationResult& fr) {
  auto edges = [&](const std::vector<StateSet>& r) {
    auto arr = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < r.size(); ++c)
      for (std::size_t d = 0; d < r.size(); ++d)
        if (r[c].test(d)) arr.push_back({fr.quotient.name(c), fr.quotient.name(d)});
    return arr;
  };
  nlohmann::ordered_json j;
  j["strategy"] = to_string(fr.strategy);
  auto sig = nlohmann::ordered_json::array();
  for (const auto& f : fr.sigma) sig.push_back(print_formula(f));
  j["sigma"] = sig;
  auto part = nlohmann::ordered_json::array();
  for (const auto& cls : fr.partition.classes) {
    auto names = nlohmann::ordered_json::array();
    for (std::size_t s : cls) names.push_back(fr.source.name(s));
    part.push_back(names);
  }
  j["partition"] = part;
  j["quotient"] = model_to_json(fr.quotient);
  j["rmin"] = edges(fr.rmin);
  j["rmax"] = edges(fr.rmax);
  std::size_t nmin = 0, nmax = 0;
  for (const auto& r : fr.rmin) nmin += r.count();
  for (const auto& r : fr.rmax) nmax += r.count();
  j["stats"] = {{"states", fr.source.size()},
                {"classes", fr.partition.classes.size()},
                {"rmin_edges", nmin},
                {"edges", fr.quotient.edge_count()},
                {"rmax_edges", nmax}};
  return j;
}

// ---------------------------------------------------------------------------
// Translation into the basic modal language

struct TranslationResult {
  KripkeModel model;                    // S' = (S, R, V')
  std::vector<Formula> fixpoints;       // phi_1..phi_n
  std::vector<std::string> fresh;       // p_1..p_n
  std::vector<Formula> images;          // tau(sigma_i), aligned with sigma
  // Verified conditions, in the order of the sufficient condition.
  bool valuation_agrees = false;        // (1)
  bool in_class = false;                // (2) frame unchanged and in the class
  bool image_closed = false;            // (3)
  bool commutes_with_box = false;       // (4)
  bool truth_preserved = false;         // (5)
  std::vector<std::string> failures;

  bool ok() const { return valuation_agrees && in_class && image_closed && commutes_with_box && truth_preserved; }
};

namespace detail {
inline bool fixpoint_free(const Formula& f) {
  switch (f.kind()) {
    case Kind::Mu:
    case Kind::Nu:
      return false;
    case Kind::Or:
    case Kind::And:
      return fixpoint_free(f.left()) && fixpoint_free(f.right());
    case Kind::Diamond:
    case Kind::Box:
      return fixpoint_free(f.body());
    default:
      return true;
  }
}
}  // namespace detail

// tau: replaces each maximal fixpoint subformula by its fresh atom.
inline Formula translate(const Formula& f, const ClosureSet& fix_index, const std::vector<std::string>& fresh) {
  switch (f.kind()) {
    case Kind::Mu:
    case Kind::Nu: {
      auto i = fix_index.find(f);
      if (!i) throw FiltrationError("fixpoint formula outside sigma: " + print_formula(f));
      return Formula::atom(fresh[*i]);
    }
    case Kind::Or:
    case Kind::And:
      return Formula::binary(f.kind(), translate(f.left(), fix_index, fresh), translate(f.right(), fix_index, fresh));
    case Kind::Diamond:
    case Kind::Box:
      return Formula::modal(f.kind(), translate(f.body(), fix_index, fresh));
    default:
      return f;
  }
}

inline TranslationResult ml_translation(const KripkeModel& m, const ClosureSet& sigma,
                                        FrameClass cls = FrameClass::K) {
  require_fl_closed(sigma);
  TranslationResult tr;
  std::set<std::string> used;
  for (const auto& f : sigma) collect_names(f, used);
  for (const auto& [a, _] : m.valuation_map()) used.insert(a);
  ClosureSet fix_index;
  for (const auto& f : sigma)
    if (f.is_fixpoint() && fix_index.insert(f)) {
      tr.fixpoints.push_back(f);
      std::string p = fresh_name("fp", used);
      used.insert(p);
      tr.fresh.push_back(p);
    }
  tr.model = m;
  for (std::size_t i = 0; i < tr.fixpoints.size(); ++i) tr.model.set_valuation(tr.fresh[i], eval_algebraic(tr.fixpoints[i], m));
  for (const auto& f : sigma) tr.images.push_back(translate(f, fix_index, tr.fresh));

  // (1) V' agrees with V on the atoms of sigma.
  tr.valuation_agrees = true;
  std::set<std::string> sigma_atoms;
  for (const auto& f : sigma) collect_names(f, sigma_atoms);
  for (const auto& a : sigma_atoms)
    if (tr.model.valuation(a) != m.valuation(a)) {
      tr.valuation_agrees = false;
      tr.failures.push_back("valuation of " + a + " changed");
    }
  // (2) the frame is untouched, so class membership is inherited.
  tr.in_class = tr.model.relation() == m.relation() && frame_class_check(tr.model, cls).ok;
  if (!tr.in_class) tr.failures.push_back("translated model is not in the class");
  // (3) tau[sigma] is a FL-closed set of basic modal formulas.
  ClosureSet image;
  for (const auto& g : tr.images) image.insert(g);
  tr.image_closed = true;
  for (const auto& g : image) {
    if (!detail::fixpoint_free(g)) {
      tr.image_closed = false;
      tr.failures.push_back("image keeps a fixpoint: " + print_formula(g));
    }
    for (const auto& h : closure_successors(g))
      if (!image.contains(h)) {
        tr.image_closed = false;
        tr.failures.push_back("image not closed: missing " + print_formula(h));
      }
  }
  // (4) tau commutes with box.
  tr.commutes_with_box = true;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i].kind() != Kind::Box) continue;
    Formula inner = translate(sigma[i].body(), fix_index, tr.fresh);
    if (tr.images[i] != Formula::box(inner)) {
      tr.commutes_with_box = false;
      tr.failures.push_back("tau does not commute with " + print_formula(sigma[i]));
    }
  }
  // (5) truth is preserved pointwise.
  tr.truth_preserved = true;
  for (std::size_t i = 0; i < sigma.size(); ++i)
    if (eval_algebraic(sigma[i], m) != eval_algebraic(tr.images[i], tr.model)) {
      tr.truth_preserved = false;
      tr.failures.push_back("truth differs on " + print_formula(sigma[i]));
    }
  return tr;
}

// ---------------------------------------------------------------------------
// Finite model pipeline

struct FmpResult {
  FiltrationResult filtration;
  std::size_t closure_size = 0;
  long double bound = 0;  // 2^|Cl(phi)|
  std::size_t refuted_state = 0;  // in the source witness
  bool refutes = false;
  bool in_class = false;
  bool within_bound = false;
  bool ok() const { return refutes && in_class && within_bound; }
};

// Filtrates a refuting witness through Cl(phi) with the class's strategy.
inline FmpResult fmp_search(const Formula& phi, FrameClass cls, const KripkeModel& witness,
                            std::optional<Strategy> strategy = std::nullopt) {
  if (!frame_class_check(witness, cls).ok)
    throw FiltrationError(std::string("witness is not a ") + to_string(cls) + " model");
  StateSet sat = eval_algebraic(phi, witness);
  if (sat.all()) throw FiltrationError("witness does not refute the formula");
  FmpResult res;
  res.refuted_state = (~sat).find_first();
  ClosureSet cl = fl_closure(phi);
  res.closure_size = cl.size();
  res.bound = std::pow(2.0L, static_cast<long double>(cl.size()));
  res.filtration = build_filtration(witness, cl, strategy.value_or(default_strategy(cls)));
  const KripkeModel& q = res.filtration.quotient;
  res.refutes = !eval_algebraic(phi, q).test(res.filtration.class_of(res.refuted_state));
  res.in_class = frame_class_check(q, cls).ok;
  res.within_bound = static_cast<long double>(q.size()) <= res.bound;
  return res;
}

}  // namespace mucalc
