// Finitary canonical models over a negation-closed FL-closed set, with
// consistency realized by the satisfiability oracle.
#pragma once

#include <json.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mucalc/closure.hpp"
#include "mucalc/filtration.hpp"
#include "mucalc/formula.hpp"
#include "mucalc/kripke.hpp"
#include "mucalc/oracle.hpp"
#include "mucalc/parallel.hpp"
#include "mucalc/semantics.hpp"
#include "mucalc/text_io.hpp"

namespace mucalc {

enum class UnknownPolicy { Fail, Exclude, Include };

inline const char* to_string(UnknownPolicy p) {
  switch (p) {
    case UnknownPolicy::Fail: return "fail";
    case UnknownPolicy::Exclude: return "exclude";
    case UnknownPolicy::Include: return "include";
  }
  return "?";
}

inline std::optional<UnknownPolicy> unknown_policy_from(const std::string& s) {
  if (s == "fail") return UnknownPolicy::Fail;
  if (s == "exclude") return UnknownPolicy::Exclude;
  if (s == "include") return UnknownPolicy::Include;
  return std::nullopt;
}

class UnknownVerdictError : public std::runtime_error {
 public:
  UnknownVerdictError(const std::string& msg, Formula query) : std::runtime_error(msg), query(std::move(query)) {}
  Formula query;
};

class CanonicalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CanonicalConfig {
  SatConfig sat;
  UnknownPolicy unknown = UnknownPolicy::Fail;
  std::size_t jobs = 1;
  const VerdictCache* cache = nullptr;
};

struct SigmaAtom {
  std::vector<bool> members;  // indexed like sigma
  Formula psi = Formula::top();
  OracleVerdict verdict;

  bool contains(std::size_t i) const { return members[i]; }
};

struct AtomSet {
  ClosureSet sigma;
  std::vector<SigmaAtom> atoms;
  std::size_t candidates = 0;  // one choice per pair
  std::size_t coherent = 0;    // after the local conditions
  std::vector<std::string> warnings;
};

inline void require_neg_fl_closed(const ClosureSet& sigma) {
  require_fl_closed(sigma);
  for (const auto& f : sigma)
    if (!sigma.contains(negate(f))) throw FiltrationError("sigma is not closed under negation: " + print_formula(f));
}

inline Formula characteristic(const ClosureSet& sigma, const std::vector<bool>& members) {
  std::vector<Formula> fs;
  for (std::size_t i = 0; i < sigma.size(); ++i)
    if (members[i]) fs.push_back(sigma[i]);
  return conjunction(fs);
}

namespace detail {

// Local coherence of a complete choice: disjunctions, conjunctions and
// fixpoint unfoldings.
inline bool coherent(const ClosureSet& sigma, const std::vector<bool>& in) {
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!in[i]) continue;
    const Formula& f = sigma[i];
    switch (f.kind()) {
      case Kind::Bottom:
        return false;
      case Kind::Or:
        if (!in[*sigma.find(f.left())] && !in[*sigma.find(f.right())]) return false;
        break;
      case Kind::And:
        if (!in[*sigma.find(f.left())] || !in[*sigma.find(f.right())]) return false;
        break;
      case Kind::Mu:
      case Kind::Nu:
        if (!in[*sigma.find(unfold(f))]) return false;
        break;
      default:
        break;
    }
  }
  return true;
}

inline void resolve_unknown(UnknownPolicy p, const OracleVerdict& v, const Formula& query, bool& keep,
                            std::vector<std::string>& warnings, const std::string& what) {
  if (v.decisive()) {
    keep = v.sat();
    return;
  }
  switch (p) {
    case UnknownPolicy::Fail:
      throw UnknownVerdictError("UNKNOWN verdict (" + v.method + ") for " + what, query);
    case UnknownPolicy::Exclude:
      keep = false;
      warnings.push_back("excluded " + what + " with UNKNOWN verdict; soundness of reports not guaranteed");
      return;
    case UnknownPolicy::Include:
      keep = true;
      warnings.push_back("included " + what + " with UNKNOWN verdict; soundness of reports not guaranteed");
      return;
  }
}

}  // namespace detail

inline AtomSet enumerate_atoms(const ClosureSet& sigma, FrameClass logic, const CanonicalConfig& cfg = {}) {
  require_neg_fl_closed(sigma);
  AtomSet out;
  out.sigma = sigma;
  const std::size_t n = sigma.size();
  std::vector<std::size_t> pair_first;
  std::vector<std::size_t> neg(n);
  for (std::size_t i = 0; i < n; ++i) {
    neg[i] = *sigma.find(negate(sigma[i]));
    if (neg[i] > i) pair_first.push_back(i);
    if (neg[i] == i) throw CanonicalError("formula equal to its own negation: " + print_formula(sigma[i]));
  }
  std::vector<std::vector<bool>> cands;
  const std::size_t k = pair_first.size();
  if (k > 24) throw CanonicalError("sigma has " + std::to_string(k) + " pairs; at most 24 are enumerated");
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    std::vector<bool> in(n);
    for (std::size_t b = 0; b < k; ++b) {
      std::size_t i = pair_first[b];
      bool take_neg = (mask >> b) & 1u;
      in[take_neg ? neg[i] : i] = true;
    }
    ++out.candidates;
    if (detail::coherent(sigma, in)) cands.push_back(std::move(in));
  }
  out.coherent = cands.size();
  std::vector<OracleVerdict> verdicts(cands.size());
  parallel_for(cands.size(), cfg.jobs, [&](std::size_t i) {
    verdicts[i] = sat_search(characteristic(sigma, cands[i]), logic, cfg.sat, cfg.cache);
  });
  for (std::size_t i = 0; i < cands.size(); ++i) {
    Formula psi = characteristic(sigma, cands[i]);
    bool keep = false;
    detail::resolve_unknown(cfg.unknown, verdicts[i], psi, keep, out.warnings, "atom " + print_formula(psi));
    if (keep) out.atoms.push_back({cands[i], psi, verdicts[i]});
  }
  return out;
}

struct CanonicalModel {
  FrameClass logic = FrameClass::K;
  Strategy strategy = Strategy::Min;
  AtomSet atoms;
  KripkeModel model;  // state k is atoms.atoms[k]
  std::vector<StateSet> rmin, rmax;
  std::map<std::pair<std::size_t, std::size_t>, OracleVerdict> edge_verdicts;
  std::vector<std::string> warnings;

  const ClosureSet& sigma() const { return atoms.sigma; }
  std::size_t size() const { return atoms.atoms.size(); }
};

inline CanonicalModel build_canonical(const ClosureSet& sigma, FrameClass logic, Strategy strategy,
                                      const CanonicalConfig& cfg = {}) {
  CanonicalModel cm;
  cm.logic = logic;
  cm.strategy = strategy;
  cm.atoms = enumerate_atoms(sigma, logic, cfg);
  cm.warnings = cm.atoms.warnings;
  const auto& atoms = cm.atoms.atoms;
  const std::size_t k = atoms.size();
  cm.rmin.assign(k, StateSet(k));
  cm.rmax.assign(k, StateSet(k));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      bool ok = true;
      for (std::size_t i = 0; i < sigma.size() && ok; ++i)
        if (sigma[i].kind() == Kind::Box && atoms[a].contains(i) && !atoms[b].contains(*sigma.find(sigma[i].body())))
          ok = false;
      if (ok) cm.rmax[a].set(b);
    }
  std::vector<std::pair<std::size_t, std::size_t>> queries;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      if (cm.rmax[a].test(b)) queries.emplace_back(a, b);
  // Pairs outside R^max are inconsistent by the box clause.
  std::vector<OracleVerdict> verdicts(queries.size());
  parallel_for(queries.size(), cfg.jobs, [&](std::size_t q) {
    auto [a, b] = queries[q];
    verdicts[q] = sat_search(Formula::land(atoms[a].psi, Formula::diamond(atoms[b].psi)), logic, cfg.sat, cfg.cache);
  });
  for (std::size_t q = 0; q < queries.size(); ++q) {
    auto [a, b] = queries[q];
    bool keep = false;
    Formula query = Formula::land(atoms[a].psi, Formula::diamond(atoms[b].psi));
    detail::resolve_unknown(cfg.unknown, verdicts[q], query, keep, cm.warnings,
                            "edge A" + std::to_string(a) + " -> A" + std::to_string(b));
    if (keep) cm.rmin[a].set(b);
    cm.edge_verdicts.emplace(queries[q], verdicts[q]);
  }
  std::vector<StateSet> r = apply_strategy(strategy, cm.rmin, cm.rmax);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      if (r[a].test(b) && !cm.rmax[a].test(b))
        throw CanonicalError(std::string("strategy ") + to_string(strategy) + " escapes R^max at (A" +
                             std::to_string(a) + ",A" + std::to_string(b) + ")");
  KripkeModel m;
  for (std::size_t a = 0; a < k; ++a) m.add_state("A" + std::to_string(a));
  m.set_relation(r);
  auto fc = frame_class_check(m, logic);
  if (!fc.ok) throw CanonicalError(std::string("canonical frame is not ") + to_string(logic) + ": " + fc.property);
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i].kind() != Kind::Atom) continue;
    StateSet v = m.empty_set();
    for (std::size_t a = 0; a < k; ++a)
      if (atoms[a].contains(i)) v.set(a);
    m.set_valuation(sigma[i].name(), v);
  }
  cm.model = std::move(m);
  return cm;
}

// ---------------------------------------------------------------------------
// Checks

struct LemmaReport {
  std::size_t checked = 0;
  std::vector<std::string> violations;
  std::size_t unknown = 0;
  bool ok() const { return violations.empty() && unknown == 0; }
};

// Diamond formulas: in A iff some R-successor contains the body.
inline LemmaReport existence_check(const CanonicalModel& cm) {
  LemmaReport rep;
  const auto& sigma = cm.sigma();
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i].kind() != Kind::Diamond) continue;
    std::size_t body = *sigma.find(sigma[i].body());
    for (std::size_t a = 0; a < cm.size(); ++a) {
      ++rep.checked;
      bool has = cm.atoms.atoms[a].contains(i), witness = false;
      const StateSet& succ = cm.model.successors(a);
      for (std::size_t b = succ.find_first(); b != StateSet::npos; b = succ.find_next(b))
        if (cm.atoms.atoms[b].contains(body)) witness = true;
      if (has != witness)
        rep.violations.push_back("A" + std::to_string(a) + ": " + print_formula(sigma[i]) +
                                 (has ? " in atom but no successor contains the body"
                                      : " not in atom but a successor contains the body"));
    }
  }
  return rep;
}

// psi_A & psi_B is consistent iff A = B.
inline LemmaReport distinctness_check(const AtomSet& as, FrameClass logic, const CanonicalConfig& cfg = {}) {
  LemmaReport rep;
  const std::size_t k = as.atoms.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a; b < k; ++b) pairs.emplace_back(a, b);
  std::vector<OracleVerdict> v(pairs.size());
  parallel_for(pairs.size(), cfg.jobs, [&](std::size_t q) {
    auto [a, b] = pairs[q];
    v[q] = sat_search(Formula::land(as.atoms[a].psi, as.atoms[b].psi), logic, cfg.sat, cfg.cache);
  });
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    auto [a, b] = pairs[q];
    ++rep.checked;
    if (!v[q].decisive()) {
      ++rep.unknown;
      continue;
    }
    if (v[q].sat() != (a == b))
      rep.violations.push_back("A" + std::to_string(a) + " & A" + std::to_string(b) + " is " + to_string(v[q].kind));
  }
  return rep;
}

inline LemmaReport distinctness_check(const CanonicalModel& cm, const CanonicalConfig& cfg = {}) {
  return distinctness_check(cm.atoms, cm.logic, cfg);
}

// For clean members xi: xi in A iff A satisfies xi. Failures are tagged as
// oracle misclassifications when the atom's witness does not replay.
inline LemmaReport truth_lemma_check(const CanonicalModel& cm) {
  LemmaReport rep;
  const auto& sigma = cm.sigma();
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!is_clean(sigma[i])) continue;
    StateSet ext = eval_algebraic(sigma[i], cm.model);
    for (std::size_t a = 0; a < cm.size(); ++a) {
      ++rep.checked;
      bool in = cm.atoms.atoms[a].contains(i);
      if (in == ext.test(a)) continue;
      bool oracle_ok = replays(cm.atoms.atoms[a].verdict, cm.atoms.atoms[a].psi);
      rep.violations.push_back(std::string(oracle_ok ? "construction" : "oracle") + ": A" + std::to_string(a) + " " +
                               (in ? "contains " : "omits ") + print_formula(sigma[i]) + " but " +
                               (in ? "refutes" : "satisfies") + " it");
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Name expansion

inline Formula psi_of(const CanonicalModel& cm, const StateSet& u) {
  std::vector<Formula> ds;
  for (std::size_t a = u.find_first(); a != StateSet::npos; a = u.find_next(a)) ds.push_back(cm.atoms.atoms[a].psi);
  return disjunction(ds);
}

inline Formula name_expansion(const Formula& xi, const Formula& phi, const CanonicalModel& cm) {
  SubformulaIndex idx(xi);
  if (!idx.id(phi)) throw std::invalid_argument("not a subformula: " + print_formula(phi));
  Formula out = phi;
  for (const auto& x : idx.enumeration()) {
    const auto& v = idx.var(x);
    StateSet u = eval_algebraic(expansion(idx, idx.node(v.delta)), cm.model);
    out = substitute(out, x, psi_of(cm, u));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Completeness pipeline

enum class PipelineStatus { Model, Inconsistent, Unknown };

inline const char* to_string(PipelineStatus s) {
  switch (s) {
    case PipelineStatus::Model: return "MODEL";
    case PipelineStatus::Inconsistent: return "INCONSISTENT";
    case PipelineStatus::Unknown: return "UNKNOWN";
  }
  return "?";
}

struct PipelineResult {
  PipelineStatus status = PipelineStatus::Unknown;
  std::optional<CanonicalModel> canonical;
  std::size_t state = 0;
  std::string detail;
};

inline PipelineResult completeness_pipeline(const Formula& phi, FrameClass logic, const CanonicalConfig& cfg = {}) {
  PipelineResult res;
  ClosureSet sigma = fl_closure(phi, true);
  Formula target = clean(phi);
  try {
    res.canonical = build_canonical(sigma, logic, default_strategy(logic), cfg);
  } catch (const UnknownVerdictError& e) {
    res.detail = e.what();
    return res;
  }
  const auto& cm = *res.canonical;
  std::size_t idx = *sigma.find(target);
  bool unknown = !cm.warnings.empty();
  for (std::size_t a = 0; a < cm.size(); ++a) {
    if (!cm.atoms.atoms[a].contains(idx)) continue;
    if (!eval_algebraic(target, cm.model).test(a))
      throw CanonicalError("pipeline: atom A" + std::to_string(a) + " contains the formula but refutes it");
    if (!frame_class_check(cm.model, logic).ok) throw CanonicalError("pipeline: model left the frame class");
    res.status = PipelineStatus::Model;
    res.state = a;
    return res;
  }
  res.status = unknown ? PipelineStatus::Unknown : PipelineStatus::Inconsistent;
  if (unknown) res.detail = "undecided atoms or edges";
  return res;
}

// ---------------------------------------------------------------------------
// Serialization: the model as .kmj plus an atoms sidecar.

inline nlohmann::ordered_json atoms_sidecar(const CanonicalModel& cm) {
  nlohmann::ordered_json j;
  j["logic"] = to_string(cm.logic);
  j["strategy"] = to_string(cm.strategy);
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < cm.size(); ++a) {
    const auto& at = cm.atoms.atoms[a];
    nlohmann::ordered_json e;
    e["id"] = cm.model.name(a);
    auto mem = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < cm.sigma().size(); ++i)
      if (at.contains(i)) mem.push_back(print_formula(cm.sigma()[i]));
    e["members"] = mem;
    e["verdict"] = to_string(at.verdict.kind);
    e["method"] = at.verdict.method;
    if (at.verdict.witness) {
      e["witness_state"] = at.verdict.witness->name(at.verdict.state);
      e["witness"] = model_to_json(*at.verdict.witness);
    }
    arr.push_back(e);
  }
  j["atoms"] = arr;
  auto edges = [&](const std::vector<StateSet>& r) {
    auto out = nlohmann::ordered_json::array();
    for (std::size_t a = 0; a < r.size(); ++a)
      for (std::size_t b = 0; b < r.size(); ++b)
        if (r[a].test(b)) out.push_back({cm.model.name(a), cm.model.name(b)});
    return out;
  };
  j["rmin"] = edges(cm.rmin);
  j["rmax"] = edges(cm.rmax);
  auto w = nlohmann::ordered_json::array();
  for (const auto& s : cm.warnings) w.push_back(s);
  j["warnings"] = w;
  return j;
}

}  // namespace mucalc
