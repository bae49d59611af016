// Hilbert-style derivation checking for the continuous modal mu-calculus
// and its extensions by the T, 4, B and 5 schemas.
//
// Implications are encoded as ~a | b. Every step states its formula; the
// checker recomputes what the rule yields and compares up to renaming of
// bound variables.
#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mucalc/formula.hpp"
#include "mucalc/hash.hpp"
#include "mucalc/kripke.hpp"
#include "mucalc/semantics.hpp"
#include "mucalc/text_io.hpp"

namespace mucalc {

enum class Rule { Axiom, Extension, ModusPonens, Monotonicity, BoxMonotonicity, UniformSubst, LeastPrefixpoint, GreatestPostfixpoint };

inline const char* to_string(Rule r) {
  switch (r) {
    case Rule::Axiom: return "axiom";
    case Rule::Extension: return "extension";
    case Rule::ModusPonens: return "mp";
    case Rule::Monotonicity: return "mono";
    case Rule::BoxMonotonicity: return "mono-box";
    case Rule::UniformSubst: return "us";
    case Rule::LeastPrefixpoint: return "lfp";
    case Rule::GreatestPostfixpoint: return "gfp";
  }
  return "?";
}

inline std::optional<Rule> rule_from(const std::string& s) {
  for (Rule r : {Rule::Axiom, Rule::Extension, Rule::ModusPonens, Rule::Monotonicity, Rule::BoxMonotonicity,
                 Rule::UniformSubst, Rule::LeastPrefixpoint, Rule::GreatestPostfixpoint})
    if (s == to_string(r)) return r;
  return std::nullopt;
}

struct Step {
  Rule rule = Rule::Axiom;
  std::string schema;                   // axiom and extension steps
  std::map<std::string, Formula> inst;  // atom instantiation of a schema
  std::vector<std::size_t> refs;        // premises; mp takes (implication, antecedent)
  std::string var;                      // fixpoint axioms and rules
  std::optional<Formula> body;          // fixpoint axioms and rules
  std::optional<Formula> goal;          // fixpoint rules
  std::string atom;                     // uniform substitution
  std::optional<Formula> subst;         // uniform substitution
  Formula formula = Formula::top();
};

struct Derivation {
  FrameClass logic = FrameClass::K;
  std::vector<Step> steps;
};

struct Theorem {
  Formula formula;
  FrameClass logic = FrameClass::K;
  std::string hash;
};

struct Violation {
  std::size_t step = 0;
  std::string reason;
};

class DerivationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Tautology instances

namespace detail {

// Propositional skeleton: atoms and maximal modal or fixpoint subformulas
// become letters; boxes and greatest fixpoints are complements of the
// letter of their negation.
class Skeleton {
 public:
  explicit Skeleton(const Formula& f) : f_(f) { collect(f); }
  std::size_t letters() const { return letters_.size(); }
  bool eval(std::uint64_t assignment) const { return eval(f_, assignment); }

 private:
  static std::string key(const Formula& f) {
    switch (f.kind()) {
      case Kind::Atom:
      case Kind::NegAtom:
        return "a:" + f.name();
      case Kind::Box:
      case Kind::Nu:
        return "m:" + alpha_key(negate(f));
      default:
        return "m:" + alpha_key(f);
    }
  }
  static bool negative(const Formula& f) {
    return f.kind() == Kind::NegAtom || f.kind() == Kind::Box || f.kind() == Kind::Nu;
  }
  void collect(const Formula& f) {
    switch (f.kind()) {
      case Kind::Top:
      case Kind::Bottom:
        return;
      case Kind::Or:
      case Kind::And:
        collect(f.left());
        collect(f.right());
        return;
      default:
        letters_.emplace(key(f), letters_.size());
    }
  }
  bool eval(const Formula& f, std::uint64_t a) const {
    switch (f.kind()) {
      case Kind::Top: return true;
      case Kind::Bottom: return false;
      case Kind::Or: return eval(f.left(), a) || eval(f.right(), a);
      case Kind::And: return eval(f.left(), a) && eval(f.right(), a);
      default: {
        bool v = (a >> letters_.at(key(f))) & 1u;
        return negative(f) ? !v : v;
      }
    }
  }

  Formula f_;
  std::map<std::string, std::size_t> letters_;
};

}  // namespace detail

inline constexpr std::size_t kMaxTautologyLetters = 20;

// nullopt when the skeleton has too many letters to decide.
inline std::optional<bool> is_tautology_instance(const Formula& f) {
  detail::Skeleton sk(f);
  if (sk.letters() > kMaxTautologyLetters) return std::nullopt;
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << sk.letters()); ++a)
    if (!sk.eval(a)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Schemas

inline std::optional<Formula> axiom_template(const std::string& id) {
  Formula p = Formula::atom("p"), q = Formula::atom("q");
  using F = Formula;
  if (id == "normality") return negate(F::diamond(F::bottom()));
  if (id == "additivity") return iff(F::diamond(F::lor(p, q)), F::lor(F::diamond(p), F::diamond(q)));
  if (id == "box-additivity") return iff(F::box(F::land(p, q)), F::land(F::box(p), F::box(q)));
  return std::nullopt;
}

inline std::optional<Formula> extension_template(const std::string& id) {
  Formula p = Formula::atom("p");
  using F = Formula;
  if (id == "T") return implies(F::box(p), p);
  if (id == "4") return implies(F::box(p), F::box(F::box(p)));
  if (id == "B") return implies(p, F::box(F::diamond(p)));
  if (id == "5") return implies(F::diamond(p), F::box(F::diamond(p)));
  return std::nullopt;
}

inline std::vector<std::string> extension_axioms(FrameClass logic) {
  switch (logic) {
    case FrameClass::K: return {};
    case FrameClass::T: return {"T"};
    case FrameClass::KB: return {"B"};
    case FrameClass::K4: return {"4"};
    case FrameClass::S4: return {"T", "4"};
    case FrameClass::S5: return {"T", "5"};
  }
  return {};
}

inline Formula instantiate(const Formula& tmpl, const std::map<std::string, Formula>& inst) {
  return substitute_all(tmpl, inst);
}

inline Formula prefixpoint_instance(const std::string& x, const Formula& body) {
  Formula fix = Formula::mu(x, body);
  return implies(substitute(body, x, fix), fix);
}

inline Formula postfixpoint_instance(const std::string& x, const Formula& body) {
  Formula fix = Formula::nu(x, body);
  return implies(fix, substitute(body, x, fix));
}

// Splits a ~a | b encoding into (a, b).
inline std::optional<std::pair<Formula, Formula>> as_implication(const Formula& f) {
  if (f.kind() != Kind::Or) return std::nullopt;
  return std::make_pair(negate(f.left()), f.right());
}

// ---------------------------------------------------------------------------
// Checking

namespace detail {

inline std::optional<std::string> check_refs(const Step& s, std::size_t k, std::size_t arity) {
  if (s.refs.size() != arity)
    return std::string(to_string(s.rule)) + " expects " + std::to_string(arity) + " premise(s)";
  for (std::size_t r : s.refs)
    if (r >= k) return "reference to step " + std::to_string(r) + " is not an earlier step";
  return std::nullopt;
}

inline std::optional<std::string> expect(const Formula& claimed, const Formula& computed) {
  if (alpha_equal(claimed, computed)) return std::nullopt;
  return "stated formula " + print_formula(claimed) + " does not match " + print_formula(computed);
}

inline std::optional<std::string> check_inst_keys(const Step& s, const Formula& tmpl) {
  for (const auto& [a, _] : s.inst)
    if (!tmpl.has_free(a)) return "instantiation of " + a + " which the schema does not mention";
  return std::nullopt;
}

}  // namespace detail

inline std::optional<std::string> check_step(const Derivation& d, std::size_t k) {
  if (k >= d.steps.size()) return "step index out of range";
  const Step& s = d.steps[k];
  auto premise = [&](std::size_t i) -> const Formula& { return d.steps[s.refs[i]].formula; };
  switch (s.rule) {
    case Rule::Axiom: {
      if (s.schema == "taut") {
        auto t = is_tautology_instance(s.formula);
        if (!t) return "tautology check exceeds " + std::to_string(kMaxTautologyLetters) + " letters";
        if (!*t) return "not a tautology instance: " + print_formula(s.formula);
        return std::nullopt;
      }
      if (s.schema == "prefixpoint" || s.schema == "postfixpoint") {
        bool least = s.schema == "prefixpoint";
        if (s.var.empty() || !s.body) return s.schema + " needs var and body";
        auto m = classify_fragment(*s.body, {s.var}).membership;
        bool ok = least ? (m == Membership::InCon || m == Membership::InBoth)
                        : (m == Membership::InCocon || m == Membership::InBoth);
        if (!ok)
          return "side condition: " + print_formula(*s.body) + " is not in " + (least ? "Con_" : "Cocon_") + s.var;
        return detail::expect(s.formula, least ? prefixpoint_instance(s.var, *s.body)
                                               : postfixpoint_instance(s.var, *s.body));
      }
      auto tmpl = axiom_template(s.schema);
      if (!tmpl) return "unknown axiom schema " + s.schema;
      if (auto e = detail::check_inst_keys(s, *tmpl)) return e;
      return detail::expect(s.formula, instantiate(*tmpl, s.inst));
    }
    case Rule::Extension: {
      auto tmpl = extension_template(s.schema);
      if (!tmpl) return "unknown extension schema " + s.schema;
      auto allowed = extension_axioms(d.logic);
      if (std::find(allowed.begin(), allowed.end(), s.schema) == allowed.end())
        return "schema " + s.schema + " is not an axiom of " + to_string(d.logic);
      if (auto e = detail::check_inst_keys(s, *tmpl)) return e;
      return detail::expect(s.formula, instantiate(*tmpl, s.inst));
    }
    case Rule::ModusPonens: {
      if (auto e = detail::check_refs(s, k, 2)) return e;
      auto imp = as_implication(premise(0));
      if (!imp || !alpha_equal(imp->first, premise(1)))
        return "step " + std::to_string(s.refs[0]) + " is not an implication from step " + std::to_string(s.refs[1]);
      return detail::expect(s.formula, imp->second);
    }
    case Rule::Monotonicity:
    case Rule::BoxMonotonicity: {
      if (auto e = detail::check_refs(s, k, 1)) return e;
      auto imp = as_implication(premise(0));
      if (!imp) return "premise is not an implication";
      Kind m = s.rule == Rule::Monotonicity ? Kind::Diamond : Kind::Box;
      return detail::expect(s.formula, implies(Formula::modal(m, imp->first), Formula::modal(m, imp->second)));
    }
    case Rule::UniformSubst: {
      if (auto e = detail::check_refs(s, k, 1)) return e;
      if (s.atom.empty() || !s.subst) return "us needs atom and subst";
      return detail::expect(s.formula, substitute(premise(0), s.atom, *s.subst));
    }
    case Rule::LeastPrefixpoint:
    case Rule::GreatestPostfixpoint: {
      if (auto e = detail::check_refs(s, k, 1)) return e;
      if (s.var.empty() || !s.body || !s.goal) return std::string(to_string(s.rule)) + " needs var, body and goal";
      bool least = s.rule == Rule::LeastPrefixpoint;
      auto m = classify_fragment(*s.body, {s.var}).membership;
      bool ok = least ? (m == Membership::InCon || m == Membership::InBoth)
                      : (m == Membership::InCocon || m == Membership::InBoth);
      if (!ok) return "side condition: " + print_formula(*s.body) + " is not in " + (least ? "Con_" : "Cocon_") + s.var;
      Formula inst = substitute(*s.body, s.var, *s.goal);
      Formula need = least ? implies(inst, *s.goal) : implies(*s.goal, inst);
      if (!alpha_equal(premise(0), need)) return "premise is not " + print_formula(need);
      Formula fix = least ? Formula::mu(s.var, *s.body) : Formula::nu(s.var, *s.body);
      return detail::expect(s.formula, least ? implies(fix, *s.goal) : implies(*s.goal, fix));
    }
  }
  return "unknown rule";
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::ordered_json to_json(const Step& s) {
  nlohmann::ordered_json j;
  j["rule"] = to_string(s.rule);
  if (!s.schema.empty()) j["schema"] = s.schema;
  if (!s.inst.empty()) {
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    for (const auto& [a, f] : s.inst) m[a] = print_formula(f);
    j["inst"] = m;
  }
  if (!s.refs.empty()) j["refs"] = s.refs;
  if (!s.var.empty()) j["var"] = s.var;
  if (s.body) j["body"] = print_formula(*s.body);
  if (s.goal) j["goal"] = print_formula(*s.goal);
  if (!s.atom.empty()) j["atom"] = s.atom;
  if (s.subst) j["subst"] = print_formula(*s.subst);
  j["formula"] = print_formula(s.formula);
  return j;
}

inline nlohmann::ordered_json to_json(const Derivation& d) {
  nlohmann::ordered_json j;
  j["logic"] = to_string(d.logic);
  auto steps = nlohmann::ordered_json::array();
  for (const auto& s : d.steps) steps.push_back(to_json(s));
  j["steps"] = steps;
  return j;
}

// Accepts {"logic": ..., "steps": [...]} or a bare step array (logic K).
inline Derivation derivation_from_json(const nlohmann::json& j) {
  Derivation d;
  const nlohmann::json* steps = &j;
  if (j.is_object()) {
    if (j.contains("logic")) {
      if (!j["logic"].is_string()) throw DerivationError("logic must be a string");
      auto c = frame_class_from(j["logic"].get<std::string>());
      if (!c) throw DerivationError("unknown logic " + j["logic"].get<std::string>());
      d.logic = *c;
    }
    if (!j.contains("steps")) throw DerivationError("missing steps");
    steps = &j["steps"];
  }
  if (!steps->is_array()) throw DerivationError("steps must be an array");
  for (std::size_t k = 0; k < steps->size(); ++k) {
    const auto& js = (*steps)[k];
    auto where = "step " + std::to_string(k) + ": ";
    try {
      if (!js.is_object()) throw DerivationError("not an object");
      Step s;
      auto r = rule_from(js.value("rule", std::string()));
      if (!r) throw DerivationError("unknown rule '" + js.value("rule", std::string()) + "'");
      s.rule = *r;
      s.schema = js.value("schema", std::string());
      if (js.contains("inst"))
        for (const auto& [a, f] : js["inst"].items()) s.inst.emplace(a, parse_formula(f.get<std::string>()));
      if (js.contains("refs"))
        for (const auto& r : js["refs"]) {
          if (!r.is_number_unsigned()) throw DerivationError("refs must be step indices");
          s.refs.push_back(r.get<std::size_t>());
        }
      s.var = js.value("var", std::string());
      s.atom = js.value("atom", std::string());
      if (js.contains("body")) s.body = parse_formula(js["body"].get<std::string>());
      if (js.contains("goal")) s.goal = parse_formula(js["goal"].get<std::string>());
      if (js.contains("subst")) s.subst = parse_formula(js["subst"].get<std::string>());
      if (!js.contains("formula")) throw DerivationError("missing formula");
      s.formula = parse_formula(js["formula"].get<std::string>());
      d.steps.push_back(std::move(s));
    } catch (const DerivationError& e) {
      throw DerivationError(where + e.what());
    } catch (const ParseError& e) {
      throw DerivationError(where + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw DerivationError(where + e.what());
    }
  }
  return d;
}

inline Derivation read_derivation(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DerivationError(std::string("invalid JSON: ") + e.what());
  }
  return derivation_from_json(j);
}

inline std::string write_derivation(const Derivation& d) { return to_json(d).dump(2) + "\n"; }

struct CheckResult {
  std::optional<Theorem> theorem;
  std::optional<Violation> violation;
  bool ok() const { return theorem.has_value(); }
};

inline CheckResult check_derivation(const Derivation& d) {
  CheckResult res;
  if (d.steps.empty()) {
    res.violation = Violation{0, "empty derivation"};
    return res;
  }
  for (std::size_t k = 0; k < d.steps.size(); ++k)
    if (auto e = check_step(d, k)) {
      res.violation = Violation{k, *e};
      return res;
    }
  res.theorem = Theorem{d.steps.back().formula, d.logic, hex64(fnv1a64(to_json(d).dump()))};
  return res;
}

// ---------------------------------------------------------------------------
// Dualization: the uniform substitution p -> !p applied to every step.

inline Formula flip_literals(const Formula& f, const std::set<std::string>& keep = {}) {
  std::map<std::string, Formula> sub;
  for (const auto& a : f.free_names())
    if (!keep.count(a)) sub.emplace(a, Formula::neg_atom(a));
  return substitute_all(f, sub);
}

inline Derivation dualize(const Derivation& d) {
  Derivation out = d;
  for (auto& s : out.steps) {
    s.formula = flip_literals(s.formula);
    if (s.rule == Rule::Axiom || s.rule == Rule::Extension) {
      auto tmpl = s.rule == Rule::Axiom ? axiom_template(s.schema) : extension_template(s.schema);
      if (tmpl) {
        std::map<std::string, Formula> full;
        for (const auto& a : tmpl->free_names()) {
          auto it = s.inst.find(a);
          full.emplace(a, flip_literals(it == s.inst.end() ? Formula::atom(a) : it->second));
        }
        s.inst = full;
      }
    }
    if (s.body) s.body = flip_literals(*s.body, {s.var});
    if (s.goal) s.goal = flip_literals(*s.goal);
    if (s.subst) s.subst = negate(flip_literals(*s.subst));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mutations

enum class Mutation { ConjoinFalse, ConjoinFresh, SelfReference, ForwardReference };

inline const char* to_string(Mutation m) {
  switch (m) {
    case Mutation::ConjoinFalse: return "conjoin-false";
    case Mutation::ConjoinFresh: return "conjoin-fresh";
    case Mutation::SelfReference: return "self-reference";
    case Mutation::ForwardReference: return "forward-reference";
  }
  return "?";
}

inline constexpr Mutation kMutations[] = {Mutation::ConjoinFalse, Mutation::ConjoinFresh, Mutation::SelfReference,
                                          Mutation::ForwardReference};

// nullopt when the mutation does not apply to step k.
inline std::optional<Derivation> mutate(const Derivation& d, std::size_t k, Mutation m) {
  Derivation out = d;
  Step& s = out.steps.at(k);
  switch (m) {
    case Mutation::ConjoinFalse:
      s.formula = Formula::land(s.formula, Formula::bottom());
      return out;
    case Mutation::ConjoinFresh: {
      std::set<std::string> used;
      for (const auto& st : d.steps) collect_names(st.formula, used);
      s.formula = Formula::land(s.formula, Formula::atom(fresh_name("m", used)));
      return out;
    }
    case Mutation::SelfReference:
    case Mutation::ForwardReference:
      if (s.refs.empty()) return std::nullopt;
      s.refs[0] = m == Mutation::SelfReference ? k : k + 1;
      return out;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Soundness sampling

struct SoundnessReport {
  std::size_t models = 0;
  std::size_t refutations = 0;
  std::optional<KripkeModel> witness;
  bool ok() const { return refutations == 0; }
};

namespace detail {
inline void sample_one(SoundnessReport& rep, const Formula& f, const KripkeModel& m) {
  ++rep.models;
  if (valid_in(m, f)) return;
  ++rep.refutations;
  if (!rep.witness) rep.witness = m;
}
}  // namespace detail

inline SoundnessReport soundness_sample(const Formula& f, FrameClass cls, std::size_t n, std::size_t max_states,
                                        std::uint64_t seed) {
  SoundnessReport rep;
  Rng rng(mix_seed(seed));
  std::vector<std::string> atoms(f.free_names().begin(), f.free_names().end());
  for (std::size_t i = 0; i < n; ++i) detail::sample_one(rep, f, random_model(rng, max_states, atoms, cls));
  return rep;
}

inline SoundnessReport soundness_sample(const Theorem& t, std::size_t n, std::size_t max_states, std::uint64_t seed) {
  return soundness_sample(t.formula, t.logic, n, max_states, seed);
}

// Every model of the class up to max_states over the formula's atoms.
inline SoundnessReport soundness_exhaustive(const Formula& f, FrameClass cls, std::size_t max_states) {
  SoundnessReport rep;
  std::vector<std::string> atoms(f.free_names().begin(), f.free_names().end());
  enumerate_models(max_states, atoms, cls, [&](const KripkeModel& m) {
    detail::sample_one(rep, f, m);
    return true;
  });
  return rep;
}

}  // namespace mucalc
