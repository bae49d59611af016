// Formulas of the continuous modal mu-calculus in negation normal form.
//
// A Formula is an immutable, reference-counted syntax tree. Propositional
// atoms and fixpoint variables share one name space: a name is a variable
// exactly when an enclosing binder binds it.
#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mucalc {

enum class Kind : std::uint8_t { Atom, NegAtom, Top, Bottom, Or, And, Diamond, Box, Mu, Nu };

class Formula {
 public:
  Formula() : Formula(top()) {}

  static Formula atom(std::string name) { return make(Kind::Atom, std::move(name), {}, {}); }
  static Formula neg_atom(std::string name) { return make(Kind::NegAtom, std::move(name), {}, {}); }
  static Formula top() {
    static const Formula t = make(Kind::Top, {}, {}, {});
    return t;
  }
  static Formula bottom() {
    static const Formula b = make(Kind::Bottom, {}, {}, {});
    return b;
  }
  static Formula lor(Formula l, Formula r) { return make(Kind::Or, {}, std::move(l), std::move(r)); }
  static Formula land(Formula l, Formula r) { return make(Kind::And, {}, std::move(l), std::move(r)); }
  static Formula diamond(Formula b) { return make(Kind::Diamond, {}, std::move(b), {}); }
  static Formula box(Formula b) { return make(Kind::Box, {}, std::move(b), {}); }
  static Formula mu(std::string var, Formula b) { return make(Kind::Mu, std::move(var), std::move(b), {}); }
  static Formula nu(std::string var, Formula b) { return make(Kind::Nu, std::move(var), std::move(b), {}); }
  static Formula binder(Kind k, std::string var, Formula b) { return make(k, std::move(var), std::move(b), {}); }
  static Formula binary(Kind k, Formula l, Formula r) { return make(k, {}, std::move(l), std::move(r)); }
  static Formula modal(Kind k, Formula b) { return make(k, {}, std::move(b), {}); }

  Kind kind() const { return node_->kind; }
  // Atom/NegAtom name, or the bound variable of a Mu/Nu.
  const std::string& name() const { return node_->name; }
  const Formula& left() const { return *node_->left; }
  const Formula& right() const { return *node_->right; }
  // Body of a modality or binder.
  const Formula& body() const { return *node_->left; }

  bool is_literal() const {
    return kind() == Kind::Atom || kind() == Kind::NegAtom || kind() == Kind::Top || kind() == Kind::Bottom;
  }
  bool is_binary() const { return kind() == Kind::Or || kind() == Kind::And; }
  bool is_modal() const { return kind() == Kind::Diamond || kind() == Kind::Box; }
  bool is_fixpoint() const { return kind() == Kind::Mu || kind() == Kind::Nu; }

  // Names occurring free, sorted.
  const std::vector<std::string>& free_names() const { return node_->free; }
  bool has_free(std::string_view n) const {
    return std::binary_search(node_->free.begin(), node_->free.end(), n, std::less<>{});
  }
  std::size_t size() const { return node_->size; }
  std::size_t hash() const { return node_->hash; }
  const void* identity() const { return node_.get(); }

  // Structural equality; bound names must match exactly (see alpha_equal).
  friend bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) return true;
    if (a.node_->hash != b.node_->hash || a.node_->kind != b.node_->kind || a.node_->size != b.node_->size ||
        a.node_->name != b.node_->name)
      return false;
    switch (a.kind()) {
      case Kind::Or:
      case Kind::And:
        return a.left() == b.left() && a.right() == b.right();
      case Kind::Diamond:
      case Kind::Box:
      case Kind::Mu:
      case Kind::Nu:
        return a.body() == b.body();
      default:
        return true;
    }
  }
  friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }

 private:
  struct Node {
    Kind kind;
    std::string name;
    std::shared_ptr<const Formula> left;
    std::shared_ptr<const Formula> right;
    std::vector<std::string> free;
    std::size_t size = 1;
    std::size_t hash = 0;
  };

  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Formula make(Kind k, std::string name, std::optional<Formula> l, std::optional<Formula> r);

  std::shared_ptr<const Node> node_;
};

struct FormulaHash {
  std::size_t operator()(const Formula& f) const { return f.hash(); }
};

inline Formula Formula::make(Kind k, std::string name, std::optional<Formula> l, std::optional<Formula> r) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  std::size_t h = std::hash<int>{}(static_cast<int>(k)) * 0x9E3779B97F4A7C15ull;
  h ^= std::hash<std::string>{}(name) + 0x632BE59BD9B4E019ull + (h << 6) + (h >> 2);
  switch (k) {
    case Kind::Atom:
    case Kind::NegAtom:
      n->free = {name};
      break;
    case Kind::Or:
    case Kind::And: {
      if (!l || !r) throw std::logic_error("binary connective needs two operands");
      std::set_union(l->free_names().begin(), l->free_names().end(), r->free_names().begin(),
                     r->free_names().end(), std::back_inserter(n->free));
      n->size += l->size() + r->size();
      h ^= l->hash() + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
      h ^= r->hash() * 31 + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
      break;
    }
    case Kind::Diamond:
    case Kind::Box:
    case Kind::Mu:
    case Kind::Nu: {
      if (!l) throw std::logic_error("unary connective needs an operand");
      n->free = l->free_names();
      if (k == Kind::Mu || k == Kind::Nu) {
        auto it = std::lower_bound(n->free.begin(), n->free.end(), name);
        if (it != n->free.end() && *it == name) n->free.erase(it);
      }
      n->size += l->size();
      h ^= l->hash() + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
      break;
    }
    default:
      break;
  }
  n->name = std::move(name);
  n->hash = h;
  if (l) n->left = std::make_shared<const Formula>(std::move(*l));
  if (r) n->right = std::make_shared<const Formula>(std::move(*r));
  return Formula(std::move(n));
}

inline Kind dual(Kind k) {
  switch (k) {
    case Kind::Atom: return Kind::NegAtom;
    case Kind::NegAtom: return Kind::Atom;
    case Kind::Top: return Kind::Bottom;
    case Kind::Bottom: return Kind::Top;
    case Kind::Or: return Kind::And;
    case Kind::And: return Kind::Or;
    case Kind::Diamond: return Kind::Box;
    case Kind::Box: return Kind::Diamond;
    case Kind::Mu: return Kind::Nu;
    case Kind::Nu: return Kind::Mu;
  }
  return k;
}

// ---------------------------------------------------------------------------
// Name bookkeeping

inline void collect_names(const Formula& f, std::set<std::string>& out) {
  switch (f.kind()) {
    case Kind::Atom:
    case Kind::NegAtom:
      out.insert(f.name());
      break;
    case Kind::Or:
    case Kind::And:
      collect_names(f.left(), out);
      collect_names(f.right(), out);
      break;
    case Kind::Mu:
    case Kind::Nu:
      out.insert(f.name());
      collect_names(f.body(), out);
      break;
    case Kind::Diamond:
    case Kind::Box:
      collect_names(f.body(), out);
      break;
    default:
      break;
  }
}

inline std::set<std::string> all_names(const Formula& f) {
  std::set<std::string> s;
  collect_names(f, s);
  return s;
}

inline std::set<std::string> free_vars(const Formula& f) {
  return {f.free_names().begin(), f.free_names().end()};
}

inline void collect_binders(const Formula& f, std::vector<std::string>& out) {
  switch (f.kind()) {
    case Kind::Or:
    case Kind::And:
      collect_binders(f.left(), out);
      collect_binders(f.right(), out);
      break;
    case Kind::Mu:
    case Kind::Nu:
      out.push_back(f.name());
      collect_binders(f.body(), out);
      break;
    case Kind::Diamond:
    case Kind::Box:
      collect_binders(f.body(), out);
      break;
    default:
      break;
  }
}

inline std::set<std::string> bound_vars(const Formula& f) {
  std::vector<std::string> v;
  collect_binders(f, v);
  return {v.begin(), v.end()};
}

// Fresh variant of `base` avoiding `used`: strips a trailing "_<digits>" and
// appends the first free counter.
inline std::string fresh_name(std::string_view base, const std::set<std::string>& used) {
  std::string stem(base);
  if (auto pos = stem.rfind('_'); pos != std::string::npos && pos + 1 < stem.size() &&
                                  std::all_of(stem.begin() + pos + 1, stem.end(), ::isdigit))
    stem.erase(pos);
  if (stem.empty()) stem = "v";
  for (std::size_t i = 1;; ++i) {
    std::string cand = stem + "_" + std::to_string(i);
    if (!used.count(cand)) return cand;
  }
}

// ---------------------------------------------------------------------------
// Negation

namespace detail {
inline Formula negate_impl(const Formula& f, std::vector<std::string>& bound) {
  auto is_bound = [&](const std::string& n) { return std::find(bound.begin(), bound.end(), n) != bound.end(); };
  switch (f.kind()) {
    case Kind::Atom:
      return is_bound(f.name()) ? f : Formula::neg_atom(f.name());
    case Kind::NegAtom:
      return is_bound(f.name()) ? f : Formula::atom(f.name());
    case Kind::Top:
      return Formula::bottom();
    case Kind::Bottom:
      return Formula::top();
    case Kind::Or:
    case Kind::And:
      return Formula::binary(dual(f.kind()), negate_impl(f.left(), bound), negate_impl(f.right(), bound));
    case Kind::Diamond:
    case Kind::Box:
      return Formula::modal(dual(f.kind()), negate_impl(f.body(), bound));
    case Kind::Mu:
    case Kind::Nu: {
      bound.push_back(f.name());
      Formula b = negate_impl(f.body(), bound);
      bound.pop_back();
      return Formula::binder(dual(f.kind()), f.name(), std::move(b));
    }
  }
  return f;
}
}  // namespace detail

// The definable negation: dualizes every connective and complements free
// literals; occurrences of bound variables keep their polarity, which is the
// effect of the double negation in ~eta x.phi := dual-eta x.~phi[!x/x].
inline Formula negate(const Formula& f) {
  std::vector<std::string> bound;
  return detail::negate_impl(f, bound);
}

// ---------------------------------------------------------------------------
// Substitution

namespace detail {
inline Formula rename_free(const Formula& f, const std::string& from, const std::string& to);

inline Formula subst_impl(const Formula& f, const std::map<std::string, Formula>& sub) {
  if (sub.empty()) return f;
  bool touches = false;
  for (const auto& [x, _] : sub)
    if (f.has_free(x)) {
      touches = true;
      break;
    }
  if (!touches) return f;
  switch (f.kind()) {
    case Kind::Atom:
      return sub.at(f.name());
    case Kind::NegAtom:
      return negate(sub.at(f.name()));
    case Kind::Or:
    case Kind::And:
      return Formula::binary(f.kind(), subst_impl(f.left(), sub), subst_impl(f.right(), sub));
    case Kind::Diamond:
    case Kind::Box:
      return Formula::modal(f.kind(), subst_impl(f.body(), sub));
    case Kind::Mu:
    case Kind::Nu: {
      std::map<std::string, Formula> inner;
      for (const auto& [x, psi] : sub)
        if (x != f.name() && f.body().has_free(x)) inner.emplace(x, psi);
      if (inner.empty()) return f;
      std::string var = f.name();
      Formula body = f.body();
      bool captures = false;
      for (const auto& [x, psi] : inner)
        if (psi.has_free(var)) captures = true;
      if (captures) {
        std::set<std::string> used = all_names(body);
        used.insert(var);
        for (const auto& [x, psi] : inner) {
          used.insert(x);
          used.insert(psi.free_names().begin(), psi.free_names().end());
        }
        std::string fresh = fresh_name(var, used);
        body = rename_free(body, var, fresh);
        var = fresh;
      }
      return Formula::binder(f.kind(), var, subst_impl(body, inner));
    }
    default:
      return f;
  }
}

inline Formula rename_free(const Formula& f, const std::string& from, const std::string& to) {
  return subst_impl(f, {{from, Formula::atom(to)}});
}
}  // namespace detail

// phi[psi/x]: replaces free occurrences of x (a negated occurrence becomes
// ~psi); binders that would capture free names of psi are renamed.
inline Formula substitute(const Formula& phi, const std::string& x, const Formula& psi) {
  return detail::subst_impl(phi, {{x, psi}});
}

// Simultaneous substitution.
inline Formula substitute_all(const Formula& phi, const std::map<std::string, Formula>& sub) {
  return detail::subst_impl(phi, sub);
}

// phi[eta x.phi / x] for a fixpoint formula.
inline Formula unfold(const Formula& fix) {
  if (!fix.is_fixpoint()) throw std::invalid_argument("unfold: not a fixpoint formula");
  return substitute(fix.body(), fix.name(), fix);
}

// ---------------------------------------------------------------------------
// Alpha-equivalence

namespace detail {
inline void alpha_key_impl(const Formula& f, std::vector<std::string>& scope, std::string& out) {
  auto level_of = [&](const std::string& n) -> long {
    for (std::size_t i = scope.size(); i-- > 0;)
      if (scope[i] == n) return static_cast<long>(i);
    return -1;
  };
  switch (f.kind()) {
    case Kind::Atom:
    case Kind::NegAtom: {
      long lv = level_of(f.name());
      out += f.kind() == Kind::Atom ? '+' : '-';
      if (lv >= 0)
        out += '#' + std::to_string(lv);
      else
        out += f.name();
      out += ';';
      break;
    }
    case Kind::Top: out += 'T'; break;
    case Kind::Bottom: out += 'F'; break;
    case Kind::Or:
    case Kind::And:
      out += f.kind() == Kind::Or ? "|(" : "&(";
      alpha_key_impl(f.left(), scope, out);
      out += ',';
      alpha_key_impl(f.right(), scope, out);
      out += ')';
      break;
    case Kind::Diamond:
    case Kind::Box:
      out += f.kind() == Kind::Diamond ? "<" : "[";
      alpha_key_impl(f.body(), scope, out);
      break;
    case Kind::Mu:
    case Kind::Nu:
      out += f.kind() == Kind::Mu ? "M(" : "N(";
      scope.push_back(f.name());
      alpha_key_impl(f.body(), scope, out);
      scope.pop_back();
      out += ')';
      break;
  }
}
}  // namespace detail

// Canonical serialization with bound variables replaced by binder levels.
// Two formulas are alpha-equivalent iff their keys are equal.
inline std::string alpha_key(const Formula& f) {
  std::vector<std::string> scope;
  std::string out;
  out.reserve(f.size() * 4);
  detail::alpha_key_impl(f, scope, out);
  return out;
}

inline bool alpha_equal(const Formula& a, const Formula& b) {
  return a == b || (a.free_names() == b.free_names() && alpha_key(a) == alpha_key(b));
}

// ---------------------------------------------------------------------------
// Tidy and clean formulas

inline bool is_tidy(const Formula& f) {
  auto bv = bound_vars(f);
  for (const auto& n : f.free_names())
    if (bv.count(n)) return false;
  return true;
}

inline bool is_clean(const Formula& f) {
  std::vector<std::string> binders;
  collect_binders(f, binders);
  std::set<std::string> seen;
  for (const auto& b : binders) {
    if (!seen.insert(b).second) return false;
    if (f.has_free(b)) return false;
  }
  return true;
}

struct Renaming {
  std::string from;
  std::string to;
};

struct CleanResult {
  Formula formula;
  std::vector<Renaming> renamings;
};

namespace detail {
inline Formula clean_impl(const Formula& f, std::map<std::string, std::string>& env, std::set<std::string>& used,
                          std::set<std::string>& binders_seen, std::vector<Renaming>& log) {
  switch (f.kind()) {
    case Kind::Atom:
    case Kind::NegAtom: {
      auto it = env.find(f.name());
      if (it == env.end() || it->second == f.name()) return f;
      return f.kind() == Kind::Atom ? Formula::atom(it->second) : Formula::neg_atom(it->second);
    }
    case Kind::Or:
    case Kind::And: {
      Formula l = clean_impl(f.left(), env, used, binders_seen, log);
      Formula r = clean_impl(f.right(), env, used, binders_seen, log);
      return Formula::binary(f.kind(), std::move(l), std::move(r));
    }
    case Kind::Diamond:
    case Kind::Box:
      return Formula::modal(f.kind(), clean_impl(f.body(), env, used, binders_seen, log));
    case Kind::Mu:
    case Kind::Nu: {
      std::string var = f.name();
      if (binders_seen.count(var)) {
        var = fresh_name(var, used);
        log.push_back({f.name(), var});
      }
      used.insert(var);
      binders_seen.insert(var);
      auto saved = env.find(f.name()) == env.end() ? std::optional<std::string>{} : env[f.name()];
      env[f.name()] = var;
      Formula b = clean_impl(f.body(), env, used, binders_seen, log);
      if (saved)
        env[f.name()] = *saved;
      else
        env.erase(f.name());
      return Formula::binder(f.kind(), var, std::move(b));
    }
    default:
      return f;
  }
}
}  // namespace detail

// Alpha-variant in which every binder has its own name, distinct from all
// free names. Names are kept where possible; clashes get fresh "_<n>" names.
inline CleanResult make_clean(const Formula& f) {
  std::set<std::string> used = all_names(f);
  std::set<std::string> seen(f.free_names().begin(), f.free_names().end());
  std::map<std::string, std::string> env;
  CleanResult res{f, {}};
  res.formula = detail::clean_impl(f, env, used, seen, res.renamings);
  return res;
}

inline Formula clean(const Formula& f) { return is_clean(f) ? f : make_clean(f).formula; }

// ---------------------------------------------------------------------------
// Syntactic fragments

enum class Membership { InCon, InCocon, InBoth, Neither };

struct FragmentClass {
  Membership membership = Membership::Neither;
  bool in_mucml = false;
};

namespace detail {
inline bool free_of(const Formula& f, const std::set<std::string>& xs) {
  for (const auto& n : f.free_names())
    if (xs.count(n)) return false;
  return true;
}
}  // namespace detail

inline bool in_mucml(const Formula& f);

// Con_X: x | alpha | or | and | <> | mu y.Con_{X+y}; Cocon_X dually with [] and nu.
inline bool in_con(const Formula& f, const std::set<std::string>& xs, bool co = false) {
  if (f.kind() == Kind::Atom && xs.count(f.name())) return true;
  if (detail::free_of(f, xs)) return in_mucml(f);
  switch (f.kind()) {
    case Kind::Or:
    case Kind::And:
      return in_con(f.left(), xs, co) && in_con(f.right(), xs, co);
    case Kind::Diamond:
      return !co && in_con(f.body(), xs, co);
    case Kind::Box:
      return co && in_con(f.body(), xs, co);
    case Kind::Mu:
    case Kind::Nu: {
      if ((f.kind() == Kind::Nu) != co) return false;
      auto ys = xs;
      ys.insert(f.name());
      return in_con(f.body(), ys, co);
    }
    default:
      return false;
  }
}

inline bool in_cocon(const Formula& f, const std::set<std::string>& xs) { return in_con(f, xs, true); }

inline bool in_mucml(const Formula& f) {
  switch (f.kind()) {
    case Kind::Or:
    case Kind::And:
      return in_mucml(f.left()) && in_mucml(f.right());
    case Kind::Diamond:
    case Kind::Box:
      return in_mucml(f.body());
    case Kind::Mu:
      return in_con(f.body(), {f.name()});
    case Kind::Nu:
      return in_cocon(f.body(), {f.name()});
    default:
      return true;
  }
}

inline FragmentClass classify_fragment(const Formula& f, const std::set<std::string>& xs) {
  FragmentClass fc;
  fc.in_mucml = in_mucml(f);
  bool con = in_con(f, xs);
  bool cocon = in_cocon(f, xs);
  fc.membership = con && cocon ? Membership::InBoth
                  : con        ? Membership::InCon
                  : cocon      ? Membership::InCocon
                               : Membership::Neither;
  return fc;
}

inline const char* to_string(Membership m) {
  switch (m) {
    case Membership::InCon: return "IN_CON_X";
    case Membership::InCocon: return "IN_COCON_X";
    case Membership::InBoth: return "IN_BOTH";
    case Membership::Neither: return "NEITHER";
  }
  return "?";
}

// True when every bound variable occurs only positively below its binder.
inline bool bound_vars_positive(const Formula& f, std::vector<std::string>& scope) {
  switch (f.kind()) {
    case Kind::NegAtom:
      return std::find(scope.begin(), scope.end(), f.name()) == scope.end();
    case Kind::Or:
    case Kind::And:
      return bound_vars_positive(f.left(), scope) && bound_vars_positive(f.right(), scope);
    case Kind::Diamond:
    case Kind::Box:
      return bound_vars_positive(f.body(), scope);
    case Kind::Mu:
    case Kind::Nu: {
      scope.push_back(f.name());
      bool ok = bound_vars_positive(f.body(), scope);
      scope.pop_back();
      return ok;
    }
    default:
      return true;
  }
}

inline bool bound_vars_positive(const Formula& f) {
  std::vector<std::string> scope;
  return bound_vars_positive(f, scope);
}

// Conjunction / disjunction of a list (left-associated); empty lists give
// true / false.
inline Formula conjunction(const std::vector<Formula>& fs) {
  if (fs.empty()) return Formula::top();
  Formula acc = fs.front();
  for (std::size_t i = 1; i < fs.size(); ++i) acc = Formula::land(acc, fs[i]);
  return acc;
}

inline Formula disjunction(const std::vector<Formula>& fs) {
  if (fs.empty()) return Formula::bottom();
  Formula acc = fs.front();
  for (std::size_t i = 1; i < fs.size(); ++i) acc = Formula::lor(acc, fs[i]);
  return acc;
}

// a -> b as ~a | b.
inline Formula implies(const Formula& a, const Formula& b) { return Formula::lor(negate(a), b); }

inline Formula iff(const Formula& a, const Formula& b) { return Formula::land(implies(a, b), implies(b, a)); }

inline std::size_t modal_depth(const Formula& f) {
  switch (f.kind()) {
    case Kind::Or:
    case Kind::And:
      return std::max(modal_depth(f.left()), modal_depth(f.right()));
    case Kind::Diamond:
    case Kind::Box:
      return 1 + modal_depth(f.body());
    case Kind::Mu:
    case Kind::Nu:
      return modal_depth(f.body());
    default:
      return 0;
  }
}

}  // namespace mucalc
