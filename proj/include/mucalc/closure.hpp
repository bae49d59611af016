// Fischer-Ladner closure, subformula indexing, dependency order and
// expansions of subformulas of clean formulas.
#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mucalc/formula.hpp"

namespace mucalc {

// A finite set of formulas identified up to renaming of bound variables.
// Members are stored as clean representatives in discovery order.
class ClosureSet {
 public:
  bool insert(const Formula& f) {
    Formula rep = clean(f);
    auto [it, added] = index_.emplace(alpha_key(rep), members_.size());
    if (added) members_.push_back(rep);
    return added;
  }
  std::optional<std::size_t> find(const Formula& f) const {
    auto it = index_.find(alpha_key(f));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(const Formula& f) const { return find(f).has_value(); }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const Formula& operator[](std::size_t i) const { return members_[i]; }
  const std::vector<Formula>& members() const { return members_; }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

  bool neg_closed = false;
  // Renamings applied to non-tidy inputs on ingestion.
  std::vector<Renaming> renamings;

 private:
  std::vector<Formula> members_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Immediate consequences of one member under the four closure rules.
inline std::vector<Formula> closure_successors(const Formula& f) {
  switch (f.kind()) {
    case Kind::NegAtom:
      return {Formula::atom(f.name())};
    case Kind::Or:
    case Kind::And:
      return {f.left(), f.right()};
    case Kind::Diamond:
    case Kind::Box:
      return {f.body()};
    case Kind::Mu:
    case Kind::Nu:
      return {unfold(f)};
    default:
      return {};
  }
}

inline ClosureSet fl_closure(const std::vector<Formula>& phis, bool with_negations = false) {
  ClosureSet cl;
  cl.neg_closed = with_negations;
  std::vector<Formula> work;
  for (const auto& phi : phis) {
    Formula f = phi;
    if (!is_tidy(f)) {
      auto res = make_clean(f);
      cl.renamings.insert(cl.renamings.end(), res.renamings.begin(), res.renamings.end());
      f = res.formula;
    }
    if (cl.insert(f)) work.push_back(f);
  }
  for (std::size_t i = 0; i < work.size(); ++i) {
    Formula f = work[i];
    std::vector<Formula> next = closure_successors(f);
    if (with_negations) next.push_back(negate(f));
    for (const auto& g : next)
      if (cl.insert(g)) work.push_back(cl[cl.size() - 1]);
  }
  return cl;
}

inline ClosureSet fl_closure(const Formula& phi, bool with_negations = false) {
  return fl_closure(std::vector<Formula>{phi}, with_negations);
}

// True when applying the closure rules (and negation, if flagged) to every
// member yields nothing new.
inline bool is_closed(const ClosureSet& cl) {
  for (const auto& f : cl) {
    for (const auto& g : closure_successors(f))
      if (!cl.contains(g)) return false;
    if (cl.neg_closed && !cl.contains(negate(f))) return false;
  }
  return true;
}

// Subformulas of a fixed clean formula together with the binder table and
// the dependency order on its bound variables.
class SubformulaIndex {
 public:
  struct Var {
    std::string name;
    bool is_mu = false;
    std::size_t binder = 0;  // node id of eta x.delta_x
    std::size_t delta = 0;   // node id of delta_x
    std::size_t rank = 0;    // 1-based position in the enumeration
  };

  explicit SubformulaIndex(const Formula& xi) : xi_(xi) {
    if (!is_clean(xi)) throw std::invalid_argument("subformula index requires a clean formula");
    add(xi);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Formula& f = nodes_[i];
      if (f.is_fixpoint()) {
        Var v;
        v.name = f.name();
        v.is_mu = f.kind() == Kind::Mu;
        v.binder = i;
        v.delta = *id(f.body());
        var_index_[v.name] = vars_.size();
        vars_.push_back(v);
      }
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Formula& f = nodes_[i];
      bool free = true;
      for (const auto& n : f.free_names())
        if (var_index_.count(n)) free = false;
      free_.push_back(free);
      is_var_.push_back(f.kind() == Kind::Atom && var_index_.count(f.name()) > 0);
    }
    compute_order();
  }

  const Formula& formula() const { return xi_; }
  std::size_t size() const { return nodes_.size(); }
  const Formula& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<Formula>& nodes() const { return nodes_; }
  const std::vector<std::size_t>& children(std::size_t i) const { return kids_[i]; }
  std::optional<std::size_t> id(const Formula& f) const {
    auto it = ids_.find(f);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t root() const { return 0; }

  // phi is a free subformula: no bound variable of xi occurs free in phi.
  bool is_free_subformula(std::size_t i) const { return free_[i]; }
  bool is_bound_var(std::size_t i) const { return is_var_[i]; }
  const Var& var(const std::string& name) const { return vars_.at(var_index_.at(name)); }
  const Var* find_var(const std::string& name) const {
    auto it = var_index_.find(name);
    return it == var_index_.end() ? nullptr : &vars_[it->second];
  }
  // Bound variables in binder preorder.
  const std::vector<Var>& vars() const { return vars_; }
  // x <_xi y
  bool less(const std::string& x, const std::string& y) const {
    return order_[var_index_.at(x)][var_index_.at(y)];
  }
  // The fixed enumeration x_1..x_n respecting the dependency order.
  const std::vector<std::string>& enumeration() const { return enumeration_; }

 private:
  std::size_t add(const Formula& f) {
    if (auto it = ids_.find(f); it != ids_.end()) return it->second;
    std::size_t me = nodes_.size();
    ids_.emplace(f, me);
    nodes_.push_back(f);
    kids_.emplace_back();
    std::vector<std::size_t> ks;
    switch (f.kind()) {
      case Kind::Or:
      case Kind::And:
        ks.push_back(add(f.left()));
        ks.push_back(add(f.right()));
        break;
      case Kind::Diamond:
      case Kind::Box:
      case Kind::Mu:
      case Kind::Nu:
        ks.push_back(add(f.body()));
        break;
      default:
        break;
    }
    kids_[me] = ks;
    return me;
  }

  // Proper subformula test on node ids.
  bool proper_sub(std::size_t a, std::size_t b) const {
    std::vector<std::size_t> stack = kids_[b];
    std::vector<bool> seen(nodes_.size(), false);
    while (!stack.empty()) {
      std::size_t c = stack.back();
      stack.pop_back();
      if (c == a) return true;
      if (seen[c]) continue;
      seen[c] = true;
      stack.insert(stack.end(), kids_[c].begin(), kids_[c].end());
    }
    return false;
  }

  void compute_order() {
    std::size_t n = vars_.size();
    order_.assign(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        const Var& x = vars_[a];
        const Var& y = vars_[b];
        if (proper_sub(x.delta, y.delta) && all_names(nodes_[x.delta]).count(y.name)) order_[a][b] = true;
      }
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t a = 0; a < n; ++a)
        if (order_[a][k])
          for (std::size_t b = 0; b < n; ++b)
            if (order_[k][b]) order_[a][b] = true;
    // Topological sort; among available variables the leftmost binder wins.
    std::vector<bool> placed(n, false);
    for (std::size_t step = 0; step < n; ++step) {
      for (std::size_t a = 0; a < n; ++a) {
        if (placed[a]) continue;
        bool ready = true;
        for (std::size_t b = 0; b < n; ++b)
          if (!placed[b] && order_[b][a]) ready = false;
        if (ready) {
          placed[a] = true;
          vars_[a].rank = enumeration_.size() + 1;
          enumeration_.push_back(vars_[a].name);
          break;
        }
      }
    }
  }

  Formula xi_;
  std::vector<Formula> nodes_;
  std::vector<std::vector<std::size_t>> kids_;
  std::unordered_map<Formula, std::size_t, FormulaHash> ids_;
  std::vector<Var> vars_;
  std::map<std::string, std::size_t> var_index_;
  std::vector<bool> free_;
  std::vector<bool> is_var_;
  std::vector<std::vector<bool>> order_;
  std::vector<std::string> enumeration_;
};

// exp_xi(phi) = phi[eta x_1 delta_1/x_1]...[eta x_n delta_n/x_n].
inline Formula expansion(const SubformulaIndex& idx, const Formula& phi) {
  if (!idx.id(phi)) throw std::invalid_argument("expansion: not a subformula of the reference formula");
  Formula out = phi;
  for (const auto& x : idx.enumeration()) out = substitute(out, x, idx.node(idx.var(x).binder));
  return out;
}

inline Formula expansion(const Formula& xi, const Formula& phi) { return expansion(SubformulaIndex(xi), phi); }

struct ClosureIdentityReport {
  bool equal = true;
  std::size_t closure_size = 0;
  std::size_t expansion_count = 0;
  std::vector<Formula> only_in_closure;
  std::vector<Formula> only_in_expansions;
};

// Compares Cl(xi) with {exp_xi(phi) : phi subformula of xi} up to renaming.
// The closure rule taking !p to p adds positive atoms that need not be
// subformulas, so the expansion side is extended with p for every !p in it.
inline ClosureIdentityReport closure_identity_check(const Formula& xi) {
  SubformulaIndex idx(xi);
  ClosureSet cl = fl_closure(xi);
  ClosureSet ex;
  for (const auto& phi : idx.nodes()) {
    Formula e = expansion(idx, phi);
    ex.insert(e);
    if (e.kind() == Kind::NegAtom) ex.insert(Formula::atom(e.name()));
  }
  ClosureIdentityReport rep;
  rep.closure_size = cl.size();
  rep.expansion_count = ex.size();
  for (const auto& f : cl)
    if (!ex.contains(f)) rep.only_in_closure.push_back(f);
  for (const auto& f : ex)
    if (!cl.contains(f)) rep.only_in_expansions.push_back(f);
  rep.equal = rep.only_in_closure.empty() && rep.only_in_expansions.empty();
  return rep;
}

}  // namespace mucalc
