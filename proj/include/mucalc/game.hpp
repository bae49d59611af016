// Evaluation games, a recursive parity game solver and the cross-check
// against the algebraic semantics.
//
// Infinite plays are decided by max-parity: position (x_i, s) has priority
// 2i for a nu-variable and 2i+1 for a mu-variable. On alternation-free
// formulas every variable unfolded infinitely often in a play has the same
// fixpoint type, so the parity of the largest recurring priority is that type.
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mucalc/closure.hpp"
#include "mucalc/formula.hpp"
#include "mucalc/kripke.hpp"
#include "mucalc/semantics.hpp"

namespace mucalc {

enum class Player : std::uint8_t { Exists = 0, Forall = 1 };

inline Player opponent(Player p) { return p == Player::Exists ? Player::Forall : Player::Exists; }

// A finite game graph with owners and max-parity priorities; player Exists
// wins an infinite play when the largest priority seen infinitely often is
// even. A player with no move at an owned position loses.
struct ParityGame {
  std::vector<Player> owner;
  std::vector<std::vector<std::size_t>> moves;
  std::vector<unsigned> priority;

  std::size_t size() const { return owner.size(); }
  std::size_t add(Player o, unsigned pr) {
    owner.push_back(o);
    moves.emplace_back();
    priority.push_back(pr);
    return owner.size() - 1;
  }
};

struct WinningRegions {
  std::vector<bool> exists_wins;  // per position
  // Positional strategy: chosen move for positions owned by the region's
  // winner; npos where the owner loses or has no choice to make.
  std::vector<std::size_t> strategy;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Player winner(std::size_t v) const { return exists_wins[v] ? Player::Exists : Player::Forall; }
};

namespace detail {

class Zielonka {
 public:
  explicit Zielonka(const ParityGame& g) : g_(g), pred_(g.size()), strat_(g.size(), WinningRegions::npos) {
    for (std::size_t v = 0; v < g.size(); ++v)
      for (std::size_t w : g.moves[v]) pred_[w].push_back(v);
  }

  WinningRegions run() {
    std::vector<bool> all(g_.size(), true);
    auto [w0, w1] = solve(all);
    WinningRegions res;
    res.exists_wins = w0;
    res.strategy = strat_;
    for (std::size_t v = 0; v < g_.size(); ++v)
      if ((g_.owner[v] == Player::Exists) != static_cast<bool>(w0[v])) res.strategy[v] = WinningRegions::npos;
    return res;
  }

 private:
  using Set = std::vector<bool>;

  static bool empty(const Set& s) { return std::find(s.begin(), s.end(), true) == s.end(); }

  // Attractor of `target` for player p inside `arena`; records attractor moves.
  Set attractor(const Set& arena, const Set& target, Player p) {
    Set attr = target;
    std::vector<std::size_t> count(g_.size(), 0);
    std::vector<std::size_t> queue;
    for (std::size_t v = 0; v < g_.size(); ++v) {
      if (!arena[v]) continue;
      for (std::size_t w : g_.moves[v])
        if (arena[w]) ++count[v];
      if (target[v]) queue.push_back(v);
    }
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      std::size_t w = queue[qi];
      for (std::size_t v : pred_[w]) {
        if (!arena[v] || attr[v]) continue;
        if (g_.owner[v] == p) {
          attr[v] = true;
          strat_[v] = w;
          queue.push_back(v);
        } else if (--count[v] == 0) {
          attr[v] = true;
          queue.push_back(v);
        }
      }
    }
    return attr;
  }

  static Set minus(const Set& a, const Set& b) {
    Set out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && !b[i];
    return out;
  }

  std::pair<Set, Set> solve(const Set& arena) {
    Set w0(g_.size(), false), w1(g_.size(), false);
    if (empty(arena)) return {w0, w1};
    unsigned d = 0;
    for (std::size_t v = 0; v < g_.size(); ++v)
      if (arena[v]) d = std::max(d, g_.priority[v]);
    Player p = d % 2 == 0 ? Player::Exists : Player::Forall;
    Set top(g_.size(), false);
    for (std::size_t v = 0; v < g_.size(); ++v)
      if (arena[v] && g_.priority[v] == d) top[v] = true;
    Set a = attractor(arena, top, p);
    auto [s0, s1] = solve(minus(arena, a));
    Set& opp_sub = p == Player::Exists ? s1 : s0;
    if (empty(opp_sub)) {
      // p wins everywhere; on top positions p may move anywhere inside.
      for (std::size_t v = 0; v < g_.size(); ++v)
        if (top[v] && g_.owner[v] == p)
          for (std::size_t w : g_.moves[v])
            if (arena[w]) {
              strat_[v] = w;
              break;
            }
      (p == Player::Exists ? w0 : w1) = arena;
      return {w0, w1};
    }
    Set b = attractor(arena, opp_sub, opponent(p));
    auto [t0, t1] = solve(minus(arena, b));
    if (p == Player::Exists) {
      w0 = t0;
      for (std::size_t v = 0; v < g_.size(); ++v) w1[v] = t1[v] || b[v];
    } else {
      w1 = t1;
      for (std::size_t v = 0; v < g_.size(); ++v) w0[v] = t0[v] || b[v];
    }
    return {w0, w1};
  }

  const ParityGame& g_;
  std::vector<std::vector<std::size_t>> pred_;
  std::vector<std::size_t> strat_;
};

}  // namespace detail

// Solves a parity game where a stuck player loses. Dead ends are first
// turned into self-loops whose fresh top priority favours the opponent.
inline WinningRegions solve_parity_game(const ParityGame& game) {
  ParityGame g = game;
  unsigned maxp = 0;
  for (unsigned p : g.priority) maxp = std::max(maxp, p);
  unsigned even = maxp % 2 == 0 ? maxp + 2 : maxp + 1;
  unsigned odd = maxp % 2 == 1 ? maxp + 2 : maxp + 1;
  std::vector<bool> dead(g.size(), false);
  for (std::size_t v = 0; v < g.size(); ++v)
    if (g.moves[v].empty()) {
      dead[v] = true;
      g.moves[v].push_back(v);
      g.priority[v] = g.owner[v] == Player::Exists ? odd : even;
    }
  WinningRegions res = detail::Zielonka(g).run();
  for (std::size_t v = 0; v < g.size(); ++v)
    if (dead[v]) res.strategy[v] = WinningRegions::npos;
  return res;
}

// Checks that each player's strategy stays in its own winning region and
// that the opponent cannot leave it either.
inline bool strategies_closed(const ParityGame& g, const WinningRegions& w) {
  for (std::size_t v = 0; v < g.size(); ++v) {
    bool e = w.exists_wins[v];
    bool owner_wins = (g.owner[v] == Player::Exists) == e;
    if (owner_wins) {
      if (g.moves[v].empty()) continue;
      std::size_t m = w.strategy[v];
      if (m == WinningRegions::npos) return false;
      if (std::find(g.moves[v].begin(), g.moves[v].end(), m) == g.moves[v].end()) return false;
      if (w.exists_wins[m] != e) return false;
    } else {
      for (std::size_t m : g.moves[v])
        if (w.exists_wins[m] != e) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Evaluation game

struct GameArena {
  SubformulaIndex index;
  std::size_t states = 0;
  ParityGame game;

  std::size_t position(std::size_t node, std::size_t s) const { return node * states + s; }
  std::size_t node_of(std::size_t pos) const { return pos / states; }
  std::size_t state_of(std::size_t pos) const { return pos % states; }
};

inline GameArena build_arena(const Formula& xi, const KripkeModel& m) {
  GameArena a{SubformulaIndex(xi), m.size(), {}};
  const auto& idx = a.index;
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Formula& f = idx.node(i);
    for (std::size_t s = 0; s < n; ++s) {
      Player owner = Player::Exists;
      unsigned pr = 0;
      std::vector<std::size_t> mv;
      switch (f.kind()) {
        case Kind::Or:
        case Kind::And:
          owner = f.kind() == Kind::Or ? Player::Exists : Player::Forall;
          for (std::size_t c : idx.children(i)) mv.push_back(a.position(c, s));
          break;
        case Kind::Diamond:
        case Kind::Box: {
          owner = f.kind() == Kind::Diamond ? Player::Exists : Player::Forall;
          const StateSet& succ = m.successors(s);
          for (std::size_t t = succ.find_first(); t != StateSet::npos; t = succ.find_next(t))
            mv.push_back(a.position(idx.children(i)[0], t));
          break;
        }
        case Kind::Mu:
        case Kind::Nu:
          mv.push_back(a.position(idx.children(i)[0], s));
          break;
        case Kind::Atom:
          if (const auto* v = idx.find_var(f.name())) {
            mv.push_back(a.position(v->delta, s));
            pr = static_cast<unsigned>(2 * v->rank + (v->is_mu ? 1 : 0));
          } else {
            owner = m.valuation(f.name()).test(s) ? Player::Forall : Player::Exists;
          }
          break;
        case Kind::NegAtom:
          if (idx.find_var(f.name())) throw std::invalid_argument("bound variable " + f.name() + " occurs negated");
          owner = m.valuation(f.name()).test(s) ? Player::Exists : Player::Forall;
          break;
        case Kind::Top:
          owner = Player::Forall;
          break;
        case Kind::Bottom:
          owner = Player::Exists;
          break;
      }
      a.game.add(owner, pr);
      a.game.moves.back() = std::move(mv);
    }
  }
  return a;
}

struct ArenaSolution {
  GameArena arena;
  WinningRegions regions;

  bool exists_wins(std::size_t node, std::size_t s) const { return regions.exists_wins[arena.position(node, s)]; }
};

inline ArenaSolution solve_arena(GameArena a) {
  WinningRegions w = solve_parity_game(a.game);
  return {std::move(a), std::move(w)};
}

// [[phi]] via the evaluation game of phi itself (phi is cleaned first).
inline StateSet eval_game(const Formula& phi, const KripkeModel& m) {
  ArenaSolution sol = solve_arena(build_arena(clean(phi), m));
  StateSet out = m.empty_set();
  for (std::size_t s = 0; s < m.size(); ++s)
    if (sol.exists_wins(sol.arena.index.root(), s)) out.set(s);
  return out;
}

struct Mismatch {
  Formula subformula;
  std::size_t state = 0;
  bool game = false;
  bool algebraic = false;
};

struct EquivReport {
  std::size_t positions = 0;
  std::vector<Mismatch> mismatches;
  bool ok() const { return mismatches.empty(); }
};

// Compares the winner of every position (phi, s) with s |= exp_xi(phi).
inline EquivReport model_check_equiv(const Formula& xi, const KripkeModel& m) {
  ArenaSolution sol = solve_arena(build_arena(xi, m));
  const auto& idx = sol.arena.index;
  EquivReport rep;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    StateSet alg = eval_algebraic(expansion(idx, idx.node(i)), m);
    for (std::size_t s = 0; s < m.size(); ++s) {
      ++rep.positions;
      bool g = sol.exists_wins(i, s);
      if (g != alg.test(s)) rep.mismatches.push_back({idx.node(i), s, g, alg.test(s)});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Trace properties on the state-free projection of the arena

struct TraceViolation {
  int property = 0;  // 1, 2 or 3
  std::vector<Formula> path;
};

struct TraceReport {
  std::vector<TraceViolation> violations;
  bool holds(int property) const {
    return std::none_of(violations.begin(), violations.end(),
                        [&](const TraceViolation& v) { return v.property == property; });
  }
  bool ok() const { return violations.empty(); }
};

inline TraceReport trace_property_check(const Formula& xi) {
  SubformulaIndex idx(xi);
  const std::size_t n = idx.size();
  std::vector<std::vector<std::size_t>> succ(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (const auto* v = idx.is_bound_var(i) ? idx.find_var(idx.node(i).name()) : nullptr)
      succ[i].push_back(v->delta);
    else
      succ[i] = idx.children(i);
  }
  TraceReport rep;

  // (1) no cycle unfolds both a mu- and a nu-variable.
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> stack = succ[i];
    while (!stack.empty()) {
      std::size_t c = stack.back();
      stack.pop_back();
      if (reach[i][c]) continue;
      reach[i][c] = true;
      stack.insert(stack.end(), succ[c].begin(), succ[c].end());
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (!idx.is_bound_var(a) || !reach[a][a]) continue;
    for (std::size_t b = 0; b < n; ++b) {
      if (!idx.is_bound_var(b) || !reach[a][b] || !reach[b][a]) continue;
      if (idx.find_var(idx.node(a).name())->is_mu && !idx.find_var(idx.node(b).name())->is_mu)
        rep.violations.push_back({1, {idx.node(a), idx.node(b)}});
    }
  }

  // (2)/(3): from a binder, every path to a binder of the dual type (or,
  // starting from mu, to a box) passes a free subformula.
  for (std::size_t b = 0; b < n; ++b) {
    const Formula& start = idx.node(b);
    if (!start.is_fixpoint()) continue;
    Kind dual_binder = dual(start.kind());
    std::vector<std::size_t> parent(n, n + 1);
    std::vector<std::size_t> queue;
    for (std::size_t c : succ[b])
      if (parent[c] == n + 1) {
        parent[c] = b;
        queue.push_back(c);
      }
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      std::size_t c = queue[qi];
      if (idx.is_free_subformula(c)) continue;
      const Formula& f = idx.node(c);
      int prop = f.kind() == dual_binder ? 2 : (start.kind() == Kind::Mu && f.kind() == Kind::Box ? 3 : 0);
      if (prop) {
        TraceViolation v{prop, {}};
        for (std::size_t p = c; p != b; p = parent[p]) v.path.push_back(idx.node(p));
        v.path.push_back(start);
        std::reverse(v.path.begin(), v.path.end());
        rep.violations.push_back(std::move(v));
        continue;
      }
      for (std::size_t d : succ[c])
        if (parent[d] == n + 1 && d != b) {
          parent[d] = c;
          queue.push_back(d);
        }
    }
  }
  return rep;
}

}  // namespace mucalc
