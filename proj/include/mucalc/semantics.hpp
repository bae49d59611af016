// Algebraic meaning of formulas on finite models.
#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mucalc/formula.hpp"
#include "mucalc/kripke.hpp"

namespace mucalc {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalStats {
  // Largest number of body evaluations spent by a single fixpoint iteration.
  std::size_t max_rounds = 0;
  std::size_t fixpoints = 0;
};

namespace detail {

class Evaluator {
 public:
  Evaluator(const KripkeModel& m, EvalStats* stats) : m_(m), stats_(stats) {}

  StateSet eval(const Formula& f) {
    switch (f.kind()) {
      case Kind::Atom:
        return lookup(f.name());
      case Kind::NegAtom:
        if (env_.count(f.name()) && !env_[f.name()].empty())
          throw EvalError("bound variable " + f.name() + " occurs negated");
        return ~lookup(f.name());
      case Kind::Top:
        return m_.full_set();
      case Kind::Bottom:
        return m_.empty_set();
      case Kind::Or:
        return eval(f.left()) | eval(f.right());
      case Kind::And:
        return eval(f.left()) & eval(f.right());
      case Kind::Diamond:
        return pre_exists(m_, eval(f.body()));
      case Kind::Box:
        return pre_forall(m_, eval(f.body()));
      case Kind::Mu:
      case Kind::Nu: {
        // Kleene iteration from the bottom (mu) or top (nu) of the lattice.
        StateSet x = f.kind() == Kind::Mu ? m_.empty_set() : m_.full_set();
        auto& slot = env_[f.name()];
        slot.push_back(x);
        std::size_t rounds = 0;
        for (;;) {
          StateSet next = eval(f.body());
          ++rounds;
          if (next == env_[f.name()].back()) break;
          env_[f.name()].back() = next;
        }
        x = env_[f.name()].back();
        env_[f.name()].pop_back();
        if (stats_) {
          stats_->max_rounds = std::max(stats_->max_rounds, rounds);
          ++stats_->fixpoints;
        }
        return x;
      }
    }
    return m_.empty_set();
  }

 private:
  StateSet lookup(const std::string& n) {
    auto it = env_.find(n);
    if (it != env_.end() && !it->second.empty()) return it->second.back();
    return m_.valuation(n);
  }

  const KripkeModel& m_;
  EvalStats* stats_;
  std::map<std::string, std::vector<StateSet>> env_;
};

}  // namespace detail

// [[phi]] in the model. Fixpoints are computed by Kleene iteration, which on
// a finite powerset lattice reaches the least/greatest fixpoint in at most
// |S|+1 rounds.
inline StateSet eval_algebraic(const Formula& f, const KripkeModel& m, EvalStats* stats = nullptr) {
  return detail::Evaluator(m, stats).eval(f);
}

inline bool satisfies(const KripkeModel& m, std::size_t s, const Formula& f) { return eval_algebraic(f, m).test(s); }

inline bool valid_in(const KripkeModel& m, const Formula& f) { return eval_algebraic(f, m).all(); }

}  // namespace mucalc
