// Finite Kripke models, frame classes and model generators.
#pragma once

#include <boost/dynamic_bitset.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mucalc {

using StateSet = boost::dynamic_bitset<>;

class KripkeModel {
 public:
  KripkeModel() = default;
  explicit KripkeModel(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) add_state("s" + std::to_string(i));
  }
  explicit KripkeModel(std::vector<std::string> names) {
    for (auto& s : names) add_state(std::move(s));
  }

  std::size_t add_state(std::string name) {
    if (index_.count(name)) throw std::invalid_argument("duplicate state \"" + name + "\"");
    std::size_t i = names_.size();
    index_.emplace(name, i);
    names_.push_back(std::move(name));
    for (auto& row : succ_) row.resize(names_.size());
    succ_.emplace_back(names_.size());
    for (auto& [_, v] : val_) v.resize(names_.size());
    return i;
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> index_of(const std::string& n) const {
    auto it = index_.find(n);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void add_edge(std::size_t s, std::size_t t) { succ_.at(s).set(t); }
  void remove_edge(std::size_t s, std::size_t t) { succ_.at(s).reset(t); }
  bool has_edge(std::size_t s, std::size_t t) const { return succ_[s].test(t); }
  const StateSet& successors(std::size_t s) const { return succ_[s]; }
  const std::vector<StateSet>& relation() const { return succ_; }
  void set_relation(std::vector<StateSet> r) {
    if (r.size() != size()) throw std::invalid_argument("relation size mismatch");
    for (const auto& row : r)
      if (row.size() != size()) throw std::invalid_argument("relation size mismatch");
    succ_ = std::move(r);
  }
  std::size_t edge_count() const {
    std::size_t c = 0;
    for (const auto& r : succ_) c += r.count();
    return c;
  }

  // V is total: atoms without an entry denote the empty set.
  StateSet valuation(const std::string& atom) const {
    auto it = val_.find(atom);
    return it == val_.end() ? empty_set() : it->second;
  }
  const std::map<std::string, StateSet>& valuation_map() const { return val_; }
  void set_valuation(const std::string& atom, StateSet x) {
    if (x.size() != size()) throw std::invalid_argument("valuation outside the state set");
    val_[atom] = std::move(x);
  }
  void erase_valuation(const std::string& atom) { val_.erase(atom); }

  StateSet empty_set() const { return StateSet(size()); }
  StateSet full_set() const { return ~StateSet(size()); }
  StateSet singleton(std::size_t s) const {
    StateSet x(size());
    x.set(s);
    return x;
  }

  friend bool operator==(const KripkeModel& a, const KripkeModel& b) {
    return a.names_ == b.names_ && a.succ_ == b.succ_ && a.val_ == b.val_;
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
  std::vector<StateSet> succ_;
  std::map<std::string, StateSet> val_;
};

// S[x -> X]
inline KripkeModel update_valuation(const KripkeModel& m, const std::string& x, const StateSet& set) {
  if (set.size() != m.size()) throw std::invalid_argument("update_valuation: set is not a subset of S");
  KripkeModel out = m;
  out.set_valuation(x, set);
  return out;
}

// Diamond and box of a state set: states with some / all successors in X.
inline StateSet pre_exists(const KripkeModel& m, const StateSet& x) {
  StateSet out(m.size());
  for (std::size_t s = 0; s < m.size(); ++s)
    if (m.successors(s).intersects(x)) out.set(s);
  return out;
}

inline StateSet pre_forall(const KripkeModel& m, const StateSet& x) {
  StateSet out(m.size());
  for (std::size_t s = 0; s < m.size(); ++s)
    if (m.successors(s).is_subset_of(x)) out.set(s);
  return out;
}

inline std::string format_set(const KripkeModel& m, const StateSet& x) {
  std::string out = "{";
  bool first = true;
  for (std::size_t s = 0; s < m.size(); ++s)
    if (x.test(s)) {
      if (!first) out += ",";
      out += m.name(s);
      first = false;
    }
  return out + "}";
}

// ---------------------------------------------------------------------------
// Frame classes

enum class FrameClass { K, T, KB, K4, S4, S5 };

inline const char* to_string(FrameClass c) {
  switch (c) {
    case FrameClass::K: return "K";
    case FrameClass::T: return "T";
    case FrameClass::KB: return "KB";
    case FrameClass::K4: return "K4";
    case FrameClass::S4: return "S4";
    case FrameClass::S5: return "S5";
  }
  return "?";
}

inline std::optional<FrameClass> frame_class_from(const std::string& s) {
  for (FrameClass c : {FrameClass::K, FrameClass::T, FrameClass::KB, FrameClass::K4, FrameClass::S4, FrameClass::S5})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

inline bool needs_reflexive(FrameClass c) { return c == FrameClass::T || c == FrameClass::S4 || c == FrameClass::S5; }
inline bool needs_symmetric(FrameClass c) { return c == FrameClass::KB || c == FrameClass::S5; }
inline bool needs_transitive(FrameClass c) { return c == FrameClass::K4 || c == FrameClass::S4 || c == FrameClass::S5; }

struct FrameCheck {
  bool ok = true;
  std::string property;               // "reflexive", "symmetric" or "transitive"
  std::vector<std::size_t> witness;   // (s), (s,t) or (s,t,u)
};

inline FrameCheck check_reflexive(const std::vector<StateSet>& r) {
  for (std::size_t s = 0; s < r.size(); ++s)
    if (!r[s].test(s)) return {false, "reflexive", {s}};
  return {};
}

inline FrameCheck check_symmetric(const std::vector<StateSet>& r) {
  for (std::size_t s = 0; s < r.size(); ++s)
    for (std::size_t t = 0; t < r.size(); ++t)
      if (r[s].test(t) && !r[t].test(s)) return {false, "symmetric", {s, t}};
  return {};
}

inline FrameCheck check_transitive(const std::vector<StateSet>& r) {
  for (std::size_t s = 0; s < r.size(); ++s)
    for (std::size_t t = r[s].find_first(); t != StateSet::npos; t = r[s].find_next(t))
      if (!r[t].is_subset_of(r[s])) {
        StateSet missing = r[t] - r[s];
        return {false, "transitive", {s, t, missing.find_first()}};
      }
  return {};
}

inline FrameCheck frame_class_check(const std::vector<StateSet>& r, FrameClass c) {
  if (needs_reflexive(c))
    if (auto f = check_reflexive(r); !f.ok) return f;
  if (needs_symmetric(c))
    if (auto f = check_symmetric(r); !f.ok) return f;
  if (needs_transitive(c))
    if (auto f = check_transitive(r); !f.ok) return f;
  return {};
}

inline FrameCheck frame_class_check(const KripkeModel& m, FrameClass c) { return frame_class_check(m.relation(), c); }

// ---------------------------------------------------------------------------
// Relation closures

inline std::vector<StateSet> reflexive_closure(std::vector<StateSet> r) {
  for (std::size_t s = 0; s < r.size(); ++s) r[s].set(s);
  return r;
}

inline std::vector<StateSet> symmetric_closure(std::vector<StateSet> r) {
  auto out = r;
  for (std::size_t s = 0; s < r.size(); ++s)
    for (std::size_t t = r[s].find_first(); t != StateSet::npos; t = r[s].find_next(t)) out[t].set(s);
  return out;
}

inline std::vector<StateSet> transitive_closure(std::vector<StateSet> r) {
  for (std::size_t k = 0; k < r.size(); ++k)
    for (std::size_t s = 0; s < r.size(); ++s)
      if (r[s].test(k)) r[s] |= r[k];
  return r;
}

inline std::vector<StateSet> equivalence_closure(std::vector<StateSet> r) {
  return transitive_closure(symmetric_closure(reflexive_closure(std::move(r))));
}

inline bool relation_subset(const std::vector<StateSet>& a, const std::vector<StateSet>& b) {
  for (std::size_t s = 0; s < a.size(); ++s)
    if (!a[s].is_subset_of(b[s])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Enumeration

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Number of relations on n labelled states in the class.
inline long double class_relation_count(FrameClass c, std::size_t n) {
  static const std::array<long double, 7> k4 = {1, 2, 13, 171, 3994, 154303, 9415189};
  static const std::array<long double, 7> s4 = {1, 1, 4, 29, 355, 6942, 209527};
  static const std::array<long double, 11> bell = {1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975};
  auto nn = static_cast<long double>(n);
  switch (c) {
    case FrameClass::K: return std::pow(2.0L, nn * nn);
    case FrameClass::T: return std::pow(2.0L, nn * nn - nn);
    case FrameClass::KB: return std::pow(2.0L, nn * (nn + 1) / 2);
    case FrameClass::K4:
      if (n < k4.size()) return k4[n];
      break;
    case FrameClass::S4:
      if (n < s4.size()) return s4[n];
      break;
    case FrameClass::S5:
      if (n < bell.size()) return bell[n];
      break;
  }
  throw BudgetExceeded("no relation count for class " + std::string(to_string(c)) + " at " + std::to_string(n) +
                       " states");
}

struct EnumerationStats {
  std::uint64_t emitted = 0;
  bool complete = true;
};

// Work estimate: relation candidates scanned plus models emitted.
inline long double enumeration_cost(std::size_t max_states, std::size_t atoms, FrameClass c) {
  long double cost = 0;
  for (std::size_t n = 1; n <= max_states; ++n) {
    auto nn = static_cast<long double>(n);
    cost += std::pow(2.0L, nn * nn) + class_relation_count(c, n) * std::pow(2.0L, nn * atoms);
  }
  return cost;
}

inline constexpr std::uint64_t kDefaultEnumerationBudget = 50'000'000;

// Streams every model with 1..max_states states in the class, ordered by
// state count, then relation bitmap (bit s*n+t), then valuation bitmap
// (bit k*n+s for the k-th atom). The callback returns false to stop early.
inline EnumerationStats enumerate_models(std::size_t max_states, const std::vector<std::string>& atoms, FrameClass c,
                                         const std::function<bool(const KripkeModel&)>& fn,
                                         std::uint64_t budget = kDefaultEnumerationBudget) {
  if (max_states > 5 || enumeration_cost(max_states, atoms.size(), c) > static_cast<long double>(budget))
    throw BudgetExceeded("enumeration of " + std::to_string(max_states) + " states over " +
                         std::to_string(atoms.size()) + " atoms exceeds the budget of " + std::to_string(budget));
  EnumerationStats st;
  for (std::size_t n = 1; n <= max_states; ++n) {
    const std::size_t rbits = n * n;
    const std::size_t vbits = n * atoms.size();
    for (std::uint64_t rel = 0; rel < (std::uint64_t{1} << rbits); ++rel) {
      std::vector<StateSet> r(n, StateSet(n));
      for (std::size_t b = 0; b < rbits; ++b)
        if (rel >> b & 1) r[b / n].set(b % n);
      if (!frame_class_check(r, c).ok) continue;
      KripkeModel m(n);
      m.set_relation(r);
      for (std::uint64_t val = 0; val < (std::uint64_t{1} << vbits); ++val) {
        for (std::size_t k = 0; k < atoms.size(); ++k) {
          StateSet x(n);
          for (std::size_t s = 0; s < n; ++s)
            if (val >> (k * n + s) & 1) x.set(s);
          m.set_valuation(atoms[k], x);
        }
        ++st.emitted;
        if (!fn(m)) {
          st.complete = false;
          return st;
        }
      }
    }
  }
  return st;
}

// ---------------------------------------------------------------------------
// Random models

// Deterministic seed mixing (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  auto sm = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  };
  return sm(sm(sm(a) ^ b) ^ c);
}

using Rng = std::mt19937_64;

inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

inline bool coin(Rng& rng) { return rng() >> 63; }

namespace detail {
inline std::vector<StateSet> random_partition_relation(Rng& rng, std::size_t n) {
  // completions[m][k]: set partitions of m further elements given k open blocks.
  std::vector<std::vector<long double>> comp(n + 1, std::vector<long double>(n + 2, 1));
  for (std::size_t m = 1; m <= n; ++m)
    for (std::size_t k = 0; k + 1 < n + 2; ++k) comp[m][k] = comp[m - 1][k] * k + comp[m - 1][k + 1];
  std::vector<std::size_t> block(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rest = n - i - 1;
    long double total = comp[rest + 1][k];
    long double u = std::uniform_real_distribution<long double>(0, total)(rng);
    long double acc = 0;
    std::size_t choice = k;
    for (std::size_t b = 0; b < k; ++b) {
      acc += comp[rest][k];
      if (u < acc) {
        choice = b;
        break;
      }
    }
    block[i] = choice;
    if (choice == k) ++k;
  }
  std::vector<StateSet> r(n, StateSet(n));
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t)
      if (block[s] == block[t]) r[s].set(t);
  return r;
}
}  // namespace detail

// Uniform sample of a relation in the class on n states. K4 and S4 use
// rejection sampling and are limited to 6 states.
inline std::vector<StateSet> random_relation(Rng& rng, std::size_t n, FrameClass c) {
  if (c == FrameClass::S5) return detail::random_partition_relation(rng, n);
  if ((c == FrameClass::K4 || c == FrameClass::S4) && n > 6)
    throw BudgetExceeded("random transitive relations are limited to 6 states");
  for (;;) {
    std::vector<StateSet> r(n, StateSet(n));
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = 0; t < n; ++t) {
        if (s == t && needs_reflexive(c)) {
          r[s].set(t);
        } else if (t < s && needs_symmetric(c)) {
          if (r[t].test(s)) r[s].set(t);
        } else if (coin(rng)) {
          r[s].set(t);
        }
      }
    if (frame_class_check(r, c).ok) return r;
  }
}

// Uniform sample from all models with 1..max_states states in the class.
inline KripkeModel random_model(Rng& rng, std::size_t max_states, const std::vector<std::string>& atoms, FrameClass c,
                                std::size_t min_states = 1) {
  std::vector<long double> weights;
  for (std::size_t n = min_states; n <= max_states; ++n)
    weights.push_back(class_relation_count(c, n) * std::pow(2.0L, static_cast<long double>(n * atoms.size())));
  long double total = 0;
  for (auto w : weights) total += w;
  long double u = std::uniform_real_distribution<long double>(0, total)(rng);
  std::size_t n = max_states;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) {
      n = min_states + i;
      break;
    }
    u -= weights[i];
  }
  KripkeModel m(n);
  m.set_relation(random_relation(rng, n, c));
  for (const auto& a : atoms) {
    StateSet x(n);
    for (std::size_t s = 0; s < n; ++s)
      if (coin(rng)) x.set(s);
    m.set_valuation(a, x);
  }
  return m;
}

inline KripkeModel random_model(std::uint64_t seed, std::size_t max_states, const std::vector<std::string>& atoms,
                                FrameClass c) {
  Rng rng(seed);
  return random_model(rng, max_states, atoms, c);
}

}  // namespace mucalc
