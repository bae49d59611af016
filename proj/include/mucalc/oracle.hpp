// Bounded satisfiability oracle over a frame class.
//
// Phases, in order:
//   1. refuter: tableau with literal and complement clashes, disjunction
//      branching, fixpoint unfolding to a fixed depth and a one-step modal
//      rule (with the T, 4 and 5 variants for the matching classes);
//   2. elimination: Hintikka types over the negation-closed closure with
//      class-specific accessibility, removing types whose diamonds have no
//      surviving successor or whose least fixpoints are unfulfilled;
//   3. enumeration of every model of the class up to max_states;
//   4. exhaustive certification when max_states reaches 2^|Cl(phi)|.
// UNSAT verdicts come only from 1, 2 and 4. SAT verdicts always carry a
// witness that has been replayed through the model checker.
#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mucalc/closure.hpp"
#include "mucalc/formula.hpp"
#include "mucalc/hash.hpp"
#include "mucalc/kripke.hpp"
#include "mucalc/semantics.hpp"
#include "mucalc/text_io.hpp"

namespace mucalc {

enum class Verdict { Sat, Unsat, Unknown };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Sat: return "SAT";
    case Verdict::Unsat: return "UNSAT_CERTIFIED";
    case Verdict::Unknown: return "UNKNOWN";
  }
  return "?";
}

struct OracleVerdict {
  Verdict kind = Verdict::Unknown;
  // UNSAT: refuter | elimination | exhaustive. SAT: elimination | enumeration.
  // UNKNOWN: the phase whose budget ran out, or "bounds".
  std::string method;
  std::optional<KripkeModel> witness;
  std::size_t state = 0;

  bool decisive() const { return kind != Verdict::Unknown; }
  bool sat() const { return kind == Verdict::Sat; }
  bool unsat() const { return kind == Verdict::Unsat; }
};

inline bool replays(const OracleVerdict& v, const Formula& phi) {
  if (!v.sat()) return true;
  return v.witness && v.state < v.witness->size() && eval_algebraic(phi, *v.witness).test(v.state);
}

struct SatConfig {
  std::size_t max_states = 3;
  std::size_t depth = 2;  // fixpoint unfoldings per formula per world
  std::size_t modal_depth = 8;
  std::size_t refuter_budget = 200000;
  std::size_t type_budget = 1u << 16;
  long double enumeration_budget = kDefaultEnumerationBudget;
  bool elimination = true;

  std::string key() const {
    return std::to_string(max_states) + "/" + std::to_string(depth) + "/" + std::to_string(modal_depth) + "/" +
           std::to_string(refuter_budget) + "/" + std::to_string(type_budget) + "/" + (elimination ? "e" : "-");
  }
};

// ---------------------------------------------------------------------------
// Phase 1

class Refuter {
 public:
  Refuter(FrameClass cls, const SatConfig& cfg) : cls_(cls), cfg_(cfg) {}

  bool refute(const Formula& phi) { return world({phi}, cfg_.modal_depth); }
  bool exhausted() const { return exhausted_; }
  std::size_t nodes() const { return nodes_; }

 private:
  struct Branch {
    std::map<std::string, Formula> have;  // by alpha key, ordered for determinism
    std::unordered_map<std::string, std::size_t> unfolds;
  };

  bool world(std::vector<Formula> pending, std::size_t modal_left) {
    Branch b;
    return saturate(std::move(pending), std::move(b), modal_left);
  }

  bool saturate(std::vector<Formula> pending, Branch b, std::size_t modal_left) {
    while (!pending.empty()) {
      Formula f = pending.back();
      pending.pop_back();
      if (++nodes_ > cfg_.refuter_budget) {
        exhausted_ = true;
        return false;
      }
      std::string key = alpha_key(f);
      if (b.have.count(key)) continue;
      if (f.kind() == Kind::Bottom) return true;
      if (f.kind() == Kind::Top) continue;
      if (b.have.count(alpha_key(negate(f)))) return true;
      b.have.emplace(key, f);
      switch (f.kind()) {
        case Kind::And:
          pending.push_back(f.right());
          pending.push_back(f.left());
          break;
        case Kind::Or: {
          auto left = pending, right = pending;
          left.push_back(f.left());
          right.push_back(f.right());
          return saturate(std::move(left), b, modal_left) && saturate(std::move(right), b, modal_left);
        }
        case Kind::Mu:
        case Kind::Nu:
          if (b.unfolds[key]++ < cfg_.depth) pending.push_back(unfold(f));
          break;
        case Kind::Box:
          if (needs_reflexive(cls_)) pending.push_back(f.body());
          break;
        default:
          break;
      }
    }
    if (modal_left == 0) return false;
    std::vector<Formula> carried;
    for (const auto& [_, f] : b.have) {
      if (f.kind() != Kind::Box) continue;
      carried.push_back(f.body());
      if (needs_transitive(cls_)) carried.push_back(f);
    }
    for (const auto& [_, f] : b.have) {
      if (f.kind() != Kind::Diamond) continue;
      std::vector<Formula> succ = carried;
      if (cls_ == FrameClass::S5)
        for (const auto& [__, g] : b.have)
          if (g.kind() == Kind::Diamond) succ.push_back(g);
      succ.push_back(f.body());
      if (world(std::move(succ), modal_left - 1)) return true;
      if (exhausted_) return false;
    }
    return false;
  }

  FrameClass cls_;
  SatConfig cfg_;
  std::size_t nodes_ = 0;
  bool exhausted_ = false;
};

// ---------------------------------------------------------------------------
// Phase 2

class TypeElimination {
 public:
  enum class Outcome { Unsat, Sat, Budget };

  TypeElimination(const Formula& phi, FrameClass cls, std::size_t type_budget)
      : phi_(phi), cls_(cls), budget_(type_budget), cl_(fl_closure(phi, true)) {
    index();
  }

  Outcome run() {
    if (!enumerate_types()) return Outcome::Budget;
    build_relation();
    eliminate();
    root_.reset();
    std::size_t target = *cl_.find(phi_);
    for (std::size_t t = 0; t < types_.size(); ++t)
      if (alive_[t] && types_[t][target]) {
        root_ = t;
        break;
      }
    return root_ ? Outcome::Sat : Outcome::Unsat;
  }

  // A model built from the surviving types, rooted at a type containing phi.
  std::pair<KripkeModel, std::size_t> witness() const {
    std::vector<std::size_t> order{*root_};
    std::map<std::size_t, std::size_t> pos{{*root_, 0}};
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t q = 0; q < order.size(); ++q) {
      std::size_t t = order[q];
      for (std::size_t i = 0; i < cl_.size(); ++i) {
        if (!types_[t][i] || cl_[i].kind() != Kind::Diamond) continue;
        std::size_t body = child_[i][0];
        std::optional<std::size_t> best;
        for (std::size_t u = 0; u < types_.size(); ++u)
          if (alive_[u] && rel_[t][u] && types_[u][body] && ful_[u][body] &&
              (!best || rank_[u][body] < rank_[*best][body]))
            best = u;
        if (!best) continue;
        if (!pos.count(*best)) {
          pos[*best] = order.size();
          order.push_back(*best);
        }
        edges.emplace_back(pos[t], pos[*best]);
      }
    }
    KripkeModel m;
    for (std::size_t k = 0; k < order.size(); ++k) m.add_state("t" + std::to_string(k));
    for (auto [a, b] : edges) m.add_edge(a, b);
    std::vector<StateSet> r = m.relation();
    if (needs_reflexive(cls_)) r = reflexive_closure(r);
    if (needs_symmetric(cls_)) r = symmetric_closure(r);
    if (needs_transitive(cls_)) r = transitive_closure(r);
    m.set_relation(r);
    for (std::size_t i = 0; i < cl_.size(); ++i) {
      if (cl_[i].kind() != Kind::Atom) continue;
      StateSet v = m.empty_set();
      for (std::size_t k = 0; k < order.size(); ++k)
        if (types_[order[k]][i]) v.set(k);
      m.set_valuation(cl_[i].name(), v);
    }
    return {m, 0};
  }

  std::size_t type_count() const { return types_.size(); }

 private:
  void index() {
    const std::size_t n = cl_.size();
    neg_.resize(n);
    child_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Formula& f = cl_[i];
      neg_[i] = *cl_.find(negate(f));
      switch (f.kind()) {
        case Kind::Or:
        case Kind::And:
          child_[i] = {*cl_.find(f.left()), *cl_.find(f.right())};
          break;
        case Kind::Diamond:
        case Kind::Box:
          child_[i] = {*cl_.find(f.body())};
          break;
        case Kind::Mu:
        case Kind::Nu:
          child_[i] = {*cl_.find(unfold(f))};
          break;
        default:
          break;
      }
    }
    // Pairs in reverse discovery order, so children are usually fixed first.
    std::vector<bool> seen(n);
    for (std::size_t i = n; i-- > 0;) {
      if (seen[i]) continue;
      seen[i] = seen[neg_[i]] = true;
      pairs_.push_back(i);
    }
    watchers_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      watchers_[i].push_back(i);
      for (std::size_t c : child_[i]) watchers_[c].push_back(i);
    }
  }

  // -1 unknown, 0 out, 1 in
  bool local_ok(const std::vector<int>& v, std::size_t i) const {
    if (v[i] != 1) return true;
    const Formula& f = cl_[i];
    auto in = [&](std::size_t c) { return v[c]; };
    switch (f.kind()) {
      case Kind::Bottom:
        return false;
      case Kind::Or: {
        int a = in(child_[i][0]), b = in(child_[i][1]);
        return a != 0 || b != 0;
      }
      case Kind::And:
        return in(child_[i][0]) != 0 && in(child_[i][1]) != 0;
      case Kind::Mu:
      case Kind::Nu:
        return in(child_[i][0]) != 0;
      case Kind::Box:
        return !needs_reflexive(cls_) || in(child_[i][0]) != 0;
      default:
        return true;
    }
  }

  bool enumerate_types() {
    std::vector<int> v(cl_.size(), -1);
    std::size_t nodes = 0;
    bool ok = true;
    auto assign_ok = [&](std::size_t i) {
      for (std::size_t j : {i, neg_[i]})
        for (std::size_t w : watchers_[j])
          if (!local_ok(v, w)) return false;
      return true;
    };
    std::function<void(std::size_t)> dfs = [&](std::size_t k) {
      if (!ok) return;
      if (++nodes > budget_ * 64) {
        ok = false;
        return;
      }
      if (k == pairs_.size()) {
        if (types_.size() >= budget_) {
          ok = false;
          return;
        }
        std::vector<bool> t(cl_.size());
        for (std::size_t i = 0; i < cl_.size(); ++i) t[i] = v[i] == 1;
        types_.push_back(std::move(t));
        return;
      }
      std::size_t i = pairs_[k];
      for (std::size_t pick : {i, neg_[i]}) {
        v[pick] = 1;
        v[neg_[pick]] = 0;
        if (assign_ok(i)) dfs(k + 1);
        v[i] = v[neg_[i]] = -1;
      }
    };
    dfs(0);
    return ok;
  }

  bool related(const std::vector<bool>& a, const std::vector<bool>& b) const {
    for (std::size_t i = 0; i < cl_.size(); ++i) {
      if (cl_[i].kind() != Kind::Box) continue;
      std::size_t body = child_[i][0];
      if (a[i] && !b[body]) return false;
      if (needs_transitive(cls_) && a[i] && !b[i]) return false;
      if (needs_symmetric(cls_) && b[i] && !a[body]) return false;
      if (cls_ == FrameClass::S5 && a[i] != b[i]) return false;
    }
    return true;
  }

  void build_relation() {
    const std::size_t k = types_.size();
    rel_.assign(k, std::vector<bool>(k));
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) rel_[a][b] = related(types_[a], types_[b]);
  }

  // Least fixpoint of fulfilment with synchronous rounds; rank records the
  // round in which a pair became fulfilled.
  void fulfil() {
    const std::size_t k = types_.size(), n = cl_.size();
    const std::size_t inf = static_cast<std::size_t>(-1);
    ful_.assign(k, std::vector<bool>(n));
    rank_.assign(k, std::vector<std::size_t>(n, inf));
    for (std::size_t t = 0; t < k; ++t)
      for (std::size_t i = 0; i < n; ++i) {
        if (!alive_[t] || !types_[t][i]) continue;
        switch (cl_[i].kind()) {
          case Kind::Or:
          case Kind::And:
          case Kind::Mu:
          case Kind::Diamond:
            break;
          default:
            ful_[t][i] = true;
            rank_[t][i] = 0;
        }
      }
    for (std::size_t round = 1;; ++round) {
      auto next = ful_;
      bool changed = false;
      for (std::size_t t = 0; t < k; ++t) {
        if (!alive_[t]) continue;
        for (std::size_t i = 0; i < n; ++i) {
          if (!types_[t][i] || ful_[t][i]) continue;
          bool f = false;
          switch (cl_[i].kind()) {
            case Kind::Or:
              f = ful_[t][child_[i][0]] || ful_[t][child_[i][1]];
              break;
            case Kind::And:
              f = ful_[t][child_[i][0]] && ful_[t][child_[i][1]];
              break;
            case Kind::Mu:
              f = ful_[t][child_[i][0]];
              break;
            case Kind::Diamond:
              for (std::size_t u = 0; u < k && !f; ++u)
                f = alive_[u] && rel_[t][u] && ful_[u][child_[i][0]];
              break;
            default:
              break;
          }
          if (f) {
            next[t][i] = true;
            rank_[t][i] = round;
            changed = true;
          }
        }
      }
      ful_ = std::move(next);
      if (!changed) break;
    }
  }

  void eliminate() {
    const std::size_t k = types_.size(), n = cl_.size();
    alive_.assign(k, true);
    for (bool changed = true; changed;) {
      changed = false;
      fulfil();
      for (std::size_t t = 0; t < k; ++t) {
        if (!alive_[t]) continue;
        bool keep = true;
        for (std::size_t i = 0; i < n && keep; ++i) {
          if (!types_[t][i]) continue;
          if (cl_[i].kind() == Kind::Mu && !ful_[t][i]) keep = false;
          if (cl_[i].kind() == Kind::Diamond) {
            bool found = false;
            for (std::size_t u = 0; u < k && !found; ++u) found = alive_[u] && rel_[t][u] && types_[u][child_[i][0]];
            keep = found;
          }
        }
        if (!keep) {
          alive_[t] = false;
          changed = true;
        }
      }
    }
    fulfil();
  }

  Formula phi_;
  FrameClass cls_;
  std::size_t budget_;
  ClosureSet cl_;
  std::vector<std::size_t> neg_;
  std::vector<std::vector<std::size_t>> child_;
  std::vector<std::size_t> pairs_;
  std::vector<std::vector<std::size_t>> watchers_;
  std::vector<std::vector<bool>> types_;
  std::vector<std::vector<bool>> rel_;
  std::vector<bool> alive_;
  std::vector<std::vector<bool>> ful_;
  std::vector<std::vector<std::size_t>> rank_;
  std::optional<std::size_t> root_;
};

// ---------------------------------------------------------------------------
// Verdict cache

inline nlohmann::ordered_json to_json(const OracleVerdict& v) {
  nlohmann::ordered_json j;
  j["verdict"] = to_string(v.kind);
  j["method"] = v.method;
  if (v.witness) {
    j["state"] = v.witness->name(v.state);
    j["witness"] = model_to_json(*v.witness);
  }
  return j;
}

inline OracleVerdict verdict_from_json(const nlohmann::json& j) {
  OracleVerdict v;
  std::string k = j.at("verdict").get<std::string>();
  v.kind = k == "SAT" ? Verdict::Sat : k == "UNSAT_CERTIFIED" ? Verdict::Unsat : Verdict::Unknown;
  v.method = j.at("method").get<std::string>();
  if (j.contains("witness")) {
    v.witness = model_from_json(j["witness"]);
    auto idx = v.witness->index_of(j.at("state").get<std::string>());
    if (!idx) throw ModelError("cached witness state missing");
    v.state = *idx;
  }
  return v;
}

// Content-addressed JSON store: one file per (formula, class, bounds) key.
class VerdictCache {
 public:
  explicit VerdictCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  static std::string key(const Formula& phi, FrameClass cls, const SatConfig& cfg) {
    return hex64(fnv1a64(alpha_key(phi) + "|" + to_string(cls) + "|" + cfg.key()));
  }

  std::optional<OracleVerdict> get(const Formula& phi, FrameClass cls, const SatConfig& cfg) const {
    std::ifstream in(dir_ / (key(phi, cls, cfg) + ".json"));
    if (!in) return std::nullopt;
    try {
      auto j = nlohmann::json::parse(in);
      // Guard against key collisions.
      if (j.value("formula", std::string()) != print_formula(phi)) return std::nullopt;
      OracleVerdict v = verdict_from_json(j);
      if (!replays(v, phi)) return std::nullopt;
      return v;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void put(const Formula& phi, FrameClass cls, const SatConfig& cfg, const OracleVerdict& v) const {
    std::filesystem::create_directories(dir_);
    nlohmann::ordered_json j;
    j["formula"] = print_formula(phi);
    j["class"] = to_string(cls);
    j["bounds"] = cfg.key();
    auto body = to_json(v);
    for (auto& [k, val] : body.items()) j[k] = val;
    auto path = dir_ / (key(phi, cls, cfg) + ".json");
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      out << j.dump() << "\n";
    }
    std::filesystem::rename(tmp, path);
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------

inline OracleVerdict sat_search(const Formula& phi_in, FrameClass cls, const SatConfig& cfg = {},
                                const VerdictCache* cache = nullptr) {
  Formula phi = clean(phi_in);
  if (cache)
    if (auto v = cache->get(phi, cls, cfg)) return *v;
  auto done = [&](OracleVerdict v) {
    if (cache) cache->put(phi, cls, cfg, v);
    return v;
  };

  Refuter ref(cls, cfg);
  if (ref.refute(phi)) return done({Verdict::Unsat, "refuter", std::nullopt, 0});

  bool eliminated_budget = false;
  if (cfg.elimination) {
    TypeElimination te(phi, cls, cfg.type_budget);
    switch (te.run()) {
      case TypeElimination::Outcome::Unsat:
        return done({Verdict::Unsat, "elimination", std::nullopt, 0});
      case TypeElimination::Outcome::Sat: {
        auto [m, s] = te.witness();
        OracleVerdict v{Verdict::Sat, "elimination", m, s};
        if (frame_class_check(m, cls).ok && replays(v, phi)) return done(v);
        break;
      }
      case TypeElimination::Outcome::Budget:
        eliminated_budget = true;
        break;
    }
  }

  std::vector<std::string> atoms(phi.free_names().begin(), phi.free_names().end());
  std::size_t n = std::min<std::size_t>(cfg.max_states, 5);
  while (n > 0 && enumeration_cost(n, atoms.size(), cls) > cfg.enumeration_budget) --n;
  bool exhaustive = n == cfg.max_states;
  std::optional<OracleVerdict> hit;
  if (n > 0)
    enumerate_models(
        n, atoms, cls,
        [&](const KripkeModel& m) {
          StateSet x = eval_algebraic(phi, m);
          if (x.none()) return true;
          hit = OracleVerdict{Verdict::Sat, "enumeration", m, x.find_first()};
          return false;
        },
        cfg.enumeration_budget);
  if (hit) return done(*hit);

  long double bound = std::pow(2.0L, static_cast<long double>(fl_closure(phi).size()));
  if (exhaustive && static_cast<long double>(cfg.max_states) >= bound)
    return done({Verdict::Unsat, "exhaustive", std::nullopt, 0});
  std::string marker = ref.exhausted() ? "refuter-budget" : eliminated_budget ? "elimination-budget" : "bounds";
  return done({Verdict::Unknown, marker, std::nullopt, 0});
}

}  // namespace mucalc
