// Seeded random generation of clean continuous formulas.
#pragma once

#include <json.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mucalc/formula.hpp"
#include "mucalc/kripke.hpp"

namespace mucalc {

struct GeneratorConfig {
  std::size_t max_depth = 5;
  std::vector<std::string> atoms = {"p", "q", "r"};
  std::vector<std::string> variables = {"x", "y", "z"};
  // Chance that a non-leaf position becomes a fixpoint binder.
  double binder_rate = 0.3;
  // Chance that a leaf of a continuous body is a bound variable.
  double variable_rate = 0.6;

  static GeneratorConfig from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    c.max_depth = j.value("max_depth", c.max_depth);
    c.atoms = j.value("atoms", c.atoms);
    c.variables = j.value("variables", c.variables);
    c.binder_rate = j.value("binder_rate", c.binder_rate);
    c.variable_rate = j.value("variable_rate", c.variable_rate);
    return c;
  }
};

// Grammar-directed generator: mu-bodies are drawn from Con_X, nu-bodies from
// Cocon_X, and every binder gets its own variable, so outputs are clean and
// continuous by construction.
class FormulaGenerator {
 public:
  FormulaGenerator(GeneratorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {}

  Formula next() {
    std::set<std::string> used;
    return gen_mucml(pick_depth(), used);
  }

  Rng& rng() { return rng_; }

 private:
  std::size_t pick_depth() { return 1 + uniform_below(rng_, cfg_.max_depth); }

  double unit() { return std::uniform_real_distribution<double>(0, 1)(rng_); }

  std::optional<std::string> fresh_var(const std::set<std::string>& used) {
    std::vector<std::string> free;
    for (const auto& v : cfg_.variables)
      if (!used.count(v)) free.push_back(v);
    if (free.empty()) return std::nullopt;
    return free[uniform_below(rng_, free.size())];
  }

  Formula literal() {
    std::uint64_t k = uniform_below(rng_, 2 * cfg_.atoms.size() + 1);
    if (k == 2 * cfg_.atoms.size()) return coin(rng_) ? Formula::top() : Formula::bottom();
    const auto& a = cfg_.atoms[k / 2];
    return k % 2 == 0 ? Formula::atom(a) : Formula::neg_atom(a);
  }

  Formula gen_mucml(std::size_t depth, std::set<std::string>& used) {
    if (depth == 0) return literal();
    if (unit() < cfg_.binder_rate)
      if (auto v = fresh_var(used)) {
        used.insert(*v);
        bool mu = coin(rng_);
        Formula body = gen_con(depth - 1, {*v}, !mu, used);
        return Formula::binder(mu ? Kind::Mu : Kind::Nu, *v, body);
      }
    // Operands are generated in sequence so outputs do not depend on the
    // compiler's argument evaluation order.
    switch (std::uint64_t k = uniform_below(rng_, 5)) {
      case 0: return literal();
      case 1:
      case 2: {
        Formula l = gen_mucml(depth - 1, used);
        Formula r = gen_mucml(depth - 1, used);
        return Formula::binary(k == 1 ? Kind::Or : Kind::And, l, r);
      }
      case 3: return Formula::diamond(gen_mucml(depth - 1, used));
      default: return Formula::box(gen_mucml(depth - 1, used));
    }
  }

  // Con_X (co = false) or Cocon_X (co = true).
  Formula gen_con(std::size_t depth, std::set<std::string> xs, bool co, std::set<std::string>& used) {
    auto var_leaf = [&]() {
      std::vector<std::string> v(xs.begin(), xs.end());
      return Formula::atom(v[uniform_below(rng_, v.size())]);
    };
    if (depth == 0) return unit() < cfg_.variable_rate ? var_leaf() : literal();
    if (unit() < cfg_.binder_rate * 0.5)
      if (auto v = fresh_var(used)) {
        used.insert(*v);
        auto ys = xs;
        ys.insert(*v);
        return Formula::binder(co ? Kind::Nu : Kind::Mu, *v, gen_con(depth - 1, ys, co, used));
      }
    switch (std::uint64_t k = uniform_below(rng_, 6)) {
      case 0: return var_leaf();
      case 1: return gen_mucml(depth - 1, used);
      case 2:
      case 3: {
        Formula l = gen_con(depth - 1, xs, co, used);
        Formula r = gen_con(depth - 1, xs, co, used);
        return Formula::binary(k == 2 ? Kind::Or : Kind::And, l, r);
      }
      default: return Formula::modal(co ? Kind::Box : Kind::Diamond, gen_con(depth - 1, xs, co, used));
    }
  }

  GeneratorConfig cfg_;
  Rng rng_;
};

inline std::size_t formula_depth(const Formula& f) {
  switch (f.kind()) {
    case Kind::Or:
    case Kind::And:
      return 1 + std::max(formula_depth(f.left()), formula_depth(f.right()));
    case Kind::Diamond:
    case Kind::Box:
    case Kind::Mu:
    case Kind::Nu:
      return 1 + formula_depth(f.body());
    default:
      return 0;
  }
}

}  // namespace mucalc
