// Command-line front end. Exit codes: 0 ok, 1 property violated (witness
// written), 2 input error, 3 UNKNOWN verdict under the fail policy, 4
// internal invariant breach.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mucalc/mucalc.hpp"

using namespace mucalc;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kViolation = 1, kInput = 2, kUnknown = 3, kInternal = 4 };

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  bool json = false;
  std::string witness_dir;
};

Globals g;

std::vector<Formula> load_formulas(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  try {
    auto fs = parse_formula_list(text);
    if (fs.empty()) throw InputError(path + ": no formulas");
    return fs;
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

Formula load_one(const std::string& path) {
  auto fs = load_formulas(path);
  if (fs.size() != 1) throw InputError(path + ": expected exactly one formula, found " + std::to_string(fs.size()));
  return fs.front();
}

KripkeModel load_model(const std::string& path) {
  try {
    return read_model(read_file(path));
  } catch (const std::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

FrameClass parse_class(const std::string& s) {
  auto c = frame_class_from(s);
  if (!c) throw InputError("unknown frame class " + s);
  return *c;
}

Strategy parse_strategy(const std::string& s) {
  auto st = strategy_from(s);
  if (!st) throw InputError("unknown strategy " + s);
  return *st;
}

fs::path witness_dir() {
  if (!g.witness_dir.empty()) return g.witness_dir;
  return fs::temp_directory_path() / "mucalc-witnesses";
}

// Content-addressed, so reruns overwrite rather than accumulate.
std::string emit_witness(const std::string& kind, const std::string& content) {
  fs::path dir = witness_dir();
  fs::create_directories(dir);
  fs::path file = dir / (kind + "-" + hex64(fnv1a64(content)) + ".json");
  write_file(file.string(), content);
  std::cerr << "witness: " << file.string() << "\n";
  return file.string();
}

void print_json(const nlohmann::ordered_json& j) { std::cout << j.dump() << "\n"; }

nlohmann::ordered_json formulas_json(const std::vector<Formula>& fs) {
  auto a = nlohmann::ordered_json::array();
  for (const auto& f : fs) a.push_back(print_formula(f));
  return a;
}

// ---------------------------------------------------------------------------

int cmd_fmt(const std::string& file) {
  for (const auto& f : load_formulas(file)) {
    if (g.json) print_json({{"formula", print_formula(f)}});
    else std::cout << print_formula(f) << "\n";
  }
  return kOk;
}

int cmd_classify(const std::string& file, const std::string& vars) {
  std::set<std::string> xs;
  std::stringstream ss(vars);
  for (std::string v; std::getline(ss, v, ',');)
    if (!v.empty()) xs.insert(v);
  for (const auto& f : load_formulas(file)) {
    auto fc = classify_fragment(f, xs);
    if (g.json)
      print_json({{"formula", print_formula(f)},
                  {"mucml", fc.in_mucml},
                  {"membership", to_string(fc.membership)},
                  {"clean", is_clean(f)}});
    else
      std::cout << print_formula(f) << ": " << (fc.in_mucml ? "in" : "outside") << " mucML, "
                << to_string(fc.membership) << (is_clean(f) ? ", clean" : "") << "\n";
  }
  return kOk;
}

int cmd_closure(const std::string& file, bool neg) {
  ClosureSet cl = fl_closure(load_formulas(file), neg);
  if (g.json) {
    print_json({{"size", cl.size()}, {"members", formulas_json(cl.members())}});
  } else {
    for (const auto& f : cl) std::cout << print_formula(f) << "\n";
  }
  return kOk;
}

int cmd_mc(const std::string& model_file, const std::string& formula_file, const std::string& engine) {
  if (engine != "algebraic" && engine != "game" && engine != "both") throw InputError("unknown engine " + engine);
  KripkeModel m = load_model(model_file);
  int rc = kOk;
  for (const auto& f0 : load_formulas(formula_file)) {
    Formula f = clean(f0);
    std::optional<StateSet> alg, game;
    try {
      if (engine != "game") alg = eval_algebraic(f, m);
      if (engine != "algebraic") game = eval_game(f, m);
    } catch (const EvalError& e) {
      throw InputError(print_formula(f0) + ": " + e.what());
    }
    bool agree = !(alg && game) || *alg == *game;
    const StateSet& x = alg ? *alg : *game;
    if (g.json) {
      nlohmann::ordered_json j{{"formula", print_formula(f0)}, {"engine", engine}, {"states", format_set(m, x)}};
      if (alg && game) {
        j["game"] = format_set(m, *game);
        j["agree"] = agree;
      }
      print_json(j);
    } else {
      std::cout << print_formula(f0) << ": " << format_set(m, x);
      if (alg && game) std::cout << (agree ? " (engines agree)" : " (game: " + format_set(m, *game) + ")");
      std::cout << "\n";
    }
    if (!agree) {
      nlohmann::ordered_json w{{"formula", print_formula(f0)}, {"model", model_to_json(m)}};
      emit_witness("mc", w.dump(2));
      rc = kViolation;
    }
  }
  return rc;
}

int cmd_filtrate(const std::string& model_file, const std::string& sigma_file, const std::string& strategy,
                 bool check, bool neg) {
  KripkeModel m = load_model(model_file);
  ClosureSet sigma = fl_closure(load_formulas(sigma_file), neg);
  auto fr = build_filtration(m, sigma, parse_strategy(strategy));
  if (!check) {
    if (g.json) print_json(to_json(fr));
    else std::cout << write_model(fr.quotient) << "\n";
    return kOk;
  }
  auto rep = filtration_agreement_check(fr);
  auto j = to_json(rep, fr);
  if (g.json) print_json(j);
  else {
    std::cout << "classes " << fr.quotient.size() << ", checked " << rep.checked << " members, " << rep.comparisons
              << " comparisons, " << rep.violations.size() << " violations, " << rep.boundary.size()
              << " boundary disagreements\n";
    for (const auto& d : rep.violations)
      std::cout << "violation: " << print_formula(d.formula) << " at " << m.name(d.state) << "\n";
    for (const auto& d : rep.boundary)
      std::cout << "boundary: " << print_formula(d.formula) << " at " << m.name(d.state) << " source "
                << std::boolalpha << d.source << " quotient " << d.quotient << "\n";
  }
  if (rep.ok() && rep.boundary.empty()) return kOk;
  nlohmann::ordered_json w{{"model", model_to_json(m)}, {"sigma", formulas_json(sigma.members())},
                           {"strategy", strategy}, {"report", j}};
  emit_witness("filtrate", w.dump(2));
  return kViolation;
}

int cmd_fmp(const std::string& formula_file, const std::string& cls, const std::string& witness_file) {
  Formula f = load_one(formula_file);
  KripkeModel m = load_model(witness_file);
  FmpResult r;
  try {
    r = fmp_search(f, parse_class(cls), m);
  } catch (const FiltrationError& e) {
    throw InputError(e.what());
  }
  nlohmann::ordered_json j{{"formula", print_formula(f)},
                           {"class", cls},
                           {"closure", r.closure_size},
                           {"bound", static_cast<double>(r.bound)},
                           {"states", r.filtration.quotient.size()},
                           {"refutes", r.refutes},
                           {"in_class", r.in_class},
                           {"within_bound", r.within_bound},
                           {"countermodel", model_to_json(r.filtration.quotient)}};
  if (g.json) print_json(j);
  else
    std::cout << "countermodel with " << r.filtration.quotient.size() << " states (bound 2^" << r.closure_size
              << "): " << write_model(r.filtration.quotient) << "\n"
              << (r.ok() ? "ok" : "violation") << "\n";
  if (r.ok()) return kOk;
  emit_witness("fmp", j.dump(2));
  return kViolation;
}

struct SatFlags {
  std::size_t max_states = SatConfig{}.max_states;
  std::size_t depth = SatConfig{}.depth;
  std::size_t modal_depth = SatConfig{}.modal_depth;
  std::size_t refuter_budget = SatConfig{}.refuter_budget;
  std::size_t type_budget = SatConfig{}.type_budget;
  bool no_elimination = false;

  SatConfig config() const {
    SatConfig c;
    c.max_states = max_states;
    c.depth = depth;
    c.modal_depth = modal_depth;
    c.refuter_budget = refuter_budget;
    c.type_budget = type_budget;
    c.elimination = !no_elimination;
    return c;
  }
};

void add_sat_flags(CLI::App* app, SatFlags& f) {
  app->add_option("--max-states", f.max_states, "enumeration bound")->capture_default_str();
  app->add_option("--depth", f.depth, "fixpoint unfoldings per world in the refuter")->capture_default_str();
  app->add_option("--modal-depth", f.modal_depth, "refuter modal depth")->capture_default_str();
  app->add_option("--refuter-budget", f.refuter_budget, "refuter node budget")->capture_default_str();
  app->add_option("--type-budget", f.type_budget, "type elimination budget")->capture_default_str();
  app->add_flag("--no-elimination", f.no_elimination, "skip the type elimination phase");
}

std::optional<VerdictCache> env_cache() {
  if (const char* d = std::getenv("MUCALC_CACHE_DIR"); d && *d) return VerdictCache(d);
  return std::nullopt;
}

int cmd_sat(const std::string& formula_file, const std::string& cls, const SatFlags& flags) {
  Formula f = load_one(formula_file);
  auto cache = env_cache();
  auto v = sat_search(f, parse_class(cls), flags.config(), cache ? &*cache : nullptr);
  auto j = to_json(v);
  if (g.json) {
    nlohmann::ordered_json out{{"formula", print_formula(f)}, {"class", cls}};
    for (auto& [k, val] : j.items()) out[k] = val;
    print_json(out);
  } else {
    std::cout << to_string(v.kind) << " (" << v.method << ")\n";
    if (v.witness) std::cout << "witness state " << v.witness->name(v.state) << ": " << write_model(*v.witness) << "\n";
  }
  if (v.sat() && !replays(v, clean(f))) return kInternal;
  return v.decisive() ? kOk : kUnknown;
}

int cmd_canonical(const std::string& sigma_file, const std::string& logic, const std::string& strategy,
                  bool check_all, const std::string& unknown, std::size_t jobs, const SatFlags& flags) {
  ClosureSet sigma = fl_closure(load_formulas(sigma_file), true);
  CanonicalConfig cc;
  cc.sat = flags.config();
  auto policy = unknown_policy_from(unknown);
  if (!policy) throw InputError("unknown policy " + unknown);
  cc.unknown = *policy;
  cc.jobs = jobs;
  auto cache = env_cache();
  cc.cache = cache ? &*cache : nullptr;
  FrameClass cls = parse_class(logic);
  CanonicalModel cm;
  try {
    cm = build_canonical(sigma, cls, parse_strategy(strategy), cc);
  } catch (const UnknownVerdictError& e) {
    std::cerr << "error: " << e.what() << "\n";
    emit_witness("canonical-unknown", nlohmann::ordered_json{{"formula", print_formula(e.query)},
                                                             {"class", logic}}.dump(2));
    return kUnknown;
  } catch (const CanonicalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    emit_witness("canonical", nlohmann::ordered_json{{"sigma", formulas_json(sigma.members())},
                                                     {"logic", logic},
                                                     {"strategy", strategy},
                                                     {"error", e.what()}}.dump(2));
    return kViolation;
  }
  for (const auto& w : cm.warnings) std::cerr << "warning: " << w << "\n";
  nlohmann::ordered_json out{{"model", model_to_json(cm.model)}, {"atoms", atoms_sidecar(cm)}};
  bool ok = true;
  if (check_all) {
    auto e = existence_check(cm);
    auto d = distinctness_check(cm, cc);
    auto t = truth_lemma_check(cm);
    auto rep = [](const LemmaReport& r) {
      return nlohmann::ordered_json{{"checked", r.checked}, {"unknown", r.unknown}, {"violations", r.violations}};
    };
    out["existence"] = rep(e);
    out["distinctness"] = rep(d);
    out["truth_lemma"] = rep(t);
    ok = e.ok() && d.ok() && t.ok();
  }
  if (g.json) print_json(out);
  else {
    std::cout << write_model(cm.model) << "\n";
    for (std::size_t a = 0; a < cm.size(); ++a) {
      std::cout << cm.model.name(a) << ":";
      for (const auto& f : out["atoms"]["atoms"][a]["members"]) std::cout << " " << f.get<std::string>() << ";";
      std::cout << "\n";
    }
    if (check_all)
      for (const char* k : {"existence", "distinctness", "truth_lemma"})
        std::cout << k << ": " << out[k]["checked"] << " checked, " << out[k]["violations"].size() << " violations\n";
  }
  if (ok) return kOk;
  emit_witness("canonical", out.dump(2));
  return kViolation;
}

int cmd_prove(const std::string& file) {
  Derivation d;
  try {
    d = read_derivation(read_file(file));
  } catch (const std::exception& e) {
    throw InputError(file + ": " + e.what());
  }
  auto r = check_derivation(d);
  if (r.ok()) {
    if (g.json)
      print_json({{"theorem", print_formula(r.theorem->formula)},
                  {"logic", to_string(r.theorem->logic)},
                  {"hash", r.theorem->hash}});
    else
      std::cout << "theorem (" << to_string(r.theorem->logic) << "): " << print_formula(r.theorem->formula) << "\n"
                << "hash " << r.theorem->hash << "\n";
    return kOk;
  }
  if (g.json) print_json({{"step", r.violation->step}, {"reason", r.violation->reason}});
  else std::cout << "rejected at step " << r.violation->step << ": " << r.violation->reason << "\n";
  emit_witness("prove", write_derivation(d));
  return kViolation;
}

int cmd_selftest(std::uint64_t seed, std::size_t jobs, const std::string& corpus) {
  SelftestConfig cfg;
  cfg.seed = seed;
  cfg.jobs = jobs;
  if (!corpus.empty()) cfg.corpus = corpus;
  auto results = run_selftest(cfg);
  std::cout << render_report(results, seed, g.json);
  bool ok = std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass; });
  if (!ok) emit_witness("selftest", render_report(results, seed, true));
  return ok ? kOk : kViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous modal mu-calculus toolkit"};
  app.require_subcommand(1);
  app.add_flag("--json", g.json, "one JSON report object per line");
  app.add_option("--witness-dir", g.witness_dir, "where failure witnesses are written");

  std::string file, vars, model, formula, sigma, strategy = "min", engine = "algebraic", cls = "K", witness,
                                                   logic = "K", unknown = "fail", corpus;
  bool neg = false, check = false, check_all = false;
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
  SatFlags sat_flags;

  auto* fmt = app.add_subcommand("fmt", "parse and pretty-print formulas");
  fmt->add_option("file", file)->required();
  auto* classify = app.add_subcommand("classify", "fragment membership");
  classify->add_option("file", file)->required();
  classify->add_option("--vars", vars, "comma-separated variables for Con_X");
  auto* closure = app.add_subcommand("closure", "FL-closure");
  closure->add_option("file", file)->required();
  closure->add_flag("--neg", neg, "also close under negation");
  auto* mc = app.add_subcommand("mc", "model checking");
  mc->add_option("--model", model)->required();
  mc->add_option("--formula", formula)->required();
  mc->add_option("--engine", engine, "algebraic, game or both")->capture_default_str();
  auto* filtrate = app.add_subcommand("filtrate", "filtration through the closure of a formula set");
  filtrate->add_option("--model", model)->required();
  filtrate->add_option("--sigma", sigma)->required();
  filtrate->add_option("--strategy", strategy)->capture_default_str();
  filtrate->add_flag("--check", check, "compare truth in source and quotient");
  filtrate->add_flag("--neg", neg, "close sigma under negation");
  auto* fmp = app.add_subcommand("fmp", "filtrate a refuting witness");
  fmp->add_option("--formula", formula)->required();
  fmp->add_option("--class", cls)->capture_default_str();
  fmp->add_option("--witness", witness)->required();
  auto* sat = app.add_subcommand("sat", "bounded satisfiability oracle");
  sat->add_option("--formula", formula)->required();
  sat->add_option("--class", cls)->capture_default_str();
  add_sat_flags(sat, sat_flags);
  auto* canonical = app.add_subcommand("canonical", "finitary canonical model");
  canonical->add_option("--sigma", sigma)->required();
  canonical->add_option("--logic", logic)->capture_default_str();
  canonical->add_option("--strategy", strategy)->capture_default_str();
  canonical->add_flag("--check-all", check_all, "existence, distinctness and truth lemma checks");
  canonical->add_option("--unknown", unknown, "fail, exclude or include")->capture_default_str();
  canonical->add_option("--jobs", jobs)->capture_default_str();
  add_sat_flags(canonical, sat_flags);
  auto* prove = app.add_subcommand("prove", "check a derivation");
  prove->add_option("file", file)->required();
  auto* selftest = app.add_subcommand("selftest", "acceptance sweep");
  selftest->add_option("--seed", seed)->capture_default_str();
  selftest->add_option("--jobs", jobs)->capture_default_str();
  selftest->add_option("--corpus", corpus, "corpus directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }

  try {
    if (*fmt) return cmd_fmt(file);
    if (*classify) return cmd_classify(file, vars);
    if (*closure) return cmd_closure(file, neg);
    if (*mc) return cmd_mc(model, formula, engine);
    if (*filtrate) return cmd_filtrate(model, sigma, strategy, check, neg);
    if (*fmp) return cmd_fmp(formula, cls, witness);
    if (*sat) return cmd_sat(formula, cls, sat_flags);
    if (*canonical) {
      if (!canonical->count("--strategy")) strategy = to_string(default_strategy(parse_class(logic)));
      return cmd_canonical(sigma, logic, strategy, check_all, unknown, jobs, sat_flags);
    }
    if (*prove) return cmd_prove(file);
    if (*selftest) return cmd_selftest(seed, jobs, corpus);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const FiltrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!e.witness) return kInput;
    emit_witness("filtrate", nlohmann::ordered_json{{"error", e.what()},
                                                    {"pair", {e.witness->first, e.witness->second}}}.dump(2));
    return kViolation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInput;
}
