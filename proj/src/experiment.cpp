// Copyright 2026 The APALM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "apalm/experiment.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "apalm/error.hpp"

namespace apalm {
namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

// Decorrelates generated delays from the index stream of the same seed.
constexpr std::uint64_t kDelaySalt = 0xD1B54A32D192ED03ULL;

class Section {
 public:
  Section(const pt::ptree* tree, std::string name,
          std::initializer_list<const char*> allowed)
      : tree_(tree), name_(std::move(name)) {
    if (!tree_) return;
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, child] : *tree_) {
      if (!ok.contains(key)) {
        throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
      }
    }
  }

  bool present() const noexcept { return tree_ != nullptr; }
  bool has(const std::string& key) const {
    return tree_ && tree_->find(key) != tree_->not_found();
  }

  std::optional<std::string> str(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    std::string v = tree_->get<std::string>(key);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.pop_back();
    if (v.empty()) throw ConfigError(where(key) + " is empty");
    return v;
  }

  std::optional<double> real(const std::string& key) const {
    const auto s = str(key);
    if (!s) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s->c_str(), &end);
    if (end != s->c_str() + s->size() || !std::isfinite(v)) {
      throw ConfigError(where(key) + " must be a number, got '" + *s + "'");
    }
    return v;
  }

  std::optional<std::uint64_t> count(const std::string& key) const {
    const auto s = str(key);
    if (!s) return std::nullopt;
    if (s->find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError(where(key) + " must be a nonnegative integer, got '" +
                        *s + "'");
    }
    try {
      return std::stoull(*s);
    } catch (const std::exception&) {
      throw ConfigError(where(key) + " is out of range");
    }
  }

  std::optional<bool> flag(const std::string& key) const {
    const auto s = str(key);
    if (!s) return std::nullopt;
    if (*s == "on" || *s == "true" || *s == "yes") return true;
    if (*s == "off" || *s == "false" || *s == "no") return false;
    throw ConfigError(where(key) + " must be on/off, got '" + *s + "'");
  }

  template <typename T>
  std::optional<T> choice(const std::string& key,
                          const std::map<std::string, T>& options) const {
    const auto s = str(key);
    if (!s) return std::nullopt;
    const auto it = options.find(*s);
    if (it == options.end()) {
      std::string list;
      for (const auto& [k, v] : options) list += (list.empty() ? "" : ", ") + k;
      throw ConfigError(where(key) + " must be one of {" + list + "}, got '" +
                        *s + "'");
    }
    return it->second;
  }

  std::string where(const std::string& key) const {
    return "[" + name_ + "] " + key;
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

const pt::ptree* child(const pt::ptree& root, const char* name) {
  const auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

fs::path resolve_input(const fs::path& source, const std::string& rel) {
  fs::path p(rel);
  if (p.is_relative()) p = source.parent_path() / p;
  return p.lexically_normal();
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw MissingFileError(p.string());
}

std::string fmt(double v) { return format_double(v); }

Schedule load_script(const fs::path& path, std::size_t m) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  return read_schedule(in, m);
}

double last_residual(const Trace& t) {
  for (auto it = t.rows.rbegin(); it != t.rows.rend(); ++it) {
    const double r = t.params.variant == Variant::kStochastic ? it->res_w : it->res_c;
    if (!std::isnan(r)) return r;
  }
  return kNaN;
}

double min_residual(const Trace& t) {
  double best = kNaN;
  for (const auto& r : t.rows) {
    const double v = t.params.variant == Variant::kStochastic ? r.res_w : r.res_c;
    if (!std::isnan(v) && !(v >= best)) best = v;
  }
  return best;
}

std::size_t max_delay(const Trace& t) {
  std::size_t d = 0;
  for (const auto& r : t.rows) d = std::max(d, r.d_max);
  return d;
}

void open_for_write(std::ofstream& os, const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  os.open(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const MissingFileError*>(&e)) return kExitMissingFile;
  if (dynamic_cast<const ParseError*>(&e)) return kExitBadInput;
  if (dynamic_cast<const Error*>(&e)) return kExitAlgorithm;
  return kExitInternal;
}

fs::path bundle_path(const fs::path& trace) {
  return fs::path(trace.string() + ".bundle.csv");
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  return parse_config(in, path);
}

ExperimentConfig parse_config(std::istream& is, const fs::path& source) {
  const std::string text((std::istreambuf_iterator<char>(is)),
                         std::istreambuf_iterator<char>());
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " +
                      e.message());
  }
  // The INI reader drops sections without keys; "[replay]" alone still
  // selects the executor.
  {
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
      const auto b = line.find_first_not_of(" \t");
      const auto e = line.find_last_not_of(" \t\r");
      if (b == std::string::npos || line[b] != '[' || line[e] != ']') continue;
      const std::string name = line.substr(b + 1, e - b - 1);
      if (root.find(name) == root.not_found()) root.push_back({name, pt::ptree()});
    }
  }
  for (const auto& [name, sub] : root) {
    static const std::set<std::string> kSections = {"problem", "solver", "replay",
                                                    "parallel", "output"};
    if (!kSections.contains(name)) {
      throw ConfigError(sub.empty() ? "key '" + name + "' outside any section"
                                    : "unknown section [" + name + "]");
    }
  }

  ExperimentConfig cfg;
  cfg.source = source;

  const Section prob(child(root, "problem"), "problem",
                     {"synthetic", "data", "rank", "loss", "row_reg", "col_reg",
                      "quad_reg", "init_seed", "M"});
  if (!prob.present()) throw ConfigError("missing [problem] section");
  auto& P = cfg.problem;
  P.synthetic = prob.str("synthetic");
  if (const auto d = prob.str("data")) P.data = resolve_input(source, *d);
  if (P.synthetic.has_value() == P.data.has_value()) {
    throw ConfigError("[problem] needs exactly one of 'synthetic' or 'data'");
  }
  if (P.synthetic) {
    const auto names = desk_problem_names();
    if (std::find(names.begin(), names.end(), *P.synthetic) == names.end()) {
      throw ConfigError("unknown synthetic problem '" + *P.synthetic + "'");
    }
  }
  if (const auto r = prob.count("rank")) {
    if (*r == 0) throw ConfigError("[problem] rank must be positive");
    P.rank = static_cast<std::size_t>(*r);
  }
  if (P.data && !P.rank) throw ConfigError("[problem] rank is required with 'data'");
  try {
    if (const auto s = prob.str("loss")) P.loss = EntryLoss::parse(*s);
    if (const auto s = prob.str("row_reg")) P.row_reg = Regularizer::parse(*s);
    if (const auto s = prob.str("col_reg")) P.col_reg = Regularizer::parse(*s);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("[problem] ") + e.what());
  }
  if (const auto q = prob.real("quad_reg")) {
    if (*q < 0.0) throw ConfigError("[problem] quad_reg must be >= 0");
    P.quad_reg = *q;
  }
  P.init_seed = prob.count("init_seed").value_or(1);
  if (const auto s = prob.str("M"); s && *s != "auto") {
    const auto v = prob.real("M");
    if (!(*v > 0.0)) throw ConfigError("[problem] M must be positive or 'auto'");
    P.M = v;
  }

  const Section sol(child(root, "solver"), "solver",
                    {"variant", "c", "tau", "K", "order", "max_iters",
                     "tol_residual", "seed", "linesearch", "ls_C", "ls_shrink",
                     "ls_grow", "replays"});
  auto& S = cfg.solver;
  S.variant = sol.choice<Variant>("variant", {{"stochastic", Variant::kStochastic},
                                              {"deterministic", Variant::kDeterministic}})
                  .value_or(Variant::kDeterministic);
  S.c = sol.real("c").value_or(S.c);
  S.tau = static_cast<std::size_t>(sol.count("tau").value_or(0));
  if (const auto k = sol.count("K")) S.K = static_cast<std::size_t>(*k);
  S.order = sol.choice<BlockOrder>("order", {{"cyclic", BlockOrder::kCyclic},
                                             {"shuffled", BlockOrder::kShuffled}})
                .value_or(BlockOrder::kCyclic);
  S.max_iters = sol.count("max_iters").value_or(S.max_iters);
  S.tol_residual = sol.real("tol_residual").value_or(S.tol_residual);
  S.seed = sol.count("seed").value_or(S.seed);
  S.linesearch.enabled = sol.flag("linesearch").value_or(false);
  S.linesearch.C = sol.real("ls_C").value_or(S.linesearch.C);
  S.linesearch.shrink = sol.real("ls_shrink").value_or(S.linesearch.shrink);
  S.linesearch.grow = sol.real("ls_grow").value_or(S.linesearch.grow);
  cfg.replays = static_cast<std::size_t>(sol.count("replays").value_or(1));
  if (!(S.c > 0.0 && S.c < 1.0)) throw ConfigError("[solver] c must lie in (0, 1)");
  if (S.max_iters == 0) throw ConfigError("[solver] max_iters must be positive");
  if (cfg.replays == 0) throw ConfigError("[solver] replays must be positive");
  if (cfg.replays > 1 && S.variant != Variant::kStochastic) {
    throw ConfigError("[solver] replays > 1 is only meaningful for the stochastic variant");
  }
  if (S.variant == Variant::kStochastic &&
      (sol.has("K") || sol.has("order") || S.linesearch.enabled)) {
    throw ConfigError("[solver] K, order and linesearch apply to the deterministic variant only");
  }
  if (!S.linesearch.enabled && (sol.has("ls_C") || sol.has("ls_shrink") || sol.has("ls_grow"))) {
    throw ConfigError("[solver] ls_* keys need linesearch = on");
  }

  const Section rep(child(root, "replay"), "replay", {"script", "script_cyclic", "delays"});
  const Section par(child(root, "parallel"), "parallel", {"workers", "tau_max", "throttle"});
  if (rep.present() == par.present()) {
    throw ConfigError("select exactly one executor: [replay] or [parallel]");
  }
  if (rep.present()) {
    ReplaySection R;
    if (const auto s = rep.str("script")) {
      R.script = resolve_input(source, *s);
      if (rep.has("delays")) {
        throw ConfigError("[replay] 'delays' cannot be combined with 'script'");
      }
      if (cfg.replays > 1) {
        throw ConfigError("[solver] replays > 1 needs generated scripts, not a script file");
      }
    }
    R.script_cyclic = rep.flag("script_cyclic").value_or(false);
    R.delays = rep.choice<DelayPattern>("delays", {{"zero", DelayPattern::kZero},
                                                   {"max", DelayPattern::kMax},
                                                   {"random", DelayPattern::kRandom}})
                   .value_or(DelayPattern::kZero);
    cfg.executor = R;
  } else {
    ParallelConfig Q;
    Q.workers = static_cast<std::size_t>(par.count("workers").value_or(1));
    if (Q.workers == 0) throw ConfigError("[parallel] workers must be >= 1");
    if (const auto t = par.count("tau_max")) Q.tau_max = static_cast<std::size_t>(*t);
    Q.throttle = par.choice<Throttle>("throttle", {{"block", Throttle::kBlock},
                                                   {"error", Throttle::kError}})
                     .value_or(Throttle::kBlock);
    if (S.linesearch.enabled) {
      throw ConfigError("line search is only supported by the replay executor");
    }
    if (cfg.replays > 1) throw ConfigError("replays > 1 needs the replay executor");
    if (sol.has("tau")) {
      throw ConfigError("[solver] tau is set by [parallel] tau_max for parallel runs");
    }
    cfg.executor = Q;
  }

  const Section out(child(root, "output"), "output",
                    {"trace", "summary", "script", "residual_stride"});
  const std::string stem = source.stem().string();
  cfg.output.trace = out.str("trace").value_or(stem + ".trace.csv");
  cfg.output.summary = out.str("summary").value_or(stem + ".summary.txt");
  if (const auto s = out.str("script")) cfg.output.script = fs::path(*s);
  S.residual_stride = static_cast<std::size_t>(out.count("residual_stride").value_or(0));

  if (P.data) require_file(*P.data);
  if (const auto* R = std::get_if<ReplaySection>(&cfg.executor); R && R->script) {
    require_file(*R->script);
  }
  return cfg;
}

std::size_t effective_tau(const ExperimentConfig& cfg) {
  if (const auto* q = std::get_if<ParallelConfig>(&cfg.executor)) {
    return q->resolved_tau_max();
  }
  return cfg.solver.tau;
}

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
  const auto& P = cfg.problem;
  GlrmSpec spec;
  DataMatrix data;
  if (P.synthetic) {
    DeskProblem desk = desk_problem(*P.synthetic);
    spec = desk.spec;
    data = std::move(desk.data);
  } else {
    data = load_matrix(*P.data);
    spec.d1 = data.rows;
    spec.d2 = data.cols;
  }
  if (P.rank) spec.rank = *P.rank;
  if (P.loss) spec.loss = *P.loss;
  if (P.row_reg) spec.row_reg = *P.row_reg;
  if (P.col_reg) spec.col_reg = *P.col_reg;
  if (P.quad_reg) spec.quad_reg = *P.quad_reg;
  spec.global_M = P.M;

  BlockVector x0 = glrm_initial_point(spec, P.init_seed);
  double M = 0.0;
  {
    const Problem probe = build_glrm(spec, data);
    if (!std::isfinite(psi_value(probe, x0))) {
      throw ConfigError("the initial point lies outside the regularizer domain");
    }
    if (!P.M && !probe.coercive()) {
      throw ConfigError("M = auto needs a coercive model (quad_reg > 0 or "
                        "coercive row and column regularizers); set M explicitly");
    }
    M = resolve_global_lipschitz(probe, x0);
  }
  spec.global_M = M;
  Problem problem = build_glrm(spec, data);
  cfg.solver.validate(problem.num_blocks());
  return BuiltExperiment{spec, std::move(data), std::move(problem), std::move(x0), M};
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  BuiltExperiment built = build_experiment(cfg);
  const std::size_t m = built.problem.num_blocks();
  RunReport rep;
  std::string executor_name;
  std::size_t workers = 0;

  if (const auto* R = std::get_if<ReplaySection>(&cfg.executor)) {
    executor_name = "replay";
    if (R->script) {
      ReplayOptions ro;
      ro.script = load_script(*R->script, m);
      ro.cyclic = R->script_cyclic;
      if (!ro.cyclic && ro.script.size() < cfg.solver.max_iters) {
        throw ConfigError("script " + R->script->string() + " has " +
                          std::to_string(ro.script.size()) +
                          " steps, fewer than max_iters; set script_cyclic = on");
      }
      rep.trace = replay(built.problem, built.x0, cfg.solver, ro);
    } else {
      for (std::size_t r = 0; r < cfg.replays; ++r) {
        SolverConfig sc = cfg.solver;
        sc.seed = cfg.solver.seed + r;
        ReplayOptions ro;
        ro.script = make_schedule(sc, m, sc.max_iters, R->delays, sc.seed ^ kDelaySalt);
        ro.stochastic_terms_every_row = cfg.replays > 1;
        Trace t = replay(built.problem, built.x0, sc, ro);
        if (cfg.replays > 1) rep.bundle.push_back(t.rows);
        if (r == 0) rep.trace = std::move(t);
      }
    }
  } else {
    executor_name = "parallel";
    ParallelConfig pc = std::get<ParallelConfig>(cfg.executor);
    if (const char* env = std::getenv("APALM_WORKERS")) {
      const std::string s(env);
      if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos ||
          std::stoul(s) == 0) {
        throw ConfigError("APALM_WORKERS must be a positive integer");
      }
      pc.workers = std::stoul(s);
    }
    workers = pc.workers;
    rep.trace = parallel_run(built.problem, built.x0, cfg.solver, pc);
  }

  const Trace& t = rep.trace;
  const bool stochastic = cfg.solver.variant == Variant::kStochastic;
  const auto fit = fit_rate(phi_gaps(t.rows));
  Summary& s = rep.summary;
  s.emplace_back("config", cfg.source.filename().string());
  s.emplace_back("problem", cfg.problem.synthetic ? *cfg.problem.synthetic
                                                  : cfg.problem.data->filename().string());
  s.emplace_back("variant", stochastic ? "stochastic" : "deterministic");
  s.emplace_back("executor", executor_name);
  if (workers) s.emplace_back("workers", std::to_string(workers));
  s.emplace_back("blocks", std::to_string(m));
  s.emplace_back("M", fmt(built.M));
  s.emplace_back("tau", std::to_string(t.params.tau));
  s.emplace_back("rho_tau", std::to_string(t.params.rho_tau));
  if (!stochastic) s.emplace_back("K", std::to_string(cfg.solver.declared_K(m)));
  s.emplace_back("c", fmt(cfg.solver.c));
  s.emplace_back("max_iters", std::to_string(cfg.solver.max_iters));
  s.emplace_back("iterations", std::to_string(t.rows.size() - 1));
  s.emplace_back("converged", t.converged ? "true" : "false");
  s.emplace_back("psi0", fmt(t.rows.front().psi));
  s.emplace_back("final_psi", fmt(t.rows.back().psi));
  s.emplace_back("final_phi", fmt(t.rows.back().phi));
  s.emplace_back("final_residual", fmt(last_residual(t)));
  s.emplace_back("min_residual", fmt(min_residual(t)));
  s.emplace_back("max_delay", std::to_string(max_delay(t)));
  s.emplace_back("m_check_violations", std::to_string(t.m_check_violations));
  s.emplace_back("level_set_violations", std::to_string(t.level_set_violations));
  s.emplace_back("decrease_violations", std::to_string(t.decrease_violations));
  s.emplace_back("rate_regime", to_string(fit.regime));
  s.emplace_back("rate_rho_hat", fmt(fit.rho_hat));
  s.emplace_back("rate_exponent_hat", fmt(fit.exponent_hat));
  s.emplace_back("rate_theta_hat", fmt(fit.theta_hat));
  s.emplace_back("rate_r2", fmt(fit.r2));
  if (!stochastic) {
    s.emplace_back("c0_fit", fmt(fit_subgradient_constant(t.rows, t.params.tau,
                                                          cfg.solver.declared_K(m))));
  }
  if (!rep.bundle.empty()) {
    const auto verdict = check_supermartingale(rep.bundle);
    s.emplace_back("replays", std::to_string(rep.bundle.size()));
    s.emplace_back("supermartingale", verdict.pass ? "pass" : "fail");
  }

  if (t.m_check_violations || t.level_set_violations || t.decrease_violations) {
    rep.exit_code = kExitAssumptionFlags;
  } else {
    rep.exit_code = t.converged ? kExitConverged : kExitNotConverged;
  }
  return rep;
}

VerifyReport verify_trace(std::span<const TraceRow> rows,
                          const ExperimentConfig& cfg, double M,
                          const std::vector<std::vector<TraceRow>>* bundle) {
  VerifyReport rep;
  if (rows.empty()) throw ParseError("trace has no rows", 2, 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].k != i) {
      throw ParseError("row k values must run 0, 1, 2, ...", i + 2, 1);
    }
  }
  auto flag = [&](std::uint64_t k, const std::string& what) {
    rep.violations.push_back(k);
    rep.messages.push_back("violation at k=" + std::to_string(k) + ": " + what);
  };
  const double phi0 = rows.front().phi;
  const double tol = 1e-9 * std::max(1.0, std::abs(phi0));
  for (const auto& r : rows) {
    if (r.phi < r.psi - tol) flag(r.k, "phi below psi");
  }

  const std::size_t tau = effective_tau(cfg);
  if (cfg.solver.variant == Variant::kDeterministic) {
    for (auto k : check_decrease(rows, tol)) flag(k, "Lyapunov value increased");
    const double psi0 = rows.front().psi;
    const double lvl = 1e-10 * std::max(1.0, std::abs(psi0));
    for (const auto& r : rows) {
      if (r.psi > psi0 + lvl) flag(r.k, "psi above the initial level");
    }
    std::vector<std::size_t> js;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (!rows[i].j) throw ParseError("missing block index", i + 2, 2);
      js.push_back(*rows[i].j);
    }
    const double pen =
        M * std::sqrt(static_cast<double>(rho_tau(js, tau)) * static_cast<double>(tau));
    for (const auto& r : rows) {
      if (std::isnan(r.res_a) || std::isnan(r.res_c)) continue;
      if (r.res_c > r.res_a + pen * r.step_norm + 1e-9 * std::max(1.0, r.res_a)) {
        flag(r.k, "certificate triangle inequality fails");
      }
    }
    rep.messages.push_back("checked " + std::to_string(rows.size()) +
                           " rows: Lyapunov monotonicity, level set, certificate bound");
  } else if (bundle) {
    const auto verdict = check_supermartingale(*bundle);
    for (const auto& st : verdict.strata) {
      if (!st.pass) {
        flag(st.k_begin, "supermartingale stratum [" + std::to_string(st.k_begin) +
                             ", " + std::to_string(st.k_end) + ") mean " +
                             fmt(st.mean) + " > 3 SE " + fmt(3 * st.std_error));
      }
    }
    std::ostringstream os;
    os << "supermartingale check over " << bundle->size() << " replays, "
       << verdict.strata.size() << " strata: " << (verdict.pass ? "pass" : "fail");
    rep.messages.push_back(os.str());
  } else {
    rep.messages.push_back(
        "stochastic trace without a replay bundle: statistical check skipped");
  }
  std::sort(rep.violations.begin(), rep.violations.end());
  rep.violations.erase(std::unique(rep.violations.begin(), rep.violations.end()),
                       rep.violations.end());
  rep.pass = rep.violations.empty();
  return rep;
}

int run_command(const fs::path& config, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_config(config);
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep = run_experiment(cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    {
      std::ofstream os;
      open_for_write(os, cfg.output.trace);
      write_trace_csv(os, rep.trace.rows);
    }
    {
      std::ofstream os;
      open_for_write(os, cfg.output.summary);
      write_summary(os, rep.summary);
    }
    if (!rep.bundle.empty()) {
      std::ofstream os;
      open_for_write(os, bundle_path(cfg.output.trace));
      write_bundle_csv(os, rep.bundle);
    }
    if (cfg.output.script) {
      std::ofstream os;
      open_for_write(os, *cfg.output.script);
      write_schedule(os, rep.trace.schedule);
    }
    for (const auto& w : rep.trace.warnings) err << "warning: " << w << '\n';
    const auto* iters = find_key(rep.summary, "iterations");
    const auto* res = find_key(rep.summary, "final_residual");
    out << (rep.trace.converged ? "converged" : "not converged") << " after "
        << *iters << " iterations (residual " << *res << ", "
        << std::fixed << std::setprecision(3) << secs << " s)\n"
        << "trace: " << cfg.output.trace.string() << '\n'
        << "summary: " << cfg.output.summary.string() << '\n';
    return rep.exit_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

int verify_command(const fs::path& trace, const fs::path& config,
                   std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_config(config);
    std::ifstream in(trace);
    if (!in) throw MissingFileError(trace.string());
    const auto rows = read_trace_csv(in);
    std::optional<std::vector<std::vector<TraceRow>>> bundle;
    const fs::path bp = bundle_path(trace);
    if (cfg.solver.variant == Variant::kStochastic && fs::exists(bp)) {
      std::ifstream bin(bp);
      bundle = read_bundle_csv(bin);
    }
    const BuiltExperiment built = build_experiment(cfg);
    const auto rep = verify_trace(rows, cfg, built.M, bundle ? &*bundle : nullptr);
    for (const auto& msg : rep.messages) out << msg << '\n';
    if (rep.pass) {
      out << "verify: ok\n";
      return kExitConverged;
    }
    out << "verify: " << rep.violations.size() << " violating k:";
    for (auto k : rep.violations) out << ' ' << k;
    out << '\n';
    return kExitViolations;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

int bench_command(const fs::path& config, const std::vector<std::size_t>& workers,
                  std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_config(config);
    if (workers.empty()) throw ConfigError("--workers needs at least one count");
    const BuiltExperiment built = build_experiment(cfg);
    ParallelConfig base;
    if (const auto* q = std::get_if<ParallelConfig>(&cfg.executor)) base = *q;
    out << "workers,iterations,seconds,updates_per_second,max_delay,converged\n";
    for (std::size_t w : workers) {
      if (w == 0) throw ConfigError("worker counts must be positive");
      ParallelConfig pc = base;
      pc.workers = w;
      const auto t0 = std::chrono::steady_clock::now();
      const Trace t = parallel_run(built.problem, built.x0, cfg.solver, pc);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const auto iters = t.rows.size() - 1;
      out << w << ',' << iters << ',' << std::fixed << std::setprecision(4) << secs
          << ',' << std::setprecision(1) << (secs > 0 ? iters / secs : 0.0) << ','
          << max_delay(t) << ',' << (t.converged ? "true" : "false") << '\n';
      out.unsetf(std::ios::floatfield);
    }
    return kExitConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace apalm
