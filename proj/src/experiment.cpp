#include "disa/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace disa {

using nlohmann::json;

namespace {

template <typename T>
void read_key(const json& section, const char* key, T& out) {
  if (!section.contains(key) || section.at(key).is_null()) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& section, const char* where, std::initializer_list<const char*> allowed) {
  if (!section.is_object()) throw ConfigError(std::string("section '") + where + "' must be an object");
  for (const auto& item : section.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) throw ConfigError(std::string("unknown key '") + item.key() + "' in section '" + where + "'");
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j, "root", {"problem", "topology", "solver", "vdisa", "stopping", "reference", "output"});
  if (j.contains("problem")) {
    const json& p = j.at("problem");
    reject_unknown(p, "problem", {"kind", "agents", "dim", "u_rows", "u_scale", "seed", "samples", "separation", "dataset"});
    read_key(p, "kind", c.problem.kind);
    read_key(p, "agents", c.problem.agents);
    read_key(p, "dim", c.problem.dim);
    read_key(p, "u_rows", c.problem.u_rows);
    read_key(p, "u_scale", c.problem.u_scale);
    read_key(p, "seed", c.problem.seed);
    read_key(p, "samples", c.problem.samples);
    read_key(p, "separation", c.problem.separation);
    read_key(p, "dataset", c.problem.dataset);
  }
  if (j.contains("topology")) {
    if (!j.at("topology").is_string()) throw ConfigError("topology must be a string");
    c.topology = TopologySpec::parse(j.at("topology").get<std::string>());
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    reject_unknown(s, "solver", {"name", "tau", "beta", "baseline_policy", "baseline_beta"});
    read_key(s, "name", c.solver.name);
    if (s.contains("tau") && !s.at("tau").is_null()) c.solver.tau = s.at("tau").get<double>();
    if (s.contains("beta") && !s.at("beta").is_null()) c.solver.beta = s.at("beta").get<double>();
    read_key(s, "baseline_policy", c.solver.baseline_policy);
    read_key(s, "baseline_beta", c.solver.baseline_beta);
  }
  if (j.contains("vdisa")) {
    const json& v = j.at("vdisa");
    reject_unknown(v, "vdisa", {"schedule", "strategy", "seed"});
    read_key(v, "schedule", c.vdisa.schedule);
    read_key(v, "strategy", c.vdisa.strategy);
    read_key(v, "seed", c.vdisa.seed);
  }
  if (j.contains("stopping")) {
    const json& s = j.at("stopping");
    reject_unknown(s, "stopping", {"rule", "tol", "max_iters"});
    std::string rule = StoppingRule::kind_name(c.stop.kind);
    read_key(s, "rule", rule);
    c.stop.kind = StoppingRule::parse_kind(rule);
    read_key(s, "tol", c.stop.tol);
    read_key(s, "max_iters", c.stop.max_iters);
  }
  if (j.contains("reference")) {
    const json& r = j.at("reference");
    reject_unknown(r, "reference", {"tol", "max_iters"});
    read_key(r, "tol", c.reference_tol);
    read_key(r, "max_iters", c.reference_max_iters);
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    reject_unknown(o, "output", {"dir"});
    read_key(o, "dir", c.output_dir);
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json j;
  j["problem"] = {{"kind", problem.kind},       {"agents", problem.agents},   {"dim", problem.dim},
                  {"u_rows", problem.u_rows},   {"u_scale", problem.u_scale}, {"seed", problem.seed},
                  {"samples", problem.samples}, {"separation", problem.separation},
                  {"dataset", problem.dataset}};
  j["topology"] = topology.to_string();
  j["solver"] = {{"name", solver.name},
                 {"tau", solver.tau ? json(*solver.tau) : json(nullptr)},
                 {"beta", solver.beta ? json(*solver.beta) : json(nullptr)},
                 {"baseline_policy", solver.baseline_policy},
                 {"baseline_beta", solver.baseline_beta}};
  j["vdisa"] = {{"schedule", vdisa.schedule}, {"strategy", vdisa.strategy}, {"seed", vdisa.seed}};
  j["stopping"] = {{"rule", StoppingRule::kind_name(stop.kind)}, {"tol", stop.tol}, {"max_iters", stop.max_iters}};
  j["reference"] = {{"tol", reference_tol}, {"max_iters", reference_max_iters}};
  j["output"] = {{"dir", output_dir}};
  return j;
}

std::string ExperimentConfig::hash() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::validate() const {
  if (problem.kind != "lasso" && problem.kind != "logistic")
    throw ConfigError("problem.kind must be 'lasso' or 'logistic'");
  if (problem.agents == 0) throw ConfigError("problem.agents must be at least 1");
  if (problem.dim == 0 && problem.dataset.empty()) throw ConfigError("problem.dim must be at least 1");
  if (!(problem.u_scale > 0.0)) throw ConfigError("problem.u_scale must be positive");
  if (!(problem.separation >= 0.0)) throw ConfigError("problem.separation must be nonnegative");
  if (problem.kind == "logistic" && problem.dataset.empty() && problem.samples < problem.agents)
    throw ConfigError("problem.samples must be at least the number of agents");
  static const char* names[] = {"disa", "vdisa", "condat_vu", "lalm", "nids"};
  bool known = false;
  for (const char* n : names) known = known || solver.name == n;
  if (!known) throw ConfigError("unknown solver '" + solver.name + "'");
  if (solver.tau && !(*solver.tau > 0.0)) throw ConfigError("solver.tau must be positive");
  if (solver.beta && !(*solver.beta > 0.0)) throw ConfigError("solver.beta must be positive");
  parse_baseline_policy(solver.baseline_policy);
  if (!(solver.baseline_beta > 0.0)) throw ConfigError("solver.baseline_beta must be positive");
  if (solver.name == "vdisa") {
    EpsilonSchedule::parse(vdisa.schedule);
    InexactProxStrategy::parse(vdisa.strategy);
  }
  if (!(stop.tol > 0.0)) throw ConfigError("stopping.tol must be positive");
  if (!(reference_tol > 0.0)) throw ConfigError("reference.tol must be positive");
  if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

ProblemInstance build_instance(const ExperimentConfig& cfg) {
  const auto& p = cfg.problem;
  if (p.kind == "lasso") return make_generalized_lasso(p.agents, p.dim, p.seed, p.u_scale, p.u_rows);
  LabeledData data;
  if (!p.dataset.empty()) {
    std::ifstream in(p.dataset);
    if (!in) throw ConfigError("cannot open dataset '" + p.dataset + "'");
    data = parse_libsvm(in);
  } else {
    data = make_synthetic_classification(p.samples, p.dim, p.seed, p.separation);
  }
  return make_distributed_logistic(split_samples(data, p.agents, p.seed), p.u_rows, p.seed, p.u_scale);
}

namespace {

ProblemInstance smooth_part(const ProblemInstance& inst) {
  std::vector<AgentProblem> agents;
  const auto n = static_cast<Eigen::Index>(inst.primal_dim());
  for (const auto& a : inst.agents()) agents.push_back({a.f, make_zero_prox(), Matrix(0, n)});
  InstanceMetadata meta = inst.metadata();
  meta.name += "_smooth";
  return ProblemInstance(std::move(agents), meta);
}

StepSizes disa_steps(const ExperimentConfig& cfg, const ProblemInstance& inst) {
  const Vector lipschitz = inst.lipschitz_constants();
  if (cfg.solver.tau) {
    const Vector tau = Vector::Constant(lipschitz.size(), *cfg.solver.tau);
    return validate_step_sizes(lipschitz, tau, cfg.solver.beta.value_or(0.5 / *cfg.solver.tau));
  }
  StepSizes s = default_step_sizes(
      lipschitz, cfg.problem.kind == "lasso" ? StepPolicy::lasso_default : StepPolicy::logistic_default);
  if (cfg.solver.beta) s = validate_step_sizes(lipschitz, s.tau, *cfg.solver.beta);
  return s;
}

BaselineSteps baseline_steps(const ExperimentConfig& cfg, const ProblemInstance& inst, double operator_norm_sq) {
  BaselineSteps s = baseline_step_sizes(inst.lipschitz_constants(), parse_baseline_policy(cfg.solver.baseline_policy),
                                        operator_norm_sq, cfg.solver.baseline_beta);
  if (cfg.solver.tau) s.tau = *cfg.solver.tau;
  if (cfg.solver.beta) s.beta = *cfg.solver.beta;
  return s;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Prepared {
  ProblemInstance inst;
  Graph graph;
  MixingMatrix w;
};

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& r) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  {
    std::ofstream out(dir / "trace.csv");
    write_trace_csv(out, r.trace);
  }
  {
    std::ofstream out(dir / "summary.json");
    out << r.summary.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "plot_iter.csv");
    emit_plot_data(out, {r.trace}, PlotAxis::iter);
  }
  {
    std::ofstream out(dir / "plot_time.csv");
    emit_plot_data(out, {r.trace}, PlotAxis::time);
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files) {
  ExperimentResult result;
  json& summary = result.summary;
  summary["config_hash"] = cfg.hash();
  summary["config"] = cfg.to_json();
  summary["solver"] = cfg.solver.name;
  summary["seed"] = cfg.problem.seed;
  summary["partial"] = false;

  auto fail = [&](ExitCode code, const std::string& kind, const std::string& what) {
    result.exit = code;
    summary["error"] = {{"kind", kind}, {"message", what}};
    summary["converged"] = false;
  };

  std::optional<Prepared> prep;
  std::optional<ProblemInstance> smooth;
  StepSizes steps;
  BaselineSteps bsteps;
  std::optional<ReformulatedProblem> reform;
  try {
    cfg.validate();
    ProblemInstance inst = build_instance(cfg);
    Graph g = build_graph(cfg.topology, inst.agent_count());
    MixingMatrix w = metropolis_weights(g);
    prep.emplace(Prepared{std::move(inst), std::move(g), std::move(w)});
    const std::string& name = cfg.solver.name;
    if (name == "disa" || name == "vdisa") {
      steps = disa_steps(cfg, prep->inst);
    } else if (name == "condat_vu" || name == "lalm") {
      reform.emplace(prep->inst, prep->w);
      const double norm = name == "condat_vu" ? reform->c_norm_sq() : reform->b_norm_sq();
      bsteps = baseline_steps(cfg, prep->inst, norm);
      summary["operator_norm_sq"] = norm;
      summary["step_condition_holds"] = baseline_condition_holds(bsteps, norm, reform->smooth_lipschitz());
    } else {
      smooth.emplace(smooth_part(prep->inst));
      bsteps.tau = cfg.solver.tau.value_or(1.0 / smooth->lipschitz_constants().maxCoeff());
    }
  } catch (const StepSizeViolation& e) {
    fail(ExitCode::config_error, "StepSizeViolation", e.what());
  } catch (const Error& e) {
    fail(ExitCode::config_error, "ConfigError", e.what());
  }
  if (result.exit != ExitCode::ok) {
    if (write_files) write_outputs(cfg, result);
    return result;
  }

  const ProblemInstance& inst = smooth ? *smooth : prep->inst;
  summary["instance"] = {{"name", inst.metadata().name},
                         {"agents", inst.agent_count()},
                         {"dim", inst.primal_dim()},
                         {"map_dim", inst.map_dim()},
                         {"u_scale", inst.metadata().u_scale},
                         {"max_map_norm_sq", inst.map_dim() > 0 ? inst.max_map_norm_sq() : 0.0}};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ReferenceSolution ref = reference_solution(inst, prep->w, cfg.reference_tol, cfg.reference_max_iters);
    summary["reference"] = {{"objective_star", ref.objective_star},
                            {"certificate", ref.certificate},
                            {"iterations", ref.iterations},
                            {"x_star_norm", ref.x_star.norm()}};
    RunOptions opts;
    opts.stop = cfg.stop;
    opts.x_star = ref.x_star;
    opts.solver_name = cfg.solver.name;
    opts.seed = cfg.problem.seed;
    opts.config_hash = cfg.hash();
    const std::string& name = cfg.solver.name;
    if (name == "disa") {
      DisaEngine engine(inst, prep->w, steps);
      result.trace = disa_run(engine, opts);
    } else if (name == "vdisa") {
      InexactProxStrategy strat = InexactProxStrategy::parse(cfg.vdisa.strategy);
      strat.seed = cfg.vdisa.seed;
      VdisaEngine engine(inst, prep->w, steps, EpsilonSchedule::parse(cfg.vdisa.schedule), strat);
      result.trace = vdisa_run(engine, opts);
    } else if (name == "condat_vu") {
      result.trace = condat_vu_run(*reform, bsteps, opts);
    } else if (name == "lalm") {
      result.trace = lalm_run(*reform, bsteps, opts);
    } else {
      result.trace = nids_reference_run(inst, prep->w, bsteps.tau, opts);
    }
    if (name == "disa" || name == "vdisa") {
      summary["steps"] = {{"tau_min", steps.tau.minCoeff()},
                          {"tau_max", steps.tau_max},
                          {"beta", steps.beta},
                          {"strict", steps.strict}};
    } else {
      summary["steps"] = {{"tau", bsteps.tau}, {"beta", bsteps.beta}};
    }
    if (result.trace.status == RunStatus::diverged) {
      fail(ExitCode::diverged, "Divergence", "iterates left the divergence threshold");
    }
  } catch (const BudgetExceeded& e) {
    result.trace = e.trace();
    fail(ExitCode::budget, "BudgetExceeded", e.what());
    summary["partial"] = true;
  } catch (const Error& e) {
    fail(ExitCode::config_error, "Error", e.what());
    summary["partial"] = true;
  }
  const double wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  result.trace.meta.config_hash = cfg.hash();
  result.trace.meta.seed = cfg.problem.seed;
  result.trace.meta.solver = cfg.solver.name;
  summary["status"] = to_string(result.trace.status);
  summary["iterations"] = result.trace.iterations();
  summary["wallclock_ms"] = wall;
  summary["solver_ms"] = result.trace.rows.empty() ? 0.0 : result.trace.rows.back().ms;
  if (!summary.contains("converged")) summary["converged"] = result.trace.status == RunStatus::converged;
  if (!result.trace.rows.empty()) {
    const TraceRow& last = result.trace.rows.back();
    summary["final"] = {{"re_err", number_or_null(last.re_err)},
                        {"consensus", number_or_null(last.consensus)},
                        {"kkt_norm", number_or_null(last.kkt_norm)},
                        {"objective", number_or_null(last.objective)}};
  }
  if (write_files) write_outputs(cfg, result);
  return result;
}

std::vector<SweepRow> sweep_u_scale(const ExperimentConfig& cfg, const std::vector<double>& scales,
                                    const std::vector<std::string>& solvers, bool write_files) {
  if (scales.empty()) throw ConfigError("sweep needs at least one scale");
  std::vector<SweepRow> rows;
  for (double scale : scales) {
    SweepRow row;
    row.scale = scale;
    for (const auto& solver : solvers) {
      ExperimentConfig c = cfg;
      c.problem.u_scale = scale;
      c.solver.name = solver;
      if (solver == "disa") {
        c.solver.tau.reset();
        c.solver.beta.reset();
      }
      std::ostringstream dir;
      dir << cfg.output_dir << "/sweep_" << scale << "_" << solver;
      c.output_dir = dir.str();
      const auto t0 = std::chrono::steady_clock::now();
      ExperimentResult r = run_experiment(c, write_files);
      SweepCell cell;
      cell.solver = solver;
      cell.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      cell.iterations = r.trace.iterations();
      cell.status = r.trace.status;
      switch (r.exit) {
        case ExitCode::ok: cell.outcome = std::to_string(cell.iterations); break;
        case ExitCode::budget: cell.outcome = ">budget"; break;
        case ExitCode::diverged: cell.outcome = "diverged"; break;
        default: cell.outcome = "error"; break;
      }
      if (r.summary.contains("instance")) row.max_map_norm_sq = r.summary["instance"]["max_map_norm_sq"].get<double>();
      row.cells.push_back(cell);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "scale,max_map_norm_sq";
  if (!rows.empty())
    for (const auto& c : rows.front().cells) out << ',' << c.solver << ',' << c.solver << "_ms";
  out << '\n';
  for (const auto& r : rows) {
    out << r.scale << ',' << r.max_map_norm_sq;
    for (const auto& c : r.cells) out << ',' << c.outcome << ',' << c.wallclock_ms;
    out << '\n';
  }
}

void emit_plot_data(std::ostream& out, const std::vector<Trace>& traces, PlotAxis axis) {
  if (traces.empty()) throw EmptyTrace("plot data needs at least one trace");
  out << "solver," << (axis == PlotAxis::iter ? "iter" : "ms") << ",re_err\n";
  char buf[40];
  for (const auto& t : traces) {
    for (const auto& r : t.rows) {
      out << t.meta.solver << ',';
      if (axis == PlotAxis::iter) {
        out << r.iter;
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", r.ms);
        out << buf;
      }
      out << ',';
      if (!std::isnan(r.re_err)) {
        std::snprintf(buf, sizeof buf, "%.17g", r.re_err);
        out << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace disa
