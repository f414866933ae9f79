#pragma once

#include "disa/baselines.hpp"
#include "disa/vdisa.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace disa {

// Everything a run depends on. JSON layout (all keys optional, unknown keys
// rejected):
//
//   {
//     "problem":  {"kind": "lasso"|"logistic", "agents": 4, "dim": 50,
//                  "u_rows": 5, "u_scale": 1.0, "seed": 42,
//                  "samples": 1000, "separation": 3.0,
//                  "dataset": "path/to/file.libsvm"},
//     "topology": "line" | "cycle" | "star" | "complete" | "erdos_renyi(p,seed)",
//     "solver":   {"name": "disa"|"vdisa"|"condat_vu"|"lalm"|"nids",
//                  "tau": 0.25, "beta": 2.0,
//                  "baseline_policy": "fig4"|"table3"|"logistic",
//                  "baseline_beta": 0.01},
//     "vdisa":    {"schedule": "power(1,2)", "strategy": "injected", "seed": 0},
//     "stopping": {"rule": "relative_error"|"kkt"|"max_iters", "tol": 1e-7,
//                  "max_iters": 50000},
//     "reference": {"tol": 1e-12, "max_iters": 2000000},
//     "output":   {"dir": "out"}
//   }
struct ExperimentConfig {
  struct Problem {
    std::string kind = "lasso";
    std::size_t agents = 4;
    std::size_t dim = 50;
    std::size_t u_rows = 5;
    double u_scale = 1.0;
    std::uint64_t seed = 42;
    std::size_t samples = 1000;
    double separation = 3.0;
    std::string dataset;
  } problem;
  TopologySpec topology;
  struct Solver {
    std::string name = "disa";
    std::optional<double> tau;
    std::optional<double> beta;
    std::string baseline_policy = "fig4";
    double baseline_beta = 0.01;
  } solver;
  struct Inexact {
    std::string schedule = "power(1,2)";
    std::string strategy = "injected";
    std::uint64_t seed = 0;
  } vdisa;
  StoppingRule stop;
  double reference_tol = 1e-12;
  std::size_t reference_max_iters = 2000000;
  std::string output_dir = "out";

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  nlohmann::json to_json() const;
  // FNV-1a 64 of the canonical JSON, as 16 hex digits.
  std::string hash() const;
  // Checks every field against the module preconditions; throws ConfigError.
  void validate() const;
};

ProblemInstance build_instance(const ExperimentConfig& cfg);

enum class ExitCode : int { ok = 0, config_error = 2, diverged = 3, budget = 4 };

struct ExperimentResult {
  ExitCode exit = ExitCode::ok;
  Trace trace;
  nlohmann::json summary;
};

// Builds instance, reference solution and solver, runs, and (when
// write_files) writes trace.csv, summary.json, plot_iter.csv and plot_time.csv
// under the output directory. Module errors become a nonzero exit code and a
// summary with "error" set; budget exhaustion keeps the partial trace.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files = true);

struct SweepCell {
  std::string solver;
  std::string outcome;  // iteration count, ">budget" or "diverged"
  std::size_t iterations = 0;
  RunStatus status = RunStatus::completed;
  double wallclock_ms = 0.0;
};

struct SweepRow {
  double scale = 1.0;
  double max_map_norm_sq = 0.0;  // max_i ‖U_iU_iᵀ‖
  std::vector<SweepCell> cells;
};

// One row per scale; DISA uses its default step sizes, baselines their
// configured policy. A failing cell is recorded and the sweep continues.
std::vector<SweepRow> sweep_u_scale(const ExperimentConfig& cfg, const std::vector<double>& scales,
                                    const std::vector<std::string>& solvers = {"disa", "condat_vu", "lalm"},
                                    bool write_files = false);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

enum class PlotAxis { iter, time };

// Long format "solver,x,re_err", one block per trace.
void emit_plot_data(std::ostream& out, const std::vector<Trace>& traces, PlotAxis axis);

}  // namespace disa
