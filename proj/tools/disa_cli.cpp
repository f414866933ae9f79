// Batch runner: one experiment per invocation, or a u_scale sweep when
// --sweep-scales is given. Every output is reproducible from the config file
// plus the command-line overrides, which are folded into the stored config.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "disa/experiment.hpp"

namespace {

std::vector<double> parse_scales(const std::string& csv) {
  std::vector<double> out;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw disa::ConfigError("bad scale '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw disa::ConfigError("--sweep-scales needs at least one value");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed composite optimization experiment runner"};
  std::string config_path;
  std::optional<std::string> solver;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_iters;
  std::optional<double> tol;
  std::optional<std::string> out_dir;
  std::optional<std::string> sweep;
  app.add_option("--config", config_path, "JSON experiment config (defaults apply when omitted)");
  app.add_option("--solver", solver, "disa | vdisa | condat_vu | lalm | nids");
  app.add_option("--seed", seed, "problem seed");
  app.add_option("--max-iters", max_iters, "iteration budget");
  app.add_option("--tol", tol, "stopping tolerance");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--sweep-scales", sweep, "comma separated u_scale values");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(disa::ExitCode::config_error);
  }

  try {
    disa::ExperimentConfig cfg = config_path.empty() ? disa::ExperimentConfig{} : disa::ExperimentConfig::load(config_path);
    if (solver) cfg.solver.name = *solver;
    if (seed) cfg.problem.seed = *seed;
    if (max_iters) cfg.stop.max_iters = *max_iters;
    if (tol) cfg.stop.tol = *tol;
    if (out_dir) cfg.output_dir = *out_dir;

    if (sweep) {
      const auto scales = parse_scales(*sweep);
      cfg.validate();
      std::vector<std::string> solvers{"disa", "condat_vu", "lalm"};
      if (solver) solvers = {*solver};
      const auto rows = disa::sweep_u_scale(cfg, scales, solvers, true);
      std::filesystem::create_directories(cfg.output_dir);
      std::ofstream file(std::filesystem::path(cfg.output_dir) / "sweep.csv");
      disa::write_sweep_csv(file, rows);
      disa::write_sweep_csv(std::cout, rows);
      return 0;
    }

    const disa::ExperimentResult r = disa::run_experiment(cfg, true);
    std::cout << r.summary.dump(2) << '\n';
    if (r.exit != disa::ExitCode::ok && r.summary.contains("error"))
      std::cerr << "error: " << r.summary["error"]["message"].get<std::string>() << '\n';
    return static_cast<int>(r.exit);
  } catch (const disa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(disa::ExitCode::config_error);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(disa::ExitCode::config_error);
  }
}
