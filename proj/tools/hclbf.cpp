#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hclbf/cli_io.hpp"

namespace {

using namespace hclbf;

const std::vector<std::string> kProblems{"problem-i", "problem-ii", "quadrotor2d"};
const std::vector<std::string> kSystems{"roomba", "diffdrive", "carrobot", "quadrotor2d"};
const std::vector<std::string> kModes{"descent-aligned", "paper-verbatim"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonic control Lyapunov barrier functions: solve, simulate, experiment"};
  app.set_version_flag("--version", std::string(io::kToolVersion));
  app.require_subcommand(1);

  io::SolveArgs solve_args;
  std::string solve_problem = "problem-i";
  std::string solve_config;
  std::optional<double> solve_rhs;
  std::string solve_grid;
  auto* solve = app.add_subcommand("solve", "Solve the boundary-value problem and export the field");
  solve->add_option("--problem", solve_problem, "Builtin problem")->check(CLI::IsMember(kProblems));
  solve->add_option("--config", solve_config, "Environment config (JSON), replaces --problem");
  solve->add_option("--rhs", solve_rhs, "Laplacian right-hand side");
  solve->add_option("--grid", solve_grid, "Grid as <nx>x<ny>");
  solve->add_option("--out", solve_args.out, "Field file")->capture_default_str();

  io::SimulateArgs sim_args;
  std::string sim_system = "roomba";
  std::string sim_mode = "descent-aligned";
  std::vector<double> sim_x0;
  std::optional<double> sim_dt;
  std::optional<long> sim_horizon;
  auto* simulate = app.add_subcommand("simulate", "Roll out one closed-loop trajectory");
  simulate->add_option("--field", sim_args.field, "Field file from 'solve'")->required();
  simulate->add_option("--system", sim_system, "System")->check(CLI::IsMember(kSystems));
  simulate->add_option("--sigma", sim_args.sigma, "Input noise standard deviation")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim_args.seed, "Seed")->capture_default_str();
  simulate->add_option("--x0", sim_x0, "Initial state, comma separated")->delimiter(',');
  simulate->add_option("--dt", sim_dt, "Step size")->check(CLI::PositiveNumber);
  simulate->add_option("--horizon", sim_horizon, "Maximum number of steps")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--controller", sim_mode, "Controller variant")
      ->check(CLI::IsMember(kModes));
  simulate->add_option("--out", sim_args.out, "Trace CSV")->capture_default_str();

  io::ExperimentArgs exp_args;
  std::string exp_config;
  std::string exp_problem;
  std::vector<std::string> exp_systems;
  std::vector<double> exp_rhs;
  std::vector<double> exp_sigma;
  std::optional<long> exp_trials;
  std::optional<std::uint64_t> exp_seed;
  std::optional<double> exp_dt;
  std::optional<long> exp_horizon;
  std::string exp_mode;
  std::string exp_grid;
  auto* experiment = app.add_subcommand("experiment", "Monte Carlo sweep over systems, rhs, sigma");
  experiment->add_option("--config", exp_config, "Sweep config (JSON), replaces the flags below");
  experiment->add_option("--problem", exp_problem, "Builtin problem")
      ->check(CLI::IsMember(kProblems));
  experiment->add_option("--system", exp_systems, "Systems (repeatable or comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember(kSystems));
  experiment->add_option("--rhs", exp_rhs, "Right-hand sides")->delimiter(',');
  experiment->add_option("--sigma", exp_sigma, "Noise levels")->delimiter(',');
  experiment->add_option("--trials", exp_trials, "Trials per cell")->check(CLI::PositiveNumber);
  experiment->add_option("--seed", exp_seed, "Master seed");
  experiment->add_option("--dt", exp_dt, "Step size")->check(CLI::PositiveNumber);
  experiment->add_option("--horizon", exp_horizon, "Maximum number of steps")
      ->check(CLI::PositiveNumber);
  experiment->add_option("--controller", exp_mode, "Controller variant")
      ->check(CLI::IsMember(kModes));
  experiment->add_option("--grid", exp_grid, "Grid as <nx>x<ny>");
  experiment->add_option("--out", exp_args.out, "Output directory")->capture_default_str();

  io::ContourArgs contour_args;
  auto* contour = app.add_subcommand("contour", "Export a plot-ready grid from a field file");
  contour->add_option("--field", contour_args.field, "Field file from 'solve'")->required();
  contour->add_option("--out", contour_args.out, "Contour grid file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : io::kParseError;
  }

  try {
    if (*solve) {
      if (!solve_config.empty()) solve_args.config = solve_config;
      if (solve->count("--problem") > 0 || solve_config.empty()) {
        solve_args.problem = parse_problem_id(solve_problem);
      }
      solve_args.rhs = solve_rhs;
      if (!solve_grid.empty()) solve_args.grid = solve_grid;
      return io::cmd_solve(solve_args, std::cout, std::cerr);
    }
    if (*simulate) {
      sim_args.system = parse_system_kind(sim_system);
      sim_args.mode = parse_controller_mode(sim_mode);
      if (!sim_x0.empty()) sim_args.x0 = sim_x0;
      sim_args.dt = sim_dt;
      sim_args.horizon = sim_horizon;
      return io::cmd_simulate(sim_args, std::cout, std::cerr);
    }
    if (*experiment) {
      if (!exp_config.empty()) exp_args.config = exp_config;
      SweepConfig& s = exp_args.sweep;
      if (!exp_problem.empty()) {
        s.problem = parse_problem_id(exp_problem);
        if (s.problem == ProblemId::Quadrotor2D) {
          s.systems = {SystemKind::Quadrotor2D};
          s.rhs = {0.0};
          s.sigmas = {0.0};
        }
      }
      if (!exp_systems.empty()) {
        s.systems.clear();
        for (const auto& name : exp_systems) s.systems.push_back(parse_system_kind(name));
      }
      if (!exp_rhs.empty()) s.rhs = exp_rhs;
      if (!exp_sigma.empty()) s.sigmas = exp_sigma;
      if (exp_trials) s.n_trials = *exp_trials;
      if (exp_seed) s.seed = *exp_seed;
      if (!exp_mode.empty()) s.mode = parse_controller_mode(exp_mode);
      s.dt = exp_dt;
      s.horizon = exp_horizon;
      if (!exp_grid.empty()) {
        s.grid = io::parse_grid(exp_grid, builtin_problem(s.problem).env.domain);
      }
      return io::cmd_experiment(exp_args, std::cout, std::cerr);
    }
    if (*contour) return io::cmd_contour(contour_args, std::cout, std::cerr);
  } catch (const io::ParseError& e) {
    std::cerr << e.what() << '\n';
    return io::kParseError;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return io::kSimulationError;
  }
  return io::kOk;
}
