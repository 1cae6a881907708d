#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hclbf/experiments.hpp"
#include "hclbf/geometry.hpp"
#include "hclbf/pde_solver.hpp"
#include "hclbf/simulator.hpp"

namespace hclbf::io {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 42;
/// When set, relative output paths are resolved against this directory.
inline constexpr const char* kOutDirEnv = "HCLBF_OUT_DIR";

enum ExitCode : int { kOk = 0, kParseError = 2, kSolverError = 3, kSimulationError = 4 };

/// Malformed or unreadable input (config, field file, flag value).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses "<nx>x<ny>", e.g. "201x201".
GridSpec parse_grid(const std::string& text, const Rect& domain);

/// Rectangles are [xmin, xmax, ymin, ymax].
nlohmann::json environment_to_json(const Environment& env);
Environment environment_from_json(const nlohmann::json& j);
/// Reads an environment config file; throws ParseError.
Environment read_environment(const std::filesystem::path& path);

/// Field export: nx, ny, domain, rhs, level, mask tags (0 free, 1 goal,
/// 2 unsafe) and values, both row-major with x fastest, plus the
/// environment the field was solved for. Doubles are written in shortest
/// round-trip form, so reading back gives bit-identical values.
struct FieldFile {
  ScalarField field;
  Environment env;
  std::optional<ProblemId> problem;
};

nlohmann::json field_to_json(const FieldFile& file);
FieldFile field_from_json(const nlohmann::json& j);
FieldFile read_field(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

/// Resolves relative paths against $HCLBF_OUT_DIR when it is set.
std::filesystem::path resolve_output(const std::filesystem::path& path);

/// CSV with header step,t,<state names>,V,label.
std::string trace_csv(SystemKind kind, const Trajectory& traj, double dt);
std::vector<std::string> state_names(SystemKind kind);

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);
nlohmann::json report_to_json(const ExperimentReport& report);

/// Sweep config keys: problem, systems, rhs, sigmas, trials, seed,
/// controller, and optional dt, horizon, grid ("NXxNY").
SweepConfig sweep_from_json(const nlohmann::json& j);
nlohmann::json sweep_to_json(const SweepConfig& sweep);

/// Contour export: "x" (nx coordinates), "y" (ny coordinates) and "values"
/// as ny rows of nx values.
nlohmann::json contour_to_json(const ScalarField& field);

struct Manifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = kDefaultSeed;
  std::optional<double> solver_residual;
  std::string started;
  std::string finished;
};

nlohmann::json manifest_to_json(const Manifest& manifest);
/// UTC time in ISO 8601.
std::string utc_timestamp();

// Subcommands. Each writes its outputs atomically, reports progress on
// `out`, diagnostics on `err`, and returns an ExitCode.

struct SolveArgs {
  std::optional<ProblemId> problem;
  std::optional<std::filesystem::path> config;  // environment config, overrides problem
  std::optional<double> rhs;                    // defaults to the environment's laplacian_rhs
  std::optional<std::string> grid;
  std::filesystem::path out = "field.json";
};
int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);

struct SimulateArgs {
  std::filesystem::path field;
  SystemKind system = SystemKind::Roomba;
  double sigma = 0.0;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::vector<double>> x0;  // otherwise drawn from the problem's sampler
  std::optional<double> dt;
  std::optional<long> horizon;
  ControllerMode mode = ControllerMode::DescentAligned;
  std::filesystem::path out = "trace.csv";
};
int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);

struct ExperimentArgs {
  std::optional<std::filesystem::path> config;  // sweep config, overrides the flags below
  SweepConfig sweep;
  std::filesystem::path out = "experiment";
};
int cmd_experiment(const ExperimentArgs& args, std::ostream& out, std::ostream& err);

struct ContourArgs {
  std::filesystem::path field;
  std::filesystem::path out = "contour.json";
};
int cmd_contour(const ContourArgs& args, std::ostream& out, std::ostream& err);

}  // namespace hclbf::io
