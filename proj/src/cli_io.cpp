#include "hclbf/cli_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

namespace hclbf::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json rect_to_json(const Rect& r) { return json::array({r.xmin, r.xmax, r.ymin, r.ymax}); }

Rect rect_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("rectangle must be [xmin, xmax, ymin, ymax]");
  Rect r{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  r.validate();
  return r;
}

json parse_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

// json::get errors and domain validation both surface as ParseError.
template <typename F>
auto parse_guard(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError("invalid " + what + ": " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path manifest_path(const fs::path& out) {
  fs::path p = out;
  p += ".manifest.json";
  return p;
}

void write_manifest(const fs::path& path, Manifest manifest) {
  manifest.finished = utc_timestamp();
  atomic_write(path, dump(manifest_to_json(manifest)));
}

}  // namespace

GridSpec parse_grid(const std::string& text, const Rect& domain) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw ParseError("grid must look like <nx>x<ny>, got '" + text + "'");
  GridSpec g;
  g.domain = domain;
  try {
    std::size_t used = 0;
    g.nx = std::stoi(text.substr(0, x), &used);
    if (used != x) throw ParseError("");
    const std::string rest = text.substr(x + 1);
    g.ny = std::stoi(rest, &used);
    if (used != rest.size()) throw ParseError("");
  } catch (const std::exception&) {
    throw ParseError("grid must look like <nx>x<ny>, got '" + text + "'");
  }
  parse_guard("grid", [&] {
    g.validate();
    return 0;
  });
  return g;
}

json environment_to_json(const Environment& env) {
  json unsafe = json::array();
  for (const auto& r : env.unsafe) unsafe.push_back(rect_to_json(r));
  return {{"domain", rect_to_json(env.domain)},
          {"goal", rect_to_json(env.goal)},
          {"unsafe", unsafe},
          {"barrier_level", env.barrier_level},
          {"laplacian_rhs", env.laplacian_rhs}};
}

Environment environment_from_json(const json& j) {
  return parse_guard("environment", [&] {
    Environment env;
    env.domain = rect_from_json(j.at("domain"));
    env.goal = rect_from_json(j.at("goal"));
    for (const auto& r : j.at("unsafe")) env.unsafe.push_back(rect_from_json(r));
    env.barrier_level = j.value("barrier_level", 1.0);
    env.laplacian_rhs = j.value("laplacian_rhs", 0.0);
    env.validate();
    return env;
  });
}

Environment read_environment(const fs::path& path) {
  return environment_from_json(parse_json_file(path));
}

json field_to_json(const FieldFile& file) {
  const ScalarField& f = file.field;
  std::vector<int> tags(f.mask.tags.size());
  for (std::size_t k = 0; k < tags.size(); ++k) tags[k] = static_cast<int>(f.mask.tags[k]);
  json j = {{"format", "hclbf-field"},
            {"version", 1},
            {"nx", f.grid.nx},
            {"ny", f.grid.ny},
            {"domain", rect_to_json(f.grid.domain)},
            {"rhs", f.rhs},
            {"level", f.level},
            {"iterations", f.stats.iterations},
            {"residual", f.stats.residual},
            {"environment", environment_to_json(file.env)},
            {"mask", tags},
            {"values", f.values}};
  if (file.problem) j["problem"] = std::string(to_string(*file.problem));
  return j;
}

FieldFile field_from_json(const json& j) {
  return parse_guard("field file", [&] {
    if (j.value("format", "") != "hclbf-field") throw ParseError("not a field file");
    FieldFile file;
    ScalarField& f = file.field;
    f.grid.nx = j.at("nx").get<int>();
    f.grid.ny = j.at("ny").get<int>();
    f.grid.domain = rect_from_json(j.at("domain"));
    f.grid.validate();
    f.rhs = j.at("rhs").get<double>();
    f.level = j.at("level").get<double>();
    f.stats.iterations = j.value("iterations", 0L);
    f.stats.residual = j.value("residual", 0.0);
    f.values = j.at("values").get<std::vector<double>>();
    const auto tags = j.at("mask").get<std::vector<int>>();
    if (f.values.size() != f.grid.size() || tags.size() != f.grid.size()) {
      throw ParseError("field file holds " + std::to_string(f.values.size()) + " values and " +
                       std::to_string(tags.size()) + " mask tags for a " +
                       std::to_string(f.grid.nx) + "x" + std::to_string(f.grid.ny) + " grid");
    }
    f.mask.grid = f.grid;
    f.mask.tags.resize(tags.size());
    for (std::size_t k = 0; k < tags.size(); ++k) {
      if (tags[k] < 0 || tags[k] > 2) throw ParseError("mask tag out of range");
      f.mask.tags[k] = static_cast<NodeTag>(tags[k]);
    }
    f.mask.validate();
    file.env = environment_from_json(j.at("environment"));
    if (j.contains("problem")) file.problem = parse_problem_id(j.at("problem").get<std::string>());
    return file;
  });
}

FieldFile read_field(const fs::path& path) { return field_from_json(parse_json_file(path)); }

void atomic_write(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  fs::rename(tmp, path);
}

fs::path resolve_output(const fs::path& path) {
  const char* dir = std::getenv(kOutDirEnv);
  if (dir == nullptr || *dir == '\0' || path.is_absolute()) return path;
  return fs::path(dir) / path;
}

std::vector<std::string> state_names(SystemKind kind) {
  switch (kind) {
    case SystemKind::Roomba:
    case SystemKind::DiffDrive: return {"x", "y", "theta"};
    case SystemKind::CarRobot: return {"x", "y", "theta", "psi"};
    case SystemKind::Quadrotor2D: return {"x", "xdot", "z", "zdot", "theta", "thetadot"};
  }
  return {};
}

std::string trace_csv(SystemKind kind, const Trajectory& traj, double dt) {
  std::ostringstream os;
  os.precision(17);
  os << "step,t";
  for (const auto& n : state_names(kind)) os << ',' << n;
  os << ",V,label\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    os << k << ',' << static_cast<double>(k) * dt;
    for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) os << ',' << traj.states[k][i];
    os << ',' << traj.values[k] << ',' << to_string(traj.labels[k]) << '\n';
  }
  return os.str();
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  const SystemParams& p = cfg.sim.params;
  json j = {{"problem", std::string(to_string(cfg.problem))},
            {"system", std::string(to_string(cfg.system))},
            {"rhs", cfg.rhs},
            {"sigma", cfg.sigma},
            {"trials", cfg.n_trials},
            {"seed", cfg.seed},
            {"controller", std::string(to_string(cfg.mode))},
            {"dt", cfg.sim.dt},
            {"horizon", cfg.sim.horizon},
            {"integrator", std::string(to_string(cfg.sim.integrator))},
            {"rel_tol", cfg.sim.rel_tol},
            {"abs_tol", cfg.sim.abs_tol},
            {"params",
             {{"r", p.r},
              {"d", p.d},
              {"l", p.l},
              {"m", p.m},
              {"ixx", p.ixx},
              {"g", p.g},
              {"quad_input_lo", p.quad_input_lo},
              {"quad_input_hi", p.quad_input_hi},
              {"quad_descent_speed", p.quad_descent_speed},
              {"car_steer_limit", p.car_steer_limit}}}};
  if (cfg.grid) j["grid"] = std::to_string(cfg.grid->nx) + "x" + std::to_string(cfg.grid->ny);
  return j;
}

json report_to_json(const ExperimentReport& r) {
  return {{"config", experiment_config_to_json(r.config)},
          {"n_trials", r.n_trials},
          {"n_success", r.n_success},
          {"unsafe_count", r.unsafe_count},
          {"noreach_count", r.noreach_count},
          {"integrator_failures", r.integrator_failures},
          {"mu_T", r.mu_t},
          {"sigma_T", r.sigma_t},
          {"time_unit", std::string(to_string(r.unit))},
          {"solver_residual", r.solver_residual},
          {"wall_seconds", r.wall_seconds}};
}

SweepConfig sweep_from_json(const json& j) {
  return parse_guard("experiment config", [&] {
    SweepConfig s;
    s.problem = parse_problem_id(j.at("problem").get<std::string>());
    if (j.contains("systems")) {
      s.systems.clear();
      for (const auto& k : j.at("systems")) s.systems.push_back(parse_system_kind(k.get<std::string>()));
    } else if (s.problem == ProblemId::Quadrotor2D) {
      s.systems = {SystemKind::Quadrotor2D};
    }
    if (j.contains("rhs")) s.rhs = j.at("rhs").get<std::vector<double>>();
    if (j.contains("sigmas")) s.sigmas = j.at("sigmas").get<std::vector<double>>();
    s.n_trials = j.value("trials", s.n_trials);
    s.seed = j.value("seed", s.seed);
    if (j.contains("controller")) s.mode = parse_controller_mode(j.at("controller").get<std::string>());
    if (j.contains("dt")) s.dt = j.at("dt").get<double>();
    if (j.contains("horizon")) s.horizon = j.at("horizon").get<long>();
    if (j.contains("grid")) {
      s.grid = parse_grid(j.at("grid").get<std::string>(), builtin_problem(s.problem).env.domain);
    }
    if (s.systems.empty() || s.rhs.empty() || s.sigmas.empty()) {
      throw ParseError("systems, rhs and sigmas must be non-empty");
    }
    for (const auto& cell : expand_sweep(s)) cell.validate();
    return s;
  });
}

json sweep_to_json(const SweepConfig& s) {
  json systems = json::array();
  for (auto k : s.systems) systems.push_back(std::string(to_string(k)));
  json j = {{"problem", std::string(to_string(s.problem))},
            {"systems", systems},
            {"rhs", s.rhs},
            {"sigmas", s.sigmas},
            {"trials", s.n_trials},
            {"seed", s.seed},
            {"controller", std::string(to_string(s.mode))}};
  if (s.dt) j["dt"] = *s.dt;
  if (s.horizon) j["horizon"] = *s.horizon;
  if (s.grid) j["grid"] = std::to_string(s.grid->nx) + "x" + std::to_string(s.grid->ny);
  return j;
}

json contour_to_json(const ScalarField& field) {
  const GridSpec& g = field.grid;
  std::vector<double> xs(static_cast<std::size_t>(g.nx));
  std::vector<double> ys(static_cast<std::size_t>(g.ny));
  for (int i = 0; i < g.nx; ++i) xs[static_cast<std::size_t>(i)] = g.x(i);
  for (int j = 0; j < g.ny; ++j) ys[static_cast<std::size_t>(j)] = g.y(j);
  json rows = json::array();
  for (int j = 0; j < g.ny; ++j) {
    const auto first = field.values.begin() + static_cast<std::ptrdiff_t>(g.index(0, j));
    rows.push_back(std::vector<double>(first, first + g.nx));
  }
  return {{"nx", g.nx}, {"ny", g.ny}, {"x", xs}, {"y", ys}, {"rhs", field.rhs}, {"values", rows}};
}

json manifest_to_json(const Manifest& m) {
  json j = {{"tool", "hclbf"},
            {"version", kToolVersion},
            {"command", m.command},
            {"config", m.config},
            {"seed", m.seed},
            {"started", m.started},
            {"finished", m.finished}};
  if (m.solver_residual) j["solver_residual"] = *m.solver_residual;
  return j;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  Manifest manifest;
  manifest.command = "solve";
  manifest.started = utc_timestamp();
  FieldFile file;
  GridSpec grid;
  SolveOptions opts;
  try {
    if (args.config) {
      file.env = read_environment(*args.config);
    } else {
      file.problem = args.problem.value_or(ProblemId::ProblemI);
      file.env = builtin_problem(*file.problem).env;
    }
    if (args.rhs) {
      if (!std::isfinite(*args.rhs)) throw ParseError("rhs must be finite");
      file.env.laplacian_rhs = *args.rhs;
    }
    grid = args.grid ? parse_grid(*args.grid, file.env.domain) : default_grid(file.env.domain);
  } catch (const std::exception& e) {
    err << "solve: " << e.what() << '\n';
    return kParseError;
  }
  try {
    file.field = solve(rasterize(file.env, grid), file.env.laplacian_rhs, file.env.barrier_level,
                       opts);
  } catch (const SolverError& e) {
    err << "solve: " << e.what() << " (residual " << e.residual() << " after " << e.iterations()
        << " iterations)\n";
    return kSolverError;
  } catch (const std::exception& e) {
    err << "solve: " << e.what() << '\n';
    return kParseError;
  }
  const fs::path path = resolve_output(args.out);
  manifest.config = {{"environment", environment_to_json(file.env)},
                     {"grid", std::to_string(grid.nx) + "x" + std::to_string(grid.ny)},
                     {"tol", opts.tol},
                     {"max_iter", opts.max_iter}};
  if (file.problem) manifest.config["problem"] = std::string(to_string(*file.problem));
  manifest.solver_residual = file.field.stats.residual;
  atomic_write(path, field_to_json(file).dump() + "\n");
  write_manifest(manifest_path(path), manifest);
  out << "solved " << grid.nx << "x" << grid.ny << " grid, rhs " << file.env.laplacian_rhs
      << ", residual " << file.field.stats.residual << " after " << file.field.stats.iterations
      << " iterations -> " << path.string() << '\n';
  return kOk;
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  Manifest manifest;
  manifest.command = "simulate";
  manifest.seed = args.seed;
  manifest.started = utc_timestamp();
  FieldFile file;
  SimConfig cfg = default_sim_config(args.system);
  try {
    file = read_field(args.field);
    if (args.dt) cfg.dt = *args.dt;
    if (args.horizon) cfg.horizon = *args.horizon;
    cfg.mode = args.mode;
    cfg.noise.sigma = args.sigma;
    cfg.validate();
  } catch (const std::exception& e) {
    err << "simulate: " << e.what() << '\n';
    return kParseError;
  }

  std::mt19937_64 rng(args.seed);
  Eigen::VectorXd x0;
  try {
    if (args.x0) {
      x0 = Eigen::Map<const Eigen::VectorXd>(args.x0->data(),
                                             static_cast<Eigen::Index>(args.x0->size()));
      if (x0.size() != state_dim(args.system)) {
        throw std::invalid_argument(std::string(to_string(args.system)) + " needs " +
                                    std::to_string(state_dim(args.system)) + " initial values");
      }
    } else {
      if (!file.problem) throw std::invalid_argument("field has no builtin problem; pass --x0");
      if ((args.system == SystemKind::Quadrotor2D) != (*file.problem == ProblemId::Quadrotor2D)) {
        throw std::invalid_argument(std::string(to_string(args.system)) + " cannot run on " +
                                    std::string(to_string(*file.problem)));
      }
      const InitialSampler sampler = sampler_for(builtin_problem(*file.problem).sampler, args.system);
      x0 = sampler.sample(rng, state_dim(args.system));
    }
    const Point2 p = planar_position(args.system, x0);
    const RegionLabel label = classify(file.env, p);
    if (label == RegionLabel::Unsafe || label == RegionLabel::OutOfDomain) {
      err << "simulate: initial state (" << p.x << ", " << p.y << ") is " << to_string(label)
          << '\n';
      return kSimulationError;
    }
  } catch (const std::exception& e) {
    err << "simulate: " << e.what() << '\n';
    return kParseError;
  }

  Trajectory traj;
  try {
    traj = run_trajectory(args.system, file.env, file.field, cfg, x0, rng);
  } catch (const std::exception& e) {
    err << "simulate: " << e.what() << '\n';
    return kSimulationError;
  }
  const fs::path path = resolve_output(args.out);
  atomic_write(path, trace_csv(args.system, traj, cfg.dt));
  manifest.config = {{"field", args.field.string()},
                     {"system", std::string(to_string(args.system))},
                     {"sigma", args.sigma},
                     {"dt", cfg.dt},
                     {"horizon", cfg.horizon},
                     {"controller", std::string(to_string(cfg.mode))},
                     {"x0", std::vector<double>(x0.data(), x0.data() + x0.size())}};
  manifest.solver_residual = file.field.stats.residual;
  write_manifest(manifest_path(path), manifest);
  out << "outcome " << to_string(traj.outcome) << " after " << traj.steps << " steps ("
      << traj.seconds << " s), final V " << traj.values.back() << " -> " << path.string() << '\n';
  return kOk;
}

int cmd_experiment(const ExperimentArgs& args, std::ostream& out, std::ostream& err) {
  Manifest manifest;
  manifest.command = "experiment";
  manifest.started = utc_timestamp();
  SweepConfig sweep = args.sweep;
  std::vector<ExperimentConfig> cells;
  try {
    if (args.config) sweep = sweep_from_json(parse_json_file(*args.config));
    cells = expand_sweep(sweep);
    for (const auto& c : cells) c.validate();
  } catch (const std::exception& e) {
    err << "experiment: " << e.what() << '\n';
    return kParseError;
  }
  manifest.seed = sweep.seed;
  manifest.config = sweep_to_json(sweep);

  const fs::path dir = resolve_output(args.out);
  FieldCache cache;
  std::vector<ExperimentReport> reports;
  json all = json::array();
  int code = kOk;
  for (const auto& cell : cells) {
    char name[160];
    std::snprintf(name, sizeof name, "%s_%s_rhs%g_sigma%g.json",
                  std::string(to_string(cell.problem)).c_str(),
                  std::string(to_string(cell.system)).c_str(), cell.rhs, cell.sigma);
    try {
      ExperimentReport r = run_monte_carlo(cell, &cache);
      atomic_write(dir / name, dump(report_to_json(r)));
      all.push_back(report_to_json(r));
      reports.push_back(std::move(r));
      out << name << ": " << reports.back().n_success << " goal, " << reports.back().unsafe_count
          << " unsafe, " << reports.back().noreach_count << " no reach\n";
    } catch (const SolverError& e) {
      err << "experiment: " << name << ": " << e.what() << '\n';
      all.push_back({{"config", experiment_config_to_json(cell)}, {"error", e.what()}});
      if (code == kOk) code = kSolverError;
    } catch (const std::exception& e) {
      err << "experiment: " << name << ": " << e.what() << '\n';
      all.push_back({{"config", experiment_config_to_json(cell)}, {"error", e.what()}});
      if (code == kOk) code = kSimulationError;
    }
  }
  const std::string table = format_table(reports);
  atomic_write(dir / "table.txt", table);
  atomic_write(dir / "reports.json", dump(all));
  write_manifest(dir / "manifest.json", manifest);
  out << table;
  return code;
}

int cmd_contour(const ContourArgs& args, std::ostream& out, std::ostream& err) {
  FieldFile file;
  try {
    file = read_field(args.field);
  } catch (const std::exception& e) {
    err << "contour: " << e.what() << '\n';
    return kParseError;
  }
  const fs::path path = resolve_output(args.out);
  atomic_write(path, contour_to_json(file.field).dump() + "\n");
  out << "contour grid " << file.field.grid.nx << "x" << file.field.grid.ny << " -> "
      << path.string() << '\n';
  return kOk;
}

}  // namespace hclbf::io
