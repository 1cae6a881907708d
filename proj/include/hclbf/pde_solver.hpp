#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hclbf/geometry.hpp"

namespace hclbf {

/// Uniform node lattice covering `domain`; node (0, 0) sits at (xmin, ymin)
/// and node (nx-1, ny-1) at (xmax, ymax). Storage is row-major with x fastest.
struct GridSpec {
  int nx = 0;
  int ny = 0;
  Rect domain;

  void validate() const;

  double hx() const { return domain.width() / (nx - 1); }
  double hy() const { return domain.height() / (ny - 1); }
  // Interpolating between the two edges keeps nodes that should land on a
  // rectangle edge bit-identical to the edge literal.
  double x(int i) const { return (domain.xmin * (nx - 1 - i) + domain.xmax * i) / (nx - 1); }
  double y(int j) const { return (domain.ymin * (ny - 1 - j) + domain.ymax * j) / (ny - 1); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(i);
  }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  bool on_ring(int i, int j) const { return i == 0 || j == 0 || i == nx - 1 || j == ny - 1; }
};

/// Default lattice: spacing 0.01 on the builtin domains.
GridSpec default_grid(const Rect& domain);

enum class NodeTag : std::uint8_t { Free, FixedGoal, FixedUnsafe };

struct NodeMask {
  GridSpec grid;
  std::vector<NodeTag> tags;

  NodeTag at(int i, int j) const { return tags[grid.index(i, j)]; }
  std::size_t count(NodeTag t) const;
  /// Ring nodes must be fixed and at least one Free node must exist.
  void validate() const;
};

/// Tags every node: FixedUnsafe on the ring or inside any closed obstacle,
/// otherwise FixedGoal inside the closed goal box, otherwise Free.
/// Throws std::invalid_argument if the grid does not span env.domain.
NodeMask rasterize(const Environment& env, const GridSpec& grid);

struct SolveOptions {
  double tol = 1e-8;  // scaled by the barrier level in solve()
  long max_iter = 200000;
  double initial_value = 0.0;  // starting value of Free nodes
  double omega = 0.0;          // SOR factor, <= 0 selects the rectangle optimum
};

struct SolveStats {
  long iterations = 0;
  double residual = 0.0;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, long iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  long iterations() const { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

/// Grid-sampled certificate together with the Dirichlet data it solves.
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;
  NodeMask mask;
  double rhs = 0.0;
  double level = 1.0;
  SolveStats stats;

  double at(int i, int j) const { return values[grid.index(i, j)]; }
};

/// Red-black SOR for the 5-point equation
///   (V[i+1,j] + V[i-1,j]) / hx^2 + (V[i,j+1] + V[i,j-1]) / hy^2
///     - 2 V[i,j] (1/hx^2 + 1/hy^2) = rhs
/// on Free nodes. Fixed nodes hold 0 (goal) or `level` (unsafe). Iterates
/// until the max-norm residual is <= options.tol * level.
ScalarField solve(const NodeMask& mask, double rhs, double level,
                  const SolveOptions& options = {});

/// Same equation with caller-supplied values on every fixed node. Entries of
/// `fixed_values` at Free nodes are ignored. The tolerance is absolute.
ScalarField solve_with_boundary(const NodeMask& mask, std::span<const double> fixed_values,
                                double rhs, double level, const SolveOptions& options = {});

/// Max over Free nodes of |discrete laplacian - rhs|.
double residual(const ScalarField& field);

struct PropertyCheck {
  std::string name;
  bool pass = true;
  std::size_t checked = 0;
  std::vector<std::size_t> violations;  // node indices
  std::size_t worst_node = 0;           // meaningful only when !pass
  double worst_value = 0.0;
};

/// Node-level audit of the four static certificate conditions:
///   1. V = 0 on goal nodes,   2. V > 0 off the goal,
///   3. V >= c on unsafe nodes, 4. V < c off the unsafe set.
struct PropertyReport {
  PropertyCheck checks[4];
  bool all_pass() const {
    return checks[0].pass && checks[1].pass && checks[2].pass && checks[3].pass;
  }
};

PropertyReport verify_clbf_properties(const ScalarField& field, const Environment& env);

}  // namespace hclbf
