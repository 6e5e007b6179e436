#pragma once

// Benchmark stiff PDEs on vertex-centered 2-D grids with second-order
// centered differences: Allen-Cahn, advection-diffusion-reaction, Burgers.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>

#include "lowsync/dense.hpp"
#include "lowsync/ode.hpp"

namespace lowsync {

enum class BoundaryKind { NoFlux, HomogeneousNeumann, Dirichlet };

struct Grid2D {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  BoundaryKind bc = BoundaryKind::HomogeneousNeumann;

  double dx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
  double dy() const { return (y_max - y_min) / static_cast<double>(ny - 1); }
  double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }
  double y(std::size_t j) const { return y_min + static_cast<double>(j) * dy(); }
  std::size_t index(std::size_t i, std::size_t j) const { return i + nx * j; }
  std::size_t size() const { return nx * ny; }
  bool on_boundary(std::size_t i, std::size_t j) const {
    return i == 0 || j == 0 || i + 1 == nx || j + 1 == ny;
  }
};

enum class ProblemKind { AllenCahn, AdvectionDiffusionReaction, Burgers };

std::string_view to_string(ProblemKind k);
/// Accepts ac, adr, burg.
ProblemKind parse_problem(std::string_view name);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::AllenCahn;
  double epsilon = 0.1;
  double alpha = 0.0;
  double gamma = 0.0;
  Grid2D grid;
  double t_final = 0.02;
  double dt = 1e-2;

  /// Benchmark defaults on an n x n grid.
  static ProblemSpec defaults(ProblemKind kind, std::size_t n = 128);
};

/// Discrete Laplacian with reflected ghost points at Neumann/no-flux edges.
/// For Dirichlet grids only interior points are filled; boundary entries are 0.
void laplacian(const Grid2D& g, std::span<const double> u, std::span<double> out);

class PdeProblem final : public OdeProblem {
 public:
  explicit PdeProblem(ProblemSpec spec);

  const ProblemSpec& spec() const noexcept { return spec_; }
  std::size_t size() const override { return spec_.grid.size(); }
  void rhs(std::span<const double> u, std::span<double> out) const override;
  void jacobian_action(std::span<const double> u, std::span<const double> v,
                       std::span<double> out) const override;
  using OdeProblem::jacobian_action;
  using OdeProblem::rhs;

  Vector initial_condition() const;

 private:
  void check(std::span<const double> u, std::span<const double> out) const;
  ProblemSpec spec_;
};

Vector initial_condition(const ProblemSpec& spec);

/// Writes `<stem>.bin` (row-major doubles, index i + nx j) and `<stem>.hdr`
/// (lines `nx=`, `ny=`, `t=`).
void write_snapshot(const std::filesystem::path& stem, const Grid2D& grid,
                    std::span<const double> u, double t);

struct Snapshot {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double t = 0.0;
  Vector u;
};
Snapshot read_snapshot(const std::filesystem::path& stem);

}  // namespace lowsync
