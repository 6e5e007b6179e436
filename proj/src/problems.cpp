#include "lowsync/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "lowsync/errors.hpp"

namespace lowsync {

std::string_view to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::AllenCahn: return "ac";
    case ProblemKind::AdvectionDiffusionReaction: return "adr";
    case ProblemKind::Burgers: return "burg";
  }
  return "unknown";
}

ProblemKind parse_problem(std::string_view name) {
  if (name == "ac") return ProblemKind::AllenCahn;
  if (name == "adr") return ProblemKind::AdvectionDiffusionReaction;
  if (name == "burg") return ProblemKind::Burgers;
  throw InvalidInput("unknown problem '" + std::string(name) + "'");
}

ProblemSpec ProblemSpec::defaults(ProblemKind kind, std::size_t n) {
  ProblemSpec s;
  s.kind = kind;
  s.grid.nx = n;
  s.grid.ny = n;
  switch (kind) {
    case ProblemKind::AllenCahn:
      s.epsilon = 0.1;
      s.grid.x_min = s.grid.y_min = -1.0;
      s.grid.x_max = s.grid.y_max = 1.0;
      s.grid.bc = BoundaryKind::NoFlux;
      s.t_final = 0.02;
      break;
    case ProblemKind::AdvectionDiffusionReaction:
      s.epsilon = 1e-2;
      s.alpha = -6.0;
      s.gamma = 100.0;
      s.grid.bc = BoundaryKind::HomogeneousNeumann;
      s.t_final = 0.1;
      break;
    case ProblemKind::Burgers:
      s.epsilon = 1e-3;
      s.grid.bc = BoundaryKind::Dirichlet;
      s.t_final = 0.04;
      break;
  }
  s.dt = 1e-2;
  return s;
}

namespace {

// Neighbour indices with reflection across Neumann edges. Only called for
// interior points on Dirichlet grids, where no reflection happens.
struct Stencil {
  std::size_t c, w, e, s, n;
};

Stencil stencil(const Grid2D& g, std::size_t i, std::size_t j) {
  const std::size_t iw = i == 0 ? 1 : i - 1;
  const std::size_t ie = i + 1 == g.nx ? g.nx - 2 : i + 1;
  const std::size_t js = j == 0 ? 1 : j - 1;
  const std::size_t jn = j + 1 == g.ny ? g.ny - 2 : j + 1;
  return {g.index(i, j), g.index(iw, j), g.index(ie, j), g.index(i, js), g.index(i, jn)};
}

template <typename Fn>
void for_each_active(const Grid2D& g, Fn&& fn) {
  const bool dirichlet = g.bc == BoundaryKind::Dirichlet;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (dirichlet && g.on_boundary(i, j)) continue;
      fn(stencil(g, i, j));
    }
}

}  // namespace

void laplacian(const Grid2D& g, std::span<const double> u, std::span<double> out) {
  const double idx2 = 1.0 / (g.dx() * g.dx());
  const double idy2 = 1.0 / (g.dy() * g.dy());
  std::fill(out.begin(), out.end(), 0.0);
  for_each_active(g, [&](const Stencil& s) {
    out[s.c] = (u[s.w] - 2.0 * u[s.c] + u[s.e]) * idx2 + (u[s.s] - 2.0 * u[s.c] + u[s.n]) * idy2;
  });
}

PdeProblem::PdeProblem(ProblemSpec spec) : spec_(spec) {
  if (spec_.grid.nx < 3 || spec_.grid.ny < 3)
    throw InvalidInput("PdeProblem: grid needs at least 3 points per axis");
  if (!(spec_.grid.x_max > spec_.grid.x_min) || !(spec_.grid.y_max > spec_.grid.y_min))
    throw InvalidInput("PdeProblem: empty domain");
}

void PdeProblem::check(std::span<const double> u, std::span<const double> out) const {
  if (u.size() != size() || out.size() != size())
    throw InvalidInput("PdeProblem: state length does not match the grid");
}

void PdeProblem::rhs(std::span<const double> u, std::span<double> out) const {
  check(u, out);
  const Grid2D& g = spec_.grid;
  const double eps = spec_.epsilon;
  const double idx2 = 1.0 / (g.dx() * g.dx());
  const double idy2 = 1.0 / (g.dy() * g.dy());
  const double i2dx = 0.5 / g.dx();
  const double i2dy = 0.5 / g.dy();
  std::fill(out.begin(), out.end(), 0.0);

  for_each_active(g, [&](const Stencil& s) {
    const double uc = u[s.c];
    const double lap =
        (u[s.w] - 2.0 * uc + u[s.e]) * idx2 + (u[s.s] - 2.0 * uc + u[s.n]) * idy2;
    double val = eps * lap;
    switch (spec_.kind) {
      case ProblemKind::AllenCahn:
        val += uc - uc * uc * uc;
        break;
      case ProblemKind::AdvectionDiffusionReaction:
        val -= spec_.alpha * ((u[s.e] - u[s.w]) * i2dx + (u[s.n] - u[s.s]) * i2dy);
        val += spec_.gamma * uc * (uc - 0.5) * (1.0 - uc);
        break;
      case ProblemKind::Burgers:
        val -= 0.5 * ((u[s.e] * u[s.e] - u[s.w] * u[s.w]) * i2dx +
                      (u[s.n] * u[s.n] - u[s.s] * u[s.s]) * i2dy);
        break;
    }
    out[s.c] = val;
  });
}

void PdeProblem::jacobian_action(std::span<const double> u, std::span<const double> v,
                                 std::span<double> out) const {
  check(u, out);
  if (v.size() != size()) throw InvalidInput("PdeProblem: direction length mismatch");
  const Grid2D& g = spec_.grid;
  const double eps = spec_.epsilon;
  const double idx2 = 1.0 / (g.dx() * g.dx());
  const double idy2 = 1.0 / (g.dy() * g.dy());
  const double i2dx = 0.5 / g.dx();
  const double i2dy = 0.5 / g.dy();
  std::fill(out.begin(), out.end(), 0.0);

  for_each_active(g, [&](const Stencil& s) {
    const double uc = u[s.c];
    const double lap =
        (v[s.w] - 2.0 * v[s.c] + v[s.e]) * idx2 + (v[s.s] - 2.0 * v[s.c] + v[s.n]) * idy2;
    double val = eps * lap;
    switch (spec_.kind) {
      case ProblemKind::AllenCahn:
        val += (1.0 - 3.0 * uc * uc) * v[s.c];
        break;
      case ProblemKind::AdvectionDiffusionReaction:
        val -= spec_.alpha * ((v[s.e] - v[s.w]) * i2dx + (v[s.n] - v[s.s]) * i2dy);
        val += spec_.gamma * (-3.0 * uc * uc + 3.0 * uc - 0.5) * v[s.c];
        break;
      case ProblemKind::Burgers:
        val -= (u[s.e] * v[s.e] - u[s.w] * v[s.w]) * i2dx +
               (u[s.n] * v[s.n] - u[s.s] * v[s.s]) * i2dy;
        break;
    }
    out[s.c] = val;
  });
}

Vector PdeProblem::initial_condition() const { return lowsync::initial_condition(spec_); }

Vector initial_condition(const ProblemSpec& spec) {
  using std::numbers::pi;
  const Grid2D& g = spec.grid;
  Vector u(g.size(), 0.0);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double x = g.x(i);
      const double y = g.y(j);
      double v = 0.0;
      switch (spec.kind) {
        case ProblemKind::AllenCahn:
          v = 0.1 + 0.1 * std::cos(2.0 * pi * x) * std::cos(2.0 * pi * y);
          break;
        case ProblemKind::AdvectionDiffusionReaction: {
          const double q = x * y * (1.0 - x) * (1.0 - y);
          v = 0.3 + 256.0 * q * q;
          break;
        }
        case ProblemKind::Burgers: {
          const double sx = std::sin(3.0 * pi * x);
          const double sy = std::sin(3.0 * pi * y);
          v = sx * sx * sy * sy * (1.0 - y);
          break;
        }
      }
      u[g.index(i, j)] = v;
    }
  return u;
}

void write_snapshot(const std::filesystem::path& stem, const Grid2D& grid,
                    std::span<const double> u, double t) {
  if (u.size() != grid.size()) throw InvalidInput("write_snapshot: state length mismatch");
  auto bin_path = stem;
  bin_path += ".bin";
  auto hdr_path = stem;
  hdr_path += ".hdr";
  std::ofstream bin(bin_path, std::ios::binary);
  bin.write(reinterpret_cast<const char*>(u.data()),
            static_cast<std::streamsize>(u.size() * sizeof(double)));
  std::ofstream hdr(hdr_path);
  hdr.precision(17);
  hdr << "nx=" << grid.nx << "\nny=" << grid.ny << "\nt=" << t << '\n';
  if (!bin || !hdr) throw Error("write_snapshot: cannot write " + stem.string());
}

Snapshot read_snapshot(const std::filesystem::path& stem) {
  auto hdr_path = stem;
  hdr_path += ".hdr";
  auto bin_path = stem;
  bin_path += ".bin";
  std::ifstream hdr(hdr_path);
  if (!hdr) throw Error("read_snapshot: cannot open " + hdr_path.string());
  Snapshot snap;
  std::string line;
  while (std::getline(hdr, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "nx") snap.nx = std::stoul(val);
    if (key == "ny") snap.ny = std::stoul(val);
    if (key == "t") snap.t = std::stod(val);
  }
  snap.u.resize(snap.nx * snap.ny);
  std::ifstream bin(bin_path, std::ios::binary);
  bin.read(reinterpret_cast<char*>(snap.u.data()),
           static_cast<std::streamsize>(snap.u.size() * sizeof(double)));
  if (!bin) throw Error("read_snapshot: truncated " + bin_path.string());
  return snap;
}

}  // namespace lowsync
