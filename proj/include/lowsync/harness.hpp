#pragma once

// Experiment runner: configuration, single runs, sweeps, convergence studies
// and their CSV / JSON reports.
//
// Config files are flat text, one `key = value` per line, `#` starts a
// comment. Keys:
//
//   problem            ac | adr | burg | logistic
//   integrator         epi4 | epi5 | epi6 | srerk3 | srerk6
//   backend            mgs | iocgs | hcwy | hncwy | hgsmgs
//   reference_backend  optional second backend run for comparison
//   nx, ny             grid points per axis (ny defaults to nx)
//   epsilon, gamma     PDE coefficient overrides
//   dt, t_final        step size and end time (problem defaults otherwise)
//   steps              fixed step count; overrides t_final with steps * dt
//   krylov_tol         default 1e-12
//   m_init, m_max      Krylov dimension controls
//   ranks              simulated rank count
//   seed, ic_noise     uniform perturbation of the initial state
//   output             directory for report.json, reduce_log.csv, steps.csv

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lowsync/integrators.hpp"
#include "lowsync/ortho.hpp"
#include "lowsync/problems.hpp"

namespace lowsync {

struct RunConfig {
  std::string problem = "ac";
  IntegratorKind integrator = IntegratorKind::Epi4;
  OrthoBackend backend = OrthoBackend::IoCgs;
  std::optional<OrthoBackend> reference_backend;
  std::size_t nx = 128;
  std::optional<std::size_t> ny;
  std::optional<double> epsilon;
  std::optional<double> gamma;
  std::optional<double> dt;
  std::optional<double> t_final;
  std::optional<std::size_t> steps;
  double krylov_tol = 1e-12;
  std::size_t m_init = 10;
  std::size_t m_max = 64;
  std::size_t ranks = 1;
  std::uint64_t seed = 0;
  double ic_noise = 0.0;
  std::string output;

  /// Sets one key; throws InvalidInput for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  static RunConfig parse(std::istream& in);
  static RunConfig load(const std::string& path);
  /// Throws InvalidInput when an invariant is violated.
  void validate() const;
  std::string to_text() const;
};

/// Problem instance built from a config, plus its start state and stepping.
struct ProblemSetup {
  std::unique_ptr<OdeProblem> problem;
  std::optional<ProblemSpec> pde;
  Vector u0;
  double dt = 0.0;
  std::size_t steps = 0;
};

ProblemSetup make_setup(const RunConfig& cfg);

struct ReferenceComparison {
  OrthoBackend backend = OrthoBackend::IoCgs;
  std::size_t sync_total = 0;
  double sync_ratio = 0.0;
  double solution_diff_rel = 0.0;
};

struct ExperimentReport {
  RunConfig config;
  std::size_t state_size = 0;
  std::size_t steps = 0;
  double t_final = 0.0;
  double checksum = 0.0;
  double l2_norm = 0.0;
  double wall_seconds = 0.0;
  std::size_t sync_total = 0;
  std::size_t reduces_grouped = 0;
  std::size_t reduces_fallback = 0;
  std::size_t kiops_calls = 0;
  SubstepStats totals;
  std::optional<ReferenceComparison> reference;
  Vector final_state;
  std::vector<StepTrace> traces;
  CounterSnapshot counters;

  double sync_per_arnoldi_step_mean() const;
  double mean_krylov_dim() const;
};

/// Integrates to the final time. Step failures are rethrown with the step
/// index in the message.
ExperimentReport run_experiment(const RunConfig& cfg);

/// Runs every integrator x backend combination on the base config.
std::vector<ExperimentReport> run_sweep(const RunConfig& base,
                                        std::span<const IntegratorKind> integrators,
                                        std::span<const OrthoBackend> backends);

/// Columns: problem, integrator, backend, ranks, sync_total,
/// sync_per_arnoldi_step_mean, kiops_calls, substeps, ratio_vs_reference.
/// The ratio uses the report with the same problem, integrator and ranks run
/// on `reference`; it is left empty when none exists.
void report_sync_table(std::span<const ExperimentReport> reports, std::ostream& os,
                       OrthoBackend reference = OrthoBackend::IoCgs);

std::string report_json(const ExperimentReport& r);
void write_step_csv(std::span<const StepTrace> traces, std::ostream& os);

/// Writes report.json, reduce_log.csv, steps.csv and, for PDEs, a final
/// state snapshot into cfg.output.
void write_outputs(const ExperimentReport& r);

struct ConvergenceRow {
  std::string problem;
  IntegratorKind integrator = IntegratorKind::Epi4;
  double h = 0.0;
  double error = 0.0;
  std::optional<double> slope;
};

/// Error against the closed form for the logistic problem; for PDEs the
/// error at h is the relative max-norm difference to the run at h/2.
std::vector<ConvergenceRow> convergence_study(const RunConfig& base, std::span<const double> hs);

void write_convergence_csv(std::span<const ConvergenceRow> rows, std::ostream& os);

/// Least-squares slope of log(error) against log(h).
double fit_slope(std::span<const double> hs, std::span<const double> errors);

}  // namespace lowsync
