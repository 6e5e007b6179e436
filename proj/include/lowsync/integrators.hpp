#pragma once

// Exponential time integrators built on PhiEngine calls.
//
//   epi4/5/6  multistep:  u_{n+1} = u_n + phi_1(hJ) h f_n + sum_m phi_m(hJ) v_m,
//                         v_m = sum_i alpha_{m,i} h R(u_{n-i})           (1 call)
//   srerk3:               one stage at c = 3/4, then the update          (2 calls)
//   srerk6:               stages z_1, z_2 in one call, z_3..z_6, update  (6 calls)
//
// with the nonlinear remainder R(v) = F(v) - F(u_n) - J_n (v - u_n).

#include <cstddef>
#include <deque>
#include <span>
#include <string_view>

#include "lowsync/dense.hpp"
#include "lowsync/ode.hpp"
#include "lowsync/phikry.hpp"

namespace lowsync {

enum class IntegratorKind { Epi4, Epi5, Epi6, Srerk3, Srerk6 };

std::string_view to_string(IntegratorKind k);
/// Accepts epi4, epi5, epi6, srerk3, srerk6.
IntegratorKind parse_integrator(std::string_view name);
/// Nominal order of accuracy.
int nominal_order(IntegratorKind k);
bool is_multistep(IntegratorKind k);
/// PhiEngine calls per step: 1 for epi, 2 for srerk3, 6 for srerk6.
std::size_t calls_per_step(IntegratorKind k);

inline constexpr IntegratorKind kAllIntegrators[] = {IntegratorKind::Epi4, IntegratorKind::Epi5,
                                                     IntegratorKind::Epi6, IntegratorKind::Srerk3,
                                                     IntegratorKind::Srerk6};

struct EpiCoefficients {
  int order = 4;
  /// Row m-1 holds the phi_m weights; column i-1 the weight of R(u_{n-i}).
  DenseMatrix alpha;

  static EpiCoefficients for_order(int order);
  std::size_t history_length() const { return alpha.cols(); }
};

struct SrerkCoefficients {
  Vector c;
  /// srerk6: row 0 <-> phi_3, row 1 <-> phi_4; column k <-> z_{k+1}.
  DenseMatrix beta;
  /// srerk3: 1 x 1 remainder weight 32/9 on phi_3.
  /// srerk6: row r <-> phi_{r+3}, column k <-> z_{k+3}.
  DenseMatrix alpha;

  static SrerkCoefficients srerk3();
  static SrerkCoefficients srerk6();
};

struct HistoryEntry {
  Vector u;
  Vector f;
};

struct IntegratorState {
  Vector u;
  /// Most recent first: (u_{n-1}, f_{n-1}), (u_{n-2}, f_{n-2}), ...
  std::deque<HistoryEntry> history;
  double h = 0.0;
  double t = 0.0;
  std::size_t n = 0;
};

/// Per-step record (n, t, h, kiops_calls, substeps, sync_count, error_estimate).
struct StepTrace {
  std::size_t n = 0;
  double t = 0.0;
  double h = 0.0;
  std::size_t kiops_calls = 0;
  std::size_t substeps = 0;
  std::size_t sync_count = 0;
  double error_estimate = 0.0;
  SubstepStats stats;
};

StepTrace epi_step(IntegratorState& state, const OdeProblem& problem,
                   const EpiCoefficients& coeffs, PhiEngine& engine);
StepTrace srerk3_step(IntegratorState& state, const OdeProblem& problem, PhiEngine& engine);
StepTrace srerk6_step(IntegratorState& state, const OdeProblem& problem, PhiEngine& engine);

/// Builds the multistep history by taking `history_length` steps of size h,
/// each as 2^order srerk3 substeps of size h / 2^order. Afterwards
/// state.u = u_P, state.t = t_0 + P h, history = u_{P-1} .. u_0.
StepTrace warmup(IntegratorState& state, const OdeProblem& problem, int order, PhiEngine& engine);

/// One warmup step (used internally by warmup and by ExponentialIntegrator).
StepTrace warmup_step(IntegratorState& state, const OdeProblem& problem, int order,
                      PhiEngine& engine);

/// Uniform stepping front end. Multistep methods take warmup steps until the
/// history is full, so every call advances t by h.
class ExponentialIntegrator {
 public:
  ExponentialIntegrator(IntegratorKind kind, const OdeProblem& problem, PhiEngine& engine);

  IntegratorState start(Vector u0, double h, double t0 = 0.0) const;
  StepTrace step(IntegratorState& state);
  bool warmed_up(const IntegratorState& state) const;

  IntegratorKind kind() const noexcept { return kind_; }

 private:
  IntegratorKind kind_;
  const OdeProblem* problem_;
  PhiEngine* engine_;
  EpiCoefficients epi_;
};

}  // namespace lowsync
