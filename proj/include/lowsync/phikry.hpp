#pragma once

// Linear combinations of phi-functions via adaptively substepped Krylov
// projection of an augmented operator:
//
//   sum_{k=0}^{p} tau^k phi_k(tau J) v_k = [I 0] exp(tau A) [v_0; e_p],
//   A = [[J, B], [0, K]],  B = [v_p, ..., v_1],  K = upper shift.
//
// The augmented operator is only ever applied, never assembled.

#include <cstddef>
#include <span>
#include <vector>

#include "lowsync/comm.hpp"
#include "lowsync/dense.hpp"
#include "lowsync/errors.hpp"
#include "lowsync/ortho.hpp"

namespace lowsync {

/// Action of [[jac_scale * J, b_scale * B], [0, K]] on (v; w), w in R^p.
class AugmentedOperator {
 public:
  /// `b_list` is v_1..v_p (in that order); B stores them reversed.
  AugmentedOperator(LinearOperator jac_action, std::size_t state_size,
                    std::span<const Vector> b_list, double jac_scale = 1.0,
                    double b_scale = 1.0);
  /// Takes the state size from `b_list`, which must be non-empty.
  AugmentedOperator(LinearOperator jac_action, std::span<const Vector> b_list,
                    double jac_scale = 1.0, double b_scale = 1.0);

  std::size_t state_size() const noexcept { return n_; }
  std::size_t tail_size() const noexcept { return p_; }
  std::size_t size() const noexcept { return n_ + p_; }

  void apply(std::span<const double> x, std::span<double> y) const;
  LinearOperator as_operator() const;

 private:
  LinearOperator jac_;
  std::vector<Vector> b_reversed_;
  double jac_scale_;
  double b_scale_;
  std::size_t n_;
  std::size_t p_;
};

struct AugmentedSystem {
  AugmentedOperator op;
  Vector initial;  ///< (v_0; e_p)
};

/// Builds the operator with J scaled by `tau` and the start vector (v_0; e_p)
/// from `b_list` = v_0..v_p.
AugmentedSystem build_augmented(LinearOperator jac_action, std::span<const Vector> b_list,
                                double tau);

/// beta * V_j * expm(tau * H_j) e_1.
Vector krylov_exp_projection(const KrylovState& state, double tau);

struct SubstepStats {
  std::size_t substeps = 0;
  std::size_t rejects = 0;
  std::size_t max_m = 0;
  std::size_t sync_count = 0;
  std::size_t reduces_grouped = 0;
  std::size_t reduces_fallback = 0;
  std::size_t arnoldi_steps = 0;
  std::size_t arnoldi_builds = 0;
  double max_error_estimate = 0.0;

  SubstepStats& operator+=(const SubstepStats& o);
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, SubstepStats stats)
      : Error(what), stats_(stats) {}
  const SubstepStats& stats() const noexcept { return stats_; }

 private:
  SubstepStats stats_;
};

struct PhiOptions {
  double tol = 1e-12;
  std::size_t m_init = 10;
  std::size_t m_max = 64;
  std::size_t max_substeps = 10000;
  ArnoldiOptions arnoldi{};
};

struct PhiResult {
  /// One state-sized vector per requested tau.
  std::vector<Vector> outputs;
  SubstepStats stats;
};

/// KIOPS-style evaluator. Counts its calls so integrators can be audited.
///
/// Step control: per-substep error estimate
///   eps = h_{m+1,m} |e_m^T tau phi_1(tau H_m) e_1|
/// (relative to the start-vector norm), accepted when eps <= tol * tau/tau_end;
/// new tau = tau * min(5, max(0.2, 0.9 (tol tau/tau_end / eps)^(1/min(m,4))));
/// m grows by 10% (at least 1) after two consecutive reductions of tau.
class PhiEngine {
 public:
  PhiEngine(PhiOptions opts, ReductionContext& ctx);

  /// sum_k tau^k phi_k(tau J) v_k for every tau in `tau_out` (strictly
  /// increasing, positive), with b_list = v_0..v_p.
  PhiResult evaluate(const LinearOperator& jac_action, std::span<const Vector> b_list,
                     std::span<const double> tau_out);

  /// sum_k phi_k(J) v_k.
  PhiResult evaluate(const LinearOperator& jac_action, std::span<const Vector> b_list);

  std::size_t calls() const noexcept { return calls_; }
  const SubstepStats& totals() const noexcept { return totals_; }
  const PhiOptions& options() const noexcept { return opts_; }
  ReductionContext& context() noexcept { return *ctx_; }

 private:
  PhiOptions opts_;
  ReductionContext* ctx_;
  std::size_t calls_ = 0;
  SubstepStats totals_;
};

/// Convenience wrapper: one evaluation at tau = 1.
PhiResult phi_linear_combination(const LinearOperator& jac_action, std::span<const Vector> b_list,
                                 double tol, OrthoBackend backend, ReductionContext& ctx);

}  // namespace lowsync
