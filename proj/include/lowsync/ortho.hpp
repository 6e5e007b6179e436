#pragma once

// Arnoldi orthogonalization backends.
//
//  - Mgs:    modified Gram-Schmidt, one reduction per inner product plus one
//            for the norm (j + 1 synchronizations at step j).
//  - IoCgs:  incomplete orthogonalization against a short window of recent
//            vectors, inner products grouped (2 synchronizations per step).
//  - Hybrid: projection onto the orthogonal complement I - V T V^T with
//            lagged normalization and a Pythagorean norm estimate; one grouped
//            reduction per step plus one final norm. The correction matrix T
//            comes from a compact-WY recursion (Cwy), a truncated Neumann
//            series (Ncwy), or two Gauss-Seidel sweeps (Gsmgs).
//
// All backends compute the norm of the start vector inside their first
// grouped reduction, so the sync count of an m-step run is exactly
// sum_{j=1..m}(j+1), 2m, or m + 1 + fallbacks respectively.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lowsync/comm.hpp"
#include "lowsync/dense.hpp"

namespace lowsync {

/// y = A x. Must not alias.
using LinearOperator = std::function<void(std::span<const double> x, std::span<double> y)>;

enum class OrthoBackend { Mgs, IoCgs, HybridCwy, HybridNcwy, HybridGsmgs };
enum class CorrectionStrategy { Cwy, Ncwy, Gsmgs };

std::string_view to_string(OrthoBackend b);
/// Accepts mgs, iocgs, hcwy, hncwy, hgsmgs. Throws InvalidInput otherwise.
OrthoBackend parse_backend(std::string_view name);
bool is_hybrid(OrthoBackend b) noexcept;
inline constexpr OrthoBackend kAllBackends[] = {OrthoBackend::Mgs, OrthoBackend::IoCgs,
                                                OrthoBackend::HybridCwy, OrthoBackend::HybridNcwy,
                                                OrthoBackend::HybridGsmgs};

struct ArnoldiOptions {
  OrthoBackend backend = OrthoBackend::Mgs;
  /// Number of most recent basis vectors used by IoCgs.
  std::size_t window = 2;
  /// Happy breakdown when the orthogonalized norm falls below this fraction
  /// of ||A v_j||.
  double breakdown_tol = 1e-14;
  /// Norm-estimate fallback when ||w||^2 - sum ips^2 <= guard * ||w||^2.
  double estimate_guard = 1e-10;
};

/// Scratch for the Gauss-Seidel correction: V^T V = M - N with M = I + L,
/// N = -L^T, and Minv the compact-WY inverse of M.
struct GsmgsScratch {
  DenseMatrix M;
  DenseMatrix Minv;
  DenseMatrix N;
  explicit GsmgsScratch(std::size_t cap = 0)
      : M(DenseMatrix::identity(cap)), Minv(DenseMatrix::identity(cap)), N(cap, cap) {}
};

struct KrylovState {
  /// Basis vectors. After a completed run holds j + 1 normalized vectors; on
  /// happy breakdown holds j.
  std::vector<Vector> V;
  /// (capacity + 1) x capacity; the leading (j + 1) x j block is meaningful.
  DenseMatrix H;
  /// Correction matrix (HybridCwy, HybridNcwy).
  DenseMatrix T;
  GsmgsScratch gs;
  std::size_t j = 0;
  double beta = 0.0;
  /// Factor relating the stored last vector to its orthogonalized original.
  double nrm_est = 1.0;
  bool happy = false;
  std::size_t grouped_reduces = 0;
  std::size_t fallback_reduces = 0;

  /// Leading j x j block of H.
  DenseMatrix hessenberg() const { return H.block(0, 0, j, j); }
  /// Leading (j + 1) x j block of H.
  DenseMatrix hessenberg_extended() const { return H.block(0, 0, j + 1, j); }
  /// h_{j+1,j}; zero after happy breakdown.
  double subdiagonal() const { return happy ? 0.0 : H(j, j - 1); }
};

/// Resumable Arnoldi run over one backend.
class ArnoldiProcess {
 public:
  ArnoldiProcess(LinearOperator op, std::span<const double> b, std::size_t capacity,
                 ArnoldiOptions opts, ReductionContext& ctx);

  /// Runs steps until the basis has `m` columns or breaks down, then makes
  /// the trailing vector exactly normalized. Can be called again with a
  /// larger m to continue the same decomposition.
  void extend(std::size_t m);

  const KrylovState& state() const noexcept { return st_; }
  std::size_t dim() const noexcept { return st_.j; }
  bool breakdown() const noexcept { return st_.happy; }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  void step_mgs();
  void step_iocgs();
  void step_hybrid();
  void finalize_hybrid();
  Vector apply(std::span<const double> x) const;

  LinearOperator op_;
  ArnoldiOptions opts_;
  ReductionContext* ctx_;
  std::size_t capacity_;
  KrylovState st_;
  bool finalized_ = true;
};

KrylovState arnoldi_mgs(const LinearOperator& op, std::span<const double> b, std::size_t m,
                        ReductionContext& ctx);
KrylovState arnoldi_iocgs(const LinearOperator& op, std::span<const double> b, std::size_t m,
                          std::size_t window, ReductionContext& ctx);
KrylovState arnoldi_hybrid(const LinearOperator& op, std::span<const double> b, std::size_t m,
                           CorrectionStrategy strategy, ReductionContext& ctx);

/// sqrt(diag_sq - sum ips^2), or nullopt when the argument is at or below
/// guard * diag_sq and an explicit norm is required.
std::optional<double> norm_estimate(double diag_sq, std::span<const double> ips,
                                    double guard = 1e-10);

// Correction-matrix updates. `row` is the zero-based index of the newest
// basis vector v_row; `col` = V_{0:row-1}^T v_row (length row) and
// `rhs` = V_{0:row}^T w (length row + 1). Each returns H_{0:row,row}.

/// T row `row` = -col^T T_{0:row-1,0:row-1}; returns T_{0:row,0:row} rhs.
Vector correction_cwy(DenseMatrix& T, std::size_t row, std::span<const double> col,
                      std::span<const double> rhs);
/// T row `row` = -col^T; returns T_{0:row,0:row} rhs.
Vector correction_ncwy(DenseMatrix& T, std::size_t row, std::span<const double> col,
                       std::span<const double> rhs);
/// Two Gauss-Seidel sweeps on (M - N) x = rhs from x = 0, applied as
/// p = (I + N Minv) rhs followed by M x = p.
Vector correction_gsmgs(GsmgsScratch& gs, std::size_t row, std::span<const double> col,
                        std::span<const double> rhs);

}  // namespace lowsync
