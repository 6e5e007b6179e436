#include "lowsync/ortho.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "lowsync/errors.hpp"

namespace lowsync {

std::string_view to_string(OrthoBackend b) {
  switch (b) {
    case OrthoBackend::Mgs: return "mgs";
    case OrthoBackend::IoCgs: return "iocgs";
    case OrthoBackend::HybridCwy: return "hcwy";
    case OrthoBackend::HybridNcwy: return "hncwy";
    case OrthoBackend::HybridGsmgs: return "hgsmgs";
  }
  return "unknown";
}

OrthoBackend parse_backend(std::string_view name) {
  for (OrthoBackend b : kAllBackends)
    if (to_string(b) == name) return b;
  throw InvalidInput("unknown backend '" + std::string(name) + "'");
}

bool is_hybrid(OrthoBackend b) noexcept {
  return b == OrthoBackend::HybridCwy || b == OrthoBackend::HybridNcwy ||
         b == OrthoBackend::HybridGsmgs;
}

namespace {

using DotPair = std::pair<std::span<const double>, std::span<const double>>;

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void scale(std::span<double> x, double s) {
  for (double& v : x) v *= s;
}

}  // namespace

std::optional<double> norm_estimate(double diag_sq, std::span<const double> ips, double guard) {
  double ss = 0.0;
  for (double v : ips) ss += v * v;
  const double arg = diag_sq - ss;
  if (!(arg > guard * diag_sq)) return std::nullopt;
  return std::sqrt(arg);
}

Vector correction_cwy(DenseMatrix& T, std::size_t row, std::span<const double> col,
                      std::span<const double> rhs) {
  T(row, row) = 1.0;
  for (std::size_t c = 0; c < row; ++c) {
    double s = 0.0;
    for (std::size_t k = c; k < row; ++k) s += col[k] * T(k, c);
    T(row, c) = -s;
  }
  Vector h(row + 1, 0.0);
  for (std::size_t i = 0; i <= row; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k <= i; ++k) s += T(i, k) * rhs[k];
    h[i] = s;
  }
  return h;
}

Vector correction_ncwy(DenseMatrix& T, std::size_t row, std::span<const double> col,
                       std::span<const double> rhs) {
  T(row, row) = 1.0;
  for (std::size_t c = 0; c < row; ++c) T(row, c) = -col[c];
  Vector h(row + 1, 0.0);
  for (std::size_t i = 0; i <= row; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k <= i; ++k) s += T(i, k) * rhs[k];
    h[i] = s;
  }
  return h;
}

Vector correction_gsmgs(GsmgsScratch& gs, std::size_t row, std::span<const double> col,
                        std::span<const double> rhs) {
  const std::size_t n = row + 1;
  for (std::size_t c = 0; c < row; ++c) {
    gs.M(row, c) = col[c];
    gs.N(c, row) = -col[c];
  }
  gs.M(row, row) = 1.0;
  gs.Minv(row, row) = 1.0;
  for (std::size_t c = 0; c < row; ++c) {
    double s = 0.0;
    for (std::size_t k = c; k < row; ++k) s += col[k] * gs.Minv(k, c);
    gs.Minv(row, c) = -s;
  }

  // Part 1: p = (I + N Minv) rhs.
  Vector y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k <= i; ++k) y[i] += gs.Minv(i, k) * rhs[k];
  Vector p(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k) p[i] += gs.N(i, k) * y[k];

  // Part 2: M x = p.
  return lower_triangular_solve(gs.M.block(0, 0, n, n), p);
}

ArnoldiProcess::ArnoldiProcess(LinearOperator op, std::span<const double> b,
                               std::size_t capacity, ArnoldiOptions opts, ReductionContext& ctx)
    : op_(std::move(op)), opts_(opts), ctx_(&ctx), capacity_(capacity) {
  if (capacity_ == 0) throw InvalidInput("ArnoldiProcess: capacity must be >= 1");
  if (b.empty()) throw InvalidInput("ArnoldiProcess: empty start vector");
  if (opts_.backend == OrthoBackend::IoCgs && opts_.window == 0)
    throw InvalidInput("ArnoldiProcess: window must be >= 1");
  for (double v : b)
    if (!std::isfinite(v)) throw InvalidInput("ArnoldiProcess: non-finite start vector");
  st_.V.emplace_back(b.begin(), b.end());
  st_.H = DenseMatrix(capacity_ + 1, capacity_);
  if (opts_.backend == OrthoBackend::HybridCwy || opts_.backend == OrthoBackend::HybridNcwy)
    st_.T = DenseMatrix::identity(capacity_);
  if (opts_.backend == OrthoBackend::HybridGsmgs) st_.gs = GsmgsScratch(capacity_);
}

Vector ArnoldiProcess::apply(std::span<const double> x) const {
  Vector w(x.size(), 0.0);
  op_(x, w);
  for (double v : w)
    if (!std::isfinite(v)) throw NumericError("Arnoldi: operator produced a non-finite value");
  return w;
}

void ArnoldiProcess::extend(std::size_t m) {
  if (m > capacity_) throw InvalidInput("ArnoldiProcess::extend: m exceeds capacity");
  while (st_.j < m && !st_.happy) {
    switch (opts_.backend) {
      case OrthoBackend::Mgs: step_mgs(); break;
      case OrthoBackend::IoCgs: step_iocgs(); break;
      default: step_hybrid(); break;
    }
  }
  if (!st_.happy && !finalized_) finalize_hybrid();
}

// The first step of MGS and IoCgs folds ||b||^2 into the reduction of its
// first inner product, so v_1 is normalized without an extra synchronization.
void ArnoldiProcess::step_mgs() {
  const std::size_t k = st_.j;
  auto& V = st_.V;
  Vector w = apply(V[k]);
  double hsq = 0.0;
  if (k == 0) {
    const DotPair pairs[] = {{V[0], V[0]}, {V[0], w}};
    const auto r = grouped_dots(*ctx_, pairs, tags::kMgsInnerProduct);
    if (!(r[0] > 0.0)) throw InvalidInput("Arnoldi: zero start vector");
    st_.beta = std::sqrt(r[0]);
    scale(V[0], 1.0 / st_.beta);
    scale(w, 1.0 / st_.beta);
    const double h = r[1] / r[0];
    st_.H(0, 0) = h;
    axpy(-h, V[0], w);
    hsq = h * h;
  } else {
    for (std::size_t i = 0; i <= k; ++i) {
      const double h = global_dot(*ctx_, V[i], w, tags::kMgsInnerProduct);
      st_.H(i, k) = h;
      axpy(-h, V[i], w);
      hsq += h * h;
    }
  }
  const double nrm = global_norm(*ctx_, w, tags::kMgsNorm);
  st_.j = k + 1;
  if (nrm <= opts_.breakdown_tol * std::sqrt(nrm * nrm + hsq)) {
    st_.happy = true;
    return;
  }
  st_.H(k + 1, k) = nrm;
  scale(w, 1.0 / nrm);
  V.push_back(std::move(w));
}

void ArnoldiProcess::step_iocgs() {
  const std::size_t k = st_.j;
  auto& V = st_.V;
  Vector w = apply(V[k]);
  const std::size_t lo = k + 1 >= opts_.window ? k + 1 - opts_.window : 0;

  std::vector<DotPair> pairs;
  if (k == 0) pairs.emplace_back(V[0], V[0]);
  for (std::size_t i = lo; i <= k; ++i) pairs.emplace_back(V[i], w);
  auto r = grouped_dots(*ctx_, pairs, tags::kIocgsGrouped);
  if (k == 0) {
    if (!(r[0] > 0.0)) throw InvalidInput("Arnoldi: zero start vector");
    st_.beta = std::sqrt(r[0]);
    scale(V[0], 1.0 / st_.beta);
    scale(w, 1.0 / st_.beta);
    r.erase(r.begin());
    r[0] /= st_.beta * st_.beta;
  }
  double hsq = 0.0;
  for (std::size_t i = lo; i <= k; ++i) {
    const double h = r[i - lo];
    st_.H(i, k) = h;
    axpy(-h, V[i], w);
    hsq += h * h;
  }
  const double nrm = global_norm(*ctx_, w, tags::kIocgsNorm);
  st_.j = k + 1;
  if (nrm <= opts_.breakdown_tol * std::sqrt(nrm * nrm + hsq)) {
    st_.happy = true;
    return;
  }
  st_.H(k + 1, k) = nrm;
  scale(w, 1.0 / nrm);
  V.push_back(std::move(w));
}

// One hybrid step. On entry V[k] holds x = u / nrm_est, the lagged vector of
// the previous step (or b when k == 0). The grouped reduction returns
// col1 = V_{0:k+1}^T x and col2 = V_{0:k+1}^T w with w = A x; its entry
// col1[k] = ||x||^2 supplies the true norm, and every inner product is then
// divided by that norm once per factor of x or w it contains.
void ArnoldiProcess::step_hybrid() {
  const std::size_t k = st_.j;
  auto& V = st_.V;
  Vector w = apply(V[k]);

  std::vector<DotPair> pairs;
  pairs.reserve(2 * (k + 2));
  for (std::size_t i = 0; i <= k; ++i) pairs.emplace_back(V[i], V[k]);
  pairs.emplace_back(w, V[k]);
  for (std::size_t i = 0; i <= k; ++i) pairs.emplace_back(V[i], w);
  pairs.emplace_back(w, w);
  const auto temp = grouped_dots(*ctx_, pairs, tags::kHybridGrouped);
  ++st_.grouped_reduces;

  std::span<const double> col1(temp.data(), k + 2);
  Vector col2(temp.begin() + static_cast<std::ptrdiff_t>(k + 2), temp.end());

  const double xx = col1[k];
  if (!(xx > 0.0)) throw InvalidInput("Arnoldi: zero start vector");
  const double true_nrm = std::sqrt(xx);
  if (k == 0)
    st_.beta = true_nrm;
  else
    st_.H(k, k - 1) = st_.nrm_est * true_nrm;

  Vector alpha(col1.begin(), col1.begin() + static_cast<std::ptrdiff_t>(k));
  for (double& a : alpha) a /= true_nrm;
  for (std::size_t i = 0; i < k; ++i) col2[i] /= true_nrm;
  col2[k] /= xx;
  col2[k + 1] /= xx;
  scale(V[k], 1.0 / true_nrm);
  scale(w, 1.0 / true_nrm);

  std::span<const double> rhs(col2.data(), k + 1);
  Vector h;
  switch (opts_.backend) {
    case OrthoBackend::HybridCwy: h = correction_cwy(st_.T, k, alpha, rhs); break;
    case OrthoBackend::HybridNcwy: h = correction_ncwy(st_.T, k, alpha, rhs); break;
    default: h = correction_gsmgs(st_.gs, k, alpha, rhs); break;
  }
  for (std::size_t i = 0; i <= k; ++i) {
    st_.H(i, k) = h[i];
    axpy(-h[i], V[i], w);
  }

  const double diag_sq = col2[k + 1];
  double nrm = 0.0;
  if (auto est = norm_estimate(diag_sq, rhs, opts_.estimate_guard)) {
    nrm = *est;
  } else {
    nrm = global_norm(*ctx_, w, tags::kHybridFallbackNorm);
    ++st_.fallback_reduces;
  }
  st_.j = k + 1;
  if (nrm <= opts_.breakdown_tol * std::sqrt(diag_sq)) {
    st_.happy = true;
    finalized_ = true;
    return;
  }
  scale(w, 1.0 / nrm);
  st_.nrm_est = nrm;
  V.push_back(std::move(w));
  finalized_ = false;
}

void ArnoldiProcess::finalize_hybrid() {
  const std::size_t j = st_.j;
  Vector& last = st_.V[j];
  const double nrm = global_norm(*ctx_, last, tags::kFinalNorm);
  st_.H(j, j - 1) = st_.nrm_est * nrm;
  scale(last, 1.0 / nrm);
  st_.nrm_est = st_.H(j, j - 1);
  finalized_ = true;
}

KrylovState arnoldi_mgs(const LinearOperator& op, std::span<const double> b, std::size_t m,
                        ReductionContext& ctx) {
  ArnoldiProcess proc(op, b, m, {.backend = OrthoBackend::Mgs}, ctx);
  proc.extend(m);
  return proc.state();
}

KrylovState arnoldi_iocgs(const LinearOperator& op, std::span<const double> b, std::size_t m,
                          std::size_t window, ReductionContext& ctx) {
  ArnoldiProcess proc(op, b, m, {.backend = OrthoBackend::IoCgs, .window = window}, ctx);
  proc.extend(m);
  return proc.state();
}

KrylovState arnoldi_hybrid(const LinearOperator& op, std::span<const double> b, std::size_t m,
                           CorrectionStrategy strategy, ReductionContext& ctx) {
  OrthoBackend backend = OrthoBackend::HybridCwy;
  if (strategy == CorrectionStrategy::Ncwy) backend = OrthoBackend::HybridNcwy;
  if (strategy == CorrectionStrategy::Gsmgs) backend = OrthoBackend::HybridGsmgs;
  ArnoldiProcess proc(op, b, m, {.backend = backend}, ctx);
  proc.extend(m);
  return proc.state();
}

}  // namespace lowsync
