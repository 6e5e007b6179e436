#include "lowsync/phikry.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

namespace lowsync {

AugmentedOperator::AugmentedOperator(LinearOperator jac_action, std::size_t state_size,
                                     std::span<const Vector> b_list, double jac_scale,
                                     double b_scale)
    : jac_(std::move(jac_action)),
      b_reversed_(b_list.rbegin(), b_list.rend()),
      jac_scale_(jac_scale),
      b_scale_(b_scale),
      n_(state_size),
      p_(b_list.size()) {
  for (const auto& b : b_list)
    if (b.size() != n_) throw DimensionError("AugmentedOperator: B column length mismatch");
}

AugmentedOperator::AugmentedOperator(LinearOperator jac_action, std::span<const Vector> b_list,
                                     double jac_scale, double b_scale)
    : AugmentedOperator(std::move(jac_action),
                        b_list.empty() ? throw InvalidInput("AugmentedOperator: empty B")
                                       : b_list.front().size(),
                        b_list, jac_scale, b_scale) {}

void AugmentedOperator::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = n_;
  if (x.size() != size() || y.size() != size())
    throw DimensionError("AugmentedOperator: vector length mismatch");
  auto top = y.first(n);
  jac_(x.first(n), top);
  if (jac_scale_ != 1.0)
    for (double& v : top) v *= jac_scale_;
  const auto tail = x.subspan(n);
  for (std::size_t c = 0; c < p_; ++c) {
    const double wc = b_scale_ * tail[c];
    if (wc == 0.0) continue;
    const auto& col = b_reversed_[c];
    for (std::size_t i = 0; i < n; ++i) top[i] += wc * col[i];
  }
  for (std::size_t c = 0; c + 1 < p_; ++c) y[n + c] = tail[c + 1];
  if (p_ > 0) y[n + p_ - 1] = 0.0;
}

LinearOperator AugmentedOperator::as_operator() const {
  return [this](std::span<const double> x, std::span<double> y) { apply(x, y); };
}

AugmentedSystem build_augmented(LinearOperator jac_action, std::span<const Vector> b_list,
                                double tau) {
  if (b_list.empty()) throw InvalidInput("build_augmented: need at least v_0");
  const std::size_t n = b_list.front().size();
  for (const auto& v : b_list)
    if (v.size() != n) throw InvalidInput("build_augmented: vectors of unequal length");
  const std::size_t p = b_list.size() - 1;
  AugmentedSystem sys{AugmentedOperator(std::move(jac_action), n, b_list.subspan(1), tau),
                      Vector(n + p, 0.0)};
  std::copy(b_list.front().begin(), b_list.front().end(), sys.initial.begin());
  if (p > 0) sys.initial[n + p - 1] = 1.0;
  return sys;
}

Vector krylov_exp_projection(const KrylovState& state, double tau) {
  const std::size_t j = state.j;
  const DenseMatrix f = expm_dense(tau * state.hessenberg());
  Vector y(state.V.front().size(), 0.0);
  for (std::size_t i = 0; i < j; ++i) {
    const double c = state.beta * f(i, 0);
    for (std::size_t r = 0; r < y.size(); ++r) y[r] += c * state.V[i][r];
  }
  return y;
}

SubstepStats& SubstepStats::operator+=(const SubstepStats& o) {
  substeps += o.substeps;
  rejects += o.rejects;
  max_m = std::max(max_m, o.max_m);
  sync_count += o.sync_count;
  reduces_grouped += o.reduces_grouped;
  reduces_fallback += o.reduces_fallback;
  arnoldi_steps += o.arnoldi_steps;
  arnoldi_builds += o.arnoldi_builds;
  max_error_estimate = std::max(max_error_estimate, o.max_error_estimate);
  return *this;
}

PhiEngine::PhiEngine(PhiOptions opts, ReductionContext& ctx) : opts_(opts), ctx_(&ctx) {
  if (!(opts_.tol > 0.0)) throw InvalidInput("PhiEngine: tol must be positive");
  if (opts_.m_max == 0) throw InvalidInput("PhiEngine: m_max must be >= 1");
  opts_.m_init = std::clamp<std::size_t>(opts_.m_init, 1, opts_.m_max);
}

PhiResult PhiEngine::evaluate(const LinearOperator& jac_action, std::span<const Vector> b_list) {
  const double one = 1.0;
  return evaluate(jac_action, b_list, std::span(&one, 1));
}

namespace {

double factorial(std::size_t k) {
  double f = 1.0;
  for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
  return f;
}

// Power-of-two scaling that balances the B block against the tail
// (x = nu * B columns, tail = mu * e_p pattern, nu * mu = 1).
std::pair<double, double> balance_factors(std::span<const Vector> b_list) {
  double norm_b = 0.0;
  for (std::size_t k = 1; k < b_list.size(); ++k) {
    double s = 0.0;
    for (double v : b_list[k]) s += std::abs(v);
    norm_b = std::max(norm_b, s);
  }
  if (b_list.size() < 2 || norm_b == 0.0) return {1.0, 1.0};
  const int ex = static_cast<int>(std::ceil(std::log2(norm_b)));
  return {std::ldexp(1.0, -ex), std::ldexp(1.0, ex)};
}

}  // namespace

PhiResult PhiEngine::evaluate(const LinearOperator& jac_action, std::span<const Vector> b_list,
                              std::span<const double> tau_out) {
  if (b_list.empty()) throw InvalidInput("PhiEngine: b_list must hold at least v_0");
  if (tau_out.empty()) throw InvalidInput("PhiEngine: no output times requested");
  const std::size_t n = b_list.front().size();
  for (const auto& v : b_list)
    if (v.size() != n) throw InvalidInput("PhiEngine: vectors of unequal length");
  for (std::size_t i = 0; i < tau_out.size(); ++i)
    if (!(tau_out[i] > 0.0) || (i > 0 && !(tau_out[i] > tau_out[i - 1])))
      throw InvalidInput("PhiEngine: tau_out must be positive and strictly increasing");

  ++calls_;
  const std::size_t sync_before = ctx_->sync_count();
  const std::size_t p = b_list.size() - 1;
  const auto [nu, mu] = balance_factors(b_list);
  AugmentedOperator aug(jac_action, n, b_list.subspan(1), 1.0, nu);
  const LinearOperator op = aug.as_operator();

  PhiResult result;
  result.outputs.resize(tau_out.size());
  SubstepStats& st = result.stats;

  const double tau_end = tau_out.back();
  double tau_now = 0.0;
  std::size_t next_out = 0;
  double tau = tau_end;
  std::size_t m = opts_.m_init;
  std::size_t shrink_streak = 0;
  Vector w = b_list.front();
  Vector start(n + p, 0.0);

  auto account = [&] {
    st.sync_count = ctx_->sync_count() - sync_before;
    const auto& log = ctx_->log();
    for (std::size_t k = sync_before; k < log.size(); ++k) {
      if (log[k].tag == tags::kHybridGrouped || log[k].tag == tags::kIocgsGrouped)
        ++st.reduces_grouped;
      else if (log[k].tag == tags::kHybridFallbackNorm)
        ++st.reduces_fallback;
    }
    totals_ += st;
  };

  std::optional<ArnoldiProcess> arnoldi;
  std::size_t steps_counted = 0;

  while (next_out < tau_out.size()) {
    const double remaining = tau_out[next_out] - tau_now;
    tau = std::min(tau, remaining);
    const bool hits_output = tau >= remaining;

    if (!arnoldi) {
      std::copy(w.begin(), w.end(), start.begin());
      for (std::size_t k = 0; k < p; ++k)
        start[n + k] =
            mu * std::pow(tau_now, static_cast<double>(p - 1 - k)) / factorial(p - 1 - k);
      bool all_zero = std::all_of(start.begin(), start.end(), [](double v) { return v == 0.0; });
      if (all_zero) {
        // Zero initial state and no forcing: the solution stays zero.
        for (std::size_t k = next_out; k < tau_out.size(); ++k) result.outputs[k].assign(n, 0.0);
        account();
        return result;
      }
      arnoldi.emplace(op, start, opts_.m_max, opts_.arnoldi, *ctx_);
      steps_counted = 0;
      ++st.arnoldi_builds;
    }
    arnoldi->extend(std::min(m, opts_.m_max));
    const KrylovState& ks = arnoldi->state();
    st.arnoldi_steps += ks.j - steps_counted;
    steps_counted = ks.j;
    const std::size_t j = ks.j;
    st.max_m = std::max(st.max_m, j);

    if (ks.happy) tau = remaining;
    const bool at_output = ks.happy || hits_output;

    // [[tau H, tau e_1], [0, 0]]: the last column carries tau phi_1(tau H) e_1.
    DenseMatrix haug(j + 1, j + 1);
    for (std::size_t c = 0; c < j; ++c)
      for (std::size_t r = 0; r < j; ++r) haug(r, c) = tau * ks.H(r, c);
    haug(0, j) = tau;
    const DenseMatrix f = expm_dense(haug);

    const double frac = tau / tau_end;
    double eps = 0.0;
    if (!ks.happy) eps = ks.H(j, j - 1) * std::abs(f(j - 1, j));
    if (!std::isfinite(eps)) throw NumericError("PhiEngine: non-finite error estimate");
    const bool accept = ks.happy || eps <= opts_.tol * frac;

    double factor = 5.0;
    if (eps > 0.0) {
      const double m_eff = static_cast<double>(std::min<std::size_t>(j, 4));
      factor = std::clamp(0.9 * std::pow(opts_.tol * frac / eps, 1.0 / m_eff), 0.2, 5.0);
    }

    if (accept) {
      st.max_error_estimate = std::max(st.max_error_estimate, eps);
      std::fill(w.begin(), w.end(), 0.0);
      for (std::size_t i = 0; i < j; ++i) {
        const double c = ks.beta * f(i, 0);
        const auto& v = ks.V[i];
        for (std::size_t r = 0; r < n; ++r) w[r] += c * v[r];
      }
      ++st.substeps;
      if (at_output) {
        tau_now = tau_out[next_out];
        result.outputs[next_out] = w;
        ++next_out;
      } else {
        tau_now += tau;
      }
      arnoldi.reset();
    } else {
      ++st.rejects;
    }

    if (factor < 1.0) {
      if (++shrink_streak >= 2) {
        const auto grown = static_cast<std::size_t>(std::ceil(1.1 * static_cast<double>(m)));
        m = std::min(opts_.m_max, std::max(m + 1, grown));
        shrink_streak = 0;
      }
    } else {
      shrink_streak = 0;
    }
    tau *= factor;

    if (st.substeps + st.rejects >= opts_.max_substeps) {
      account();
      throw ConvergenceError("PhiEngine: no convergence within " +
                                 std::to_string(opts_.max_substeps) + " substeps",
                             st);
    }
  }
  account();
  return result;
}

PhiResult phi_linear_combination(const LinearOperator& jac_action, std::span<const Vector> b_list,
                                 double tol, OrthoBackend backend, ReductionContext& ctx) {
  PhiOptions opts;
  opts.tol = tol;
  opts.arnoldi.backend = backend;
  PhiEngine engine(opts, ctx);
  return engine.evaluate(jac_action, b_list);
}

}  // namespace lowsync
