#include "lowsync/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lowsync/errors.hpp"

namespace lowsync {

std::string_view to_string(IntegratorKind k) {
  switch (k) {
    case IntegratorKind::Epi4: return "epi4";
    case IntegratorKind::Epi5: return "epi5";
    case IntegratorKind::Epi6: return "epi6";
    case IntegratorKind::Srerk3: return "srerk3";
    case IntegratorKind::Srerk6: return "srerk6";
  }
  return "unknown";
}

IntegratorKind parse_integrator(std::string_view name) {
  for (IntegratorKind k : kAllIntegrators)
    if (to_string(k) == name) return k;
  throw InvalidInput("unknown integrator '" + std::string(name) + "'");
}

int nominal_order(IntegratorKind k) {
  switch (k) {
    case IntegratorKind::Epi4: return 4;
    case IntegratorKind::Epi5: return 5;
    case IntegratorKind::Epi6: return 6;
    case IntegratorKind::Srerk3: return 3;
    case IntegratorKind::Srerk6: return 6;
  }
  return 0;
}

bool is_multistep(IntegratorKind k) {
  return k == IntegratorKind::Epi4 || k == IntegratorKind::Epi5 || k == IntegratorKind::Epi6;
}

std::size_t calls_per_step(IntegratorKind k) {
  if (is_multistep(k)) return 1;
  return k == IntegratorKind::Srerk3 ? 2 : 6;
}

EpiCoefficients EpiCoefficients::for_order(int order) {
  EpiCoefficients c;
  c.order = order;
  switch (order) {
    case 4:
      c.alpha = DenseMatrix{{0.0, 0.0}, {-3.0 / 10.0, 3.0 / 40.0}, {32.0 / 5.0, -11.0 / 10.0}};
      break;
    case 5:
      c.alpha = DenseMatrix{{0.0, 0.0, 0.0},
                            {-4.0 / 5.0, 2.0 / 5.0, -4.0 / 45.0},
                            {12.0, -9.0 / 2.0, 8.0 / 9.0},
                            {3.0, 0.0, -1.0 / 3.0}};
      break;
    case 6:
      c.alpha = DenseMatrix{{0.0, 0.0, 0.0, 0.0},
                            {-49.0 / 60.0, 351.0 / 560.0, -359.0 / 1260.0, 367.0 / 6720.0},
                            {92.0 / 7.0, -99.0 / 14.0, 176.0 / 63.0, -1.0 / 2.0},
                            {485.0 / 21.0, -151.0 / 14.0, 23.0 / 9.0, -31.0 / 168.0}};
      break;
    default:
      throw InvalidInput("EpiCoefficients: order must be 4, 5 or 6");
  }
  return c;
}

SrerkCoefficients SrerkCoefficients::srerk3() {
  SrerkCoefficients c;
  c.c = {3.0 / 4.0};
  c.alpha = DenseMatrix{{32.0 / 9.0}};
  return c;
}

SrerkCoefficients SrerkCoefficients::srerk6() {
  const double s = std::sqrt(10.0);
  SrerkCoefficients c;
  c.c = {(10.0 - s) / 15.0, (10.0 + s) / 15.0, 1.0 / 4.0, 1.0 / 2.0, 3.0 / 4.0, 1.0};
  c.beta = DenseMatrix{{(155.0 + 65.0 * s) / 18.0, (155.0 - 65.0 * s) / 18.0},
                       {(-100.0 - 55.0 * s) / 4.0, (-100.0 + 55.0 * s) / 4.0}};
  c.alpha = DenseMatrix{{128.0, -48.0, 128.0 / 9.0, -2.0},
                        {-1664.0, 912.0, -896.0 / 3.0, 44.0},
                        {9216.0, -6144.0, 7168.0 / 3.0, -384.0},
                        {-20480.0, 15360.0, -20480.0 / 3.0, 1280.0}};
  return c;
}

namespace {

// Frozen-Jacobian data for one step: u_n, f_n = F(u_n), and x -> h J_n x.
struct StepContext {
  const OdeProblem& problem;
  Vector un;
  Vector fn;
  double h;

  StepContext(const OdeProblem& p, const Vector& u, double step)
      : problem(p), un(u), fn(p.rhs(u)), h(step) {}

  LinearOperator scaled_jacobian() const {
    return [this](std::span<const double> x, std::span<double> y) {
      problem.jacobian_action(un, x, y);
      for (double& v : y) v *= h;
    };
  }

  Vector hf() const {
    Vector r(fn);
    for (double& v : r) v *= h;
    return r;
  }

  // h R(v) = h (F(v) - f_n - J_n (v - u_n)), with F(v) optionally precomputed.
  Vector h_remainder(const Vector& v, const Vector& fv) const {
    Vector d(v.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = v[i] - un[i];
    Vector jd = problem.jacobian_action(un, d);
    Vector r(v.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = h * (fv[i] - fn[i] - jd[i]);
    return r;
  }
  Vector h_remainder(const Vector& v) const { return h_remainder(v, problem.rhs(v)); }

  Vector plus_un(const Vector& x) const {
    Vector r(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += un[i];
    return r;
  }
};

void axpy(double a, const Vector& x, Vector& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void check_step(const IntegratorState& state, const OdeProblem& problem) {
  if (!(state.h > 0.0)) throw InvalidInput("integrator: h must be positive");
  if (state.u.size() != problem.size())
    throw InvalidInput("integrator: state length does not match the problem");
}

class TraceScope {
 public:
  TraceScope(const IntegratorState& state, PhiEngine& engine)
      : engine_(engine), calls_(engine.calls()), sync_(engine.context().sync_count()) {
    trace_.h = state.h;
  }

  void add(const PhiResult& r) {
    trace_.stats += r.stats;
    trace_.error_estimate = std::max(trace_.error_estimate, r.stats.max_error_estimate);
  }

  StepTrace finish(const IntegratorState& state) {
    trace_.n = state.n;
    trace_.t = state.t;
    trace_.kiops_calls = engine_.calls() - calls_;
    trace_.substeps = trace_.stats.substeps;
    trace_.sync_count = engine_.context().sync_count() - sync_;
    return trace_;
  }

 private:
  PhiEngine& engine_;
  std::size_t calls_;
  std::size_t sync_;
  StepTrace trace_;
};

void push_history(IntegratorState& state, const StepContext& sc, std::size_t keep) {
  if (keep == 0) return;
  state.history.push_front({sc.un, sc.fn});
  while (state.history.size() > keep) state.history.pop_back();
}

}  // namespace

StepTrace epi_step(IntegratorState& state, const OdeProblem& problem,
                   const EpiCoefficients& coeffs, PhiEngine& engine) {
  check_step(state, problem);
  const std::size_t hist = coeffs.history_length();
  if (state.history.size() < hist)
    throw ContractViolation("epi_step: history not warmed up (need " + std::to_string(hist) +
                            " back values)");
  TraceScope scope(state, engine);
  const StepContext sc(problem, state.u, state.h);

  std::vector<Vector> hr;
  hr.reserve(hist);
  for (std::size_t i = 0; i < hist; ++i)
    hr.push_back(sc.h_remainder(state.history[i].u, state.history[i].f));

  const std::size_t M = coeffs.alpha.rows();
  std::vector<Vector> b(M + 1, Vector(state.u.size(), 0.0));
  b[1] = sc.hf();
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 0; i < hist; ++i)
      if (coeffs.alpha(m, i) != 0.0) axpy(coeffs.alpha(m, i), hr[i], b[m + 1]);

  const PhiResult r = engine.evaluate(sc.scaled_jacobian(), b);
  scope.add(r);
  push_history(state, sc, hist);
  state.u = sc.plus_un(r.outputs.front());
  state.t += state.h;
  ++state.n;
  return scope.finish(state);
}

StepTrace srerk3_step(IntegratorState& state, const OdeProblem& problem, PhiEngine& engine) {
  check_step(state, problem);
  static const SrerkCoefficients co = SrerkCoefficients::srerk3();
  TraceScope scope(state, engine);
  const StepContext sc(problem, state.u, state.h);
  const LinearOperator op = sc.scaled_jacobian();
  const Vector zero(state.u.size(), 0.0);
  const Vector hf = sc.hf();

  const std::vector<Vector> b1{zero, hf};
  const PhiResult r1 = engine.evaluate(op, b1, std::span(co.c));
  scope.add(r1);
  const Vector z1 = sc.plus_un(r1.outputs.front());

  Vector w = sc.h_remainder(z1);
  for (double& v : w) v *= co.alpha(0, 0);
  const std::vector<Vector> b2{zero, hf, zero, w};
  const PhiResult r2 = engine.evaluate(op, b2);
  scope.add(r2);

  state.u = sc.plus_un(r2.outputs.front());
  state.t += state.h;
  ++state.n;
  return scope.finish(state);
}

StepTrace srerk6_step(IntegratorState& state, const OdeProblem& problem, PhiEngine& engine) {
  check_step(state, problem);
  static const SrerkCoefficients co = SrerkCoefficients::srerk6();
  TraceScope scope(state, engine);
  const StepContext sc(problem, state.u, state.h);
  const LinearOperator op = sc.scaled_jacobian();
  const std::size_t n = state.u.size();
  const Vector zero(n, 0.0);
  const Vector hf = sc.hf();

  // z_1, z_2 from one Krylov pass evaluated at both nodes.
  const std::vector<Vector> b12{zero, hf};
  const double tau12[] = {co.c[0], co.c[1]};
  const PhiResult r12 = engine.evaluate(op, b12, tau12);
  scope.add(r12);
  std::vector<Vector> hr;
  hr.reserve(6);
  for (const auto& out : r12.outputs) hr.push_back(sc.h_remainder(sc.plus_un(out)));

  Vector w3(n, 0.0), w4(n, 0.0);
  for (std::size_t k = 0; k < 2; ++k) {
    axpy(co.beta(0, k), hr[k], w3);
    axpy(co.beta(1, k), hr[k], w4);
  }
  const std::vector<Vector> bstage{zero, hf, zero, w3, w4};
  for (std::size_t j = 2; j < 6; ++j) {
    const double tau = co.c[j];
    const PhiResult rj = engine.evaluate(op, bstage, std::span(&tau, 1));
    scope.add(rj);
    hr.push_back(sc.h_remainder(sc.plus_un(rj.outputs.front())));
  }

  std::vector<Vector> b{zero, hf, zero};
  for (std::size_t r = 0; r < 4; ++r) {
    Vector v(n, 0.0);
    for (std::size_t k = 0; k < 4; ++k) axpy(co.alpha(r, k), hr[k + 2], v);
    b.push_back(std::move(v));
  }
  const PhiResult rf = engine.evaluate(op, b);
  scope.add(rf);

  state.u = sc.plus_un(rf.outputs.front());
  state.t += state.h;
  ++state.n;
  return scope.finish(state);
}

StepTrace warmup_step(IntegratorState& state, const OdeProblem& problem, int order,
                      PhiEngine& engine) {
  check_step(state, problem);
  if (order < 1 || order > 20) throw InvalidInput("warmup: order out of range");
  TraceScope scope(state, engine);
  const std::size_t keep = static_cast<std::size_t>(std::max(order - 2, 0));
  const HistoryEntry entry{state.u, problem.rhs(state.u)};

  const std::size_t subs = std::size_t{1} << order;
  IntegratorState inner;
  inner.u = state.u;
  inner.h = state.h / static_cast<double>(subs);
  for (std::size_t s = 0; s < subs; ++s) {
    const StepTrace t = srerk3_step(inner, problem, engine);
    scope.add(PhiResult{{}, t.stats});
  }

  state.history.push_front(entry);
  while (state.history.size() > keep) state.history.pop_back();
  state.u = std::move(inner.u);
  state.t += state.h;
  ++state.n;
  return scope.finish(state);
}

StepTrace warmup(IntegratorState& state, const OdeProblem& problem, int order, PhiEngine& engine) {
  if (!state.history.empty()) throw ContractViolation("warmup: history must start empty");
  const std::size_t need = static_cast<std::size_t>(std::max(order - 2, 0));
  StepTrace total;
  total.h = state.h;
  const std::size_t calls0 = engine.calls();
  const std::size_t sync0 = engine.context().sync_count();
  for (std::size_t i = 0; i < need; ++i) {
    const StepTrace t = warmup_step(state, problem, order, engine);
    total.stats += t.stats;
    total.error_estimate = std::max(total.error_estimate, t.error_estimate);
  }
  total.n = state.n;
  total.t = state.t;
  total.kiops_calls = engine.calls() - calls0;
  total.substeps = total.stats.substeps;
  total.sync_count = engine.context().sync_count() - sync0;
  return total;
}

ExponentialIntegrator::ExponentialIntegrator(IntegratorKind kind, const OdeProblem& problem,
                                             PhiEngine& engine)
    : kind_(kind), problem_(&problem), engine_(&engine) {
  if (is_multistep(kind_)) epi_ = EpiCoefficients::for_order(nominal_order(kind_));
}

IntegratorState ExponentialIntegrator::start(Vector u0, double h, double t0) const {
  if (u0.size() != problem_->size())
    throw InvalidInput("ExponentialIntegrator: initial state length mismatch");
  if (!(h > 0.0)) throw InvalidInput("ExponentialIntegrator: h must be positive");
  IntegratorState s;
  s.u = std::move(u0);
  s.h = h;
  s.t = t0;
  return s;
}

bool ExponentialIntegrator::warmed_up(const IntegratorState& state) const {
  return !is_multistep(kind_) || state.history.size() >= epi_.history_length();
}

StepTrace ExponentialIntegrator::step(IntegratorState& state) {
  switch (kind_) {
    case IntegratorKind::Srerk3: return srerk3_step(state, *problem_, *engine_);
    case IntegratorKind::Srerk6: return srerk6_step(state, *problem_, *engine_);
    default: break;
  }
  if (!warmed_up(state)) return warmup_step(state, *problem_, epi_.order, *engine_);
  return epi_step(state, *problem_, epi_, *engine_);
}

}  // namespace lowsync
