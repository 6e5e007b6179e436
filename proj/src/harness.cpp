#include "lowsync/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lowsync/errors.hpp"

namespace lowsync {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size())
    throw InvalidInput("config: '" + std::string(key) + "' expects a number, got '" + s + "'");
  return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw InvalidInput("config: '" + std::string(key) + "' expects a non-negative integer, got '" +
                       std::string(v) + "'");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_pde(std::string_view problem) { return problem != "logistic"; }

constexpr double kLogisticU0 = 0.1;

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (key == "problem") {
    if (v != "logistic") parse_problem(v);
    problem = v;
  } else if (key == "integrator") {
    integrator = parse_integrator(v);
  } else if (key == "backend") {
    backend = parse_backend(v);
  } else if (key == "reference_backend") {
    if (v.empty() || v == "none")
      reference_backend.reset();
    else
      reference_backend = parse_backend(v);
  } else if (key == "nx") {
    nx = parse_uint(key, v);
  } else if (key == "ny") {
    ny = parse_uint(key, v);
  } else if (key == "epsilon") {
    epsilon = parse_double(key, v);
  } else if (key == "gamma") {
    gamma = parse_double(key, v);
  } else if (key == "dt") {
    dt = parse_double(key, v);
  } else if (key == "t_final") {
    t_final = parse_double(key, v);
  } else if (key == "steps") {
    steps = parse_uint(key, v);
  } else if (key == "krylov_tol") {
    krylov_tol = parse_double(key, v);
  } else if (key == "m_init") {
    m_init = parse_uint(key, v);
  } else if (key == "m_max") {
    m_max = parse_uint(key, v);
  } else if (key == "ranks") {
    ranks = parse_uint(key, v);
  } else if (key == "seed") {
    seed = parse_uint(key, v);
  } else if (key == "ic_noise") {
    ic_noise = parse_double(key, v);
  } else if (key == "output") {
    output = v;
  } else {
    throw InvalidInput("config: unknown key '" + std::string(key) + "'");
  }
}

RunConfig RunConfig::parse(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("config: cannot open '" + path + "'");
  return parse(in);
}

void RunConfig::validate() const {
  if (!(krylov_tol > 0.0 && krylov_tol < 1.0))
    throw InvalidInput("config: krylov_tol must lie in (0, 1)");
  if (ranks < 1) throw InvalidInput("config: ranks must be >= 1");
  if (is_pde(problem) && (nx < 16 || ny.value_or(nx) < 16))
    throw InvalidInput("config: grid size must be >= 16 per axis");
  if (dt && !(*dt > 0.0)) throw InvalidInput("config: dt must be positive");
  if (t_final && !(*t_final > 0.0)) throw InvalidInput("config: t_final must be positive");
  if (steps && *steps == 0) throw InvalidInput("config: steps must be >= 1");
  if (epsilon && !(*epsilon > 0.0)) throw InvalidInput("config: epsilon must be positive");
  if (m_init < 1 || m_max < m_init) throw InvalidInput("config: need 1 <= m_init <= m_max");
  if (!(ic_noise >= 0.0)) throw InvalidInput("config: ic_noise must be >= 0");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "problem = " << problem << '\n'
     << "integrator = " << to_string(integrator) << '\n'
     << "backend = " << to_string(backend) << '\n';
  if (reference_backend) os << "reference_backend = " << to_string(*reference_backend) << '\n';
  os << "nx = " << nx << '\n';
  if (ny) os << "ny = " << *ny << '\n';
  if (epsilon) os << "epsilon = " << fmt(*epsilon) << '\n';
  if (gamma) os << "gamma = " << fmt(*gamma) << '\n';
  if (dt) os << "dt = " << fmt(*dt) << '\n';
  if (t_final) os << "t_final = " << fmt(*t_final) << '\n';
  if (steps) os << "steps = " << *steps << '\n';
  os << "krylov_tol = " << fmt(krylov_tol) << '\n'
     << "m_init = " << m_init << '\n'
     << "m_max = " << m_max << '\n'
     << "ranks = " << ranks << '\n'
     << "seed = " << seed << '\n'
     << "ic_noise = " << fmt(ic_noise) << '\n';
  if (!output.empty()) os << "output = " << output << '\n';
  return os.str();
}

ProblemSetup make_setup(const RunConfig& cfg) {
  cfg.validate();
  ProblemSetup s;
  double t_final = 0.0;
  if (is_pde(cfg.problem)) {
    ProblemSpec spec = ProblemSpec::defaults(parse_problem(cfg.problem), cfg.nx);
    spec.grid.ny = cfg.ny.value_or(cfg.nx);
    if (cfg.epsilon) spec.epsilon = *cfg.epsilon;
    if (cfg.gamma) spec.gamma = *cfg.gamma;
    if (cfg.dt) spec.dt = *cfg.dt;
    if (cfg.t_final) spec.t_final = *cfg.t_final;
    auto p = std::make_unique<PdeProblem>(spec);
    s.u0 = p->initial_condition();
    s.problem = std::move(p);
    s.pde = spec;
    s.dt = spec.dt;
    t_final = spec.t_final;
  } else {
    s.problem = std::make_unique<LogisticOde>(1);
    s.u0 = {kLogisticU0};
    s.dt = cfg.dt.value_or(1e-2);
    t_final = cfg.t_final.value_or(1.0);
  }

  if (cfg.ic_noise > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(-cfg.ic_noise, cfg.ic_noise);
    const bool dirichlet = s.pde && s.pde->grid.bc == BoundaryKind::Dirichlet;
    for (std::size_t k = 0; k < s.u0.size(); ++k) {
      const double d = dist(rng);
      if (dirichlet && s.pde->grid.on_boundary(k % s.pde->grid.nx, k / s.pde->grid.nx)) continue;
      s.u0[k] += d;
    }
  }

  if (cfg.steps) {
    s.steps = *cfg.steps;
  } else {
    const double ratio = t_final / s.dt;
    s.steps = static_cast<std::size_t>(std::llround(ratio));
    if (s.steps == 0 || std::abs(ratio - static_cast<double>(s.steps)) > 1e-9 * ratio)
      throw InvalidInput("config: t_final must be a positive multiple of dt");
  }
  return s;
}

double ExperimentReport::sync_per_arnoldi_step_mean() const {
  return totals.arnoldi_steps == 0
             ? 0.0
             : static_cast<double>(sync_total) / static_cast<double>(totals.arnoldi_steps);
}

double ExperimentReport::mean_krylov_dim() const {
  const std::size_t builds = totals.arnoldi_builds;
  return builds == 0 ? 0.0
                     : static_cast<double>(totals.arnoldi_steps) / static_cast<double>(builds);
}

namespace {

ExperimentReport run_single(const RunConfig& cfg) {
  const ProblemSetup setup = make_setup(cfg);
  ReductionContext ctx(cfg.ranks);
  PhiOptions opts;
  opts.tol = cfg.krylov_tol;
  opts.m_init = cfg.m_init;
  opts.m_max = cfg.m_max;
  opts.arnoldi.backend = cfg.backend;
  PhiEngine engine(opts, ctx);
  ExponentialIntegrator integ(cfg.integrator, *setup.problem, engine);

  ExperimentReport r;
  r.config = cfg;
  r.state_size = setup.u0.size();
  r.steps = setup.steps;

  const auto t0 = std::chrono::steady_clock::now();
  IntegratorState state = integ.start(setup.u0, setup.dt);
  for (std::size_t k = 0; k < setup.steps; ++k) {
    try {
      r.traces.push_back(integ.step(state));
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("step " + std::to_string(k) + ": " + e.what(), e.stats());
    } catch (const InvalidInput&) {
      throw;
    } catch (const Error& e) {
      throw NumericError("step " + std::to_string(k) + ": " + e.what());
    }
    if (!std::all_of(state.u.begin(), state.u.end(), [](double v) { return std::isfinite(v); }))
      throw NumericError("step " + std::to_string(k) + ": non-finite solution");
  }
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  r.t_final = state.t;
  for (double v : state.u) {
    r.checksum += v;
    r.l2_norm += v * v;
  }
  r.l2_norm = std::sqrt(r.l2_norm);
  r.final_state = std::move(state.u);
  r.totals = engine.totals();
  r.kiops_calls = engine.calls();
  r.sync_total = ctx.sync_count();
  r.reduces_grouped = r.totals.reduces_grouped;
  r.reduces_fallback = r.totals.reduces_fallback;
  r.counters = ctx.snapshot();
  return r;
}

double relative_diff(const Vector& a, const Vector& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return den == 0.0 ? num : num / den;
}

}  // namespace

ExperimentReport run_experiment(const RunConfig& cfg) {
  ExperimentReport r = run_single(cfg);
  if (cfg.reference_backend) {
    RunConfig rc = cfg;
    rc.backend = *cfg.reference_backend;
    rc.reference_backend.reset();
    const ExperimentReport ref = run_single(rc);
    ReferenceComparison cmp;
    cmp.backend = rc.backend;
    cmp.sync_total = ref.sync_total;
    cmp.sync_ratio = ref.sync_total == 0 ? 0.0
                                         : static_cast<double>(r.sync_total) /
                                               static_cast<double>(ref.sync_total);
    cmp.solution_diff_rel = relative_diff(r.final_state, ref.final_state);
    r.reference = cmp;
  }
  return r;
}

std::vector<ExperimentReport> run_sweep(const RunConfig& base,
                                        std::span<const IntegratorKind> integrators,
                                        std::span<const OrthoBackend> backends) {
  std::vector<ExperimentReport> out;
  for (IntegratorKind k : integrators)
    for (OrthoBackend b : backends) {
      RunConfig cfg = base;
      cfg.integrator = k;
      cfg.backend = b;
      cfg.reference_backend.reset();
      out.push_back(run_experiment(cfg));
    }
  return out;
}

void report_sync_table(std::span<const ExperimentReport> reports, std::ostream& os,
                       OrthoBackend reference) {
  os << "problem,integrator,backend,ranks,sync_total,sync_per_arnoldi_step_mean,kiops_calls,"
        "substeps,ratio_vs_reference\n";
  for (const auto& r : reports) {
    const RunConfig& c = r.config;
    const ExperimentReport* ref = nullptr;
    for (const auto& q : reports)
      if (q.config.backend == reference && q.config.problem == c.problem &&
          q.config.integrator == c.integrator && q.config.ranks == c.ranks) {
        ref = &q;
        break;
      }
    os << c.problem << ',' << to_string(c.integrator) << ',' << to_string(c.backend) << ','
       << c.ranks << ',' << r.sync_total << ',' << fmt(r.sync_per_arnoldi_step_mean()) << ','
       << r.kiops_calls << ',' << r.totals.substeps << ',';
    if (ref && ref->sync_total > 0)
      os << fmt(static_cast<double>(r.sync_total) / static_cast<double>(ref->sync_total));
    os << '\n';
  }
}

std::string report_json(const ExperimentReport& r) {
  using nlohmann::json;
  const RunConfig& c = r.config;
  json j;
  j["problem"] = c.problem;
  j["integrator"] = std::string(to_string(c.integrator));
  j["backend"] = std::string(to_string(c.backend));
  j["ranks"] = c.ranks;
  j["krylov_tol"] = c.krylov_tol;
  j["seed"] = c.seed;
  j["state_size"] = r.state_size;
  j["steps"] = r.steps;
  j["t_final"] = r.t_final;
  j["checksum"] = r.checksum;
  j["l2_norm"] = r.l2_norm;
  j["wall_seconds"] = r.wall_seconds;
  j["sync_total"] = r.sync_total;
  j["reduces_grouped"] = r.reduces_grouped;
  j["reduces_fallback"] = r.reduces_fallback;
  j["kiops_calls"] = r.kiops_calls;
  j["substeps"] = r.totals.substeps;
  j["rejects"] = r.totals.rejects;
  j["arnoldi_steps"] = r.totals.arnoldi_steps;
  j["arnoldi_builds"] = r.totals.arnoldi_builds;
  j["max_krylov_dim"] = r.totals.max_m;
  j["sync_per_arnoldi_step_mean"] = r.sync_per_arnoldi_step_mean();
  if (r.reference) {
    j["reference"] = {{"backend", std::string(to_string(r.reference->backend))},
                      {"sync_total", r.reference->sync_total},
                      {"sync_ratio", r.reference->sync_ratio},
                      {"solution_diff_rel", r.reference->solution_diff_rel}};
  }
  return j.dump(2);
}

void write_step_csv(std::span<const StepTrace> traces, std::ostream& os) {
  os << "n,t,h,kiops_calls,substeps,sync_count,error_estimate\n";
  for (const auto& t : traces)
    os << t.n << ',' << fmt(t.t) << ',' << fmt(t.h) << ',' << t.kiops_calls << ',' << t.substeps
       << ',' << t.sync_count << ',' << fmt(t.error_estimate) << '\n';
}

void write_outputs(const ExperimentReport& r) {
  if (r.config.output.empty()) return;
  namespace fs = std::filesystem;
  const fs::path dir(r.config.output);
  fs::create_directories(dir);
  std::ofstream(dir / "report.json") << report_json(r) << '\n';
  std::ofstream log(dir / "reduce_log.csv");
  log << "seq,tag,payload_len\n";
  for (std::size_t i = 0; i < r.counters.log.size(); ++i)
    log << i << ',' << r.counters.log[i].tag << ',' << r.counters.log[i].payload_len << '\n';
  std::ofstream steps(dir / "steps.csv");
  write_step_csv(r.traces, steps);
  if (is_pde(r.config.problem)) {
    const ProblemSpec spec = make_setup(r.config).pde.value();
    write_snapshot(dir / "final", spec.grid, r.final_state, r.t_final);
  }
}

std::vector<ConvergenceRow> convergence_study(const RunConfig& base, std::span<const double> hs) {
  if (hs.empty()) throw InvalidInput("convergence_study: no step sizes");
  const bool exact = !is_pde(base.problem);
  const ProblemSetup probe = make_setup(base);
  const double t_final = probe.dt * static_cast<double>(probe.steps);

  auto solve = [&](double h) {
    RunConfig c = base;
    c.dt = h;
    c.steps.reset();
    c.t_final = t_final;
    c.reference_backend.reset();
    return run_single(c).final_state;
  };

  std::vector<ConvergenceRow> rows;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    ConvergenceRow row;
    row.problem = base.problem;
    row.integrator = base.integrator;
    row.h = hs[i];
    const Vector u = solve(hs[i]);
    if (exact) {
      row.error = std::abs(u[0] - LogisticOde::exact(kLogisticU0, t_final));
    } else {
      row.error = relative_diff(u, solve(hs[i] / 2.0));
    }
    if (i > 0 && row.error > 0.0 && rows.back().error > 0.0)
      row.slope = std::log(rows.back().error / row.error) / std::log(rows.back().h / row.h);
    rows.push_back(row);
  }
  return rows;
}

void write_convergence_csv(std::span<const ConvergenceRow> rows, std::ostream& os) {
  os << "problem,integrator,h,error,slope\n";
  for (const auto& r : rows) {
    os << r.problem << ',' << to_string(r.integrator) << ',' << fmt(r.h) << ',' << fmt(r.error)
       << ',';
    if (r.slope) os << fmt(*r.slope);
    os << '\n';
  }
}

double fit_slope(std::span<const double> hs, std::span<const double> errors) {
  if (hs.size() != errors.size() || hs.size() < 2)
    throw InvalidInput("fit_slope: need at least two matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(hs[i] > 0.0) || !(errors[i] > 0.0))
      throw InvalidInput("fit_slope: step sizes and errors must be positive");
    const double x = std::log(hs[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace lowsync
