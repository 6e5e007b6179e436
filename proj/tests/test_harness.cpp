#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "lowsync/errors.hpp"
#include "lowsync/harness.hpp"
#include "support.hpp"

using namespace lowsync;

namespace {

RunConfig small_ac() {
  RunConfig c;
  c.problem = "ac";
  c.nx = 24;
  c.steps = 3;
  return c;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config parsing") {
    std::istringstream in(
        "# sample\n"
        "problem = adr\n"
        "integrator = srerk3   # trailing comment\n"
        "backend=hcwy\n"
        "reference_backend = mgs\n"
        "nx = 32\n"
        "dt = 5e-3\n"
        "ranks = 4\n"
        "\n");
    const RunConfig c = RunConfig::parse(in);
    CHECK(c.problem == "adr");
    CHECK(c.integrator == IntegratorKind::Srerk3);
    CHECK(c.backend == OrthoBackend::HybridCwy);
    CHECK(c.reference_backend == OrthoBackend::Mgs);
    CHECK(c.nx == 32);
    CHECK(c.dt == 5e-3);
    CHECK(c.ranks == 4);
    CHECK_NOTHROW(c.validate());

    std::istringstream again(c.to_text());
    const RunConfig d = RunConfig::parse(again);
    CHECK(d.to_text() == c.to_text());
  }

  TEST_CASE("config errors") {
    RunConfig c;
    CHECK_THROWS_AS(c.set("colour", "blue"), InvalidInput);
    CHECK_THROWS_AS(c.set("nx", "many"), InvalidInput);
    CHECK_THROWS_AS(c.set("problem", "heat"), InvalidInput);
    CHECK_THROWS_AS(c.set("backend", "householder"), InvalidInput);
    std::istringstream bad("problem ac\n");
    CHECK_THROWS_AS(RunConfig::parse(bad), InvalidInput);
    CHECK_THROWS_AS(RunConfig::load("/nonexistent/run.cfg"), InvalidInput);

    RunConfig v;
    v.krylov_tol = 0.0;
    CHECK_THROWS_AS(v.validate(), InvalidInput);
    v = RunConfig{};
    v.nx = 8;
    CHECK_THROWS_AS(v.validate(), InvalidInput);
    v = RunConfig{};
    v.m_init = 80;
    CHECK_THROWS_AS(v.validate(), InvalidInput);
    v = RunConfig{};
    v.steps = 0;
    CHECK_THROWS_AS(v.validate(), InvalidInput);
  }

  TEST_CASE("setup follows the config") {
    RunConfig c = small_ac();
    c.dt = 2e-3;
    const ProblemSetup s = make_setup(c);
    CHECK(s.u0.size() == 24 * 24);
    CHECK(s.steps == 3);
    CHECK(s.dt == 2e-3);
    REQUIRE(s.pde);
    CHECK(s.pde->epsilon == 0.1);

    RunConfig l;
    l.problem = "logistic";
    const ProblemSetup ls = make_setup(l);
    CHECK(ls.u0 == Vector{0.1});
    CHECK(ls.dt * static_cast<double>(ls.steps) == doctest::Approx(1.0));
  }

  TEST_CASE("run report and determinism") {
    RunConfig c = small_ac();
    c.backend = OrthoBackend::HybridGsmgs;
    c.reference_backend = OrthoBackend::Mgs;
    const ExperimentReport a = run_experiment(c);
    const ExperimentReport b = run_experiment(c);
    CHECK(a.final_state == b.final_state);
    CHECK(a.sync_total == b.sync_total);
    CHECK(a.steps == 3);
    CHECK(a.traces.size() == 3);
    CHECK(a.sync_total == a.counters.sync_count);
    double sum = 0.0;
    for (double x : a.final_state) sum += x;
    CHECK(a.checksum == sum);
    REQUIRE(a.reference);
    CHECK(a.reference->sync_total > a.sync_total);
    CHECK(a.reference->solution_diff_rel < 1e-7);

    const auto j = nlohmann::json::parse(report_json(a));
    for (const char* key : {"problem", "integrator", "backend", "checksum", "sync_total",
                            "kiops_calls", "substeps", "reference"})
      CHECK(j.contains(key));
    CHECK(j["sync_total"].get<std::size_t>() == a.sync_total);
  }

  TEST_CASE("checksums do not depend on the rank count") {
    RunConfig c = small_ac();
    c.ranks = 1;
    const double ref = run_experiment(c).checksum;
    for (std::size_t p : {4u, 16u}) {
      c.ranks = p;
      CHECK(std::abs(run_experiment(c).checksum - ref) <= 1e-12 * std::abs(ref));
    }
  }

  TEST_CASE("sync table") {
    RunConfig c = small_ac();
    c.steps = 1;
    const IntegratorKind ks[] = {IntegratorKind::Epi4};
    const OrthoBackend bs[] = {OrthoBackend::Mgs, OrthoBackend::IoCgs, OrthoBackend::HybridCwy};
    const auto reports = run_sweep(c, ks, bs);
    REQUIRE(reports.size() == 3);
    std::ostringstream os;
    report_sync_table(reports, os);
    const std::string t = os.str();
    CHECK(t.rfind("problem,integrator,backend,ranks,sync_total,sync_per_arnoldi_step_mean,"
                  "kiops_calls,substeps,ratio_vs_reference\n",
                  0) == 0);
    CHECK(count_lines(t) == 4);
    CHECK(t.find("ac,epi4,iocgs,1,") != std::string::npos);
    CHECK(t.find(",1\n") != std::string::npos);
    CHECK(reports[0].sync_total > reports[1].sync_total);
    CHECK(reports[2].sync_total < reports[1].sync_total);
    CHECK(reports[2].sync_per_arnoldi_step_mean() < 2.0);
  }

  TEST_CASE("outputs are written") {
    RunConfig c = small_ac();
    c.steps = 1;
    const auto dir = std::filesystem::temp_directory_path() / "lowsync_harness_test";
    std::filesystem::remove_all(dir);
    c.output = dir.string();
    write_outputs(run_experiment(c));
    for (const char* f : {"report.json", "reduce_log.csv", "steps.csv", "final.bin", "final.hdr"})
      CHECK(std::filesystem::exists(dir / f));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("fit_slope") {
    const std::vector<double> h{0.1, 0.05, 0.025};
    std::vector<double> e;
    for (double x : h) e.push_back(3.0 * std::pow(x, 4));
    CHECK(fit_slope(h, e) == doctest::Approx(4.0).epsilon(1e-12));
    const std::vector<double> one{0.1};
    CHECK_THROWS_AS(fit_slope(one, one), InvalidInput);
    const std::vector<double> h2{0.1, 0.05}, zero{0.0, 1.0};
    CHECK_THROWS_AS(fit_slope(h2, zero), InvalidInput);
  }

  TEST_CASE("logistic convergence study") {
    RunConfig c;
    c.problem = "logistic";
    c.integrator = IntegratorKind::Epi4;
    c.krylov_tol = 1e-14;
    const double hs[] = {0.02, 0.01, 0.005};
    const auto rows = convergence_study(c, hs);
    REQUIRE(rows.size() == 3);
    CHECK_FALSE(rows[0].slope);
    for (std::size_t i = 1; i < 3; ++i) {
      REQUIRE(rows[i].slope);
      CHECK(*rows[i].slope == doctest::Approx(4.0).epsilon(0.1));
    }
    std::ostringstream os;
    write_convergence_csv(rows, os);
    CHECK(count_lines(os.str()) == 4);
  }
}
