#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "lowsync/errors.hpp"
#include "lowsync/harness.hpp"
#include "lowsync/phikry.hpp"

namespace {

using namespace lowsync;

constexpr const char* kConfigKeys[] = {
    "problem", "integrator", "backend", "reference_backend", "nx",      "ny",
    "epsilon", "gamma",      "dt",      "t_final",           "steps",   "krylov_tol",
    "m_init",  "m_max",      "ranks",   "seed",              "ic_noise", "output"};

struct CommonArgs {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* app, CommonArgs& args) {
  app->add_option("-c,--config", args.config_path, "key = value config file");
  for (const char* key : kConfigKeys) {
    std::string flag = std::string("--") + key;
    for (char& ch : flag)
      if (ch == '_') ch = '-';
    std::string k = key;
    app->add_option_function<std::string>(
        flag, [&args, k](const std::string& v) { args.overrides[k] = v; }, "config key " + k);
  }
}

RunConfig build_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty() ? RunConfig{} : RunConfig::load(args.config_path);
  for (const auto& [k, v] : args.overrides) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << text;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::vector<std::string>& names, Parse parse,
                          std::span<const T> all) {
  if (names.empty()) return {all.begin(), all.end()};
  std::vector<T> out;
  for (const auto& n : names) out.push_back(parse(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-synchronization Krylov exponential integrator experiments"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, conv_args, table_args;
  std::vector<std::string> sweep_integrators, sweep_backends, table_backends;
  std::vector<double> hs{0.02, 0.01, 0.005};
  std::string sweep_csv, conv_csv, table_csv, log_csv;

  auto* run = app.add_subcommand("run", "integrate one configuration, print a JSON report");
  add_common(run, run_args);
  run->add_option("--reduce-log", log_csv, "write the reduction log CSV to this path");

  auto* sweep = app.add_subcommand("sweep", "integrator x backend sweep, print the sync table");
  add_common(sweep, sweep_args);
  sweep->add_option("--integrators", sweep_integrators, "subset of integrators (default all)")
      ->delimiter(',');
  sweep->add_option("--backends", sweep_backends, "subset of backends (default all)")
      ->delimiter(',');
  sweep->add_option("--csv", sweep_csv, "output path for the sync table");

  auto* conv = app.add_subcommand("converge", "step-halving study, print the convergence table");
  add_common(conv, conv_args);
  conv->add_option("--hs", hs, "step sizes, largest first")->delimiter(',');
  conv->add_option("--csv", conv_csv, "output path for the convergence table");

  auto* table = app.add_subcommand("synctable", "all backends for one integrator");
  add_common(table, table_args);
  table->add_option("--backends", table_backends, "subset of backends (default all)")
      ->delimiter(',');
  table->add_option("--csv", table_csv, "output path for the sync table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const RunConfig cfg = build_config(run_args);
      const ExperimentReport r = run_experiment(cfg);
      write_outputs(r);
      if (!log_csv.empty()) {
        std::ofstream out(log_csv);
        out << "seq,tag,payload_len\n";
        for (std::size_t i = 0; i < r.counters.log.size(); ++i)
          out << i << ',' << r.counters.log[i].tag << ',' << r.counters.log[i].payload_len
              << '\n';
      }
      std::cout << report_json(r) << '\n';
    } else if (*sweep) {
      const RunConfig cfg = build_config(sweep_args);
      const auto ints = parse_list<IntegratorKind>(sweep_integrators, parse_integrator,
                                                   std::span(kAllIntegrators));
      const auto bks =
          parse_list<OrthoBackend>(sweep_backends, parse_backend, std::span(kAllBackends));
      const auto reports = run_sweep(cfg, ints, bks);
      std::ostringstream os;
      report_sync_table(reports, os);
      emit(sweep_csv, os.str());
    } else if (*conv) {
      const RunConfig cfg = build_config(conv_args);
      const auto rows = convergence_study(cfg, hs);
      std::ostringstream os;
      write_convergence_csv(rows, os);
      emit(conv_csv, os.str());
    } else if (*table) {
      const RunConfig cfg = build_config(table_args);
      const auto bks =
          parse_list<OrthoBackend>(table_backends, parse_backend, std::span(kAllBackends));
      const IntegratorKind one[] = {cfg.integrator};
      const auto reports = run_sweep(cfg, one, bks);
      std::ostringstream os;
      report_sync_table(reports, os);
      emit(table_csv, os.str());
    }
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
