// Command-line driver: sweep, oracle, quantum-check, scaling, correlate, selftest.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "tcge/runner.hpp"
#include "tcge/scaling_analysis.hpp"

namespace {

struct ScheduleFlags {
  std::int64_t sweeps = 5000;
  std::int64_t measure = 20000;
  std::int64_t interval = 10;
  std::int64_t bin_size = 0;
  std::string algorithm = "mixed";

  void add(CLI::App* app) {
    app->add_option("--sweeps", sweeps, "thermalization sweeps")->capture_default_str();
    app->add_option("--measure", measure, "number of measurements")->capture_default_str();
    app->add_option("--interval", interval, "sweeps between measurements")->capture_default_str();
    app->add_option("--bin-size", bin_size, "measurements per jackknife bin (0 = n_measure/50)")
        ->capture_default_str();
    app->add_option("--algorithm", algorithm, "metropolis | wolff | mixed")
        ->check(CLI::IsMember({"metropolis", "wolff", "mixed"}))
        ->capture_default_str();
  }

  tcge::Schedule schedule() const {
    tcge::Schedule s;
    s.n_therm = sweeps;
    s.n_measure = measure;
    s.interval = interval;
    s.bin_size = bin_size;
    s.algorithm = tcge::parse_algorithm(algorithm);
    return s;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global entanglement of the perturbed toric code via 2D Ising Monte Carlo"};
  app.set_config("--config", "", "key = value configuration file (command-line flags take precedence)");
  app.require_subcommand(1);

  std::uint64_t seed = 20240917;
  std::string out;

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over a beta grid; one CSV per size");
  std::vector<int> sweep_sizes{8};
  tcge::BetaGrid grid;
  double refine_start = 0.0, refine_stop = 0.0, refine_step = 0.0;
  double max_error = 0.02;
  ScheduleFlags sweep_sched;
  sweep->add_option("--size", sweep_sizes, "lattice sizes L")->delimiter(',')->capture_default_str();
  sweep->add_option("--beta-start", grid.main.start)->capture_default_str();
  sweep->add_option("--beta-stop", grid.main.stop)->capture_default_str();
  sweep->add_option("--beta-step", grid.main.step)->capture_default_str();
  auto* refine_opt = sweep->add_option("--refine-start", refine_start, "refinement window start");
  sweep->add_option("--refine-stop", refine_stop, "refinement window stop")->needs(refine_opt);
  sweep->add_option("--refine-step", refine_step, "refinement window step")->needs(refine_opt);
  sweep->add_option("--seed", seed, "master seed")->capture_default_str();
  sweep->add_option("--max-error", max_error, "flag rows whose GE/GE-tilde error exceeds this")
      ->capture_default_str();
  sweep->add_option("--out", out, "output directory")->default_str("out");
  sweep_sched.add(sweep);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Compare Monte Carlo against exact enumeration (L <= 4)");
  tcge::OracleOptions oracle_opts;
  ScheduleFlags oracle_sched;
  oracle->add_option("--size", oracle_opts.sizes, "lattice sizes")->delimiter(',')->capture_default_str();
  oracle->add_option("--beta", oracle_opts.betas, "couplings")->delimiter(',')->capture_default_str();
  oracle->add_option("--seed", seed, "master seed")->capture_default_str();
  oracle->add_option("--out", out, "JSON report path");
  oracle_sched.add(oracle);

  // quantum-check
  auto* quantum = app.add_subcommand("quantum-check", "Exact ground state vs classical closed forms");
  std::vector<double> quantum_betas{0.0, 0.2, 0.441, 0.8, 2.0};
  int quantum_size = 2;
  quantum->add_option("--beta", quantum_betas, "couplings")->delimiter(',')->capture_default_str();
  quantum->add_option("--size", quantum_size, "2, or 3 (sparse)")->check(CLI::IsMember({2, 3}))->capture_default_str();
  quantum->add_option("--out", out, "JSON report path");

  // scaling
  auto* scaling = app.add_subcommand("scaling", "Finite-size scaling fits from a sweep directory");
  std::string sweep_dir;
  std::vector<int> scaling_sizes;
  double beta_star = tcge::kCriticalBeta;
  scaling->add_option("dir", sweep_dir, "directory with sweep_L<L>.csv files")->required();
  scaling->add_option("--size", scaling_sizes, "sizes that must be present")->delimiter(',');
  scaling->add_option("--beta-star", beta_star, "critical coupling")->capture_default_str();
  scaling->add_option("--out", out, "JSON report path");

  // correlate
  auto* correlate = app.add_subcommand("correlate", "Energy-energy correlation profile f_EE(r)");
  int corr_size = 16;
  double corr_beta = tcge::kCriticalBeta;
  ScheduleFlags corr_sched;
  correlate->add_option("--size", corr_size, "lattice size L")->capture_default_str();
  correlate->add_option("--beta", corr_beta, "coupling")->capture_default_str();
  correlate->add_option("--seed", seed, "chain seed")->capture_default_str();
  correlate->add_option("--out", out, "CSV output path")->default_str("fee.csv");
  corr_sched.add(correlate);

  auto* selftest = app.add_subcommand("selftest", "Quick built-in consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : tcge::kExitUsage;
  }

  try {
    const int workers = tcge::worker_count_from_env();
    if (sweep->parsed()) {
      tcge::RunManifest m;
      m.master_seed = seed;
      m.sizes = sweep_sizes;
      m.grid = grid;
      if (refine_opt->count() > 0) m.grid.refine = tcge::BetaWindow{refine_start, refine_stop, refine_step};
      m.schedule = sweep_sched.schedule();
      m.out_dir = out.empty() ? "out" : out;
      m.max_error = max_error;
      m.validate();
      return tcge::cmd_sweep(m, workers, std::cout);
    }
    if (oracle->parsed()) {
      oracle_opts.schedule = oracle_sched.schedule();
      oracle_opts.master_seed = seed;
      return tcge::cmd_oracle(oracle_opts, workers, out, std::cout);
    }
    if (quantum->parsed()) return tcge::cmd_quantum_check(quantum_betas, quantum_size, out, std::cout);
    if (scaling->parsed()) return tcge::cmd_scaling(sweep_dir, scaling_sizes, beta_star, out, std::cout);
    if (correlate->parsed()) {
      return tcge::cmd_correlate(corr_size, corr_beta, seed, corr_sched.schedule(), out.empty() ? "fee.csv" : out,
                                 std::cout);
    }
    if (selftest->parsed()) return tcge::cmd_selftest(std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tcge::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tcge::kExitTolerance;
  }
  return tcge::kExitUsage;
}
