#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcge/estimators.hpp"
#include "tcge/mc_engine.hpp"
#include "tcge/scaling_analysis.hpp"

namespace tcge {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitTolerance = 1;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitUsage = 64;

// Environment variable holding the worker count for cell fan-out.
inline constexpr const char* kWorkersEnv = "TCGE_WORKERS";

struct Schedule {
  std::int64_t n_therm = 5000;
  std::int64_t n_measure = 20000;
  std::int64_t interval = 10;
  Algorithm algorithm = Algorithm::mixed;
  // Measurements per jackknife bin; 0 picks n_measure / 50.
  std::int64_t bin_size = 0;

  std::int64_t effective_bin_size() const;
};

struct BetaWindow {
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;
};

struct BetaGrid {
  BetaWindow main{0.30, 0.60, 0.005};
  std::optional<BetaWindow> refine;
};

// Grid points start + i*step for i = 0..round((stop-start)/step), merged with
// the refinement window, sorted, points closer than 1e-9 collapsed. Values are
// rounded to 12 decimals. Throws std::invalid_argument on an empty or
// malformed window.
std::vector<double> expand_grid(const BetaGrid& grid);

struct RunManifest {
  std::uint64_t master_seed = 20240917;
  std::vector<int> sizes{8};
  BetaGrid grid;
  Schedule schedule;
  std::filesystem::path out_dir = "out";
  // Rows whose GE or GE-tilde error exceeds this are flagged as not converged.
  double max_error = 0.02;

  void validate() const;
  nlohmann::json to_json() const;
};

int worker_count_from_env();

// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions are
// rethrown after all workers stop (first by task index).
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// Seed of the chain for (L, beta index) under a master seed.
std::uint64_t chain_seed(std::uint64_t master, int size, std::size_t beta_index);

// Samples one (L, beta) cell and returns its report with jackknife errors.
EntanglementReport run_cell(int size, double beta, std::uint64_t seed, const Schedule& schedule,
                            bool track_pairs = true);

struct SweepResult {
  std::vector<SweepSeries> series;  // one per manifest size, manifest order
  std::vector<std::pair<int, double>> flagged;  // (L, beta) rows over max_error
};

// All cells of the manifest, dGE-tilde/dbeta filled by finite differences.
SweepResult run_sweep(const RunManifest& manifest, int workers);

// sweep: writes sweep_L<L>.csv plus sweep_L<L>.json sidecars into out_dir.
// Returns kExitOk, or kExitNotConverged if any row was flagged.
int cmd_sweep(const RunManifest& manifest, int workers, std::ostream& log);

struct OracleOptions {
  std::vector<int> sizes{2, 3, 4};
  std::vector<double> betas{0.2, 0.44, 0.8};
  Schedule schedule;
  std::uint64_t master_seed = 20240917;
  double sigma_limit = 3.0;
  double abs_limit = 1e-2;
};

struct OracleComparison {
  int size = 0;
  double beta = 0.0;
  std::string observable;
  double exact = 0.0;
  double estimate = 0.0;
  double error = 0.0;
  double deviation_sigma = 0.0;
  bool pass = false;
};

struct OracleReport {
  std::vector<OracleComparison> comparisons;
  double max_deviation_sigma = 0.0;
  bool pass = true;
  nlohmann::json to_json() const;
};

OracleReport run_oracle(const OracleOptions& options, int workers);
// Writes the JSON report to `out` (if non-empty) and stdout-style `log`.
int cmd_oracle(const OracleOptions& options, int workers, const std::filesystem::path& out, std::ostream& log);

struct QuantumCheckRow {
  double beta = 0.0;
  double ge_quantum = 0.0;
  double ge_classical = 0.0;
  double ge_tilde_quantum = 0.0;
  double ge_tilde_classical = 0.0;
  double log_z_quantum = 0.0;
  double log_z_classical = 0.0;
  double norm_residual = 0.0;
  double max_off_diagonal = 0.0;
  double max_residual() const;
};

struct QuantumCheckReport {
  int size = 2;
  double tolerance = 1e-10;
  std::vector<QuantumCheckRow> rows;
  bool pass = true;
  nlohmann::json to_json() const;
};

QuantumCheckReport run_quantum_check(const std::vector<double>& betas, int size = 2, double tolerance = 1e-10);
int cmd_quantum_check(const std::vector<double>& betas, int size, const std::filesystem::path& out,
                      std::ostream& log);

struct SizeScaling {
  int size = 0;
  double n = 0.0;
  Peak derivative_peak;
  Peak q_peak;
};

struct ScalingReport {
  double beta_star = kCriticalBeta;
  std::vector<SizeScaling> sizes;
  LinearFit kappa_fit;
  PowerLawFit gamma_fit;
  LinearFit extrapolation;
  // beta_m(inf) with gamma shifted by -/+ its standard error (NaN if undefined).
  double beta_inf_gamma_low = 0.0;
  double beta_inf_gamma_high = 0.0;
  nlohmann::json to_json() const;
};

ScalingReport analyze_scaling(const std::vector<SweepSeries>& series, double beta_star = kCriticalBeta);
// Reads every sweep_L*.csv in `dir`. When `expected` is non-empty, missing
// sizes raise std::runtime_error naming them; fewer than 3 sizes also throws.
std::vector<SweepSeries> load_sweep_dir(const std::filesystem::path& dir, const std::vector<int>& expected = {});
int cmd_scaling(const std::filesystem::path& dir, const std::vector<int>& expected, double beta_star,
                const std::filesystem::path& out, std::ostream& log);

struct CorrelationResult {
  EntanglementReport report;
  std::vector<FeePoint> profile;
  std::optional<LinearFit> slope;  // over 3 <= r <= L/4 when enough points
};

CorrelationResult run_correlate(int size, double beta, std::uint64_t seed, const Schedule& schedule);
int cmd_correlate(int size, double beta, std::uint64_t seed, const Schedule& schedule,
                  const std::filesystem::path& out, std::ostream& log);

// Fast built-in consistency checks; returns kExitOk or kExitTolerance.
int cmd_selftest(std::ostream& log);

}  // namespace tcge
