#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tcge/correlator.hpp"
#include "tcge/mc_engine.hpp"
#include "tcge/torus_lattice.hpp"

namespace tcge {

// Sign convention throughout: link energy E_a = -S_1 S_2, so the ordered
// state has e = <E>/N = -1. Every entanglement formula depends on e only
// through e^2.

// Single-link and link-pair probabilities in the classical picture. The first
// index is link a, the second link b; s = aligned ends, o = opposite ends.
struct ProbabilitySet {
  double p_s = 0.0;
  double p_o = 0.0;
  double p_ss = 0.0;
  double p_so = 0.0;
  double p_os = 0.0;
  double p_oo = 0.0;
  // Set when a value within 1e-6 outside [0, 1] was clamped.
  bool clamped = false;
};

// Inverts <E_a> = P_o - P_s and the four-equation link-pair system. Inputs
// that imply a probability further than 1e-6 outside [0, 1] throw
// std::domain_error; smaller excursions beyond 1e-9 are clamped and flagged.
ProbabilitySet probabilities_from_moments(double mean_a, double mean_b, double mean_ab);

// GE = 1 - e^2. Throws std::domain_error for |e| > 1.
double compute_ge(double e);

// GE-tilde = 1 - (2/3) e^2 - 2/(3 N (N-1)) sum_c m_c <E_i E_j>_c^2.
// `squared_correlations` carries one estimate of <E_i E_j>_c^2 per class;
// the multiplicities must cover all N (N-1) / 2 pairs.
double compute_ge_tilde(double e, std::span<const double> squared_correlations,
                        std::span<const std::uint64_t> multiplicities, std::uint64_t n_links);

double compute_q(double ge_tilde, double ge);

// dGE/dbeta = -2 <E>/N^2 d<E>/dbeta with d<E>/dbeta = -Var(E). Takes the
// per-link energy e = <E>/N.
double dge_dbeta_fluctuation(double e, double var_energy, std::uint64_t n_links);

// Large-system estimate Q ~ (e^2 - e^4) / 3.
double analytic_q(double e);

struct SeriesPoint {
  double beta = 0.0;
  double value = 0.0;
  double error = 0.0;
};

// Central differences inside, one-sided at the ends, errors in quadrature.
// Requires >= 3 strictly increasing beta values.
std::vector<SeriesPoint> finite_difference_derivative(std::span<const SeriesPoint> series);

// Sum of m_c x_c^2 where x_c estimates one class correlation.
double weighted_square_sum(std::span<const double> correlations, std::span<const std::uint64_t> multiplicities);

struct AccumulatorOptions {
  std::int64_t bin_size = 400;
  bool track_pairs = true;
};

// Sums over the measurements of one bin. Class sums hold per-measurement
// translation averages, split between alternating halves A and B.
struct BinSums {
  std::int64_t count = 0;
  std::int64_t count_a = 0;
  std::int64_t count_b = 0;
  double sum_e = 0.0;
  double sum_e2 = 0.0;
  std::vector<double> class_a;
  std::vector<double> class_b;

  BinSums& operator+=(const BinSums& other);
  BinSums& operator-=(const BinSums& other);
};

// Full-sample point estimates derived from a set of sums.
struct PointEstimate {
  double mean_energy = 0.0;
  double var_energy = 0.0;
  double e = 0.0;
  double ge = 0.0;
  double ge_tilde = 0.0;
  double q = 0.0;
  double dge_dbeta = 0.0;
};

class ObservableAccumulator {
 public:
  // `table` must outlive the accumulator; it may be null when pairs are not tracked.
  ObservableAccumulator(const TorusGeometry& geom, const PairClassTable* table,
                        AccumulatorOptions options = {});
  ObservableAccumulator(const ObservableAccumulator& other);
  ObservableAccumulator(ObservableAccumulator&&) noexcept = default;
  ObservableAccumulator& operator=(ObservableAccumulator&&) noexcept = default;
  ~ObservableAccumulator();

  int size() const { return size_; }
  std::uint64_t n_links() const { return n_links_; }
  bool tracks_pairs() const { return table_ != nullptr; }
  const PairClassTable* table() const { return table_; }
  const AccumulatorOptions& options() const { return options_; }

  void measure(const SpinConfiguration& state);
  // Closes a partially filled bin.
  void flush();
  // Appends the bins of another accumulator at the same (L, beta).
  void merge(const ObservableAccumulator& other);

  std::int64_t n_measurements() const;
  const std::vector<BinSums>& bins() const { return bins_; }
  BinSums totals() const;

 private:
  void open_bin();
  void close_bin();

  int size_;
  std::uint64_t n_links_;
  const PairClassTable* table_;
  AccumulatorOptions options_;
  std::vector<BinSums> bins_;
  BinSums current_;
  std::int64_t parity_ = 0;
  // k-space sums of conj(A) B for hh, hv, vv, halves A and B, current bin.
  std::array<std::vector<std::complex<double>>, 6> spectra_;
  std::unique_ptr<LinkCorrelator> correlator_;
};

// Runs one chain with the accumulator as measurement sink and flushes it.
ObservableAccumulator sample_chain(const ChainConfig& config, const TorusGeometry& geom,
                                   const PairClassTable* table, AccumulatorOptions options = {});

// Throws std::logic_error if nothing has been measured.
PointEstimate estimate(const BinSums& sums, std::uint64_t n_links, const PairClassTable* table);

struct EntanglementReport {
  int size = 0;
  double beta = 0.0;
  double e = 0.0;
  double e_err = 0.0;
  double var_energy = 0.0;
  double ge = 0.0;
  double ge_err = 0.0;
  double ge_tilde = 0.0;
  double ge_tilde_err = 0.0;
  double q = 0.0;
  double q_err = 0.0;
  double dge_dbeta = 0.0;
  double dge_dbeta_err = 0.0;
  // Filled from a beta series by finite differences.
  double dge_tilde_dbeta = 0.0;
  double dge_tilde_dbeta_err = 0.0;
  std::int64_t n_measure = 0;
  std::size_t n_bins = 0;
};

// Leave-one-out jackknife standard error from the n leave-one-out estimates.
double jackknife_error(std::span<const double> leave_one_out);

// Full-sample values plus leave-one-bin-out jackknife errors. Requires >= 20
// closed bins (std::invalid_argument otherwise). GE-tilde and Q are NaN when
// pairs were not tracked.
EntanglementReport jackknife_errors(const ObservableAccumulator& acc, double beta);

struct FeePoint {
  double r = 0.0;
  double f = 0.0;
  double error = 0.0;
  int n_classes = 0;
};

// Connected correlator f_EE = <E_i E_j> - e^2 grouped by minimum-image anchor
// distance, multiplicity-weighted within each distance shell.
std::vector<FeePoint> fee_profile(const PairClassTable& table, std::span<const double> correlations, double e);
// Same from sampled data, with jackknife errors.
std::vector<FeePoint> fee_profile(const ObservableAccumulator& acc);

}  // namespace tcge
