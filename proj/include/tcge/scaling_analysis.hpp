#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcge {

// Exact 2D Ising critical coupling, ln(1 + sqrt 2) / 2.
inline const double kCriticalBeta = 0.5 * std::log(1.0 + std::sqrt(2.0));

struct SweepRow {
  double beta = 0.0;
  double e = 0.0;
  double e_err = 0.0;
  double ge = 0.0;
  double ge_err = 0.0;
  double ge_tilde = 0.0;
  double ge_tilde_err = 0.0;
  double q = 0.0;
  double q_err = 0.0;
  double dge_tilde_dbeta = 0.0;
  double dge_tilde_dbeta_err = 0.0;
  std::int64_t n_measure = 0;
  std::uint64_t seed = 0;
};

struct SweepSeries {
  int size = 0;
  std::vector<SweepRow> rows;

  std::uint64_t n_links() const { return 2ULL * static_cast<std::uint64_t>(size) * size; }
  // Throws std::invalid_argument unless beta is strictly increasing and all
  // values are finite.
  void validate() const;
};

// Thrown when a discrete maximum sits on the first or last grid point.
struct BoundaryPeakError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Peak {
  double beta = 0.0;
  double height = 0.0;
  double beta_err = 0.0;
  double height_err = 0.0;
  // The fitted vertex left the central grid cell; a finer local grid is advised.
  bool needs_refinement = false;
};

// Quadratic least-squares fit through the 5 grid points around the discrete
// maximum of `values` (errors used as weights when all are positive).
// Throws BoundaryPeakError for a maximum on the grid edge.
Peak locate_peak(std::span<const double> beta, std::span<const double> values, std::span<const double> errors = {});

enum class PeakField { ge, ge_tilde, q, dge_tilde_dbeta };

// Peak of |field| over a series.
Peak locate_peak(const SweepSeries& series, PeakField field);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_err = 0.0;
  double intercept_err = 0.0;
  double chi2 = 0.0;
  int dof = 0;
  bool weighted = false;
  std::vector<double> residuals;
};

// Least squares y = intercept + slope * x. Weighted by 1/sigma^2 when every
// sigma is positive, else unweighted with errors from the residual scatter.
LinearFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> sigma = {});

struct SizePoint {
  double n = 0.0;  // number of qubits N = 2 L^2
  double value = 0.0;
  double error = 0.0;
};

// h_m = kappa ln N + c. Needs >= 3 points. `slope` is kappa.
LinearFit fit_log_divergence(std::span<const SizePoint> peaks);

struct PowerLawFit {
  double gamma = 0.0;
  double gamma_err = 0.0;
  LinearFit line;  // ln|beta* - beta_m| vs ln N
  std::vector<double> dropped_n;  // sizes with beta_m == beta* exactly
};

// ln|beta* - beta_m| = -gamma ln N + c. Points with beta_m == beta* are
// dropped; fewer than 3 remaining throws.
PowerLawFit fit_powerlaw_convergence(std::span<const SizePoint> beta_m, double beta_star = kCriticalBeta);

// beta_m = beta_m(inf) + c N^-gamma; `intercept` is beta_m(inf). gamma > 0.
LinearFit extrapolate_beta_m(std::span<const SizePoint> beta_m, double gamma);

// Signed maximum of Q over the series (same vertex method as locate_peak).
Peak q_maximum(const SweepSeries& series);

// ln|f| = slope ln r + c over rmin <= r <= rmax, points with f <= 0 skipped.
LinearFit loglog_slope(std::span<const double> r, std::span<const double> f, std::span<const double> errors,
                       double rmin, double rmax);

}  // namespace tcge
