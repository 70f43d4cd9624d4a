#include "tcge/scaling_analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace tcge {

namespace {

bool all_positive(std::span<const double> sigma, std::size_t n) {
  if (sigma.size() != n) return false;
  return std::all_of(sigma.begin(), sigma.end(), [](double s) { return s > 0.0 && std::isfinite(s); });
}

struct LeastSquares {
  Eigen::VectorXd coef;
  Eigen::MatrixXd cov;
  double chi2 = 0.0;
  int dof = 0;
  bool weighted = false;
  std::vector<double> residuals;
};

// Solves min sum w_i (y_i - X_i coef)^2 through the normal equations.
LeastSquares solve(const Eigen::MatrixXd& design, std::span<const double> y, std::span<const double> sigma) {
  const auto n = static_cast<std::size_t>(design.rows());
  const auto p = design.cols();
  LeastSquares ls;
  ls.weighted = all_positive(sigma, n);
  ls.dof = static_cast<int>(n) - static_cast<int>(p);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  if (ls.weighted) {
    for (std::size_t i = 0; i < n; ++i) w[static_cast<Eigen::Index>(i)] = 1.0 / (sigma[i] * sigma[i]);
  }
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
  const Eigen::MatrixXd normal = design.transpose() * w.asDiagonal() * design;
  const Eigen::VectorXd rhs = design.transpose() * w.asDiagonal() * yv;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
  if (!lu.isInvertible()) throw std::invalid_argument("least-squares system is singular");
  ls.coef = lu.solve(rhs);
  const Eigen::MatrixXd inverse = lu.inverse();
  const Eigen::VectorXd r = yv - design * ls.coef;
  ls.residuals.assign(r.data(), r.data() + r.size());
  ls.chi2 = r.cwiseProduct(r).dot(w);
  if (ls.weighted) {
    ls.cov = inverse;
  } else if (ls.dof > 0) {
    ls.cov = inverse * (ls.chi2 / ls.dof);
  } else {
    ls.cov = Eigen::MatrixXd::Zero(p, p);
  }
  return ls;
}

double field_value(const SweepRow& row, PeakField field) {
  switch (field) {
    case PeakField::ge: return row.ge;
    case PeakField::ge_tilde: return row.ge_tilde;
    case PeakField::q: return row.q;
    case PeakField::dge_tilde_dbeta: return row.dge_tilde_dbeta;
  }
  return 0.0;
}

double field_error(const SweepRow& row, PeakField field) {
  switch (field) {
    case PeakField::ge: return row.ge_err;
    case PeakField::ge_tilde: return row.ge_tilde_err;
    case PeakField::q: return row.q_err;
    case PeakField::dge_tilde_dbeta: return row.dge_tilde_dbeta_err;
  }
  return 0.0;
}

}  // namespace

void SweepSeries::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    for (double v : {r.beta, r.e, r.e_err, r.ge, r.ge_err, r.ge_tilde, r.ge_tilde_err, r.q, r.q_err,
                     r.dge_tilde_dbeta, r.dge_tilde_dbeta_err}) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite value in sweep row " + std::to_string(i));
    }
    if (i > 0 && !(r.beta > rows[i - 1].beta)) throw std::invalid_argument("beta grid not strictly increasing");
  }
}

Peak locate_peak(std::span<const double> beta, std::span<const double> values, std::span<const double> errors) {
  const std::size_t n = values.size();
  if (beta.size() != n) throw std::invalid_argument("beta and value lengths differ");
  if (n < 5) throw std::invalid_argument("peak location needs at least 5 grid points");
  const auto top = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  if (top == 0 || top == n - 1) {
    throw BoundaryPeakError("maximum on grid boundary at beta = " + std::to_string(beta[top]) +
                            "; widen the grid");
  }
  const std::size_t lo = std::clamp<std::size_t>(top >= 2 ? top - 2 : 0, 0, n - 5);
  Eigen::MatrixXd design(5, 3);
  std::vector<double> y(5), sigma;
  for (std::size_t i = 0; i < 5; ++i) {
    const double t = beta[lo + i] - beta[top];
    design(static_cast<Eigen::Index>(i), 0) = 1.0;
    design(static_cast<Eigen::Index>(i), 1) = t;
    design(static_cast<Eigen::Index>(i), 2) = t * t;
    y[i] = values[lo + i];
  }
  if (errors.size() == n) sigma.assign(errors.begin() + static_cast<std::ptrdiff_t>(lo),
                                       errors.begin() + static_cast<std::ptrdiff_t>(lo + 5));
  const LeastSquares ls = solve(design, y, sigma);
  const double a = ls.coef[0], b = ls.coef[1], c = ls.coef[2];
  if (!(c < 0.0)) throw std::runtime_error("quadratic fit around the maximum is not concave");

  const double t_vertex = -b / (2.0 * c);
  Peak peak;
  peak.beta = beta[top] + t_vertex;
  peak.height = a - b * b / (4.0 * c);
  const Eigen::Vector3d grad_t(0.0, -1.0 / (2.0 * c), b / (2.0 * c * c));
  const Eigen::Vector3d grad_h(1.0, -b / (2.0 * c), b * b / (4.0 * c * c));
  peak.beta_err = std::sqrt(std::max(0.0, grad_t.dot(ls.cov * grad_t)));
  peak.height_err = std::sqrt(std::max(0.0, grad_h.dot(ls.cov * grad_h)));
  peak.needs_refinement = t_vertex < 0.5 * (beta[top - 1] - beta[top]) || t_vertex > 0.5 * (beta[top + 1] - beta[top]);
  return peak;
}

Peak locate_peak(const SweepSeries& series, PeakField field) {
  std::vector<double> b, v, e;
  for (const auto& row : series.rows) {
    b.push_back(row.beta);
    v.push_back(std::abs(field_value(row, field)));
    e.push_back(field_error(row, field));
  }
  return locate_peak(b, v, e);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
  const std::size_t n = x.size();
  if (y.size() != n) throw std::invalid_argument("x and y lengths differ");
  if (n < 2) throw std::invalid_argument("line fit needs at least 2 points");
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    design(static_cast<Eigen::Index>(i), 0) = 1.0;
    design(static_cast<Eigen::Index>(i), 1) = x[i];
  }
  const LeastSquares ls = solve(design, y, sigma);
  LinearFit f;
  f.intercept = ls.coef[0];
  f.slope = ls.coef[1];
  f.intercept_err = std::sqrt(std::max(0.0, ls.cov(0, 0)));
  f.slope_err = std::sqrt(std::max(0.0, ls.cov(1, 1)));
  f.chi2 = ls.chi2;
  f.dof = ls.dof;
  f.weighted = ls.weighted;
  f.residuals = ls.residuals;
  return f;
}

LinearFit fit_log_divergence(std::span<const SizePoint> peaks) {
  if (peaks.size() < 3) throw std::invalid_argument("logarithmic fit needs at least 3 sizes");
  std::vector<double> x, y, s;
  for (const auto& p : peaks) {
    x.push_back(std::log(p.n));
    y.push_back(p.value);
    s.push_back(p.error);
  }
  return fit_line(x, y, s);
}

PowerLawFit fit_powerlaw_convergence(std::span<const SizePoint> beta_m, double beta_star) {
  PowerLawFit out;
  std::vector<double> x, y, s;
  for (const auto& p : beta_m) {
    const double gap = std::abs(beta_star - p.value);
    if (gap == 0.0) {
      out.dropped_n.push_back(p.n);
      continue;
    }
    x.push_back(std::log(p.n));
    y.push_back(std::log(gap));
    s.push_back(p.error / gap);
  }
  if (x.size() < 3) throw std::invalid_argument("power-law fit needs at least 3 usable sizes");
  out.line = fit_line(x, y, s);
  out.gamma = -out.line.slope;
  out.gamma_err = out.line.slope_err;
  return out;
}

LinearFit extrapolate_beta_m(std::span<const SizePoint> beta_m, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("extrapolation exponent must be positive");
  std::vector<double> x, y, s;
  for (const auto& p : beta_m) {
    x.push_back(std::pow(p.n, -gamma));
    y.push_back(p.value);
    s.push_back(p.error);
  }
  return fit_line(x, y, s);
}

Peak q_maximum(const SweepSeries& series) {
  std::vector<double> b, v, e;
  for (const auto& row : series.rows) {
    b.push_back(row.beta);
    v.push_back(row.q);
    e.push_back(row.q_err);
  }
  return locate_peak(b, v, e);
}

LinearFit loglog_slope(std::span<const double> r, std::span<const double> f, std::span<const double> errors,
                       double rmin, double rmax) {
  if (r.size() != f.size()) throw std::invalid_argument("r and f lengths differ");
  std::vector<double> x, y, s;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < rmin || r[i] > rmax || !(f[i] > 0.0)) continue;
    x.push_back(std::log(r[i]));
    y.push_back(std::log(f[i]));
    if (errors.size() == r.size()) s.push_back(errors[i] / f[i]);
  }
  if (x.size() < 2) throw std::invalid_argument("too few positive points in the fit window");
  return fit_line(x, y, s);
}

}  // namespace tcge
