#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "tcge/estimators.hpp"
#include "tcge/scaling_analysis.hpp"

using namespace tcge;

namespace {

std::vector<double> grid(double start, double step, int n) {
  std::vector<double> b(n);
  for (int i = 0; i < n; ++i) b[i] = start + step * i;
  return b;
}

// Onsager's per-link energy of the infinite square-lattice Ising model.
double onsager_e(double beta) {
  const double t = 2.0 * beta;
  const double k = 2.0 * std::sinh(t) / (std::cosh(t) * std::cosh(t));
  const double u = -std::cosh(t) / std::sinh(t) *
                   (1.0 + 2.0 / M_PI * (2.0 * std::tanh(t) * std::tanh(t) - 1.0) * std::comp_ellint_1(k));
  return u / 2.0;
}

std::vector<SizePoint> sizes_from(const std::vector<double>& n, auto&& f) {
  std::vector<SizePoint> out;
  for (double x : n) out.push_back({x, f(x), 0.0});
  return out;
}

const std::vector<double> kN = {128, 288, 512, 800, 1568, 3200};

}  // namespace

TEST_CASE("critical coupling constant") {
  CHECK(kCriticalBeta == doctest::Approx(0.44068679350977).epsilon(1e-13));
  // K(k) diverges at k = 1 exactly, so approach the critical point from below.
  CHECK(std::abs(onsager_e(kCriticalBeta - 1e-6) + 1.0 / std::sqrt(2.0)) < 1e-4);
}

TEST_CASE("peak of an exact parabola") {
  const auto b = grid(0.40, 0.005, 17);
  std::vector<double> v;
  for (double x : b) v.push_back(-(x - 0.44) * (x - 0.44));
  const auto p = locate_peak(b, v);
  CHECK(std::abs(p.beta - 0.44) < 1e-12);
  CHECK(std::abs(p.height) < 1e-12);
  CHECK_FALSE(p.needs_refinement);

  // Shifting values or beta moves the answer accordingly.
  std::vector<double> shifted;
  for (double x : v) shifted.push_back(x + 3.0);
  CHECK(locate_peak(b, shifted).height == doctest::Approx(3.0).epsilon(1e-12));
  auto b2 = b;
  for (double& x : b2) x += 0.01;
  CHECK(locate_peak(b2, v).beta == doctest::Approx(0.45).epsilon(1e-12));
}

TEST_CASE("symmetric triangle peaks at the apex") {
  const auto b = grid(0.30, 0.01, 11);
  std::vector<double> v;
  for (double x : b) v.push_back(1.0 - std::abs(x - 0.35));
  const auto p = locate_peak(b, v);
  CHECK(p.beta == doctest::Approx(0.35).epsilon(1e-12));
}

TEST_CASE("peak errors propagate from the data errors") {
  const auto b = grid(0.40, 0.005, 11);
  std::vector<double> v, e(11, 0.01);
  for (double x : b) v.push_back(2.0 - 100.0 * (x - 0.427) * (x - 0.427));
  const auto p = locate_peak(b, v, e);
  CHECK(p.beta == doctest::Approx(0.427).epsilon(1e-10));
  CHECK(p.beta_err > 0.0);
  CHECK(p.height_err > 0.0);
  CHECK(p.height_err < 0.02);
  std::vector<double> e2(11, 0.02);
  CHECK(locate_peak(b, v, e2).height_err == doctest::Approx(2.0 * p.height_err));
}

TEST_CASE("boundary maxima and short grids are errors") {
  const auto b = grid(0.3, 0.01, 8);
  std::vector<double> rising(b.begin(), b.end());
  CHECK_THROWS_AS(locate_peak(b, rising), BoundaryPeakError);
  std::vector<double> zeros(8, 0.0);
  CHECK_THROWS_AS(locate_peak(b, zeros), BoundaryPeakError);
  CHECK_THROWS_AS(locate_peak(std::span<const double>(b).first(4), std::span<const double>(rising).first(4)),
                  std::invalid_argument);
}

TEST_CASE("fit_line round trips and reports errors") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double t : x) y.push_back(0.5 - 2.25 * t);
  const auto f = fit_line(x, y);
  CHECK(std::abs(f.slope + 2.25) < 1e-12);
  CHECK(std::abs(f.intercept - 0.5) < 1e-12);
  CHECK(f.dof == 3);
  CHECK_FALSE(f.weighted);
  const std::vector<double> s(5, 0.1);
  const auto w = fit_line(x, y, s);
  CHECK(w.weighted);
  // Weighted slope error for equal sigma: sigma / sqrt(sum (x - xbar)^2).
  CHECK(w.slope_err == doctest::Approx(0.1 / std::sqrt(10.0)).epsilon(1e-12));
  CHECK(w.slope_err >= 0.0);
  CHECK(w.intercept_err >= 0.0);
}

TEST_CASE("logarithmic divergence fit") {
  const auto pts = sizes_from(kN, [](double n) { return 0.836 * std::log(n) - 1.7; });
  const auto f = fit_log_divergence(pts);
  CHECK(std::abs(f.slope - 0.836) < 1e-8);
  CHECK(f.dof > 0);
  const auto flat = sizes_from(kN, [](double) { return 2.0; });
  CHECK(std::abs(fit_log_divergence(flat).slope) < 1e-8);
  CHECK_THROWS(fit_log_divergence(std::span<const SizePoint>(pts).first(2)));
}

TEST_CASE("power-law convergence fit") {
  const auto pts = sizes_from(kN, [](double n) { return kCriticalBeta - std::pow(n, -0.56); });
  const auto f = fit_powerlaw_convergence(pts);
  CHECK(std::abs(f.gamma - 0.56) < 1e-8);
  CHECK(f.dropped_n.empty());

  const auto flat = sizes_from(kN, [](double) { return 0.43; });
  CHECK(std::abs(fit_powerlaw_convergence(flat).gamma) < 1e-8);

  auto with_hit = pts;
  with_hit[1].value = kCriticalBeta;
  const auto g = fit_powerlaw_convergence(with_hit);
  REQUIRE(g.dropped_n.size() == 1);
  CHECK(g.dropped_n[0] == kN[1]);
  CHECK(std::abs(g.gamma - 0.56) < 1e-8);
  with_hit[2].value = kCriticalBeta;
  with_hit[3].value = kCriticalBeta;
  with_hit[4].value = kCriticalBeta;
  CHECK_THROWS(fit_powerlaw_convergence(with_hit));
}

TEST_CASE("extrapolation of the peak position") {
  const auto pts = sizes_from(kN, [](double n) { return 0.439 + 0.8 * std::pow(n, -0.56); });
  const auto f = extrapolate_beta_m(pts, 0.56);
  CHECK(std::abs(f.intercept - 0.439) < 1e-10);
  CHECK(std::abs(f.slope - 0.8) < 1e-8);
  const auto flat = sizes_from(kN, [](double) { return 0.45; });
  CHECK(std::abs(extrapolate_beta_m(flat, 0.5).intercept - 0.45) < 1e-12);
  CHECK_THROWS(extrapolate_beta_m(pts, 0.0));
  CHECK_THROWS(extrapolate_beta_m(pts, -0.3));
}

TEST_CASE("analytic Q along the Onsager curve peaks at 1/12 at the critical coupling") {
  double best = 0.0, best_beta = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double b = 0.30 + 0.3 * i / 4000.0;
    const double q = analytic_q(onsager_e(b));
    if (q > best) {
      best = q;
      best_beta = b;
    }
  }
  CHECK(best == doctest::Approx(1.0 / 12.0).epsilon(1e-6));
  CHECK(std::abs(best_beta - kCriticalBeta) < 1e-3);

  SweepSeries s;
  s.size = 0;
  for (double b : grid(0.30, 0.005, 61)) {
    SweepRow r;
    r.beta = b;
    r.q = analytic_q(onsager_e(b));
    s.rows.push_back(r);
  }
  const auto p = q_maximum(s);
  CHECK(std::abs(p.height - 1.0 / 12.0) < 2e-3);
  CHECK(std::abs(p.beta - kCriticalBeta) < 0.01);

  SweepSeries zero = s;
  for (auto& r : zero.rows) r.q = 0.0;
  CHECK_THROWS_AS(q_maximum(zero), BoundaryPeakError);
}

TEST_CASE("series peak uses the magnitude of the field") {
  SweepSeries s;
  s.size = 8;
  for (double b : grid(0.40, 0.005, 13)) {
    SweepRow r;
    r.beta = b;
    r.dge_tilde_dbeta = -(5.0 - 400.0 * (b - 0.43) * (b - 0.43));
    r.dge_tilde_dbeta_err = 0.0;
    s.rows.push_back(r);
  }
  const auto p = locate_peak(s, PeakField::dge_tilde_dbeta);
  CHECK(p.beta == doctest::Approx(0.43).epsilon(1e-10));
  CHECK(p.height == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(s.n_links() == 128);
  CHECK_NOTHROW(s.validate());
  s.rows[3].beta = s.rows[2].beta;
  CHECK_THROWS(s.validate());
}

TEST_CASE("log-log slope of a power law") {
  std::vector<double> r, f, e;
  for (int i = 1; i <= 20; ++i) {
    r.push_back(i);
    f.push_back(3.0 * std::pow(i, -2.0));
    e.push_back(0.0);
  }
  f[12] = -1.0;  // non-positive entries are skipped
  const auto fit = loglog_slope(r, f, e, 3.0, 10.0);
  CHECK(std::abs(fit.slope + 2.0) < 1e-8);
  CHECK(fit.dof == 6);
  CHECK_THROWS(loglog_slope(r, f, e, 13.0, 13.5));
}
