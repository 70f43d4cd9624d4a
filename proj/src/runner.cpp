#include "tcge/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "tcge/exact_oracles.hpp"
#include "tcge/random.hpp"
#include "tcge/sweep_io.hpp"
#include "tcge/torus_lattice.hpp"

namespace tcge {

using nlohmann::json;

std::int64_t Schedule::effective_bin_size() const {
  if (bin_size > 0) return bin_size;
  return std::max<std::int64_t>(1, n_measure / 50);
}

namespace {

void check_window(const BetaWindow& w, const char* what) {
  if (!std::isfinite(w.start) || !std::isfinite(w.stop) || !std::isfinite(w.step)) {
    throw std::invalid_argument(std::string(what) + " grid has non-finite bounds");
  }
  if (w.start < 0.0) throw std::invalid_argument(std::string(what) + " grid starts below 0");
  if (w.stop < w.start) throw std::invalid_argument(std::string(what) + " grid is empty (stop < start)");
  if (w.stop > w.start && !(w.step > 0.0)) throw std::invalid_argument(std::string(what) + " grid step must be > 0");
}

void append_window(const BetaWindow& w, std::vector<double>& out) {
  const std::int64_t n = w.stop > w.start ? std::llround((w.stop - w.start) / w.step) : 0;
  for (std::int64_t i = 0; i <= n; ++i) {
    const double b = w.start + static_cast<double>(i) * w.step;
    out.push_back(std::round(b * 1e12) / 1e12);
  }
}

json window_json(const BetaWindow& w) { return {{"start", w.start}, {"stop", w.stop}, {"step", w.step}}; }

json schedule_json(const Schedule& s) {
  return {{"n_therm", s.n_therm},
          {"n_measure", s.n_measure},
          {"interval", s.interval},
          {"algorithm", to_string(s.algorithm)},
          {"bin_size", s.effective_bin_size()}};
}

ChainConfig chain_config(int size, double beta, std::uint64_t seed, const Schedule& schedule) {
  ChainConfig c;
  c.size = size;
  c.beta = beta;
  c.seed = seed;
  c.n_therm = schedule.n_therm;
  c.n_measure = schedule.n_measure;
  c.measure_interval = schedule.interval;
  c.algorithm = schedule.algorithm;
  return c;
}

EntanglementReport sample_cell(const TorusGeometry& geom, const PairClassTable* table, double beta,
                               std::uint64_t seed, const Schedule& schedule) {
  AccumulatorOptions opts;
  opts.bin_size = schedule.effective_bin_size();
  opts.track_pairs = table != nullptr;
  const ObservableAccumulator acc = sample_chain(chain_config(geom.size(), beta, seed, schedule), geom, table, opts);
  return jackknife_errors(acc, beta);
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json fit_json(const LinearFit& f) {
  return {{"slope", f.slope},         {"slope_err", f.slope_err}, {"intercept", f.intercept},
          {"intercept_err", f.intercept_err}, {"chi2", f.chi2},   {"dof", f.dof},
          {"weighted", f.weighted},   {"residuals", f.residuals}};
}

json peak_json(const Peak& p) {
  return {{"beta", p.beta},
          {"beta_err", p.beta_err},
          {"height", p.height},
          {"height_err", p.height_err},
          {"needs_refinement", p.needs_refinement}};
}

}  // namespace

std::vector<double> expand_grid(const BetaGrid& grid) {
  check_window(grid.main, "main");
  std::vector<double> out;
  append_window(grid.main, out);
  if (grid.refine) {
    check_window(*grid.refine, "refinement");
    append_window(*grid.refine, out);
  }
  std::sort(out.begin(), out.end());
  std::vector<double> unique;
  for (double b : out) {
    if (unique.empty() || b - unique.back() > 1e-9) unique.push_back(b);
  }
  return unique;
}

void RunManifest::validate() const {
  if (sizes.empty()) throw std::invalid_argument("no lattice sizes given");
  for (int L : sizes) {
    if (L < 2) throw std::invalid_argument("lattice sizes must be >= 2");
  }
  if (expand_grid(grid).empty()) throw std::invalid_argument("beta grid is empty");
  chain_config(sizes.front(), 0.0, 0, schedule).validate();
  if (schedule.n_measure / schedule.effective_bin_size() < 20) {
    throw std::invalid_argument("schedule yields fewer than 20 jackknife bins");
  }
}

json RunManifest::to_json() const {
  json j = {{"master_seed", master_seed},
            {"sizes", sizes},
            {"beta_grid", window_json(grid.main)},
            {"schedule", schedule_json(schedule)},
            {"out_dir", out_dir.string()},
            {"max_error", max_error}};
  j["refine"] = grid.refine ? window_json(*grid.refine) : json(nullptr);
  return j;
}

int worker_count_from_env() {
  if (const char* env = std::getenv(kWorkersEnv)) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto count = static_cast<std::size_t>(std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (count <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::uint64_t chain_seed(std::uint64_t master, int size, std::size_t beta_index) {
  return derive_seed(master, {static_cast<std::uint64_t>(size), static_cast<std::uint64_t>(beta_index)});
}

EntanglementReport run_cell(int size, double beta, std::uint64_t seed, const Schedule& schedule, bool track_pairs) {
  const TorusGeometry geom(size);
  if (!track_pairs) return sample_cell(geom, nullptr, beta, seed, schedule);
  const PairClassTable table(geom);
  return sample_cell(geom, &table, beta, seed, schedule);
}

SweepResult run_sweep(const RunManifest& manifest, int workers) {
  manifest.validate();
  const std::vector<double> betas = expand_grid(manifest.grid);
  if (betas.size() < 3) throw std::invalid_argument("sweep needs at least 3 beta points");

  std::vector<TorusGeometry> geoms;
  for (int L : manifest.sizes) geoms.emplace_back(L);
  std::vector<PairClassTable> tables;
  for (const auto& g : geoms) tables.emplace_back(g);

  const std::size_t nb = betas.size();
  std::vector<EntanglementReport> reports(manifest.sizes.size() * nb);
  parallel_for(reports.size(), workers, [&](std::size_t cell) {
    const std::size_t s = cell / nb;
    const std::size_t b = cell % nb;
    reports[cell] = sample_cell(geoms[s], &tables[s], betas[b],
                                chain_seed(manifest.master_seed, manifest.sizes[s], b), manifest.schedule);
  });

  SweepResult result;
  for (std::size_t s = 0; s < manifest.sizes.size(); ++s) {
    SweepSeries series;
    series.size = manifest.sizes[s];
    std::vector<SeriesPoint> get;
    for (std::size_t b = 0; b < nb; ++b) {
      const EntanglementReport& r = reports[s * nb + b];
      get.push_back({r.beta, r.ge_tilde, r.ge_tilde_err});
    }
    const auto deriv = finite_difference_derivative(get);
    for (std::size_t b = 0; b < nb; ++b) {
      const EntanglementReport& r = reports[s * nb + b];
      SweepRow row;
      row.beta = r.beta;
      row.e = r.e;
      row.e_err = r.e_err;
      row.ge = r.ge;
      row.ge_err = r.ge_err;
      row.ge_tilde = r.ge_tilde;
      row.ge_tilde_err = r.ge_tilde_err;
      row.q = r.q;
      row.q_err = r.q_err;
      row.dge_tilde_dbeta = deriv[b].value;
      row.dge_tilde_dbeta_err = deriv[b].error;
      row.n_measure = r.n_measure;
      row.seed = chain_seed(manifest.master_seed, series.size, b);
      if (row.ge_err > manifest.max_error || row.ge_tilde_err > manifest.max_error) {
        result.flagged.emplace_back(series.size, row.beta);
      }
      series.rows.push_back(row);
    }
    result.series.push_back(std::move(series));
  }
  return result;
}

int cmd_sweep(const RunManifest& manifest, int workers, std::ostream& log) {
  std::error_code ec;
  std::filesystem::create_directories(manifest.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + manifest.out_dir.string());
  const SweepResult result = run_sweep(manifest, workers);
  for (const auto& series : result.series) {
    write_sweep_csv(manifest.out_dir / sweep_file_name(series.size), series);
    json sidecar;
    sidecar["manifest"] = manifest.to_json();
    sidecar["size"] = series.size;
    json chains = json::array();
    for (const auto& row : series.rows) chains.push_back({{"beta", row.beta}, {"seed", row.seed}});
    sidecar["chains"] = chains;
    json flagged = json::array();
    for (const auto& [L, beta] : result.flagged) {
      if (L == series.size) flagged.push_back(beta);
    }
    sidecar["flagged_betas"] = flagged;
    write_json(manifest.out_dir / ("sweep_L" + std::to_string(series.size) + ".json"), sidecar);
    log << "wrote " << (manifest.out_dir / sweep_file_name(series.size)).string() << " (" << series.rows.size()
        << " rows)\n";
  }
  if (!result.flagged.empty()) {
    log << result.flagged.size() << " row(s) exceed max error " << manifest.max_error << "\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

json OracleReport::to_json() const {
  json rows = json::array();
  for (const auto& c : comparisons) {
    rows.push_back({{"size", c.size},
                    {"beta", c.beta},
                    {"observable", c.observable},
                    {"exact", c.exact},
                    {"estimate", c.estimate},
                    {"error", c.error},
                    {"deviation_sigma", c.deviation_sigma},
                    {"pass", c.pass}});
  }
  return {{"comparisons", rows}, {"max_deviation_sigma", max_deviation_sigma}, {"pass", pass}};
}

OracleReport run_oracle(const OracleOptions& options, int workers) {
  for (int L : options.sizes) {
    if (L < 2 || L > 4) throw std::invalid_argument("oracle sizes must be in [2, 4]");
  }
  struct Cell {
    int size;
    double beta;
    std::size_t beta_index;
  };
  std::vector<Cell> cells;
  for (int L : options.sizes) {
    for (std::size_t b = 0; b < options.betas.size(); ++b) cells.push_back({L, options.betas[b], b});
  }
  std::vector<EntanglementReport> mc(cells.size());
  std::vector<ExactIsingResult> exact(cells.size());
  parallel_for(cells.size(), workers, [&](std::size_t i) {
    const Cell& c = cells[i];
    mc[i] = run_cell(c.size, c.beta, chain_seed(options.master_seed, c.size, c.beta_index), options.schedule);
    exact[i] = exact_ising(c.size, c.beta);
  });

  OracleReport report;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto add = [&](const char* name, double ex, double est, double err) {
      OracleComparison c;
      c.size = cells[i].size;
      c.beta = cells[i].beta;
      c.observable = name;
      c.exact = ex;
      c.estimate = est;
      c.error = err;
      const double diff = std::abs(est - ex);
      c.deviation_sigma = diff == 0.0 ? 0.0 : (err > 0.0 ? diff / err : INFINITY);
      c.pass = c.deviation_sigma <= options.sigma_limit && diff <= options.abs_limit;
      report.max_deviation_sigma = std::max(report.max_deviation_sigma, c.deviation_sigma);
      report.pass = report.pass && c.pass;
      report.comparisons.push_back(c);
    };
    add("e", exact[i].e, mc[i].e, mc[i].e_err);
    add("GE", exact[i].ge, mc[i].ge, mc[i].ge_err);
    add("GEt", exact[i].ge_tilde, mc[i].ge_tilde, mc[i].ge_tilde_err);
    add("Q", exact[i].q, mc[i].q, mc[i].q_err);
  }
  return report;
}

int cmd_oracle(const OracleOptions& options, int workers, const std::filesystem::path& out, std::ostream& log) {
  const OracleReport report = run_oracle(options, workers);
  const json j = report.to_json();
  if (!out.empty()) write_json(out, j);
  log << j.dump(2) << "\n";
  if (!report.pass) {
    for (const auto& c : report.comparisons) {
      if (!c.pass) {
        std::cerr << "oracle mismatch: " << c.observable << " at L=" << c.size << " beta=" << c.beta << " ("
                  << c.deviation_sigma << " sigma, |diff|=" << std::abs(c.estimate - c.exact) << ")\n";
      }
    }
    return kExitTolerance;
  }
  return kExitOk;
}

double QuantumCheckRow::max_residual() const {
  return std::max({std::abs(ge_quantum - ge_classical), std::abs(ge_tilde_quantum - ge_tilde_classical),
                   std::abs(log_z_quantum - log_z_classical), norm_residual, max_off_diagonal});
}

json QuantumCheckReport::to_json() const {
  json rows = json::array();
  for (const auto& r : this->rows) {
    rows.push_back({{"beta", r.beta},
                    {"ge_quantum", r.ge_quantum},
                    {"ge_classical", r.ge_classical},
                    {"ge_tilde_quantum", r.ge_tilde_quantum},
                    {"ge_tilde_classical", r.ge_tilde_classical},
                    {"log_z_quantum", r.log_z_quantum},
                    {"log_z_classical", r.log_z_classical},
                    {"norm_residual", r.norm_residual},
                    {"max_off_diagonal", r.max_off_diagonal},
                    {"max_residual", r.max_residual()}});
  }
  return {{"size", size}, {"tolerance", tolerance}, {"rows", rows}, {"pass", pass}};
}

QuantumCheckReport run_quantum_check(const std::vector<double>& betas, int size, double tolerance) {
  QuantumCheckReport report;
  report.size = size;
  report.tolerance = tolerance;
  for (double beta : betas) {
    const GroundStateVector gs = build_ground_state(size, beta, size == 3);
    const QuantumEntanglement qe = entanglement_from_state(gs);
    const ExactIsingResult cl = exact_ising(size, beta);
    QuantumCheckRow row;
    row.beta = beta;
    row.ge_quantum = qe.ge;
    row.ge_classical = cl.ge;
    row.ge_tilde_quantum = qe.ge_tilde;
    row.ge_tilde_classical = cl.ge_tilde;
    row.log_z_quantum = gs.log_z;
    row.log_z_classical = cl.log_z;
    row.norm_residual = std::abs(gs.norm_squared() - 1.0);
    row.max_off_diagonal = qe.max_off_diagonal;
    report.pass = report.pass && row.max_residual() < tolerance;
    report.rows.push_back(row);
  }
  return report;
}

int cmd_quantum_check(const std::vector<double>& betas, int size, const std::filesystem::path& out,
                      std::ostream& log) {
  const QuantumCheckReport report = run_quantum_check(betas, size);
  const json j = report.to_json();
  if (!out.empty()) write_json(out, j);
  log << j.dump(2) << "\n";
  return report.pass ? kExitOk : kExitTolerance;
}

json ScalingReport::to_json() const {
  json per_size = json::array();
  for (const auto& s : sizes) {
    per_size.push_back({{"size", s.size},
                        {"n_qubits", s.n},
                        {"derivative_peak", peak_json(s.derivative_peak)},
                        {"q_peak", peak_json(s.q_peak)}});
  }
  json dropped = gamma_fit.dropped_n;
  return {{"beta_star", beta_star},
          {"sizes", per_size},
          {"kappa", kappa_fit.slope},
          {"kappa_err", kappa_fit.slope_err},
          {"kappa_fit", fit_json(kappa_fit)},
          {"gamma", gamma_fit.gamma},
          {"gamma_err", gamma_fit.gamma_err},
          {"gamma_fit", fit_json(gamma_fit.line)},
          {"gamma_dropped_n", dropped},
          {"beta_m_inf", extrapolation.intercept},
          {"beta_m_inf_err", extrapolation.intercept_err},
          {"beta_m_inf_fit", fit_json(extrapolation)},
          {"beta_m_inf_gamma_low", beta_inf_gamma_low},
          {"beta_m_inf_gamma_high", beta_inf_gamma_high}};
}

ScalingReport analyze_scaling(const std::vector<SweepSeries>& series, double beta_star) {
  if (series.size() < 3) throw std::invalid_argument("scaling analysis needs at least 3 sizes");
  ScalingReport report;
  report.beta_star = beta_star;
  std::vector<SizePoint> heights, locations;
  for (const auto& s : series) {
    s.validate();
    SizeScaling sc;
    sc.size = s.size;
    sc.n = static_cast<double>(s.n_links());
    try {
      sc.derivative_peak = locate_peak(s, PeakField::dge_tilde_dbeta);
      sc.q_peak = q_maximum(s);
    } catch (const std::exception& e) {
      throw std::runtime_error("L=" + std::to_string(s.size) + ": " + e.what());
    }
    heights.push_back({sc.n, sc.derivative_peak.height, sc.derivative_peak.height_err});
    locations.push_back({sc.n, sc.derivative_peak.beta, sc.derivative_peak.beta_err});
    report.sizes.push_back(sc);
  }
  report.kappa_fit = fit_log_divergence(heights);
  report.gamma_fit = fit_powerlaw_convergence(locations, beta_star);
  report.extrapolation = extrapolate_beta_m(locations, report.gamma_fit.gamma);
  const double lo = report.gamma_fit.gamma - report.gamma_fit.gamma_err;
  const double hi = report.gamma_fit.gamma + report.gamma_fit.gamma_err;
  report.beta_inf_gamma_low = lo > 0.0 ? extrapolate_beta_m(locations, lo).intercept : NAN;
  report.beta_inf_gamma_high = extrapolate_beta_m(locations, hi).intercept;
  return report;
}

std::vector<SweepSeries> load_sweep_dir(const std::filesystem::path& dir, const std::vector<int>& expected) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::map<int, std::filesystem::path> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (const auto L = size_from_sweep_file(entry.path().filename().string())) found[*L] = entry.path();
  }
  std::string missing;
  for (int L : expected) {
    if (!found.contains(L)) missing += (missing.empty() ? "" : ", ") + std::to_string(L);
  }
  if (!missing.empty()) throw std::runtime_error("missing sweep files for sizes: " + missing);
  std::vector<SweepSeries> out;
  for (const auto& [L, path] : found) {
    if (!expected.empty() && std::find(expected.begin(), expected.end(), L) == expected.end()) continue;
    out.push_back(read_sweep_csv(path, L));
  }
  if (out.size() < 3) {
    throw std::runtime_error("scaling needs sweep files for at least 3 sizes, found " + std::to_string(out.size()));
  }
  return out;
}

int cmd_scaling(const std::filesystem::path& dir, const std::vector<int>& expected, double beta_star,
                const std::filesystem::path& out, std::ostream& log) {
  const ScalingReport report = analyze_scaling(load_sweep_dir(dir, expected), beta_star);
  const json j = report.to_json();
  if (!out.empty()) write_json(out, j);
  log << j.dump(2) << "\n";
  for (const auto& s : report.sizes) {
    if (s.derivative_peak.needs_refinement || s.q_peak.needs_refinement) {
      std::cerr << "L=" << s.size << ": fitted vertex outside the central grid cell; rerun with a finer grid "
                << "around beta=" << s.derivative_peak.beta << "\n";
    }
  }
  return kExitOk;
}

CorrelationResult run_correlate(int size, double beta, std::uint64_t seed, const Schedule& schedule) {
  const TorusGeometry geom(size);
  const PairClassTable table(geom);
  AccumulatorOptions opts;
  opts.bin_size = schedule.effective_bin_size();
  const ObservableAccumulator acc = sample_chain(chain_config(size, beta, seed, schedule), geom, &table, opts);
  CorrelationResult out;
  out.report = jackknife_errors(acc, beta);
  out.profile = fee_profile(acc);
  std::vector<double> r, f, err;
  for (const auto& p : out.profile) {
    r.push_back(p.r);
    f.push_back(p.f);
    err.push_back(p.error);
  }
  try {
    out.slope = loglog_slope(r, f, err, 3.0, size / 4.0);
  } catch (const std::invalid_argument&) {
    out.slope.reset();
  }
  return out;
}

int cmd_correlate(int size, double beta, std::uint64_t seed, const Schedule& schedule,
                  const std::filesystem::path& out, std::ostream& log) {
  const CorrelationResult res = run_correlate(size, beta, seed, schedule);
  write_fee_csv(out, res.profile);
  log << "wrote " << out.string() << " (" << res.profile.size() << " distances), e = " << res.report.e << "\n";
  if (res.slope) {
    log << "log-log slope over 3 <= r <= " << size / 4.0 << ": " << res.slope->slope << " +- " << res.slope->slope_err
        << "\n";
  }
  return kExitOk;
}

int cmd_selftest(std::ostream& log) {
  bool ok = true;
  auto check = [&](const std::string& name, bool pass) {
    log << (pass ? "PASS " : "FAIL ") << name << "\n";
    ok = ok && pass;
  };

  const QuantumCheckReport qc = run_quantum_check({0.0, 0.2, kCriticalBeta, 0.8, 2.0});
  check("quantum-classical mapping at L=2", qc.pass);

  const ExactIsingResult ex = exact_ising(2, 0.4);
  Schedule quick;
  quick.n_therm = 500;
  quick.n_measure = 20000;
  quick.interval = 1;
  const EntanglementReport mc = run_cell(2, 0.4, 7, quick);
  check("MC e agrees with enumeration at L=2, beta=0.4", std::abs(mc.e - ex.e) <= 4.0 * mc.e_err + 1e-12);
  check("MC GE-tilde agrees with enumeration at L=2, beta=0.4",
        std::abs(mc.ge_tilde - ex.ge_tilde) <= 4.0 * mc.ge_tilde_err + 1e-12);

  std::vector<SizePoint> pts;
  for (double n : {128.0, 512.0, 1568.0, 3200.0}) pts.push_back({n, 0.836 * std::log(n) + 0.3, 0.0});
  check("logarithmic fit round trip", std::abs(fit_log_divergence(pts).slope - 0.836) < 1e-10);

  check("analytic Q at e = 1/sqrt(2)", std::abs(analytic_q(1.0 / std::sqrt(2.0)) - 1.0 / 12.0) < 1e-15);
  return ok ? kExitOk : kExitTolerance;
}

}  // namespace tcge
