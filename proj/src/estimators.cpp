#include "tcge/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tcge {

namespace {

constexpr double kProbabilityTolerance = 1e-9;
constexpr double kProbabilityHardLimit = 1e-6;

double checked_probability(double p, bool& clamped) {
  if (p < -kProbabilityHardLimit || p > 1.0 + kProbabilityHardLimit) {
    throw std::domain_error("inconsistent moments: probability " + std::to_string(p));
  }
  if (p < -kProbabilityTolerance || p > 1.0 + kProbabilityTolerance) clamped = true;
  return std::clamp(p, 0.0, 1.0);
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

ProbabilitySet probabilities_from_moments(double mean_a, double mean_b, double mean_ab) {
  ProbabilitySet p;
  p.p_s = checked_probability((1.0 - mean_a) / 2.0, p.clamped);
  p.p_o = checked_probability((1.0 + mean_a) / 2.0, p.clamped);
  p.p_ss = checked_probability((1.0 - mean_a - mean_b + mean_ab) / 4.0, p.clamped);
  p.p_so = checked_probability((1.0 - mean_a + mean_b - mean_ab) / 4.0, p.clamped);
  p.p_os = checked_probability((1.0 + mean_a - mean_b - mean_ab) / 4.0, p.clamped);
  p.p_oo = checked_probability((1.0 + mean_a + mean_b + mean_ab) / 4.0, p.clamped);
  return p;
}

double compute_ge(double e) {
  if (!(std::abs(e) <= 1.0)) throw std::domain_error("per-link energy outside [-1, 1]");
  return 1.0 - e * e;
}

double weighted_square_sum(std::span<const double> correlations, std::span<const std::uint64_t> multiplicities) {
  if (correlations.size() != multiplicities.size()) {
    throw std::invalid_argument("correlation and multiplicity counts differ");
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < correlations.size(); ++c) {
    sum += static_cast<double>(multiplicities[c]) * correlations[c] * correlations[c];
  }
  return sum;
}

double compute_ge_tilde(double e, std::span<const double> squared_correlations,
                        std::span<const std::uint64_t> multiplicities, std::uint64_t n_links) {
  if (squared_correlations.size() != multiplicities.size()) {
    throw std::invalid_argument("missing class: correlation and multiplicity counts differ");
  }
  const std::uint64_t pairs = n_links * (n_links - 1) / 2;
  const std::uint64_t covered = std::accumulate(multiplicities.begin(), multiplicities.end(), std::uint64_t{0});
  if (covered != pairs) {
    throw std::invalid_argument("missing class: multiplicities cover " + std::to_string(covered) + " of " +
                                std::to_string(pairs) + " pairs");
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < multiplicities.size(); ++c) {
    sum += static_cast<double>(multiplicities[c]) * squared_correlations[c];
  }
  const double n = static_cast<double>(n_links);
  return 1.0 - (2.0 / 3.0) * e * e - 2.0 / (3.0 * n * (n - 1.0)) * sum;
}

double compute_q(double ge_tilde, double ge) { return ge_tilde - ge; }

double dge_dbeta_fluctuation(double e, double var_energy, std::uint64_t n_links) {
  // -2 (<E>/N^2) (-Var E) with <E> = e N.
  return 2.0 * e * var_energy / static_cast<double>(n_links);
}

double analytic_q(double e) {
  const double e2 = e * e;
  return (e2 - e2 * e2) / 3.0;
}

std::vector<SeriesPoint> finite_difference_derivative(std::span<const SeriesPoint> series) {
  const std::size_t n = series.size();
  if (n < 3) throw std::invalid_argument("finite differences need at least 3 points");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(series[i].beta > series[i - 1].beta)) throw std::invalid_argument("beta grid must be strictly increasing");
  }
  std::vector<SeriesPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i == n - 1 ? n - 1 : i + 1;
    const double h = series[hi].beta - series[lo].beta;
    out[i].beta = series[i].beta;
    out[i].value = (series[hi].value - series[lo].value) / h;
    out[i].error = std::hypot(series[hi].error, series[lo].error) / h;
  }
  return out;
}

BinSums& BinSums::operator+=(const BinSums& other) {
  count += other.count;
  count_a += other.count_a;
  count_b += other.count_b;
  sum_e += other.sum_e;
  sum_e2 += other.sum_e2;
  if (class_a.size() < other.class_a.size()) class_a.resize(other.class_a.size(), 0.0);
  if (class_b.size() < other.class_b.size()) class_b.resize(other.class_b.size(), 0.0);
  for (std::size_t c = 0; c < other.class_a.size(); ++c) class_a[c] += other.class_a[c];
  for (std::size_t c = 0; c < other.class_b.size(); ++c) class_b[c] += other.class_b[c];
  return *this;
}

BinSums& BinSums::operator-=(const BinSums& other) {
  count -= other.count;
  count_a -= other.count_a;
  count_b -= other.count_b;
  sum_e -= other.sum_e;
  sum_e2 -= other.sum_e2;
  for (std::size_t c = 0; c < other.class_a.size() && c < class_a.size(); ++c) class_a[c] -= other.class_a[c];
  for (std::size_t c = 0; c < other.class_b.size() && c < class_b.size(); ++c) class_b[c] -= other.class_b[c];
  return *this;
}

ObservableAccumulator::ObservableAccumulator(const TorusGeometry& geom, const PairClassTable* table,
                                             AccumulatorOptions options)
    : size_(geom.size()),
      n_links_(geom.n_links()),
      table_(options.track_pairs ? table : nullptr),
      options_(options) {
  if (options_.bin_size < 1) throw std::invalid_argument("bin size must be >= 1");
  if (options_.track_pairs && table == nullptr) throw std::invalid_argument("pair tracking needs a class table");
  if (table_ != nullptr && table_->size() != size_) throw std::invalid_argument("class table size mismatch");
  open_bin();
}

ObservableAccumulator::ObservableAccumulator(const ObservableAccumulator& other)
    : size_(other.size_),
      n_links_(other.n_links_),
      table_(other.table_),
      options_(other.options_),
      bins_(other.bins_),
      current_(other.current_),
      parity_(other.parity_),
      spectra_(other.spectra_) {}

ObservableAccumulator::~ObservableAccumulator() = default;

void ObservableAccumulator::open_bin() {
  current_ = BinSums{};
  if (table_ != nullptr) {
    current_.class_a.assign(table_->n_classes(), 0.0);
    current_.class_b.assign(table_->n_classes(), 0.0);
    const std::size_t k = static_cast<std::size_t>(size_) * (size_ / 2 + 1);
    for (auto& s : spectra_) s.assign(k, {0.0, 0.0});
  }
}

void ObservableAccumulator::measure(const SpinConfiguration& state) {
  if (state.geometry().size() != size_) throw std::invalid_argument("state size mismatch");
  const auto energy = static_cast<double>(state.energy());
  const bool half_b = (parity_++ & 1) != 0;
  ++current_.count;
  ++(half_b ? current_.count_b : current_.count_a);
  current_.sum_e += energy;
  current_.sum_e2 += energy * energy;
  if (table_ != nullptr) {
    if (!correlator_) correlator_ = std::make_unique<LinkCorrelator>(size_);
    correlator_->transform(state);
    const auto h = correlator_->horizontal();
    const auto v = correlator_->vertical();
    const std::size_t off = half_b ? 3 : 0;
    auto& hh = spectra_[off];
    auto& hv = spectra_[off + 1];
    auto& vv = spectra_[off + 2];
    for (std::size_t k = 0; k < h.size(); ++k) {
      hh[k] += std::norm(h[k]);
      hv[k] += std::conj(h[k]) * v[k];
      vv[k] += std::norm(v[k]);
    }
  }
  if (current_.count == options_.bin_size) close_bin();
}

void ObservableAccumulator::close_bin() {
  if (table_ != nullptr) {
    if (!correlator_) correlator_ = std::make_unique<LinkCorrelator>(size_);
    const int L = size_;
    const std::size_t n = static_cast<std::size_t>(L) * L;
    const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    std::vector<double> corr(n);
    for (std::size_t half = 0; half < 2; ++half) {
      auto& dst = half == 0 ? current_.class_a : current_.class_b;
      for (std::size_t kind = 0; kind < 3; ++kind) {
        correlator_->inverse(spectra_[3 * half + kind], corr);
        for (std::size_t c = 0; c < table_->n_classes(); ++c) {
          const PairClass& pc = table_->classes()[c];
          if (static_cast<std::size_t>(pc.kind) == kind) dst[c] = corr[pc.dx + L * pc.dy] * norm;
        }
      }
    }
  }
  bins_.push_back(std::move(current_));
  open_bin();
}

void ObservableAccumulator::flush() {
  if (current_.count > 0) close_bin();
}

void ObservableAccumulator::merge(const ObservableAccumulator& other) {
  if (other.size_ != size_ || other.tracks_pairs() != tracks_pairs()) {
    throw std::invalid_argument("cannot merge accumulators of different shape");
  }
  if (other.current_.count > 0) throw std::logic_error("merge source has an unflushed bin");
  bins_.insert(bins_.end(), other.bins_.begin(), other.bins_.end());
}

std::int64_t ObservableAccumulator::n_measurements() const {
  std::int64_t n = current_.count;
  for (const auto& b : bins_) n += b.count;
  return n;
}

BinSums ObservableAccumulator::totals() const {
  BinSums t;
  for (const auto& b : bins_) t += b;
  return t;
}

ObservableAccumulator sample_chain(const ChainConfig& config, const TorusGeometry& geom,
                                   const PairClassTable* table, AccumulatorOptions options) {
  ObservableAccumulator acc(geom, table, options);
  run_chain(config, geom, [&acc](const SpinConfiguration& s) { acc.measure(s); });
  acc.flush();
  return acc;
}

PointEstimate estimate(const BinSums& sums, std::uint64_t n_links, const PairClassTable* table) {
  if (sums.count <= 0) throw std::logic_error("no measurements");
  PointEstimate p;
  const double n = static_cast<double>(sums.count);
  p.mean_energy = sums.sum_e / n;
  p.var_energy = std::max(0.0, sums.sum_e2 / n - p.mean_energy * p.mean_energy);
  p.e = std::clamp(p.mean_energy / static_cast<double>(n_links), -1.0, 1.0);
  p.ge = compute_ge(p.e);
  p.dge_dbeta = dge_dbeta_fluctuation(p.e, p.var_energy, n_links);
  p.ge_tilde = kNaN;
  p.q = kNaN;
  if (table != nullptr && sums.count_a > 0 && sums.count_b > 0) {
    // Independent-half products estimate <E_i E_j>^2 without the variance bias.
    std::vector<double> squares(table->n_classes());
    const double na = static_cast<double>(sums.count_a);
    const double nb = static_cast<double>(sums.count_b);
    for (std::size_t c = 0; c < squares.size(); ++c) {
      squares[c] = (sums.class_a[c] / na) * (sums.class_b[c] / nb);
    }
    std::vector<std::uint64_t> mult(table->n_classes());
    for (std::size_t c = 0; c < mult.size(); ++c) mult[c] = table->classes()[c].multiplicity;
    p.ge_tilde = compute_ge_tilde(p.e, squares, mult, n_links);
    p.q = compute_q(p.ge_tilde, p.ge);
  }
  return p;
}

double jackknife_error(std::span<const double> leave_one_out) {
  const std::size_t n = leave_one_out.size();
  if (n < 2) throw std::invalid_argument("jackknife needs at least 2 estimates");
  const double mean = std::accumulate(leave_one_out.begin(), leave_one_out.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : leave_one_out) ss += (x - mean) * (x - mean);
  return std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n) * ss);
}

EntanglementReport jackknife_errors(const ObservableAccumulator& acc, double beta) {
  constexpr std::size_t kMinBins = 20;
  const auto& bins = acc.bins();
  if (bins.size() < kMinBins) {
    throw std::invalid_argument("jackknife needs >= 20 bins, have " + std::to_string(bins.size()));
  }
  const BinSums total = acc.totals();
  const PointEstimate full = estimate(total, acc.n_links(), acc.table());

  const std::size_t nb = bins.size();
  std::vector<double> e(nb), ge(nb), get(nb), q(nb), dge(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    BinSums loo = total;
    loo -= bins[b];
    const PointEstimate p = estimate(loo, acc.n_links(), acc.table());
    e[b] = p.e;
    ge[b] = p.ge;
    get[b] = p.ge_tilde;
    q[b] = p.q;
    dge[b] = p.dge_dbeta;
  }

  EntanglementReport r;
  r.size = acc.size();
  r.beta = beta;
  r.e = full.e;
  r.e_err = jackknife_error(e);
  r.var_energy = full.var_energy;
  r.ge = full.ge;
  r.ge_err = jackknife_error(ge);
  r.ge_tilde = full.ge_tilde;
  r.ge_tilde_err = acc.tracks_pairs() ? jackknife_error(get) : kNaN;
  r.q = full.q;
  r.q_err = acc.tracks_pairs() ? jackknife_error(q) : kNaN;
  r.dge_dbeta = full.dge_dbeta;
  r.dge_dbeta_err = jackknife_error(dge);
  r.dge_tilde_dbeta = kNaN;
  r.dge_tilde_dbeta_err = kNaN;
  r.n_measure = total.count;
  r.n_bins = nb;
  return r;
}

namespace {

struct Shell {
  double weighted = 0.0;
  double weight = 0.0;
  int n_classes = 0;
};

// Multiplicity-weighted f_EE per distance shell, keyed by squared distance.
std::map<int, Shell> shells(const PairClassTable& table, std::span<const double> correlations, double e) {
  std::map<int, Shell> out;
  for (std::size_t c = 0; c < table.n_classes(); ++c) {
    Shell& s = out[table.distance_squared(c)];
    const auto m = static_cast<double>(table.classes()[c].multiplicity);
    s.weighted += m * (correlations[c] - e * e);
    s.weight += m;
    ++s.n_classes;
  }
  return out;
}

}  // namespace

std::vector<FeePoint> fee_profile(const PairClassTable& table, std::span<const double> correlations, double e) {
  if (correlations.size() != table.n_classes()) throw std::invalid_argument("class data incomplete");
  std::vector<FeePoint> out;
  for (const auto& [r2, s] : shells(table, correlations, e)) {
    out.push_back({std::sqrt(static_cast<double>(r2)), s.weighted / s.weight, 0.0, s.n_classes});
  }
  return out;
}

std::vector<FeePoint> fee_profile(const ObservableAccumulator& acc) {
  if (!acc.tracks_pairs()) throw std::invalid_argument("accumulator does not track pairs");
  const PairClassTable& table = *acc.table();
  auto pooled = [&](const BinSums& s) {
    std::vector<double> corr(table.n_classes());
    const double n = static_cast<double>(s.count);
    for (std::size_t c = 0; c < corr.size(); ++c) corr[c] = (s.class_a[c] + s.class_b[c]) / n;
    return fee_profile(table, corr, s.sum_e / n / static_cast<double>(acc.n_links()));
  };
  const BinSums total = acc.totals();
  if (total.count <= 0) throw std::logic_error("no measurements");
  std::vector<FeePoint> out = pooled(total);
  const auto& bins = acc.bins();
  if (bins.size() >= 2) {
    std::vector<std::vector<double>> loo(out.size(), std::vector<double>(bins.size()));
    for (std::size_t b = 0; b < bins.size(); ++b) {
      BinSums s = total;
      s -= bins[b];
      const auto p = pooled(s);
      for (std::size_t i = 0; i < out.size(); ++i) loo[i][b] = p[i].f;
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].error = jackknife_error(loo[i]);
  }
  return out;
}

}  // namespace tcge
