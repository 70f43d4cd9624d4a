#pragma once

// Statistical checks shared by the unit tests and the acceptance binary.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "tcge/estimators.hpp"
#include "tcge/exact_oracles.hpp"
#include "tcge/mc_engine.hpp"

namespace tcge::testing {

// Upper 0.1% point of chi^2 with 7 degrees of freedom.
inline constexpr double kChi2Dof7 = 24.322;

inline std::pair<double, double> mean_and_error(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

inline double batch_mean_error(const std::vector<double>& samples, std::size_t n_batches = 50) {
  const std::size_t bs = samples.size() / n_batches;
  std::vector<double> means(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    const auto first = samples.begin() + static_cast<std::ptrdiff_t>(b * bs);
    means[b] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(bs), 0.0) / static_cast<double>(bs);
  }
  return mean_and_error(means).second;
}

struct HistogramTest {
  double chi2 = 0.0;      // over the 8 global-flip orbits, 7 dof
  double sector_z = 0.0;  // (fraction with S_0 = +1) - 1/2 in batch-means sigmas
};

// L = 2 configuration histogram against exact Boltzmann weights. Counts are
// pooled over the global flip; the balance between the two flip sectors is
// tested on its own with batch means, since local updates tunnel between
// ordered sectors slowly and correlate the raw 16-bin histogram.
inline HistogramTest histogram_against_exact(Algorithm alg, double beta, std::uint64_t seed, std::int64_t samples) {
  const TorusGeometry g(2);
  const auto exact = exact_configuration_probabilities(2, beta);
  std::vector<double> counts(16, 0.0);
  std::vector<double> sector;
  sector.reserve(static_cast<std::size_t>(samples));
  ChainConfig cfg;
  cfg.size = 2;
  cfg.beta = beta;
  cfg.seed = seed;
  cfg.n_therm = 100;
  cfg.n_measure = samples;
  cfg.measure_interval = 4;
  cfg.algorithm = alg;
  run_chain(cfg, g, [&](const SpinConfiguration& s) {
    std::uint32_t c = 0;
    for (VertexId v = 0; v < 4; ++v) {
      if (s.spin(v) < 0) c |= 1u << v;
    }
    counts[c] += 1.0;
    sector.push_back(s.spin(0) > 0 ? 1.0 : 0.0);
  });
  HistogramTest out;
  for (std::uint32_t c = 0; c < 8; ++c) {
    const double expected = (exact[c] + exact[15u - c]) * static_cast<double>(samples);
    const double observed = counts[c] + counts[15u - c];
    out.chi2 += (observed - expected) * (observed - expected) / expected;
  }
  const double frac = std::accumulate(sector.begin(), sector.end(), 0.0) / static_cast<double>(sector.size());
  out.sector_z = (frac - 0.5) / batch_mean_error(sector);
  return out;
}

struct SplitHalfTest {
  double truth = 0.0;  // exact sum_c m_c <E_i E_j>_c^2
  double split_mean = 0.0;
  double split_err = 0.0;
  double naive_mean = 0.0;
  double naive_err = 0.0;
};

// Many short independent L = 2 chains; compares the chain average of the
// split-half estimate x_A x_B (and of the pooled square x^2) with the exact value.
inline SplitHalfTest split_half_check(double beta, int chains, std::uint64_t seed0) {
  const TorusGeometry g(2);
  const PairClassTable table(g);
  const auto ex = exact_ising(2, beta);
  std::vector<std::uint64_t> m;
  for (const auto& c : table.classes()) m.push_back(c.multiplicity);
  SplitHalfTest out;
  out.truth = weighted_square_sum(ex.class_correlations, m);
  std::vector<double> split(static_cast<std::size_t>(chains)), naive(static_cast<std::size_t>(chains));
  for (int k = 0; k < chains; ++k) {
    ChainConfig cfg;
    cfg.size = 2;
    cfg.beta = beta;
    cfg.seed = seed0 + static_cast<std::uint64_t>(k);
    cfg.n_therm = 50;
    cfg.n_measure = 20;
    cfg.measure_interval = 5;
    const auto acc = sample_chain(cfg, g, &table, {.bin_size = 20, .track_pairs = true});
    const auto t = acc.totals();
    double s = 0.0, n = 0.0;
    for (std::size_t c = 0; c < table.n_classes(); ++c) {
      const double xa = t.class_a[c] / static_cast<double>(t.count_a);
      const double xb = t.class_b[c] / static_cast<double>(t.count_b);
      const double x = (t.class_a[c] + t.class_b[c]) / static_cast<double>(t.count);
      s += static_cast<double>(m[c]) * xa * xb;
      n += static_cast<double>(m[c]) * x * x;
    }
    split[static_cast<std::size_t>(k)] = s;
    naive[static_cast<std::size_t>(k)] = n;
  }
  std::tie(out.split_mean, out.split_err) = mean_and_error(split);
  std::tie(out.naive_mean, out.naive_err) = mean_and_error(naive);
  return out;
}

}  // namespace tcge::testing
