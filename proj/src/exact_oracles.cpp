#include "tcge/exact_oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace tcge {

namespace {

void check_enumeration_size(int size, bool allow_l5) {
  const int limit = allow_l5 ? 5 : 4;
  if (size < 2 || size > limit) {
    throw std::invalid_argument("exact enumeration supports 2 <= L <= " + std::to_string(limit) + ", got " +
                                std::to_string(size));
  }
}

// Weighted sums over the 2^(L^2 - 1) configurations with spin 0 up; by global
// flip symmetry this is exactly half the full configuration sum.
struct Enumeration {
  double weight = 0.0;           // sum_C' exp(-beta (E + N))
  std::vector<double> k_weight;  // weight carried by each unsatisfied-link count k
  std::vector<double> pair;  // weighted sum of E_a E_b, row-major
};

Enumeration enumerate(const TorusGeometry& geom, double beta, bool with_pairs) {
  const std::size_t nl = geom.n_links();
  const std::size_t ns = geom.n_spins();
  std::vector<std::pair<VertexId, VertexId>> ends(nl);
  for (LinkId l = 0; l < nl; ++l) ends[l] = geom.endpoints(l);

  // Boltzmann factors indexed by the number of unsatisfied links k:
  // E = 2k - N, weight exp(-beta (E + N)) = exp(-2 beta k).
  std::vector<double> factor(nl + 1);
  for (std::size_t k = 0; k <= nl; ++k) factor[k] = std::exp(-2.0 * beta * static_cast<double>(k));

  Enumeration out;
  out.k_weight.assign(nl + 1, 0.0);
  if (with_pairs) out.pair.assign(nl * nl, 0.0);
  std::vector<signed char> energy(nl);
  const std::uint64_t count = std::uint64_t{1} << (ns - 1);
  for (std::uint64_t m = 0; m < count; ++m) {
    const std::uint64_t spins = m << 1;  // bit v set: S_v = -1
    std::size_t k = 0;
    for (std::size_t l = 0; l < nl; ++l) {
      const bool unsatisfied = ((spins >> ends[l].first) ^ (spins >> ends[l].second)) & 1U;
      energy[l] = unsatisfied ? 1 : -1;
      k += unsatisfied;
    }
    const double w = factor[k];
    out.weight += w;
    out.k_weight[k] += w;
    if (with_pairs) {
      for (std::size_t a = 0; a < nl; ++a) {
        double* row = out.pair.data() + a * nl;
        const double wa = w * energy[a];
        for (std::size_t b = a + 1; b < nl; ++b) row[b] += wa * energy[b];
      }
    }
  }
  if (with_pairs) {
    for (std::size_t a = 0; a < nl; ++a) {
      out.pair[a * nl + a] = out.weight;
      for (std::size_t b = a + 1; b < nl; ++b) out.pair[b * nl + a] = out.pair[a * nl + b];
    }
  }
  return out;
}

}  // namespace

std::vector<double> exact_pair_correlations(int size, double beta, bool allow_l5) {
  check_enumeration_size(size, allow_l5);
  const TorusGeometry geom(size);
  Enumeration en = enumerate(geom, beta, true);
  for (double& x : en.pair) x /= en.weight;
  return en.pair;
}

ExactIsingResult exact_ising(int size, double beta, bool allow_l5) {
  check_enumeration_size(size, allow_l5);
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  const TorusGeometry geom(size);
  const PairClassTable table(geom);
  const std::size_t nl = geom.n_links();
  const Enumeration en = enumerate(geom, beta, true);

  ExactIsingResult r;
  r.size = size;
  r.beta = beta;
  r.log_z = std::log(en.weight) + beta * static_cast<double>(nl);
  // Moments of k in two passes; E = 2k - N.
  double mean_k = 0.0;
  for (std::size_t k = 0; k <= nl; ++k) mean_k += static_cast<double>(k) * en.k_weight[k];
  mean_k /= en.weight;
  double var_k = 0.0;
  for (std::size_t k = 0; k <= nl; ++k) {
    const double d = static_cast<double>(k) - mean_k;
    var_k += d * d * en.k_weight[k];
  }
  var_k /= en.weight;
  r.mean_energy = 2.0 * mean_k - static_cast<double>(nl);
  r.var_energy = 4.0 * var_k;
  r.e = r.mean_energy / static_cast<double>(nl);
  r.classes = table.classes();

  std::vector<double> sums(table.n_classes(), 0.0);
  std::vector<std::uint64_t> seen(table.n_classes(), 0);
  for (LinkId a = 0; a < nl; ++a) {
    for (LinkId b = a + 1; b < nl; ++b) {
      const int c = table.class_of(geom, a, b);
      sums[c] += en.pair[a * nl + b] / en.weight;
      ++seen[c];
    }
  }
  r.class_correlations.resize(table.n_classes());
  std::vector<double> squares(table.n_classes());
  std::vector<std::uint64_t> mult(table.n_classes());
  for (std::size_t c = 0; c < table.n_classes(); ++c) {
    r.class_correlations[c] = sums[c] / static_cast<double>(seen[c]);
    squares[c] = r.class_correlations[c] * r.class_correlations[c];
    mult[c] = table.classes()[c].multiplicity;
    r.probabilities.push_back(probabilities_from_moments(r.e, r.e, r.class_correlations[c]));
  }
  r.single_link = probabilities_from_moments(r.e, r.e, 1.0);
  r.ge = compute_ge(r.e);
  r.ge_tilde = compute_ge_tilde(r.e, squares, mult, nl);
  r.q = compute_q(r.ge_tilde, r.ge);
  return r;
}

std::vector<double> exact_configuration_probabilities(int size, double beta) {
  check_enumeration_size(size, false);
  const TorusGeometry geom(size);
  const std::size_t nl = geom.n_links();
  const std::uint64_t count = std::uint64_t{1} << geom.n_spins();
  std::vector<double> p(count);
  double total = 0.0;
  for (std::uint64_t spins = 0; spins < count; ++spins) {
    std::size_t k = 0;
    for (LinkId l = 0; l < nl; ++l) {
      const auto [u, v] = geom.endpoints(l);
      k += ((spins >> u) ^ (spins >> v)) & 1U;
    }
    p[spins] = std::exp(-2.0 * beta * static_cast<double>(k));
    total += p[spins];
  }
  for (double& x : p) x /= total;
  return p;
}

std::uint64_t LoopGroupElement::link_pattern(const TorusGeometry& geom) const {
  std::uint64_t pattern = 0;
  const auto nl = static_cast<LinkId>(geom.n_links());
  for (LinkId l = 0; l < nl; ++l) {
    const auto [u, v] = geom.endpoints(l);
    if (((mask >> u) ^ (mask >> v)) & 1U) pattern |= std::uint64_t{1} << l;
  }
  return pattern;
}

LoopGroupElement canonical_element(std::uint32_t mask, std::size_t n_vertices) {
  const std::uint32_t full = n_vertices >= 32 ? ~0U : ((1U << n_vertices) - 1U);
  mask &= full;
  // Of b and its complement, keep the one whose lowest set bit comes first,
  // i.e. the one containing vertex 0.
  return {(mask & 1U) ? mask : (~mask & full)};
}

std::vector<LoopGroupElement> enumerate_loop_group(int size) {
  if (size < 2 || size > 3) throw std::invalid_argument("loop group enumeration supports L = 2 or 3");
  const std::size_t nv = static_cast<std::size_t>(size) * size;
  std::vector<LoopGroupElement> out;
  out.reserve(std::size_t{1} << (nv - 1));
  for (std::uint32_t m = 0; m < (1U << (nv - 1)); ++m) out.push_back({(m << 1) | 1U});
  return out;
}

double GroundStateVector::amplitude_of(std::uint64_t state) const {
  const auto it = std::lower_bound(basis.begin(), basis.end(), state);
  if (it == basis.end() || *it != state) return 0.0;
  return amplitude[static_cast<std::size_t>(it - basis.begin())];
}

double GroundStateVector::norm_squared() const {
  double s = 0.0;
  for (double a : amplitude) s += a * a;
  return s;
}

std::vector<double> GroundStateVector::dense() const {
  if (n_qubits > 20) throw std::invalid_argument("dense ground state limited to 20 qubits");
  std::vector<double> out(std::size_t{1} << n_qubits, 0.0);
  for (std::size_t i = 0; i < basis.size(); ++i) out[basis[i]] = amplitude[i];
  return out;
}

GroundStateVector build_ground_state(int size, double beta, bool allow_l3) {
  if (size != 2 && !(allow_l3 && size == 3)) {
    throw std::invalid_argument("ground state construction supports L = 2 (L = 3 with opt-in)");
  }
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  const TorusGeometry geom(size);
  const auto n = static_cast<double>(geom.n_links());
  const auto group = enumerate_loop_group(size);

  std::vector<std::pair<std::uint64_t, double>> entries;  // (basis, log amplitude before normalization)
  entries.reserve(group.size());
  double max_log = -INFINITY;
  for (const auto& g : group) {
    const std::uint64_t pattern = g.link_pattern(geom);
    const double sigma_sum = n - 2.0 * std::popcount(pattern);
    const double log_amp = 0.5 * beta * sigma_sum;
    entries.emplace_back(pattern, log_amp);
    max_log = std::max(max_log, log_amp);
  }
  // Z = sum exp(2 log_amp), accumulated relative to the largest term.
  double z_scaled = 0.0;
  for (const auto& [b, la] : entries) z_scaled += std::exp(2.0 * (la - max_log));
  std::sort(entries.begin(), entries.end());

  GroundStateVector gs;
  gs.size = size;
  gs.beta = beta;
  gs.n_qubits = geom.n_links();
  gs.log_z = std::log(z_scaled) + 2.0 * max_log;
  for (const auto& [b, la] : entries) {
    gs.basis.push_back(b);
    gs.amplitude.push_back(std::exp(la - max_log) / std::sqrt(z_scaled));
  }
  return gs;
}

double DensityMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim; ++i) t += at(i, i);
  return t;
}

double DensityMatrix::purity() const {
  double p = 0.0;
  for (double x : data) p += x * x;
  return p;
}

double DensityMatrix::max_off_diagonal() const {
  double m = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      if (i != j) m = std::max(m, std::abs(at(i, j)));
    }
  }
  return m;
}

DensityMatrix reduced_density_matrix(const GroundStateVector& state, std::span<const LinkId> qubits) {
  if (qubits.empty() || qubits.size() > 2) throw std::invalid_argument("reduced density matrix over 1 or 2 qubits");
  for (LinkId q : qubits) {
    if (q >= state.n_qubits) throw std::invalid_argument("qubit id out of range");
  }
  if (qubits.size() == 2 && qubits[0] == qubits[1]) throw std::invalid_argument("duplicate qubit ids");

  std::uint64_t kept = 0;
  for (LinkId q : qubits) kept |= std::uint64_t{1} << q;
  auto local = [&](std::uint64_t b) {
    std::size_t idx = 0;
    for (LinkId q : qubits) idx = (idx << 1) | ((b >> q) & 1U);
    return idx;
  };

  // Basis states sharing the traced-out bits contribute |i><j| blocks.
  std::map<std::uint64_t, std::vector<std::pair<std::size_t, double>>> groups;
  for (std::size_t i = 0; i < state.basis.size(); ++i) {
    groups[state.basis[i] & ~kept].emplace_back(local(state.basis[i]), state.amplitude[i]);
  }
  DensityMatrix rho;
  rho.dim = std::size_t{1} << qubits.size();
  rho.data.assign(rho.dim * rho.dim, 0.0);
  for (const auto& [rest, members] : groups) {
    for (const auto& [i, ai] : members) {
      for (const auto& [j, aj] : members) rho.data[i * rho.dim + j] += ai * aj;
    }
  }
  return rho;
}

QuantumEntanglement entanglement_from_state(const GroundStateVector& state) {
  const auto n = static_cast<LinkId>(state.n_qubits);
  QuantumEntanglement out;
  double single = 0.0;
  for (LinkId a = 0; a < n; ++a) {
    const std::array<LinkId, 1> q{a};
    const DensityMatrix rho = reduced_density_matrix(state, q);
    single += rho.purity();
    out.max_off_diagonal = std::max(out.max_off_diagonal, rho.max_off_diagonal());
  }
  double pair = 0.0;
  for (LinkId a = 0; a < n; ++a) {
    for (LinkId b = a + 1; b < n; ++b) {
      const std::array<LinkId, 2> q{a, b};
      const DensityMatrix rho = reduced_density_matrix(state, q);
      pair += rho.purity();
      out.max_off_diagonal = std::max(out.max_off_diagonal, rho.max_off_diagonal());
    }
  }
  const double nd = static_cast<double>(n);
  out.ge = 2.0 * (1.0 - single / nd);
  out.ge_tilde = 4.0 / 3.0 * (1.0 - 2.0 / (nd * (nd - 1.0)) * pair);
  return out;
}

}  // namespace tcge
