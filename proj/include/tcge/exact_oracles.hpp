#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tcge/estimators.hpp"
#include "tcge/torus_lattice.hpp"

namespace tcge {

// Exhaustive Ising enumeration on a tiny torus. Z follows the loop-sum
// convention Z = 1/2 sum_C exp(beta sum S_k S_k'), stored as log Z.
struct ExactIsingResult {
  int size = 0;
  double beta = 0.0;
  double log_z = 0.0;
  double mean_energy = 0.0;
  double var_energy = 0.0;
  double e = 0.0;
  std::vector<PairClass> classes;
  std::vector<double> class_correlations;
  std::vector<ProbabilitySet> probabilities;
  ProbabilitySet single_link;
  double ge = 0.0;
  double ge_tilde = 0.0;
  double q = 0.0;
};

// 2 <= L <= 4, or L = 5 with allow_l5 (2^24 configurations, slow).
ExactIsingResult exact_ising(int size, double beta, bool allow_l5 = false);

// Exact <E_a E_b> for every ordered link pair, row-major n_links x n_links
// (diagonal = 1). Same size limits as exact_ising.
std::vector<double> exact_pair_correlations(int size, double beta, bool allow_l5 = false);

// Exact Boltzmann probabilities of all 2^(L^2) spin configurations, indexed by
// the bitmask with bit v set for S_v = -1. L <= 4.
std::vector<double> exact_configuration_probabilities(int size, double beta);

// Product of star operators on the vertices in `mask`. The mask and its
// complement give the same operator; the canonical one has bit 0 set.
struct LoopGroupElement {
  std::uint32_t mask = 0;

  // Links crossed by the loop (sigma^z = -1), bit i for link i.
  std::uint64_t link_pattern(const TorusGeometry& geom) const;
  bool operator==(const LoopGroupElement&) const = default;
};

LoopGroupElement canonical_element(std::uint32_t mask, std::size_t n_vertices);

// All 2^(L^2 - 1) elements in increasing canonical mask order, L <= 3.
std::vector<LoopGroupElement> enumerate_loop_group(int size);

// Ground state sum_g exp(beta/2 sum_i sigma^z_i(g)) g|0...0> / sqrt(Z) stored
// sparsely over its 2^(L^2 - 1) nonzero amplitudes. Basis bit i = 1 means
// qubit i is |1> (sigma^z = -1).
struct GroundStateVector {
  int size = 0;
  double beta = 0.0;
  std::size_t n_qubits = 0;
  double log_z = 0.0;
  std::vector<std::uint64_t> basis;  // sorted
  std::vector<double> amplitude;

  double amplitude_of(std::uint64_t state) const;
  double norm_squared() const;
  // All 2^n_qubits amplitudes (n_qubits <= 20).
  std::vector<double> dense() const;
};

// L = 2, or L = 3 with allow_l3.
GroundStateVector build_ground_state(int size, double beta, bool allow_l3 = false);

// Real symmetric reduced density matrix over 1 or 2 qubits. Local index:
// first listed qubit is the high bit.
struct DensityMatrix {
  std::size_t dim = 0;
  std::vector<double> data;

  double at(std::size_t i, std::size_t j) const { return data[i * dim + j]; }
  double trace() const;
  double purity() const;
  double max_off_diagonal() const;
};

// Exact partial trace of |GS><GS| onto `qubits`. Throws std::invalid_argument
// for duplicate or out-of-range ids, or more than two qubits.
DensityMatrix reduced_density_matrix(const GroundStateVector& state, std::span<const LinkId> qubits);

struct QuantumEntanglement {
  double ge = 0.0;
  double ge_tilde = 0.0;
  // Largest off-diagonal magnitude over all one- and two-qubit matrices.
  double max_off_diagonal = 0.0;
};

// GE = 2 (1 - mean_i Tr rho_i^2), GE-tilde = 4/3 (1 - mean_(ij) Tr rho_ij^2).
QuantumEntanglement entanglement_from_state(const GroundStateVector& state);

}  // namespace tcge
