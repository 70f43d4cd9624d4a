#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tcge/random.hpp"
#include "tcge/torus_lattice.hpp"

namespace tcge {

enum class Algorithm { metropolis, wolff, mixed };

std::string to_string(Algorithm algorithm);
// Throws std::invalid_argument for unknown names.
Algorithm parse_algorithm(const std::string& name);

struct ChainConfig {
  int size = 8;
  double beta = 0.0;
  std::uint64_t seed = 1;
  std::int64_t n_therm = 5000;
  std::int64_t n_measure = 20000;
  std::int64_t measure_interval = 10;
  Algorithm algorithm = Algorithm::mixed;

  // Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

// Ising spins on the vertices of a torus with the energy E = -sum_links S_u S_v
// cached and kept in sync by every mutation.
class SpinConfiguration {
 public:
  // All spins up, E = -n_links.
  explicit SpinConfiguration(const TorusGeometry& geom);

  const TorusGeometry& geometry() const { return *geom_; }
  std::span<const std::int8_t> spins() const { return spins_; }
  std::int8_t spin(VertexId v) const { return spins_[v]; }
  std::int64_t energy() const { return energy_; }

  // Throws std::invalid_argument on wrong length or a value other than +-1.
  void assign(std::span<const std::int8_t> spins);
  void randomize(Rng& rng);
  void flip(VertexId v);
  void global_flip();

  // Sum of S_v over the links incident to v (each link counted once).
  int local_field(VertexId v) const {
    int h = 0;
    for (VertexId u : geom_->neighbors(v)) h += spins_[u];
    return h;
  }

  std::int64_t recompute_energy() const;

 private:
  const TorusGeometry* geom_;
  std::vector<std::int8_t> spins_;
  std::int64_t energy_;
};

// n_spins single-site Metropolis proposals at uniformly random sites.
void metropolis_sweep(SpinConfiguration& state, double beta, Rng& rng);

// One Wolff cluster flip, bond probability 1 - exp(-2 beta) per link. Returns
// the cluster size.
std::size_t wolff_step(SpinConfiguration& state, double beta, Rng& rng);

// One unit of Monte Carlo time. mixed: a Wolff step plus a Metropolis sweep;
// wolff: `wolff_steps` Wolff steps. Returns the number of cluster-flipped
// sites. The step count must not depend on the current sample, otherwise the
// stationary distribution is biased.
std::size_t compound_sweep(SpinConfiguration& state, double beta, Algorithm algorithm, Rng& rng,
                           std::size_t wolff_steps = 1);

using MeasurementSink = std::function<void(const SpinConfiguration&)>;

// n_therm compound sweeps, then n_measure calls to `sink` separated by
// measure_interval compound sweeps. Exceptions from the sink propagate.
// Wolff-only chains use ceil(n_spins / mean cluster size during
// thermalization) steps per sweep (1 if n_therm = 0). Returns the final state.
SpinConfiguration run_chain(const ChainConfig& config, const TorusGeometry& geom,
                            const MeasurementSink& sink);

}  // namespace tcge
