#include "tcge/mc_engine.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace tcge {

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::metropolis: return "metropolis";
    case Algorithm::wolff: return "wolff";
    case Algorithm::mixed: return "mixed";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "metropolis") return Algorithm::metropolis;
  if (name == "wolff") return Algorithm::wolff;
  if (name == "mixed") return Algorithm::mixed;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

void ChainConfig::validate() const {
  if (size < 2) throw std::invalid_argument("chain size must be >= 2");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and >= 0");
  if (n_therm < 0) throw std::invalid_argument("n_therm must be >= 0");
  if (n_measure < 1) throw std::invalid_argument("n_measure must be >= 1");
  if (measure_interval < 1) throw std::invalid_argument("measure_interval must be >= 1");
}

SpinConfiguration::SpinConfiguration(const TorusGeometry& geom)
    : geom_(&geom),
      spins_(geom.n_spins(), 1),
      energy_(-static_cast<std::int64_t>(geom.n_links())) {}

void SpinConfiguration::assign(std::span<const std::int8_t> spins) {
  if (spins.size() != spins_.size()) throw std::invalid_argument("spin vector has wrong length");
  for (std::int8_t s : spins) {
    if (s != 1 && s != -1) throw std::invalid_argument("spins must be +1 or -1");
  }
  spins_.assign(spins.begin(), spins.end());
  energy_ = recompute_energy();
}

void SpinConfiguration::randomize(Rng& rng) {
  for (auto& s : spins_) s = (rng() >> 63) ? 1 : -1;
  energy_ = recompute_energy();
}

void SpinConfiguration::flip(VertexId v) {
  energy_ += 2 * spins_[v] * local_field(v);
  spins_[v] = static_cast<std::int8_t>(-spins_[v]);
}

void SpinConfiguration::global_flip() {
  for (auto& s : spins_) s = static_cast<std::int8_t>(-s);
}

std::int64_t SpinConfiguration::recompute_energy() const {
  std::int64_t e = 0;
  const auto n = static_cast<LinkId>(geom_->n_links());
  for (LinkId l = 0; l < n; ++l) {
    const auto [u, v] = geom_->endpoints(l);
    e -= spins_[u] * spins_[v];
  }
  return e;
}

void metropolis_sweep(SpinConfiguration& state, double beta, Rng& rng) {
  // Flip cost dE = 2 s h with h in {-4..4}; only dE = 4, 8 can be rejected.
  const std::array<double, 3> accept = {1.0, std::exp(-4.0 * beta), std::exp(-8.0 * beta)};
  const std::size_t n = state.geometry().n_spins();
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<VertexId>(rng.below(n));
    const int delta = 2 * state.spin(v) * state.local_field(v);
    if (delta <= 0 || rng.uniform() < accept[delta / 4]) state.flip(v);
  }
}

std::size_t wolff_step(SpinConfiguration& state, double beta, Rng& rng) {
  const TorusGeometry& geom = state.geometry();
  const double p_add = -std::expm1(-2.0 * beta);
  const auto seed = static_cast<VertexId>(rng.below(geom.n_spins()));
  const std::int8_t cluster_spin = state.spin(seed);

  // Sites are flipped as they join, so "still aligned with cluster_spin"
  // means "not yet in the cluster". Each link gets its own bond trial.
  std::vector<VertexId> stack;
  stack.reserve(64);
  stack.push_back(seed);
  state.flip(seed);
  std::size_t size = 1;
  while (!stack.empty()) {
    const VertexId v = stack.back();
    stack.pop_back();
    for (VertexId u : geom.neighbors(v)) {
      if (state.spin(u) == cluster_spin && rng.uniform() < p_add) {
        state.flip(u);
        stack.push_back(u);
        ++size;
      }
    }
  }
  return size;
}

std::size_t compound_sweep(SpinConfiguration& state, double beta, Algorithm algorithm, Rng& rng,
                           std::size_t wolff_steps) {
  std::size_t flipped = 0;
  switch (algorithm) {
    case Algorithm::metropolis:
      metropolis_sweep(state, beta, rng);
      break;
    case Algorithm::wolff:
      for (std::size_t i = 0; i < wolff_steps; ++i) flipped += wolff_step(state, beta, rng);
      break;
    case Algorithm::mixed:
      flipped = wolff_step(state, beta, rng);
      metropolis_sweep(state, beta, rng);
      break;
  }
  return flipped;
}

SpinConfiguration run_chain(const ChainConfig& config, const TorusGeometry& geom,
                            const MeasurementSink& sink) {
  config.validate();
  if (geom.size() != config.size) throw std::invalid_argument("geometry size does not match chain config");
  Rng rng(config.seed);
  SpinConfiguration state(geom);
  state.randomize(rng);

  // Wolff thermalization sweeps run until n_spins sites have flipped.
  const std::size_t n = geom.n_spins();
  std::size_t wolff_steps = 1;
  std::size_t therm_steps = 0, therm_flipped = 0;
  for (std::int64_t i = 0; i < config.n_therm; ++i) {
    if (config.algorithm == Algorithm::wolff) {
      std::size_t flipped = 0;
      while (flipped < n) {
        flipped += wolff_step(state, config.beta, rng);
        ++therm_steps;
      }
      therm_flipped += flipped;
    } else {
      compound_sweep(state, config.beta, config.algorithm, rng);
    }
  }
  if (therm_steps > 0) {
    const double mean_cluster = static_cast<double>(therm_flipped) / static_cast<double>(therm_steps);
    wolff_steps = static_cast<std::size_t>(std::ceil(static_cast<double>(n) / mean_cluster));
  }

  for (std::int64_t m = 0; m < config.n_measure; ++m) {
    for (std::int64_t i = 0; i < config.measure_interval; ++i) {
      compound_sweep(state, config.beta, config.algorithm, rng, wolff_steps);
    }
    sink(state);
  }
  return state;
}

}  // namespace tcge
