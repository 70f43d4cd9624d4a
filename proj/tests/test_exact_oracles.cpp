#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <vector>

#include "tcge/exact_oracles.hpp"

using namespace tcge;

namespace {

// Plain enumeration over all 2^(L^2) configurations, no symmetry shortcuts.
struct Brute {
  double log_z = 0.0;  // log of (1/2) sum_C exp(beta sum SS)
  double e = 0.0;
  double var = 0.0;  // Var(E), two-pass
  std::vector<double> corr;  // <E_a E_b>
};

Brute brute_force(int L, double beta) {
  const TorusGeometry g(L);
  const std::size_t n = g.n_links();
  const std::size_t ns = g.n_spins();
  std::vector<double> weight(std::size_t{1} << ns);
  std::vector<int> energy(weight.size());
  double ref = beta * static_cast<double>(n);
  double z = 0.0;
  for (std::size_t c = 0; c < weight.size(); ++c) {
    int bond_sum = 0;
    for (LinkId l = 0; l < n; ++l) {
      const auto [a, b] = g.endpoints(l);
      const int sa = (c >> a) & 1 ? -1 : 1;
      const int sb = (c >> b) & 1 ? -1 : 1;
      bond_sum += sa * sb;
    }
    energy[c] = -bond_sum;
    weight[c] = std::exp(beta * bond_sum - ref);
    z += weight[c];
  }
  Brute out;
  out.log_z = std::log(0.5 * z) + ref;
  out.corr.assign(n * n, 0.0);
  for (std::size_t c = 0; c < weight.size(); ++c) {
    const double p = weight[c] / z;
    const double epl = static_cast<double>(energy[c]) / static_cast<double>(n);
    out.e += p * epl;
    std::vector<int> le(n);
    for (LinkId l = 0; l < n; ++l) {
      const auto [a, b] = g.endpoints(l);
      le[l] = (((c >> a) ^ (c >> b)) & 1) ? 1 : -1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) out.corr[i * n + j] += p * le[i] * le[j];
    }
  }
  for (std::size_t c = 0; c < weight.size(); ++c) {
    const double d = static_cast<double>(energy[c]) - out.e * static_cast<double>(n);
    out.var += weight[c] / z * d * d;
  }
  return out;
}

// Star-product link pattern written out directly: link flipped iff exactly
// one endpoint is in the mask.
std::uint64_t star_pattern(const TorusGeometry& g, std::uint32_t mask) {
  std::uint64_t pattern = 0;
  for (LinkId l = 0; l < g.n_links(); ++l) {
    const auto [a, b] = g.endpoints(l);
    if (((mask >> a) ^ (mask >> b)) & 1) pattern |= std::uint64_t{1} << l;
  }
  return pattern;
}

}  // namespace

TEST_CASE("enumeration matches brute force for energy, fluctuations and correlations") {
  for (int L : {2, 3, 4}) {
    for (double beta : {0.0, 0.2, 0.44, 0.8}) {
      CAPTURE(L);
      CAPTURE(beta);
      const Brute bf = brute_force(L, beta);
      const auto ex = exact_ising(L, beta);
      const double n = 2.0 * L * L;
      CHECK(ex.log_z == doctest::Approx(bf.log_z).epsilon(1e-12));
      CHECK(ex.e == doctest::Approx(bf.e).epsilon(1e-12).scale(1.0));
      CHECK(ex.mean_energy == doctest::Approx(bf.e * n).epsilon(1e-12).scale(1.0));
      CHECK(ex.var_energy == doctest::Approx(bf.var).epsilon(1e-10).scale(1.0));
      CHECK(ex.ge == doctest::Approx(1.0 - bf.e * bf.e).epsilon(1e-12));

      const auto pc = exact_pair_correlations(L, beta);
      REQUIRE(pc.size() == bf.corr.size());
      double max_diff = 0.0;
      for (std::size_t i = 0; i < pc.size(); ++i) max_diff = std::max(max_diff, std::abs(pc[i] - bf.corr[i]));
      CHECK(max_diff < 1e-12);

      // GE-tilde straight from the pair matrix.
      const std::size_t nl = static_cast<std::size_t>(n);
      double sq = 0.0;
      for (std::size_t i = 0; i < nl; ++i) {
        for (std::size_t j = i + 1; j < nl; ++j) sq += bf.corr[i * nl + j] * bf.corr[i * nl + j];
      }
      const double get = 1.0 - (2.0 / 3.0) * bf.e * bf.e - 2.0 * sq / (3.0 * n * (n - 1.0));
      CHECK(ex.ge_tilde == doctest::Approx(get).epsilon(1e-12));
      CHECK(ex.q == doctest::Approx(get - (1.0 - bf.e * bf.e)).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("pair correlations are constant on each translation class") {
  for (int L : {3, 4}) {
    const TorusGeometry g(L);
    const PairClassTable table(g);
    const auto pc = exact_pair_correlations(L, 0.44);
    const auto ex = exact_ising(L, 0.44);
    const std::size_t n = g.n_links();
    for (LinkId a = 0; a < n; ++a) {
      for (LinkId b = a + 1; b < n; ++b) {
        const int c = table.class_of(g, a, b);
        CHECK(pc[a * n + b] == doctest::Approx(ex.class_correlations[c]).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("high- and low-temperature limits") {
  const auto hot = exact_ising(4, 0.0);
  CHECK(hot.e == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(hot.ge == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(hot.ge_tilde == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(hot.q) < 1e-14);
  const auto cold = exact_ising(4, 10.0);
  CHECK(cold.e == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(cold.ge < 1e-12);
  CHECK(cold.ge_tilde < 1e-12);
}

TEST_CASE("link-pair probabilities are consistent") {
  const auto ex = exact_ising(4, 0.44);
  CHECK(ex.single_link.p_s + ex.single_link.p_o == doctest::Approx(1.0));
  CHECK(ex.single_link.p_o - ex.single_link.p_s == doctest::Approx(ex.e));
  for (const auto& p : ex.probabilities) {
    CHECK(p.p_ss + p.p_so + p.p_os + p.p_oo == doctest::Approx(1.0));
    CHECK(p.p_ss + p.p_so == doctest::Approx(ex.single_link.p_s));
    CHECK(p.p_ss + p.p_os == doctest::Approx(ex.single_link.p_s));
    for (double v : {p.p_ss, p.p_so, p.p_os, p.p_oo}) CHECK(v >= 0.0);
    CHECK_FALSE(p.clamped);
  }
}

TEST_CASE("configuration probabilities are Boltzmann weights") {
  const TorusGeometry g(3);
  const double beta = 0.3;
  const auto probs = exact_configuration_probabilities(3, beta);
  REQUIRE(probs.size() == 512);
  double total = 0.0;
  for (double p : probs) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  // Ratio of two configurations is exp(beta * difference of bond sums).
  auto bonds = [&](std::uint32_t c) {
    int s = 0;
    for (LinkId l = 0; l < g.n_links(); ++l) {
      const auto [a, b] = g.endpoints(l);
      s += (((c >> a) ^ (c >> b)) & 1) ? -1 : 1;
    }
    return s;
  };
  for (std::uint32_t c : {1u, 7u, 100u, 300u, 511u}) {
    CHECK(probs[c] / probs[0] == doctest::Approx(std::exp(beta * (bonds(c) - bonds(0)))).epsilon(1e-12));
  }
  CHECK(probs[511] == doctest::Approx(probs[0]).epsilon(1e-14));
}

TEST_CASE("loop group has 2^(L^2-1) distinct canonical elements") {
  for (int L : {2, 3}) {
    const TorusGeometry g(L);
    const auto group = enumerate_loop_group(L);
    const std::size_t expected = std::size_t{1} << (L * L - 1);
    REQUIRE(group.size() == expected);
    std::vector<std::uint64_t> patterns;
    for (const auto& el : group) {
      CHECK((el.mask & 1u) == 1u);
      CHECK(el.link_pattern(g) == star_pattern(g, el.mask));
      patterns.push_back(el.link_pattern(g));
    }
    std::sort(patterns.begin(), patterns.end());
    CHECK(std::adjacent_find(patterns.begin(), patterns.end()) == patterns.end());
  }
  const std::uint32_t full = (1u << 9) - 1;
  CHECK(canonical_element(0b110u, 9).mask == (full & ~0b110u));
  CHECK(canonical_element(0b111u, 9).mask == 0b111u);
}

TEST_CASE("ground state amplitudes, normalization and loop closure") {
  for (double beta : {0.0, 0.3, 0.8}) {
    const TorusGeometry g(2);
    const auto gs = build_ground_state(2, beta);
    const std::size_t n = g.n_links();
    // Independent amplitudes from star products.
    std::vector<std::pair<std::uint64_t, double>> ref;
    double z = 0.0;
    for (std::uint32_t mask = 0; mask < 16; ++mask) {
      if (!(mask & 1u)) continue;
      const std::uint64_t pat = star_pattern(g, mask);
      const double sz = static_cast<double>(n) - 2.0 * std::popcount(pat);
      ref.emplace_back(pat, std::exp(0.5 * beta * sz));
      z += std::exp(beta * sz);
    }
    CHECK(gs.log_z == doctest::Approx(std::log(z)).epsilon(1e-13));
    CHECK(gs.log_z == doctest::Approx(exact_ising(2, beta).log_z).epsilon(1e-13));
    CHECK(gs.norm_squared() == doctest::Approx(1.0).epsilon(1e-14));
    for (const auto& [pat, w] : ref) CHECK(gs.amplitude_of(pat) == doctest::Approx(w / std::sqrt(z)).epsilon(1e-13));
    const auto dense = gs.dense();
    double nz = 0.0;
    for (double a : dense) nz += a * a;
    CHECK(nz == doctest::Approx(1.0).epsilon(1e-14));
  }
  // Every basis state is a closed dual loop: even parity around each plaquette.
  const TorusGeometry g3(3);
  const auto gs3 = build_ground_state(3, 0.4, true);
  CHECK(gs3.basis.size() == 256);
  for (std::uint64_t s : gs3.basis) {
    for (int y = 0; y < 3; ++y) {
      for (int x = 0; x < 3; ++x) {
        const LinkId ls[4] = {g3.link(x, y, Orientation::horizontal), g3.link(x, (y + 1) % 3, Orientation::horizontal),
                              g3.link(x, y, Orientation::vertical), g3.link((x + 1) % 3, y, Orientation::vertical)};
        int parity = 0;
        for (LinkId l : ls) parity ^= static_cast<int>((s >> l) & 1);
        CHECK(parity == 0);
      }
    }
  }
  CHECK_THROWS(build_ground_state(3, 0.4));
}

TEST_CASE("reduced density matrices are diagonal and reproduce the classical probabilities") {
  const double beta = 0.441;
  const auto gs = build_ground_state(2, beta);
  const auto ex = exact_ising(2, beta);
  const TorusGeometry g(2);
  const PairClassTable table(g);
  for (LinkId a = 0; a < 8; ++a) {
    const LinkId one[1] = {a};
    const auto rho = reduced_density_matrix(gs, one);
    CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rho.max_off_diagonal() <= 1e-14);
    // |0> = sigma^z +1 = aligned spins.
    CHECK(rho.at(0, 0) == doctest::Approx(ex.single_link.p_s).epsilon(1e-12));
    for (LinkId b = a + 1; b < 8; ++b) {
      const LinkId two[2] = {a, b};
      const auto r2 = reduced_density_matrix(gs, two);
      CHECK(r2.max_off_diagonal() <= 1e-14);
      const auto& p = ex.probabilities[table.class_of(g, a, b)];
      CHECK(r2.at(0, 0) == doctest::Approx(p.p_ss).epsilon(1e-12));
      CHECK(r2.at(3, 3) == doctest::Approx(p.p_oo).epsilon(1e-12));
    }
  }
  const LinkId dup[2] = {1, 1};
  CHECK_THROWS_AS(reduced_density_matrix(gs, dup), std::invalid_argument);
  const LinkId out_of_range[1] = {8};
  CHECK_THROWS_AS(reduced_density_matrix(gs, out_of_range), std::invalid_argument);
}

TEST_CASE("quantum entanglement equals the classical closed forms") {
  for (double beta : {0.0, 0.2, 0.441, 0.8, 2.0}) {
    const auto q = entanglement_from_state(build_ground_state(2, beta));
    const auto c = exact_ising(2, beta);
    CHECK(std::abs(q.ge - c.ge) <= 1e-12);
    CHECK(std::abs(q.ge_tilde - c.ge_tilde) <= 1e-12);
    CHECK(q.max_off_diagonal <= 1e-14);
  }
  const auto q3 = entanglement_from_state(build_ground_state(3, 0.5, true));
  const auto c3 = exact_ising(3, 0.5);
  CHECK(std::abs(q3.ge - c3.ge) <= 1e-12);
  CHECK(std::abs(q3.ge_tilde - c3.ge_tilde) <= 1e-12);
}
