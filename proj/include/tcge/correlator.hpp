#pragma once

#include <complex>
#include <span>
#include <vector>

#include "tcge/mc_engine.hpp"
#include "tcge/torus_lattice.hpp"

namespace tcge {

// FFT workspace for translation-summed link-energy products. The horizontal
// and vertical link-energy fields h(x), v(x) of one configuration are
// transformed; C_ab(d) = sum_x a(x) b(x + d) is recovered from
// conj(A(k)) B(k) by inverse().
class LinkCorrelator {
 public:
  explicit LinkCorrelator(int size);
  ~LinkCorrelator();
  LinkCorrelator(const LinkCorrelator&) = delete;
  LinkCorrelator& operator=(const LinkCorrelator&) = delete;

  int size() const { return size_; }
  // Number of complex half-spectrum coefficients, L * (L/2 + 1).
  std::size_t spectrum_size() const { return spectrum_size_; }

  // Fills the link-energy fields E = -S_u S_v of `state` and transforms them.
  void transform(const SpinConfiguration& state);
  std::span<const std::complex<double>> horizontal() const { return spec_h_; }
  std::span<const std::complex<double>> vertical() const { return spec_v_; }

  // Unnormalized inverse transform of a Hermitian half spectrum into L*L reals.
  void inverse(std::span<const std::complex<double>> spectrum, std::span<double> out);

 private:
  int size_;
  std::size_t spectrum_size_;
  double* real_buf_;
  void* complex_buf_;
  void* forward_;
  void* backward_;
  std::vector<std::complex<double>> spec_h_;
  std::vector<std::complex<double>> spec_v_;
};

// Per-class translation average of E_i E_j over the class members for one
// configuration, indexed like table.classes().
std::vector<double> class_products(const SpinConfiguration& state, const PairClassTable& table,
                                   LinkCorrelator& correlator);

}  // namespace tcge
