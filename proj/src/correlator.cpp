#include "tcge/correlator.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace tcge {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

LinkCorrelator::LinkCorrelator(int size)
    : size_(size), spectrum_size_(static_cast<std::size_t>(size) * (size / 2 + 1)) {
  if (size < 2) throw std::invalid_argument("correlator size must be >= 2");
  const std::size_t n = static_cast<std::size_t>(size) * size;
  real_buf_ = fftw_alloc_real(n);
  auto* cbuf = fftw_alloc_complex(spectrum_size_);
  complex_buf_ = cbuf;
  {
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_2d(size, size, real_buf_, cbuf, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_2d(size, size, cbuf, real_buf_, FFTW_ESTIMATE);
  }
  spec_h_.resize(spectrum_size_);
  spec_v_.resize(spectrum_size_);
}

LinkCorrelator::~LinkCorrelator() {
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_));
    fftw_destroy_plan(static_cast<fftw_plan>(backward_));
  }
  fftw_free(real_buf_);
  fftw_free(complex_buf_);
}

void LinkCorrelator::transform(const SpinConfiguration& state) {
  const TorusGeometry& geom = state.geometry();
  if (geom.size() != size_) throw std::invalid_argument("correlator size mismatch");
  const auto n = static_cast<VertexId>(geom.n_spins());
  auto* cbuf = static_cast<fftw_complex*>(complex_buf_);
  for (int o = 0; o < 2; ++o) {
    for (VertexId v = 0; v < n; ++v) {
      const auto [a, b] = geom.endpoints(2 * v + static_cast<LinkId>(o));
      real_buf_[v] = -static_cast<double>(state.spin(a) * state.spin(b));
    }
    fftw_execute(static_cast<fftw_plan>(forward_));
    auto& dst = o == 0 ? spec_h_ : spec_v_;
    for (std::size_t k = 0; k < spectrum_size_; ++k) dst[k] = {cbuf[k][0], cbuf[k][1]};
  }
}

void LinkCorrelator::inverse(std::span<const std::complex<double>> spectrum, std::span<double> out) {
  const std::size_t n = static_cast<std::size_t>(size_) * size_;
  if (spectrum.size() != spectrum_size_ || out.size() != n) {
    throw std::invalid_argument("correlator buffer size mismatch");
  }
  std::memcpy(complex_buf_, spectrum.data(), spectrum_size_ * sizeof(fftw_complex));
  fftw_execute(static_cast<fftw_plan>(backward_));
  std::copy(real_buf_, real_buf_ + n, out.begin());
}

std::vector<double> class_products(const SpinConfiguration& state, const PairClassTable& table,
                                   LinkCorrelator& correlator) {
  const int L = table.size();
  const std::size_t n = static_cast<std::size_t>(L) * L;
  correlator.transform(state);
  const auto h = correlator.horizontal();
  const auto v = correlator.vertical();
  std::vector<std::complex<double>> cross(correlator.spectrum_size());
  std::vector<double> corr(n);
  std::vector<double> out(table.n_classes(), 0.0);
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (PairKind kind : {PairKind::hh, PairKind::hv, PairKind::vv}) {
    for (std::size_t k = 0; k < cross.size(); ++k) {
      switch (kind) {
        case PairKind::hh: cross[k] = std::norm(h[k]); break;
        case PairKind::hv: cross[k] = std::conj(h[k]) * v[k]; break;
        case PairKind::vv: cross[k] = std::norm(v[k]); break;
      }
    }
    correlator.inverse(cross, corr);
    for (std::size_t c = 0; c < table.n_classes(); ++c) {
      const PairClass& pc = table.classes()[c];
      if (pc.kind == kind) out[c] = corr[pc.dx + L * pc.dy] * norm;
    }
  }
  return out;
}

}  // namespace tcge
