// SPDX-License-Identifier: Apache-2.0

#include "pmf_conv.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace brw::detail {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace {

DensePmf convolve_direct(const DensePmf& a, const DensePmf& b,
                         std::size_t max_len) {
  const std::size_t out_len = std::min(max_len, a.size() + b.size() - 1);
  DensePmf out(out_len, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    const std::size_t jmax = std::min(b.size(), out_len - std::min(out_len, i));
    for (std::size_t j = 0; j < jmax && i + j < out_len; ++j)
      out[i + j] += a[i] * b[j];
  }
  return out;
}

}  // namespace

DensePmf convolve(const DensePmf& a, const DensePmf& b, std::size_t max_len) {
  if (a.empty() || b.empty()) return DensePmf{};
  const double direct_cost =
      static_cast<double>(a.size()) * static_cast<double>(b.size());
  if (direct_cost <= 1.0e7) return convolve_direct(a, b, max_len);

  const std::size_t full = a.size() + b.size() - 1;
  SpectrumMixer mixer(next_pow2(full));
  auto fa = mixer.forward(a);
  const auto fb = mixer.forward(b);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  return mixer.inverse(fa, std::min(max_len, full));
}

SpectrumMixer::SpectrumMixer(std::size_t fft_len) : n_(next_pow2(fft_len)) {
  real_buf_ = fftw_alloc_real(n_);
  cplx_buf_ = fftw_alloc_complex(n_ / 2 + 1);
  if (!real_buf_ || !cplx_buf_) throw std::bad_alloc();
  plan_fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real_buf_,
                                   static_cast<fftw_complex*>(cplx_buf_),
                                   FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_),
                                   static_cast<fftw_complex*>(cplx_buf_),
                                   real_buf_, FFTW_ESTIMATE);
}

SpectrumMixer::~SpectrumMixer() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_buf_);
  fftw_free(cplx_buf_);
}

std::vector<std::complex<double>> SpectrumMixer::forward(const DensePmf& pmf) {
  if (pmf.size() > n_) throw std::invalid_argument("SpectrumMixer: pmf too long");
  std::memcpy(real_buf_, pmf.data(), pmf.size() * sizeof(double));
  std::memset(real_buf_ + pmf.size(), 0, (n_ - pmf.size()) * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  const auto* c = static_cast<const fftw_complex*>(cplx_buf_);
  std::vector<std::complex<double>> out(n_ / 2 + 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {c[i][0], c[i][1]};
  return out;
}

DensePmf SpectrumMixer::inverse(const std::vector<std::complex<double>>& spectrum,
                                std::size_t max_len) {
  if (spectrum.size() != n_ / 2 + 1)
    throw std::invalid_argument("SpectrumMixer: spectrum length mismatch");
  auto* c = static_cast<fftw_complex*>(cplx_buf_);
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    c[i][0] = spectrum[i].real();
    c[i][1] = spectrum[i].imag();
  }
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const std::size_t out_len = std::min(max_len, n_);
  DensePmf out(out_len);
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double v = real_buf_[i] * scale;
    out[i] = (v > 1.0e-18) ? v : 0.0;
  }
  return out;
}

}  // namespace brw::detail
