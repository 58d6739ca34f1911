// SPDX-License-Identifier: Apache-2.0
//
// Dense pmf convolution used by the exact generation-law tables. Small
// convolutions run directly; large ones go through FFTW. Internal header.

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace brw::detail {

// pmf over {0, 1, 2, ...}: entry i is the probability of value i.
using DensePmf = std::vector<double>;

// Linear convolution of a and b, truncated to at most max_len entries.
// Mass that lands at or beyond max_len is dropped; callers recover it as
// 1 - sum (the inputs carry their own truncated mass the same way).
DensePmf convolve(const DensePmf& a, const DensePmf& b, std::size_t max_len);

// Spectrum-space workspace for mixing convolution powers of several pmfs:
// result_p = sum_k w_k * prod_q input_q^{*k_q} evaluated with a single
// forward transform per input and a single inverse per result.
class SpectrumMixer {
 public:
  // fft_len must be at least the longest linear-convolution result the
  // caller will mix, otherwise the circular wrap-around corrupts low bins.
  explicit SpectrumMixer(std::size_t fft_len);
  ~SpectrumMixer();

  SpectrumMixer(const SpectrumMixer&) = delete;
  SpectrumMixer& operator=(const SpectrumMixer&) = delete;

  std::size_t fft_len() const { return n_; }

  // Forward transform of a zero-padded pmf.
  std::vector<std::complex<double>> forward(const DensePmf& pmf);

  // Inverse transform of an accumulated spectrum, truncated to max_len and
  // with negative rounding noise clamped to zero.
  DensePmf inverse(const std::vector<std::complex<double>>& spectrum,
                   std::size_t max_len);

 private:
  std::size_t n_;
  void* plan_fwd_;
  void* plan_inv_;
  double* real_buf_;
  void* cplx_buf_;
};

std::size_t next_pow2(std::size_t n);

}  // namespace brw::detail
