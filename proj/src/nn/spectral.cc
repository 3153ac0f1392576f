// Copyright 2026  The dfwhisper Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>

#include "dfw/common/error.h"
#include "dfw/nn/ops.h"

namespace dfw::nn {
namespace {

/// FFTW plans for one transform length, executed on private aligned buffers.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n), bins_(n / 2 + 1) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(bins_);
    forward_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, out_, in_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int bins() const { return bins_; }
  double* time() { return in_; }
  std::complex<double>* freq() { return reinterpret_cast<std::complex<double>*>(out_); }
  void forward() { fftw_execute(forward_); }
  void inverse() { fftw_execute(inverse_); }  // unnormalised, Hermitian input

 private:
  int n_, bins_;
  double* in_;
  fftw_complex* out_;
  fftw_plan forward_, inverse_;
};

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

/// One RealFft per (thread, length): FFTW execution on distinct buffers is
/// thread-safe, planning is serialised.
RealFft& fft_for(int n) {
  thread_local std::map<int, std::unique_ptr<RealFft>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::lock_guard<std::mutex> lock(plan_mutex());
    it = cache.emplace(n, std::make_unique<RealFft>(n)).first;
  }
  return *it->second;
}

}  // namespace

Tensor power_spectrum(const Tensor& frames, std::span<const real> window) {
  if (frames.dim() < 1) fail(ErrorKind::kShapeMismatch, "power_spectrum of a scalar");
  const int64_t n = frames.size(frames.dim() - 1);
  if (n < 2 || static_cast<int64_t>(window.size()) != n)
    fail(ErrorKind::kShapeMismatch, "power_spectrum: window length must equal frame length");
  const int64_t rows = frames.numel() / n, bins = n / 2 + 1;
  RealFft& fft = fft_for(static_cast<int>(n));
  Shape shape = frames.shape();
  shape.back() = bins;
  std::vector<real> y(static_cast<size_t>(rows * bins));
  // Complex spectra are kept for the backward pass.
  auto spectra = std::make_shared<std::vector<std::complex<double>>>();
  const bool keep = grad_enabled() && frames.requires_grad();
  if (keep) spectra->resize(static_cast<size_t>(rows * bins));
  const auto xv = frames.data();
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t k = 0; k < n; ++k) fft.time()[k] = xv[r * n + k] * window[k];
    fft.forward();
    for (int64_t b = 0; b < bins; ++b) {
      const auto z = fft.freq()[b];
      y[r * bins + b] = std::norm(z);
      if (keep) (*spectra)[r * bins + b] = z;
    }
  }
  std::vector<real> win(window.begin(), window.end());
  return make_result(
      std::move(shape), std::move(y), {frames}, [rows, n, bins, spectra, win](Node& self) {
        // d|X_k|^2/dx_m = 2 Re(conj(X_k) e^{-2 pi i k m / n}); summed over the
        // half spectrum this is an unnormalised inverse real FFT of g_k X_k with
        // DC and Nyquist doubled relative to the Hermitian convention.
        RealFft& f = fft_for(static_cast<int>(n));
        auto& g = self.inputs[0]->ensure_grad();
        const bool even = n % 2 == 0;
        for (int64_t r = 0; r < rows; ++r) {
          for (int64_t b = 0; b < bins; ++b) {
            std::complex<double> v = self.grad[r * bins + b] * (*spectra)[r * bins + b];
            if (b == 0 || (even && b == bins - 1)) v = {2.0 * v.real(), 0.0};
            f.freq()[b] = v;
          }
          f.inverse();
          for (int64_t k = 0; k < n; ++k) g[r * n + k] += f.time()[k] * win[k];
        }
      });
}

}  // namespace dfw::nn
