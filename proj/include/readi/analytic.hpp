// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "readi/dataset.hpp"
#include "readi/parallel.hpp"

namespace readi {

namespace detail {

template <class T>
class AnalyticTransform {
 public:
  void apply(std::span<const T> in, std::span<std::complex<T>> out) {
    const std::size_t n = in.size();
    real_.assign(in.begin(), in.end());
    fft_.fwd(spectrum_, real_);
    // Keep DC (and Nyquist for even n); double the positive bins; zero the rest.
    const std::size_t half = n / 2;
    for (std::size_t k = 1; k < n; ++k) {
      if (k < half || (k == half && n % 2 == 1))
        spectrum_[k] *= T(2);
      else if (k > half)
        spectrum_[k] = {};
    }
    fft_.inv(time_, spectrum_);
    for (std::size_t k = 0; k < n; ++k) out[k] = time_[k];
  }

 private:
  Eigen::FFT<T> fft_;
  std::vector<T> real_;
  std::vector<std::complex<T>> spectrum_, time_;
};

}  // namespace detail

// Analytic signal by FFT: zero negative frequencies, double positive ones.
template <class T>
std::vector<std::complex<T>> analytic_signal(std::span<const T> x) {
  std::vector<std::complex<T>> out(x.size());
  if (x.size() < 2) {
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k];
    return out;
  }
  detail::AnalyticTransform<T> tr;
  tr.apply(x, out);
  return out;
}

template <class T, class Kind>
ChannelData<std::complex<T>, Kind> analytic_signal(const ChannelData<T, Kind>& in, int threads = 1) {
  auto out = like<std::complex<T>, Kind>(in, in.n_tx());
  const std::size_t channels = in.n_tx() * in.n_rx();
  const std::size_t n = in.n_samples();
  if (n < 2) {
    for (std::size_t k = 0; k < in.samples().size(); ++k) out.samples()[k] = in.samples()[k];
    return out;
  }
  const auto workers = static_cast<std::size_t>(resolve_threads(threads));
  parallel_for(0, workers, threads, [&](std::size_t w) {
    detail::AnalyticTransform<T> tr;
    for (std::size_t c = channels * w / workers; c < channels * (w + 1) / workers; ++c)
      tr.apply(std::span<const T>(in.samples().data() + c * n, n), std::span<std::complex<T>>(out.samples().data() + c * n, n));
  });
  return out;
}

}  // namespace readi
