// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "readi/error.hpp"

namespace readi {

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};
template <class T>
inline constexpr bool is_complex_v = is_complex<T>::value;

template <class T>
struct real_type {
  using type = T;
};
template <class T>
struct real_type<std::complex<T>> {
  using type = T;
};
template <class T>
using real_type_t = typename real_type<T>::type;

enum class DataLayout { multistatic = 0, encoded = 1, grouped = 2, partially_decoded = 3 };

struct multistatic_tag {
  static constexpr DataLayout layout = DataLayout::multistatic;
};
struct encoded_tag {
  static constexpr DataLayout layout = DataLayout::encoded;
};
struct partial_tag {
  static constexpr DataLayout layout = DataLayout::partially_decoded;
};

// Channel data indexed (transmit-or-event, receive, time) with time fastest.
template <class Sample, class Kind>
class ChannelData {
 public:
  using sample_type = Sample;
  using kind = Kind;

  ChannelData() = default;
  ChannelData(std::size_t n_tx, std::size_t n_rx, std::size_t n_samples, double sample_rate, double start_time = 0.0)
      : n_tx_(n_tx), n_rx_(n_rx), n_samples_(n_samples), sample_rate_(sample_rate), start_time_(start_time),
        samples_(n_tx * n_rx * n_samples, Sample{}) {}

  std::size_t n_tx() const noexcept { return n_tx_; }
  std::size_t n_rx() const noexcept { return n_rx_; }
  std::size_t n_samples() const noexcept { return n_samples_; }
  double sample_rate() const noexcept { return sample_rate_; }
  double start_time() const noexcept { return start_time_; }

  std::size_t offset(std::size_t tx, std::size_t rx) const noexcept { return (tx * n_rx_ + rx) * n_samples_; }

  Sample& at(std::size_t tx, std::size_t rx, std::size_t t) noexcept { return samples_[offset(tx, rx) + t]; }
  const Sample& at(std::size_t tx, std::size_t rx, std::size_t t) const noexcept { return samples_[offset(tx, rx) + t]; }

  std::span<Sample> signal(std::size_t tx, std::size_t rx) noexcept { return {samples_.data() + offset(tx, rx), n_samples_}; }
  std::span<const Sample> signal(std::size_t tx, std::size_t rx) const noexcept {
    return {samples_.data() + offset(tx, rx), n_samples_};
  }

  std::vector<Sample>& samples() noexcept { return samples_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }

  bool same_shape(const auto& other) const noexcept {
    return n_tx_ == other.n_tx() && n_rx_ == other.n_rx() && n_samples_ == other.n_samples();
  }

  bool operator==(const ChannelData&) const = default;

 private:
  std::size_t n_tx_ = 0;
  std::size_t n_rx_ = 0;
  std::size_t n_samples_ = 0;
  double sample_rate_ = 0.0;
  double start_time_ = 0.0;
  std::vector<Sample> samples_;
};

template <class Sample>
using MultistaticDataset = ChannelData<Sample, multistatic_tag>;
template <class Sample>
using EncodedDataset = ChannelData<Sample, encoded_tag>;

// Same shape and timing, different sample type or kind; contents zeroed.
template <class Sample, class Kind, class Other>
ChannelData<Sample, Kind> like(const Other& o, std::size_t n_tx) {
  return ChannelData<Sample, Kind>(n_tx, o.n_rx(), o.n_samples(), o.sample_rate(), o.start_time());
}

template <class To, class Sample, class Kind>
ChannelData<To, Kind> cast(const ChannelData<Sample, Kind>& in) {
  auto out = like<To, Kind>(in, in.n_tx());
  auto& dst = out.samples();
  const auto& src = in.samples();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = static_cast<To>(src[k]);
  return out;
}

template <class Sample, class Kind>
double squared_norm(const ChannelData<Sample, Kind>& d) {
  double acc = 0.0;
  for (const auto& s : d.samples()) acc += static_cast<double>(std::norm(s));
  return acc;
}

// ||a - b|| / ||b||.
template <class Sample, class Kind>
double relative_l2(const ChannelData<Sample, Kind>& a, const ChannelData<Sample, Kind>& b) {
  if (!a.same_shape(b)) throw error(errc::dimension_mismatch, "relative_l2 on datasets of different shape");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.samples().size(); ++k) {
    num += static_cast<double>(std::norm(a.samples()[k] - b.samples()[k]));
    den += static_cast<double>(std::norm(b.samples()[k]));
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace readi
