// SPDX-License-Identifier: Apache-2.0
#pragma once

// Analytic point-scatterer forward model. Elements are isotropic points on
// the lateral axis (z = 0); receive elements coincide with transmit elements.
// Each transmit event sees the scene frozen at that event's time.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "readi/dataset.hpp"
#include "readi/error.hpp"
#include "readi/hadamard.hpp"
#include "readi/parallel.hpp"

namespace readi {

struct Vec2 {
  double x = 0.0;  // lateral, m
  double z = 0.0;  // axial, m

  bool operator==(const Vec2&) const = default;
};

struct ArrayGeometry {
  int n_elements = 1;
  double pitch = 0.0;

  double element_x(int n) const noexcept { return (n - 0.5 * (n_elements - 1)) * pitch; }

  std::vector<double> element_positions() const {
    std::vector<double> x(static_cast<std::size_t>(n_elements));
    for (int n = 0; n < n_elements; ++n) x[static_cast<std::size_t>(n)] = element_x(n);
    return x;
  }

  void validate() const {
    if (n_elements < 1) throw error(errc::invalid_argument, "geometry.n_elements must be >= 1");
    if (!(pitch > 0.0)) throw error(errc::invalid_argument, "geometry.pitch must be > 0");
  }
};

enum class Envelope { rectangular, hann };

struct PulseDefinition {
  double center_frequency = 4.3e6;
  double cycles = 2.0;
  Envelope envelope = Envelope::rectangular;
  double sample_rate = 8.0 * 4.3e6;

  double duration() const noexcept { return cycles / center_frequency; }

  void validate() const {
    if (!(center_frequency > 0.0)) throw error(errc::invalid_argument, "pulse.center_frequency must be > 0");
    if (cycles < 0.0) throw error(errc::invalid_argument, "pulse.cycles must be >= 0");
    if (sample_rate < 4.0 * center_frequency)
      throw error(errc::undersampled, "pulse.sample_rate must be at least 4x center_frequency");
  }
};

struct Scatterer {
  Vec2 position;
  Vec2 velocity;
  double reflectivity = 1.0;
};

struct ScattererScene {
  std::vector<Scatterer> scatterers;
  double speed_of_sound = 1540.0;
  double prf = 1000.0;
  std::optional<double> noise_snr_db;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (!(speed_of_sound > 0.0)) throw error(errc::invalid_scene, "scene.speed_of_sound must be > 0");
    if (!(prf > 0.0)) throw error(errc::invalid_scene, "scene.prf must be > 0");
  }
};

// position_k + velocity_k * (event_index - 1) / prf
inline std::vector<Vec2> scene_at_event(const ScattererScene& scene, long event_index) {
  if (event_index < 1) throw error(errc::out_of_range, "event_index is 1-based");
  const double t = static_cast<double>(event_index - 1) / scene.prf;
  std::vector<Vec2> pos;
  pos.reserve(scene.scatterers.size());
  for (const auto& s : scene.scatterers) pos.push_back({s.position.x + s.velocity.x * t, s.position.z + s.velocity.z * t});
  return pos;
}

// Pulse as a sum of sinusoids, p(t) = sum_m coef_m sin(omega_m t) on [0, duration).
struct PulseModel {
  struct Component {
    double coef;
    double omega;
  };
  std::vector<Component> components;
  double duration = 0.0;

  explicit PulseModel(const PulseDefinition& p) : duration(p.duration()) {
    const double w = 2.0 * std::numbers::pi * p.center_frequency;
    if (p.envelope == Envelope::rectangular || p.cycles == 0.0) {
      components = {{1.0, w}};
    } else {
      // sin(wt) (1 - cos(Wt)) / 2 with W = 2 pi / duration
      const double big_w = 2.0 * std::numbers::pi / duration;
      components = {{0.5, w}, {-0.25, w + big_w}, {-0.25, w - big_w}};
    }
  }

  double operator()(double t) const {
    if (t < 0.0 || t >= duration) return 0.0;
    double v = 0.0;
    for (const auto& c : components) v += c.coef * std::sin(c.omega * t);
    return v;
  }
};

inline std::vector<double> pulse_waveform(const PulseDefinition& p) {
  p.validate();
  const PulseModel model(p);
  const auto n = static_cast<std::size_t>(std::llround(std::floor(p.duration() * p.sample_rate + 1e-9)));
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = model(static_cast<double>(k) / p.sample_rate);
  return w;
}

struct AcquisitionWindow {
  double start_time = 0.0;
  std::size_t n_samples = 0;
};

// Smallest length >= n whose only prime factors are 2, 3 and 5.
inline std::size_t fft_friendly_length(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (std::size_t f : {2u, 3u, 5u})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

// Window covering every echo of the scene over events [first_event, last_event].
inline AcquisitionWindow auto_window(const ScattererScene& scene, const ArrayGeometry& geo, const PulseDefinition& pulse,
                                     long first_event, long last_event, double margin = 2.0e-6) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  const auto xs = geo.element_positions();
  for (long e : {first_event, last_event}) {
    const auto pos = scene_at_event(scene, e);
    for (const auto& p : pos) {
      double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
      for (double x : xs) {
        const double d = std::hypot(p.x - x, p.z);
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
      }
      lo = std::min(lo, 2.0 * dmin / scene.speed_of_sound);
      hi = std::max(hi, 2.0 * dmax / scene.speed_of_sound);
    }
  }
  if (!std::isfinite(lo)) return {0.0, fft_friendly_length(64)};
  const double start = std::max(0.0, std::floor((lo - margin) * pulse.sample_rate) / pulse.sample_rate);
  const double stop = hi + pulse.duration() + margin;
  const auto n = static_cast<std::size_t>(std::ceil((stop - start) * pulse.sample_rate)) + 1;
  return {start, fft_friendly_length(n)};
}

namespace detail {

// Per-event echo synthesis. For each sample n and pulse component m the
// phase factor e^{i w_m (t_n - tau)} is assembled from e^{i w_m t_n} and the
// one-way factors e^{-i w_m d/c} of the transmit and receive legs.
class EchoSynth {
 public:
  EchoSynth(const ArrayGeometry& geo, const PulseDefinition& pulse, const AcquisitionWindow& win, double c)
      : model_(pulse), fs_(pulse.sample_rate), t0_(win.start_time), n_(win.n_samples), c_(c), xs_(geo.element_positions()) {
    time_phasor_.resize(model_.components.size());
    for (std::size_t m = 0; m < model_.components.size(); ++m) {
      auto& tab = time_phasor_[m];
      tab.resize(n_);
      for (std::size_t k = 0; k < n_; ++k) {
        const double t = t0_ + static_cast<double>(k) / fs_;
        tab[k] = std::polar(1.0, model_.components[m].omega * t);
      }
    }
  }

  // Leg delays and phase factors for one scene state.
  void set_state(std::span<const Vec2> pos, std::span<const Scatterer> scat) {
    const std::size_t ne = xs_.size(), nk = pos.size(), nm = model_.components.size();
    delay_.assign(ne * nk, 0.0);
    leg_phasor_.assign(nm * ne * nk, {});
    amp_.resize(nk);
    for (std::size_t k = 0; k < nk; ++k) {
      if (!(pos[k].z > 0.0)) throw error(errc::invalid_scene, "scatterer " + std::to_string(k) + " is not in front of the array");
      amp_[k] = scat[k].reflectivity;
    }
    for (std::size_t e = 0; e < ne; ++e)
      for (std::size_t k = 0; k < nk; ++k) {
        const double tau = std::hypot(pos[k].x - xs_[e], pos[k].z) / c_;
        delay_[e * nk + k] = tau;
        for (std::size_t m = 0; m < nm; ++m) leg_phasor_[(m * ne + e) * nk + k] = std::polar(1.0, -model_.components[m].omega * tau);
      }
    nk_ = nk;
  }

  // out += weight * sum_k rho_k p(t - tau_{tx,k} - tau_{rx,k})
  void add_echoes(std::span<double> out, std::size_t tx, std::size_t rx, double weight) const {
    const std::size_t ne = xs_.size();
    for (std::size_t k = 0; k < nk_; ++k) {
      const double tau = delay_[tx * nk_ + k] + delay_[rx * nk_ + k];
      const double a = weight * amp_[k];
      if (a == 0.0) continue;
      const double first = std::ceil((tau - t0_) * fs_);
      const double last = std::ceil((tau + model_.duration - t0_) * fs_);  // exclusive
      const long n0 = std::max<long>(0, static_cast<long>(first));
      const long n1 = std::min<long>(static_cast<long>(n_), static_cast<long>(last));
      for (std::size_t m = 0; m < model_.components.size(); ++m) {
        const std::complex<double> leg =
            leg_phasor_[(m * ne + tx) * nk_ + k] * leg_phasor_[(m * ne + rx) * nk_ + k] * (a * model_.components[m].coef);
        const auto& tab = time_phasor_[m];
        for (long n = n0; n < n1; ++n) {
          const double t = t0_ + static_cast<double>(n) / fs_ - tau;
          if (t < 0.0 || t >= model_.duration) continue;
          out[static_cast<std::size_t>(n)] += tab[static_cast<std::size_t>(n)].real() * leg.imag() +
                                              tab[static_cast<std::size_t>(n)].imag() * leg.real();
        }
      }
    }
  }

  std::size_t n_elements() const noexcept { return xs_.size(); }

 private:
  PulseModel model_;
  double fs_, t0_;
  std::size_t n_;
  double c_;
  std::vector<double> xs_;
  std::vector<std::vector<std::complex<double>>> time_phasor_;
  std::vector<double> delay_;
  std::vector<std::complex<double>> leg_phasor_;
  std::vector<double> amp_;
  std::size_t nk_ = 0;
};

inline std::uint64_t channel_seed(std::uint64_t seed, std::size_t tx, std::size_t rx) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(tx),
                    static_cast<std::uint32_t>(rx), 0x5eed5u};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace detail

// Root-mean-square sample value.
template <class Sample, class Kind>
double rms(const ChannelData<Sample, Kind>& d) {
  if (d.samples().empty()) return 0.0;
  return std::sqrt(squared_norm(d) / static_cast<double>(d.samples().size()));
}

// Additive white Gaussian noise with an independent stream per channel.
template <class Kind>
void add_noise(ChannelData<double, Kind>& d, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return;
  for (std::size_t tx = 0; tx < d.n_tx(); ++tx)
    for (std::size_t rx = 0; rx < d.n_rx(); ++rx) {
      std::mt19937_64 rng(detail::channel_seed(seed, tx, rx));
      std::normal_distribution<double> gauss(0.0, sigma);
      for (auto& s : d.signal(tx, rx)) s += gauss(rng);
    }
}

inline double noise_sigma_for_snr(double signal_rms, double snr_db) { return signal_rms / std::pow(10.0, snr_db / 20.0); }

// Transmit weights, one row of n_elements entries per event.
struct TransmitPattern {
  int n_events = 0;
  int n_elements = 0;
  std::vector<int> weights;

  int operator()(int event, int element) const { return weights[static_cast<std::size_t>(event) * n_elements + element]; }

  static TransmitPattern from_hadamard(const HadamardMatrix& h) {
    TransmitPattern p{h.rank(), h.rank(), std::vector<int>(h.entries().begin(), h.entries().end())};
    return p;
  }
};

// Generic encoded acquisition: g_e(t) = sum_i w_{e,i} [element-i response, scene at event first_event + e].
inline EncodedDataset<double> simulate_encoded(const ScattererScene& scene, const ArrayGeometry& geo, const PulseDefinition& pulse,
                                               const TransmitPattern& pattern, const AcquisitionWindow& win,
                                               long first_event = 1, int threads = 1) {
  scene.validate();
  geo.validate();
  pulse.validate();
  if (pattern.n_elements != geo.n_elements)
    throw error(errc::dimension_mismatch, "transmit pattern has " + std::to_string(pattern.n_elements) +
                                              " element columns, geometry has " + std::to_string(geo.n_elements));
  const auto ne = static_cast<std::size_t>(geo.n_elements);
  EncodedDataset<double> out(static_cast<std::size_t>(pattern.n_events), ne, win.n_samples, pulse.sample_rate, win.start_time);
  const bool moving = std::any_of(scene.scatterers.begin(), scene.scatterers.end(),
                                  [](const Scatterer& s) { return s.velocity.x != 0.0 || s.velocity.z != 0.0; });

  auto run_event = [&](detail::EchoSynth& synth, std::size_t e) {
    for (std::size_t rx = 0; rx < ne; ++rx) {
      auto sig = out.signal(e, rx);
      for (std::size_t tx = 0; tx < ne; ++tx) {
        const int w = pattern(static_cast<int>(e), static_cast<int>(tx));
        if (w != 0) synth.add_echoes(sig, tx, rx, static_cast<double>(w));
      }
    }
  };

  if (!moving) {
    // frozen scene: every event is a weighted sum of the same multistatic set
    detail::EchoSynth synth(geo, pulse, win, scene.speed_of_sound);
    const auto pos = scene_at_event(scene, first_event);
    synth.set_state(pos, scene.scatterers);
    MultistaticDataset<double> ms(ne, ne, win.n_samples, pulse.sample_rate, win.start_time);
    parallel_for(0, ne, threads, [&](std::size_t tx) {
      for (std::size_t rx = 0; rx < ne; ++rx) synth.add_echoes(ms.signal(tx, rx), tx, rx, 1.0);
    });
    parallel_for(0, out.n_tx(), threads, [&](std::size_t e) {
      for (std::size_t tx = 0; tx < ne; ++tx) {
        const int w = pattern(static_cast<int>(e), static_cast<int>(tx));
        if (w == 0) continue;
        const double wd = static_cast<double>(w);
        for (std::size_t rx = 0; rx < ne; ++rx) {
          auto dst = out.signal(e, rx);
          const auto src = ms.signal(tx, rx);
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += wd * src[k];
        }
      }
    });
  } else {
    parallel_for(0, out.n_tx(), threads, [&](std::size_t e) {
      detail::EchoSynth synth(geo, pulse, win, scene.speed_of_sound);
      const auto pos = scene_at_event(scene, first_event + static_cast<long>(e));
      synth.set_state(pos, scene.scatterers);
      run_event(synth, e);
    });
  }
  if (scene.noise_snr_db) add_noise(out, noise_sigma_for_snr(rms(out), *scene.noise_snr_db), scene.rng_seed);
  return out;
}

// s_ij(t) = sum_k rho_k p(t - (|d_i(r_k)| + |d_j(r_k)|)/c), scene frozen at event_index.
inline MultistaticDataset<double> simulate_multistatic(const ScattererScene& scene, const ArrayGeometry& geo,
                                                       const PulseDefinition& pulse, const AcquisitionWindow& win,
                                                       long event_index = 1, int threads = 1) {
  scene.validate();
  geo.validate();
  pulse.validate();
  const auto ne = static_cast<std::size_t>(geo.n_elements);
  MultistaticDataset<double> out(ne, ne, win.n_samples, pulse.sample_rate, win.start_time);
  detail::EchoSynth synth(geo, pulse, win, scene.speed_of_sound);
  const auto pos = scene_at_event(scene, event_index);
  synth.set_state(pos, scene.scatterers);
  parallel_for(0, ne, threads, [&](std::size_t tx) {
    for (std::size_t rx = 0; rx < ne; ++rx) synth.add_echoes(out.signal(tx, rx), tx, rx, 1.0);
  });
  if (scene.noise_snr_db) add_noise(out, noise_sigma_for_snr(rms(out), *scene.noise_snr_db), scene.rng_seed);
  return out;
}

// FORCES acquisition: event e transmits with row e of H.
inline EncodedDataset<double> simulate_forces(const ScattererScene& scene, const ArrayGeometry& geo, const PulseDefinition& pulse,
                                              const HadamardMatrix& h, const AcquisitionWindow& win, long first_event = 1,
                                              int threads = 1) {
  if (h.rank() != geo.n_elements)
    throw error(errc::dimension_mismatch, "Hadamard rank " + std::to_string(h.rank()) + " does not match " +
                                              std::to_string(geo.n_elements) + " elements");
  return simulate_encoded(scene, geo, pulse, TransmitPattern::from_hadamard(h), win, first_event, threads);
}

struct Cyst {
  Vec2 center;
  double radius = 0.0;
};

struct SpeckleSpec {
  double lateral_min = -5e-3, lateral_max = 5e-3;
  double axial_min = 15e-3, axial_max = 25e-3;
  double density_per_mm2 = 5.0;
  std::vector<Cyst> cysts;  // anechoic: no scatterers inside
  Vec2 velocity;
};

// Uniformly placed scatterers with Gaussian reflectivity.
inline std::vector<Scatterer> make_speckle(const SpeckleSpec& spec, std::uint64_t seed) {
  const double area_mm2 = (spec.lateral_max - spec.lateral_min) * (spec.axial_max - spec.axial_min) * 1e6;
  const auto count = static_cast<std::size_t>(std::llround(area_mm2 * spec.density_per_mm2));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(spec.lateral_min, spec.lateral_max), uz(spec.axial_min, spec.axial_max);
  std::normal_distribution<double> amp(0.0, 1.0);
  std::vector<Scatterer> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Vec2 p{ux(rng), uz(rng)};
    const double a = amp(rng);
    const bool in_cyst = std::any_of(spec.cysts.begin(), spec.cysts.end(), [&](const Cyst& c) {
      return std::hypot(p.x - c.center.x, p.z - c.center.z) < c.radius;
    });
    if (!in_cyst) out.push_back({p, spec.velocity, a});
  }
  return out;
}

}  // namespace readi
