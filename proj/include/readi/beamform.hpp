// SPDX-License-Identifier: Apache-2.0
#pragma once

// FORCES and READI reconstruction.
//
// Every image former here is an instance of one delay-and-sum kernel over a
// list of terms. A term pairs a stored signal with the transmit element whose
// delays it is focused with and a scalar weight:
//
//   pixel(r) = sum_terms w_u sum_j a_j(r) x_{u,j}(tau_{e(u),j}(r))
//
// Multistatic DAS uses (i, i, 1) for every element i. The grouped operator
// D'_l on a partially decoded group uses (v, v + Q(l-1), 1). A READI
// low-resolution image is sum_l hhat^(S)_{l,s} D'_l, i.e. N terms of the form
// (v, v + Q(l-1), h^(S)_{s,l} / S). Summing the low-resolution images over s
// reproduces the FORCES image term for term.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "readi/analytic.hpp"
#include "readi/dataset.hpp"
#include "readi/error.hpp"
#include "readi/hadamard.hpp"
#include "readi/image.hpp"
#include "readi/parallel.hpp"
#include "readi/simulate.hpp"

namespace readi {

enum class Apodization { rect, hann };
enum class Interpolation { nearest, linear };

struct BeamformConfig {
  double speed_of_sound = 1540.0;
  double receive_fnumber = 1.0;
  Apodization apodization = Apodization::rect;
  bool cf_weighting = false;
  Interpolation interpolation = Interpolation::linear;
  int threads = 1;

  void validate() const {
    if (!(receive_fnumber > 0.0)) throw error(errc::invalid_argument, "beamform.fnumber must be > 0");
    if (!(speed_of_sound > 0.0)) throw error(errc::invalid_argument, "beamform.speed_of_sound must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Encoding and decoding over the transmit dimension

template <class Sample>
EncodedDataset<Sample> encode_forces(const MultistaticDataset<Sample>& s, const HadamardMatrix& h) {
  if (static_cast<std::size_t>(h.rank()) != s.n_tx())
    throw error(errc::dimension_mismatch, "Hadamard rank " + std::to_string(h.rank()) + " vs " + std::to_string(s.n_tx()) + " transmits");
  auto g = like<Sample, encoded_tag>(s, s.n_tx());
  const std::size_t block = s.n_rx() * s.n_samples();
  for (std::size_t e = 0; e < g.n_tx(); ++e) {
    Sample* dst = g.samples().data() + e * block;
    for (std::size_t i = 0; i < s.n_tx(); ++i) {
      const Sample* src = s.samples().data() + i * block;
      if (h(static_cast<int>(e), static_cast<int>(i)) > 0)
        for (std::size_t k = 0; k < block; ++k) dst[k] += src[k];
      else
        for (std::size_t k = 0; k < block; ++k) dst[k] -= src[k];
    }
  }
  return g;
}

namespace detail {

// out[r] = (1/n) sum_c H(c, r) in[c]
template <class Sample, class KindOut, class KindIn>
ChannelData<Sample, KindOut> transpose_decode(const ChannelData<Sample, KindIn>& in, const HadamardMatrix& h) {
  if (static_cast<std::size_t>(h.rank()) != in.n_tx())
    throw error(errc::dimension_mismatch, "Hadamard rank " + std::to_string(h.rank()) + " vs " + std::to_string(in.n_tx()) + " events");
  auto out = like<Sample, KindOut>(in, in.n_tx());
  const std::size_t block = in.n_rx() * in.n_samples();
  using R = real_type_t<Sample>;
  const R scale = R(1) / static_cast<R>(h.rank());
  for (std::size_t r = 0; r < out.n_tx(); ++r) {
    Sample* dst = out.samples().data() + r * block;
    for (std::size_t c = 0; c < in.n_tx(); ++c) {
      const Sample* src = in.samples().data() + c * block;
      if (h(static_cast<int>(c), static_cast<int>(r)) > 0)
        for (std::size_t k = 0; k < block; ++k) dst[k] += src[k];
      else
        for (std::size_t k = 0; k < block; ++k) dst[k] -= src[k];
    }
    for (std::size_t k = 0; k < block; ++k) dst[k] *= scale;
  }
  return out;
}

}  // namespace detail

// S = (1/n) H^T G
template <class Sample>
MultistaticDataset<Sample> decode_forces(const EncodedDataset<Sample>& g, const HadamardMatrix& h) {
  return detail::transpose_decode<Sample, multistatic_tag>(g, h);
}

// ---------------------------------------------------------------------------
// Coherence factor

template <class T>
double coherence_factor(std::span<const std::complex<T>> samples) {
  if (samples.empty()) throw error(errc::invalid_argument, "coherence_factor needs at least one sample");
  std::complex<double> sum{};
  double energy = 0.0;
  for (const auto& s : samples) {
    sum += std::complex<double>(s);
    energy += std::norm(std::complex<double>(s));
  }
  if (energy == 0.0) return 0.0;
  return std::clamp(std::norm(sum) / (static_cast<double>(samples.size()) * energy), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Delay-and-sum kernel

template <class T>
struct DasTerm {
  std::uint32_t signal = 0;   // index into the dataset's first dimension
  std::uint32_t element = 0;  // transmit element used for the delay, 0-based
  T weight = T(1);
};

namespace detail {

// Receive rows zero padded: sample k of a row sits at k + 1, with one zero in
// front and two behind, so the record reads as a zero-extended signal and the
// gather loop has no branches. Storage is interleaved (re, im).
template <class T>
struct PaddedSignals {
  std::size_t row = 0;  // n_samples + 3
  std::size_t n_rx = 0;
  std::vector<T> values;

  template <class Kind>
  explicit PaddedSignals(const ChannelData<std::complex<T>, Kind>& d)
      : row(d.n_samples() + 3), n_rx(d.n_rx()), values(2 * d.n_tx() * d.n_rx() * row, T(0)) {
    const std::size_t ns = d.n_samples();
    for (std::size_t c = 0; c < d.n_tx() * d.n_rx(); ++c) {
      const std::complex<T>* src = d.samples().data() + c * ns;
      T* dst = values.data() + 2 * (c * row + 1);
      for (std::size_t k = 0; k < ns; ++k) {
        dst[2 * k] = src[k].real();
        dst[2 * k + 1] = src[k].imag();
      }
    }
  }
};

// Per-column tables, stored receive-element major so the inner loop runs
// down the column. delay is in samples; apod is zero outside the gate.
template <class T>
struct ColumnTables {
  std::size_t nz = 0, ne = 0;
  std::vector<T> delay, apod;
  std::vector<int> iz_lo, iz_hi;  // pixels where element j is inside the gate
  std::vector<int> j0, j1;        // gate per pixel

  const T* delay_of(std::size_t j) const { return delay.data() + j * nz; }
  const T* apod_of(std::size_t j) const { return apod.data() + j * nz; }
};

// For each term: per pixel, s = sum_j a_j x_j(tx + delay_j) in ascending j,
// then acc += w * s. Running j outer and pixels inner streams along one row.
template <class T, bool Linear, bool Coherence>
void accumulate_column(const PaddedSignals<T>& sig, std::span<const DasTerm<T>> terms, const ColumnTables<T>& tab, T start,
                       std::vector<T>& re, std::vector<T>& im, std::vector<T>& energy) {
  const std::size_t nz = tab.nz;
  const std::size_t stride = sig.n_rx * sig.row;
  const auto row = static_cast<std::int64_t>(sig.row);
  const T hi = static_cast<T>(sig.row - 2);
  std::vector<T> tx(nz), sre(nz), sim(nz), se(nz);
  for (const auto& term : terms) {
    const T* base = sig.values.data() + 2 * term.signal * stride;
    const T* td = tab.delay_of(term.element);
    for (std::size_t iz = 0; iz < nz; ++iz) tx[iz] = td[iz] - start + T(1);
    std::fill(sre.begin(), sre.end(), T(0));
    std::fill(sim.begin(), sim.end(), T(0));
    if constexpr (Coherence) std::fill(se.begin(), se.end(), T(0));
    for (std::size_t j = 0; j < tab.ne; ++j) {
      const int lo = tab.iz_lo[j], hi_z = tab.iz_hi[j];
      if (hi_z < lo) continue;
      const T* __restrict d = tab.delay_of(j);
      const T* __restrict ap = tab.apod_of(j);
      const T* __restrict q0 = base + 2 * static_cast<std::int64_t>(j) * row;
      T* __restrict pr = sre.data();
      T* __restrict pi = sim.data();
      T* __restrict pe = se.data();
      const T* __restrict pt = tx.data();
#pragma GCC ivdep
      for (int iz = lo; iz <= hi_z; ++iz) {
        // position in the padded row; anything outside lands on a zero
        const T p = std::min(std::max(pt[iz] + d[iz], T(0)), hi);
        T vr, vi;
        if constexpr (Linear) {
          const int i0 = static_cast<int>(p);
          const T frac = p - static_cast<T>(i0);
          const int k = 2 * i0;
          vr = q0[k] + frac * (q0[k + 2] - q0[k]);
          vi = q0[k + 1] + frac * (q0[k + 3] - q0[k + 1]);
        } else {
          const int k = 2 * static_cast<int>(p + T(0.5));
          vr = q0[k];
          vi = q0[k + 1];
        }
        const T a = ap[iz];
        pr[iz] += a * vr;
        pi[iz] += a * vi;
        if constexpr (Coherence) pe[iz] += a * a * (vr * vr + vi * vi);
      }
    }
    const T w = term.weight;
    for (std::size_t iz = 0; iz < nz; ++iz) {
      re[iz] += w * sre[iz];
      im[iz] += w * sim[iz];
      if constexpr (Coherence) energy[iz] += w * w * se[iz];
    }
  }
}

}  // namespace detail

template <class T, class Kind>
ComplexImage<T> das_terms(const ChannelData<std::complex<T>, Kind>& data, std::span<const DasTerm<T>> terms,
                          const ImagingGrid& grid, const ArrayGeometry& geo, const BeamformConfig& cfg, ImageKind kind) {
  grid.validate();
  cfg.validate();
  if (data.n_rx() != static_cast<std::size_t>(geo.n_elements))
    throw error(errc::dimension_mismatch, "dataset has " + std::to_string(data.n_rx()) + " receive channels, geometry has " +
                                              std::to_string(geo.n_elements) + " elements");
  for (const auto& t : terms)
    if (t.signal >= data.n_tx() || t.element >= static_cast<std::uint32_t>(geo.n_elements))
      throw error(errc::out_of_range, "DAS term references a missing signal or element");

  ComplexImage<T> img(grid, kind);
  const int nx = grid.n_x(), nz = grid.n_z();
  const int ne = geo.n_elements;
  const auto xs = geo.element_positions();
  const double samples_per_meter = data.sample_rate() / cfg.speed_of_sound;
  const T start = static_cast<T>(data.start_time() * data.sample_rate());
  const bool linear = cfg.interpolation == Interpolation::linear;
  const detail::PaddedSignals<T> padded(data);

  parallel_for(0, static_cast<std::size_t>(nx), cfg.threads, [&](std::size_t ix) {
    const auto nzs = static_cast<std::size_t>(nz), nes = static_cast<std::size_t>(ne);
    detail::ColumnTables<T> tab;
    tab.nz = nzs;
    tab.ne = nes;
    tab.delay.resize(nzs * nes);
    tab.apod.resize(nzs * nes);
    tab.iz_lo.assign(nes, nz);
    tab.iz_hi.assign(nes, -1);
    tab.j0.assign(nzs, ne);
    tab.j1.assign(nzs, -1);
    const double px = grid.x(static_cast<int>(ix));
    for (std::size_t iz = 0; iz < nzs; ++iz) {
      const double pz = grid.z(static_cast<int>(iz));
      const double half_aperture = pz / (2.0 * cfg.receive_fnumber);
      for (std::size_t n = 0; n < nes; ++n) {
        const double dxn = xs[n] - px;
        tab.delay[n * nzs + iz] = static_cast<T>(std::sqrt(dxn * dxn + pz * pz) * samples_per_meter);
        const double u = half_aperture > 0.0 ? std::abs(dxn) / half_aperture : 2.0;
        T a = T(0);
        if (u <= 1.0) a = cfg.apodization == Apodization::rect ? T(1) : static_cast<T>(0.5 * (1.0 + std::cos(M_PI * u)));
        tab.apod[n * nzs + iz] = a;
        if (a > T(0)) {
          tab.j0[iz] = std::min(tab.j0[iz], static_cast<int>(n));
          tab.j1[iz] = std::max(tab.j1[iz], static_cast<int>(n));
          tab.iz_lo[n] = std::min(tab.iz_lo[n], static_cast<int>(iz));
          tab.iz_hi[n] = std::max(tab.iz_hi[n], static_cast<int>(iz));
        }
      }
    }
    std::vector<T> re(nzs, T(0)), im(nzs, T(0)), energy(nzs, T(0));
    if (linear) {
      if (cfg.cf_weighting)
        detail::accumulate_column<T, true, true>(padded, terms, tab, start, re, im, energy);
      else
        detail::accumulate_column<T, true, false>(padded, terms, tab, start, re, im, energy);
    } else {
      if (cfg.cf_weighting)
        detail::accumulate_column<T, false, true>(padded, terms, tab, start, re, im, energy);
      else
        detail::accumulate_column<T, false, false>(padded, terms, tab, start, re, im, energy);
    }
    for (std::size_t iz = 0; iz < nzs; ++iz) {
      std::complex<T> acc(re[iz], im[iz]);
      if (cfg.cf_weighting) {
        const T e = energy[iz];
        const T cf = e > T(0) ? std::min(T(1), std::norm(acc) / (static_cast<T>(tab.j1[iz] - tab.j0[iz] + 1) * e)) : T(0);
        acc *= cf;
      }
      img.pixels(static_cast<Eigen::Index>(iz), static_cast<Eigen::Index>(ix)) = acc;
    }
  });
  return img;
}

template <class T>
std::vector<DasTerm<T>> multistatic_terms(int n_elements) {
  std::vector<DasTerm<T>> terms;
  for (int i = 0; i < n_elements; ++i) terms.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), T(1)});
  return terms;
}

// D{S, r} = sum_i sum_j a_j(r) s_ij(tau_ij(r)) on an analytic multistatic dataset.
template <class T>
ComplexImage<T> das_reconstruct(const MultistaticDataset<std::complex<T>>& s, const ImagingGrid& grid, const ArrayGeometry& geo,
                                const BeamformConfig& cfg) {
  if (s.n_tx() != static_cast<std::size_t>(geo.n_elements))
    throw error(errc::dimension_mismatch, "multistatic dataset transmit count does not match geometry");
  const auto terms = multistatic_terms<T>(geo.n_elements);
  return das_terms(s, std::span<const DasTerm<T>>(terms), grid, geo, cfg, ImageKind::das);
}

// F{G, r} = D{H^-1 G, r}; the analytic signal is formed after decoding.
template <class T>
ComplexImage<T> forces_reconstruct(const EncodedDataset<T>& g, const HadamardMatrix& h, const ImagingGrid& grid,
                                   const ArrayGeometry& geo, const BeamformConfig& cfg) {
  const auto decoded = analytic_signal(decode_forces(g, h), cfg.threads);
  auto img = das_reconstruct(decoded, grid, geo, cfg);
  img.provenance = ImageKind::forces;
  return img;
}

// ---------------------------------------------------------------------------
// READI

template <class Sample>
struct GroupedDataset {
  GroupingScheme scheme;
  std::vector<EncodedDataset<Sample>> groups;  // group s holds events (s-1)Q+1 .. sQ

  const EncodedDataset<Sample>& group(int s) const { return groups.at(static_cast<std::size_t>(s - 1)); }
};

template <class Sample>
GroupedDataset<Sample> group_dataset(const EncodedDataset<Sample>& g, const GroupingScheme& scheme) {
  scheme.validate();
  if (g.n_tx() != static_cast<std::size_t>(scheme.n_total))
    throw error(errc::dimension_mismatch, "grouping expects N=" + std::to_string(scheme.n_total) + " events, dataset has " +
                                              std::to_string(g.n_tx()));
  GroupedDataset<Sample> out{scheme, {}};
  const std::size_t q = static_cast<std::size_t>(scheme.group_size);
  const std::size_t block = g.n_rx() * g.n_samples();
  for (int s = 0; s < scheme.n_groups; ++s) {
    auto part = like<Sample, encoded_tag>(g, q);
    const auto first = g.samples().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(s) * q * block);
    std::copy(first, first + static_cast<std::ptrdiff_t>(q * block), part.samples().begin());
    out.groups.push_back(std::move(part));
  }
  return out;
}

// d'_s = H_Q^-1 g'_s
template <class Sample>
ChannelData<Sample, partial_tag> partial_decode(const EncodedDataset<Sample>& group, const HadamardMatrix& hq) {
  return detail::transpose_decode<Sample, partial_tag>(group, hq);
}

template <class T>
struct PartiallyDecodedGroup {
  int group_index = 1;
  ChannelData<std::complex<T>, partial_tag> signals;  // analytic d'_{v,s}(t), v = 1..Q
};

template <class T>
PartiallyDecodedGroup<T> make_partially_decoded(const EncodedDataset<T>& group, int s, const HadamardMatrix& hq, int threads = 1) {
  return {s, analytic_signal(partial_decode(group, hq), threads)};
}

// D'_l{d', r} = sum_v sum_j a_j(r) d'_v(tau_{v+Q(l-1), j}(r))
template <class T>
ComplexImage<T> grouped_das(const PartiallyDecodedGroup<T>& d, int l, const GroupingScheme& scheme, const ImagingGrid& grid,
                            const ArrayGeometry& geo, const BeamformConfig& cfg) {
  scheme.validate();
  if (l < 1 || l > scheme.n_groups) throw error(errc::out_of_range, "element group l=" + std::to_string(l) + " outside 1..S");
  if (d.signals.n_tx() != static_cast<std::size_t>(scheme.group_size))
    throw error(errc::dimension_mismatch, "partially decoded group must hold Q signals");
  std::vector<DasTerm<T>> terms;
  for (int v = 1; v <= scheme.group_size; ++v)
    terms.push_back({static_cast<std::uint32_t>(v - 1), static_cast<std::uint32_t>(index_join({l, v}, scheme.group_size) - 1), T(1)});
  return das_terms(d.signals, std::span<const DasTerm<T>>(terms), grid, geo, cfg, ImageKind::das);
}

template <class T>
std::vector<DasTerm<T>> readi_terms(int s, const HadamardMatrix& hs, const HadamardMatrix& hq) {
  const int n_groups = hs.rank(), q = hq.rank();
  std::vector<DasTerm<T>> terms;
  terms.reserve(static_cast<std::size_t>(n_groups * q));
  for (int l = 1; l <= n_groups; ++l) {
    // hhat^(S)_{l,s} = h^(S)_{s,l} / S
    const T w = static_cast<T>(hs.entry(s, l)) / static_cast<T>(n_groups);
    for (int v = 1; v <= q; ++v)
      terms.push_back({static_cast<std::uint32_t>(v - 1), static_cast<std::uint32_t>(index_join({l, v}, q) - 1), w});
  }
  return terms;
}

// R{g'_s, r} = sum_l hhat^(S)_{l,s} D'_l{H_Q^-1 g'_s, r}
template <class T>
ComplexImage<T> readi_low_res(const PartiallyDecodedGroup<T>& d, const HadamardMatrix& hs, const HadamardMatrix& hq,
                              const ImagingGrid& grid, const ArrayGeometry& geo, const BeamformConfig& cfg) {
  const int s = d.group_index;
  if (s < 1 || s > hs.rank()) throw error(errc::out_of_range, "READI group s=" + std::to_string(s) + " outside 1..S");
  if (hs.rank() * hq.rank() != geo.n_elements)
    throw error(errc::dimension_mismatch, "S*Q must equal the element count");
  if (d.signals.n_tx() != static_cast<std::size_t>(hq.rank()))
    throw error(errc::dimension_mismatch, "partially decoded group must hold Q signals");
  const auto terms = readi_terms<T>(s, hs, hq);
  auto img = das_terms(d.signals, std::span<const DasTerm<T>>(terms), grid, geo, cfg, ImageKind::readi);
  img.group = s;
  return img;
}

template <class T>
ComplexImage<T> readi_low_res(const EncodedDataset<T>& group, int s, const HadamardMatrix& hs, const HadamardMatrix& hq,
                              const ImagingGrid& grid, const ArrayGeometry& geo, const BeamformConfig& cfg) {
  return readi_low_res(make_partially_decoded(group, s, hq, cfg.threads), hs, hq, grid, geo, cfg);
}

// All S low-resolution images of one FORCES acquisition.
template <class T>
std::vector<ComplexImage<T>> readi_reconstruct(const EncodedDataset<T>& g, const GroupingScheme& scheme, const ImagingGrid& grid,
                                               const ArrayGeometry& geo, const BeamformConfig& cfg) {
  const auto grouped = group_dataset(g, scheme);
  const auto hs = sylvester(scheme.n_groups);
  const auto hq = sylvester(scheme.group_size);
  std::vector<ComplexImage<T>> out;
  for (int s = 1; s <= scheme.n_groups; ++s) out.push_back(readi_low_res(grouped.group(s), s, hs, hq, grid, geo, cfg));
  return out;
}

// Coherent pixel-wise sum.
template <class T>
ComplexImage<T> compound(std::span<const ComplexImage<T>> images) {
  if (images.empty()) throw error(errc::invalid_argument, "compound needs at least one image");
  ComplexImage<T> out = images.front();
  out.provenance = ImageKind::compound;
  out.group = 0;
  for (std::size_t k = 1; k < images.size(); ++k) {
    if (!(images[k].grid == out.grid) || images[k].rows() != out.rows() || images[k].cols() != out.cols())
      throw error(errc::dimension_mismatch, "compound: image grids differ");
    out.pixels += images[k].pixels;
  }
  return out;
}

template <class T>
ComplexImage<T> compound(const std::vector<ComplexImage<T>>& images) {
  return compound(std::span<const ComplexImage<T>>(images));
}

// ---------------------------------------------------------------------------
// uFORCES baseline: Q encoded events over Q-1 single elements plus an
// aggregate of every other element. Element layout is an approximation.

inline std::vector<int> uforces_elements(int n_elements, int q) {
  if (q >= n_elements) throw error(errc::invalid_argument, "uFORCES requires Q < N");
  if (q < 2) throw error(errc::invalid_argument, "uFORCES requires Q >= 2");
  std::vector<int> sel;
  if (q == 2) return {n_elements / 2};
  for (int m = 0; m < q - 1; ++m) sel.push_back(static_cast<int>(std::lround(m * (n_elements - 1.0) / (q - 2.0))));
  return sel;
}

// Row q: aggregate elements get h_Q(q,1), selected element m gets h_Q(q, m+2).
inline TransmitPattern uforces_pattern(int n_elements, const HadamardMatrix& hq, const std::vector<int>& selected) {
  const int q = hq.rank();
  if (static_cast<int>(selected.size()) != q - 1) throw error(errc::dimension_mismatch, "uFORCES needs Q-1 selected elements");
  TransmitPattern p{q, n_elements, std::vector<int>(static_cast<std::size_t>(q * n_elements))};
  for (int e = 0; e < q; ++e) {
    for (int i = 0; i < n_elements; ++i) p.weights[static_cast<std::size_t>(e * n_elements + i)] = hq(e, 0);
    for (int m = 0; m < q - 1; ++m) p.weights[static_cast<std::size_t>(e * n_elements + selected[static_cast<std::size_t>(m)])] = hq(e, m + 1);
  }
  return p;
}

// Decoded uFORCES signals: index 0 is the aggregate, 1..Q-1 the selected elements.
template <class Sample>
ChannelData<Sample, partial_tag> uforces_decode(const EncodedDataset<Sample>& g, const HadamardMatrix& hq) {
  return detail::transpose_decode<Sample, partial_tag>(g, hq);
}

template <class T>
ComplexImage<T> uforces_reconstruct(const EncodedDataset<T>& g, const HadamardMatrix& hq, const std::vector<int>& selected,
                                    const ImagingGrid& grid, const ArrayGeometry& geo, const BeamformConfig& cfg) {
  if (hq.rank() >= geo.n_elements) throw error(errc::invalid_argument, "uFORCES requires Q < N");
  const auto decoded = analytic_signal(uforces_decode(g, hq), cfg.threads);
  std::vector<DasTerm<T>> terms;
  for (std::size_t m = 0; m < selected.size(); ++m)
    terms.push_back({static_cast<std::uint32_t>(m + 1), static_cast<std::uint32_t>(selected[m]), T(1)});
  return das_terms(decoded, std::span<const DasTerm<T>>(terms), grid, geo, cfg, ImageKind::uforces);
}

template <class T>
ComplexImage<T> uforces_reconstruct(const EncodedDataset<T>& g, const HadamardMatrix& hq, const ImagingGrid& grid,
                                    const ArrayGeometry& geo, const BeamformConfig& cfg) {
  return uforces_reconstruct(g, hq, uforces_elements(geo.n_elements, hq.rank()), grid, geo, cfg);
}

}  // namespace readi
