// SPDX-License-Identifier: Apache-2.0
#pragma once

// End-to-end acceptance experiments. Each check builds its own synthetic data,
// runs the pipeline, compares against an independent expectation and reports
// one line. Shared by the acceptance test binary and `readi-lab demo`.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "readi/analysis.hpp"
#include "readi/analytic.hpp"
#include "readi/beamform.hpp"
#include "readi/hadamard.hpp"
#include "readi/io.hpp"
#include "readi/motion.hpp"
#include "readi/simulate.hpp"

namespace readi::lab {

struct CheckResult {
  int criterion = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  std::vector<std::pair<std::string, GrayImage>> images;  // optional artifacts, name -> image
};

namespace detail {

inline std::string format(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline void append(std::string& s, const std::string& part) {
  if (!s.empty()) s += "; ";
  s += part;
}

// Rows [first, first+count) of a Hadamard matrix as a transmit pattern.
inline TransmitPattern hadamard_rows(const HadamardMatrix& h, int first, int count) {
  TransmitPattern p{count, h.rank(), {}};
  for (int e = first; e < first + count; ++e)
    for (int i = 0; i < h.rank(); ++i) p.weights.push_back(h(e, i));
  return p;
}

// Smooth random texture: sum of Gaussian blobs, evaluated at pixel centers
// displaced by (ox, oy). Sampling the same blobs with an offset gives an
// exact continuous translation.
struct BlobTexture {
  std::vector<double> x, y, a;
  double sigma = 1.6;

  static BlobTexture make(int rows, int cols, double density, double sigma, std::uint64_t seed) {
    BlobTexture t;
    t.sigma = sigma;
    std::mt19937_64 rng(seed);
    const double pad = 4.0 * sigma + 8.0;
    std::uniform_real_distribution<double> ux(-pad, cols + pad), uy(-pad, rows + pad);
    std::normal_distribution<double> amp(0.0, 1.0);
    const auto n = static_cast<std::size_t>(density * (rows + 2 * pad) * (cols + 2 * pad));
    for (std::size_t k = 0; k < n; ++k) {
      t.x.push_back(ux(rng));
      t.y.push_back(uy(rng));
      t.a.push_back(amp(rng));
    }
    return t;
  }

  RealMatrix<double> render(int rows, int cols, double ox, double oy) const {
    RealMatrix<double> img = RealMatrix<double>::Zero(rows, cols);
    const double r = 4.0 * sigma, inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double cx = x[k] + ox, cy = y[k] + oy;
      const int c0 = std::max(0, static_cast<int>(std::floor(cx - r))), c1 = std::min(cols - 1, static_cast<int>(std::ceil(cx + r)));
      const int r0 = std::max(0, static_cast<int>(std::floor(cy - r))), r1 = std::min(rows - 1, static_cast<int>(std::ceil(cy + r)));
      for (int c = c0; c <= c1; ++c)
        for (int rr = r0; rr <= r1; ++rr) img(rr, c) += a[k] * std::exp(-((c - cx) * (c - cx) + (rr - cy) * (rr - cy)) * inv);
    }
    return img;
  }
};

inline void add_white_noise(RealMatrix<double>& m, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, sigma);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) += g(rng);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 1. Sum of READI low-res images equals the FORCES image

inline CheckResult check_identity() {
  detail::Stopwatch sw;
  CheckResult r{1, "READI sum equals FORCES (N=64, 256x256, CF off)", false, {}, 0.0, {}};
  const double fc = 4.3e6, c = 1540.0;
  const ArrayGeometry geo{64, c / fc};
  const PulseDefinition pulse{fc, 2, Envelope::rectangular, 8 * fc};
  SpeckleSpec sp;
  sp.lateral_min = -6.4e-3;
  sp.lateral_max = 6.4e-3;
  sp.axial_min = 10e-3;
  sp.axial_max = 22.8e-3;
  sp.density_per_mm2 = 3.0;
  ScattererScene scene;
  scene.scatterers = make_speckle(sp, 7);
  const auto win = auto_window(scene, geo, pulse, 1, 1);
  const auto h = sylvester(64);
  const auto g = simulate_forces(scene, geo, pulse, h, win);
  const auto grid = ImagingGrid::centered(0.0, 16.4e-3, 256, 256, 5e-5, 5e-5);
  BeamformConfig cfg;
  cfg.cf_weighting = false;

  bool ok = true;
  auto run = [&]<class T>(const EncodedDataset<T>& data, const char* label, double tol) {
    const auto forces = forces_reconstruct(data, h, grid, geo, cfg);
    double worst = 0.0;
    for (int s : {2, 4, 8}) {
      const auto low = readi_reconstruct(data, GroupingScheme::make(64, s), grid, geo, cfg);
      const double e = relative_l2(compound(low), forces);
      worst = std::max(worst, e);
      if (!(e <= tol)) ok = false;
    }
    detail::append(r.detail, detail::format("%s max rel L2 %.3g (tol %.0e)", label, worst, tol));
  };
  run(cast<float>(g), "f32", 1e-5);
  run(g, "f64", 1e-10);
  r.seconds = sw.seconds();
  detail::append(r.detail, detail::format("%.1f s (limit 60 s)", r.seconds));
  r.pass = ok && r.seconds <= 60.0;
  return r;
}

// ---------------------------------------------------------------------------
// 2. N=4, S=Q=2 cross-term structure with orthogonal delta signals
//
// Channel t of the multistatic set is a unit delta at sample t, so every
// decoded or partially decoded signal is read off as its coefficients over
// s_1..s_4. Group image s is then the matrix M_s(k, i): the weight with which
// s_i is beamformed using the delays of element k. M scaled by S is integer.

inline CheckResult check_cross_terms() {
  detail::Stopwatch sw;
  CheckResult r{2, "N=4 worked example: cross terms cancel across groups", false, {}, 0.0, {}};
  constexpr int n = 4, S = 2, Q = 2;
  const auto h = sylvester(n), hs = sylvester(S), hq = sylvester(Q);

  // g_e = sum_i h(e, i) s_i with s_i = delta at sample i
  EncodedDataset<double> g(n, 1, n, 1.0, 0.0);
  for (int e = 0; e < n; ++e)
    for (int t = 0; t < n; ++t) g.signal(e, 0)[t] = h(e, t);
  const auto grouped = group_dataset(g, GroupingScheme::make(n, S));

  const int expected_partial[S][Q][n] = {{{1, 0, 1, 0}, {0, 1, 0, 1}}, {{1, 0, -1, 0}, {0, 1, 0, -1}}};
  const int expected_image[S][n][n] = {
      {{1, 0, 1, 0}, {0, 1, 0, 1}, {1, 0, 1, 0}, {0, 1, 0, 1}},
      {{1, 0, -1, 0}, {0, 1, 0, -1}, {-1, 0, 1, 0}, {0, -1, 0, 1}},
  };

  bool ok = true;
  int mismatches = 0;
  double total[n][n] = {};
  for (int s = 1; s <= S; ++s) {
    const auto d = partial_decode(grouped.group(s), hq);
    for (int v = 0; v < Q; ++v)
      for (int i = 0; i < n; ++i)
        if (d.signal(v, 0)[i] != expected_partial[s - 1][v][i]) ++mismatches;
    double m[n][n] = {};
    for (const auto& term : readi_terms<double>(s, hs, hq))
      for (int i = 0; i < n; ++i) m[term.element][i] += term.weight * d.signal(term.signal, 0)[i];
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i) {
        if (S * m[k][i] != expected_image[s - 1][k][i]) ++mismatches;
        total[k][i] += m[k][i];
      }
  }
  if (mismatches) ok = false;
  int residual = 0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      if (total[k][i] != (k == i ? 1.0 : 0.0)) ++residual;
  if (residual) ok = false;
  r.detail = detail::format("%d coefficient mismatches vs expected group images, %d nonzero cross terms in the sum", mismatches,
                            residual);
  r.pass = ok;
  r.seconds = sw.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// 3. Hadamard identities, exact integer arithmetic

inline CheckResult check_hadamard() {
  detail::Stopwatch sw;
  CheckResult r{3, "Hadamard: H H^T = nI to 256, Kronecker entries to 128", false, {}, 0.0, {}};
  int gram_fail = 0, closed_fail = 0, kron_fail = 0;
  long kron_checked = 0;
  for (int n = 1; n <= 256; n *= 2) {
    const auto h = sylvester(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        // Sylvester entries are (-1)^popcount(i & j)
        if (h(i, j) != (std::popcount(static_cast<unsigned>(i & j)) % 2 ? -1 : 1)) ++closed_fail;
        long acc = 0;
        for (int k = 0; k < n; ++k) acc += static_cast<long>(h(i, k)) * h(j, k);
        if (acc != (i == j ? n : 0)) ++gram_fail;
      }
  }
  for (int n = 1; n <= 128; n *= 2) {
    const auto h = sylvester(n);
    for (int s = 1; s <= n; s *= 2) {
      const auto hs = sylvester(s), hq = sylvester(n / s);
      for (int i = 1; i <= n; ++i)
        for (int e = 1; e <= n; ++e) {
          ++kron_checked;
          if (kron_entry(hs, hq, i, e) != h.entry(i, e)) ++kron_fail;
        }
    }
  }
  r.detail = detail::format("gram failures %d, closed-form failures %d, Kronecker failures %d of %ld", gram_fail, closed_fail,
                            kron_fail, kron_checked);
  r.pass = gram_fail == 0 && closed_fail == 0 && kron_fail == 0;
  r.seconds = sw.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// 4. Lateral probe motion, N=64, S=8

struct MotionRecoverySetup {
  double center_frequency = 1e6;
  double pitch_wavelengths = 0.5;
  double depth = 60e-3;
  int pixels = 128;
  double pixel_size = 3e-4;
  double speckle_density = 1.0;  // per mm^2
  double velocity = 0.15;        // m/s lateral
  double prf = 1000.0;
  int groups = 8;
  MotionConfig motion{8, 32, 24, 0.5, 110.5, 0.02, 3, 1};
  std::uint64_t seed = 11;
};

inline CheckResult check_motion_recovery(const MotionRecoverySetup& p = {}) {
  detail::Stopwatch sw;
  CheckResult r{4, "EMC2 recovers PSF width and cyst gCNR (0.15 m/s, N=64, S=8)", false, {}, 0.0, {}};
  const double c = 1540.0, lambda = c / p.center_frequency;
  constexpr int n = 64;
  const ArrayGeometry geo{n, p.pitch_wavelengths * lambda};
  const PulseDefinition pulse{p.center_frequency, 2, Envelope::rectangular, 8 * p.center_frequency};
  const double half = 0.5 * p.pixels * p.pixel_size;
  const double track = (n - 1) * p.velocity / p.prf;

  SpeckleSpec sp;
  sp.lateral_min = -half - 0.5 * track - 2e-3;
  sp.lateral_max = half + 0.5 * track + 2e-3;
  sp.axial_min = p.depth - half - 3e-3;
  sp.axial_max = p.depth + half + 3e-3;
  sp.density_per_mm2 = p.speckle_density;
  const Vec2 cyst{0.3 * half, p.depth - 0.2 * half};
  const double cyst_radius = 0.3 * half;
  sp.cysts = {{cyst, cyst_radius}};

  ScattererScene still;
  still.prf = p.prf;
  still.scatterers = make_speckle(sp, p.seed);
  still.scatterers.push_back({{-0.45 * half, p.depth + 0.35 * half}, {0.0, 0.0}, 40.0});
  // moving copy passes through the static positions halfway through the acquisition
  ScattererScene moving = still;
  for (auto& s : moving.scatterers) {
    s.velocity = {p.velocity, 0.0};
    s.position.x -= 0.5 * track;
  }

  const auto win = auto_window(moving, geo, pulse, 1, n);
  const auto h = sylvester(n);
  const auto grid = ImagingGrid::centered(0.0, p.depth, p.pixels, p.pixels, p.pixel_size, p.pixel_size);
  BeamformConfig cfg;
  cfg.speed_of_sound = c;

  const auto g_still = simulate_forces(still, geo, pulse, h, win);
  const auto g_moving = simulate_forces(moving, geo, pulse, h, win);
  const auto img_still = forces_reconstruct(g_still, h, grid, geo, cfg);
  const auto img_moving = forces_reconstruct(g_moving, h, grid, geo, cfg);
  const auto low = readi_reconstruct(g_moving, GroupingScheme::make(n, p.groups), grid, geo, cfg);
  const auto comp = emc2_compensate(low, p.motion);

  const auto inside = RoiSpec::circle(cyst, 0.7 * cyst_radius);
  const auto background = RoiSpec::rectangle({cyst.x, cyst.z + cyst_radius + 0.25 * half}, 1.6 * cyst_radius, 0.3 * half);
  const double w_still = psf_width(img_still).width, w_moving = psf_width(img_moving).width, w_comp = psf_width(comp.image).width;
  const double g_static = gcnr(img_still, inside, background), g_moved = gcnr(img_moving, inside, background),
               g_comp = gcnr(comp.image, inside, background);

  const double blur = w_moving / w_still, recovered = w_comp / w_still - 1.0;
  r.seconds = sw.seconds();
  r.detail = detail::format(
      "PSF width static %.3f mm, uncompensated %.2fx (need >= 1.5), compensated %+.1f%% (need within 15%%); gCNR static %.3f, "
      "uncompensated %.3f, compensated %.3f (need within 0.05); %.0f s (limit 180 s)",
      w_still * 1e3, blur, 100.0 * recovered, g_static, g_moved, g_comp, r.seconds);
  r.pass = blur >= 1.5 && std::abs(recovered) <= 0.15 && std::abs(g_comp - g_static) <= 0.05 && r.seconds <= 180.0;
  r.images = {{"motion_static", envelope_log(img_still)},
              {"motion_uncompensated", envelope_log(img_moving)},
              {"motion_compensated", envelope_log(comp.image)}};
  return r;
}

// ---------------------------------------------------------------------------
// 5. Block-matching accuracy on constructed translations

inline CheckResult check_motion_estimator(int trials = 60) {
  detail::Stopwatch sw;
  CheckResult r{5, "Motion estimator: integer shifts exact, sub-pixel RMSE at 20 dB", false, {}, 0.0, {}};
  MotionConfig cfg;
  cfg.grid_spacing = 16;
  cfg.ref_patch = 32;
  cfg.search_margin = 10;
  constexpr int rows = 112, cols = 112;
  const int half = cfg.ref_patch / 2;
  auto interior = [&](int node) { return node - half - cfg.search_margin >= 0 && node + half + cfg.search_margin <= rows; };
  bool ok = true;

  // integer shifts: crops of one large texture, so no resampling is involved
  {
    const int pad = 12;
    const auto big = detail::BlobTexture::make(rows + 2 * pad, cols + 2 * pad, 0.15, 1.6, 99).render(rows + 2 * pad, cols + 2 * pad, 0, 0);
    auto crop = [&](int ox, int oy) { return RealMatrix<double>(big.block(pad - oy, pad - ox, rows, cols)); };
    const auto ref = crop(0, 0);
    // identical images fail the relative test by construction, so compare against a shifted base
    const int u0[2] = {1, -1};
    const auto base = estimate_field(ref, crop(u0[0], u0[1]), cfg);
    int wrong = 0, compared = 0;
    double worst_equiv = 0.0, worst_abs = 0.0;
    const int shifts[][2] = {{3, -2}, {-4, 5}, {6, 1}, {-7, -3}, {0, 4}, {2, 0}};
    for (const auto& u : shifts) {
      // target(p + u) = reference(p)
      const auto f = estimate_field(ref, crop(u[0], u[1]), cfg);
      for (std::size_t iy = 0; iy < f.nodes_y(); ++iy)
        for (std::size_t ix = 0; ix < f.nodes_x(); ++ix) {
          if (!interior(f.node_x[ix]) || !interior(f.node_y[iy])) continue;
          const auto k = f.index(iy, ix);
          if (!f.valid[k] || !base.valid[k]) {
            ++wrong;
            continue;
          }
          ++compared;
          if (std::lround(f.dx[k]) != u[0] || std::lround(f.dy[k]) != u[1]) ++wrong;
          worst_equiv = std::max({worst_equiv, std::abs(f.dx[k] - base.dx[k] - (u[0] - u0[0])), std::abs(f.dy[k] - base.dy[k] - (u[1] - u0[1]))});
          worst_abs = std::max({worst_abs, std::abs(f.dx[k] - u[0]), std::abs(f.dy[k] - u[1])});
        }
    }
    if (wrong || compared == 0 || worst_equiv > 1e-6) ok = false;
    detail::append(r.detail, detail::format("integer: %d nodes, %d wrong/invalid, shift equivariance %.1e px, fit residual %.3f px",
                                            compared, wrong, worst_equiv, worst_abs));
  }

  // sub-pixel shifts at 20 dB SNR, noise independent in both images
  {
    double sum = 0.0;
    long count = 0, valid = 0, nodes = 0;
    for (int t = 0; t < trials; ++t) {
      std::mt19937_64 rng(1000 + t);
      std::uniform_real_distribution<double> us(-5.5, 5.5);
      const double vx = us(rng), vy = us(rng);
      const auto tex = detail::BlobTexture::make(rows, cols, 0.15, 1.6, 5000 + t);
      auto ref = tex.render(rows, cols, 0, 0);
      auto target = tex.render(rows, cols, vx, vy);
      const double rms = std::sqrt(ref.squaredNorm() / static_cast<double>(ref.size()));
      const double sigma = noise_sigma_for_snr(rms, 20.0);
      detail::add_white_noise(ref, sigma, rng);
      detail::add_white_noise(target, sigma, rng);
      const auto f = estimate_field(ref, target, cfg);
      for (std::size_t iy = 0; iy < f.nodes_y(); ++iy)
        for (std::size_t ix = 0; ix < f.nodes_x(); ++ix) {
          if (!interior(f.node_x[ix]) || !interior(f.node_y[iy])) continue;
          ++nodes;
          const auto k = f.index(iy, ix);
          if (!f.valid[k]) continue;
          ++valid;
          sum += (f.dx[k] - vx) * (f.dx[k] - vx) + (f.dy[k] - vy) * (f.dy[k] - vy);
          ++count;
        }
    }
    const double rmse = count ? std::sqrt(sum / static_cast<double>(count)) : std::numeric_limits<double>::infinity();
    if (!(rmse <= 0.25) || trials < 50) ok = false;
    detail::append(r.detail, detail::format("sub-pixel: %d trials, RMSE %.3f px over %ld/%ld valid interior nodes (need <= 0.25)",
                                            trials, rmse, valid, nodes));
  }

  // NCC range over random, offset, constant and heavy-tailed inputs
  {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::cauchy_distribution<double> heavy(0.0, 1.0);
    double lo = 0.0, hi = 0.0;
    for (int t = 0; t < 40; ++t) {
      RealMatrix<double> a(16, 16), b(40, 40);
      for (Eigen::Index k = 0; k < a.size(); ++k) a(k) = t % 2 ? heavy(rng) : gauss(rng);
      for (Eigen::Index k = 0; k < b.size(); ++k) b(k) = t % 2 ? heavy(rng) : gauss(rng);
      if (t % 4 == 2) a.array() += 1e6;
      if (t % 4 == 3) b.block(5, 5, 20, 20).setConstant(3.0);
      if (t % 8 == 5) b.block(10, 10, 16, 16) = 2.5 * a.array() - 7.0;
      const auto s = ncc_surface(a, b);
      lo = std::min(lo, s.minCoeff());
      hi = std::max(hi, s.maxCoeff());
    }
    if (lo < -1.0 - 1e-6 || hi > 1.0 + 1e-6) ok = false;
    detail::append(r.detail, detail::format("NCC range [%.9f, %.9f]", lo, hi));
  }
  r.pass = ok;
  r.seconds = sw.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// 6. READI low-res versus uFORCES at matched transmit counts

struct CystScene {
  ArrayGeometry geo{64, 1540.0 / 4.3e6};
  PulseDefinition pulse{4.3e6, 2, Envelope::rectangular, 8 * 4.3e6};
  ImagingGrid grid = ImagingGrid::centered(0.0, 20e-3, 128, 128, 1e-4, 1e-4);
  Vec2 cyst{0.0, 20e-3};
  double cyst_radius = 2.5e-3;
  RoiSpec inside = RoiSpec::circle({0.0, 20e-3}, 0.7 * 2.5e-3);
  RoiSpec background = RoiSpec::rectangle({4.2e-3, 20e-3}, 2.5e-3, 5e-3);
};

inline CheckResult check_uforces(int seeds = 5, double channel_snr_db = 0.0) {
  detail::Stopwatch sw;
  CheckResult r{6, "READI low-res gCNR >= uFORCES gCNR at matched Q", false, {}, 0.0, {}};
  const CystScene cs;
  const auto h = sylvester(cs.geo.n_elements);
  BeamformConfig cfg;
  cfg.cf_weighting = true;
  bool ok = true;
  for (int q : {8, 16, 32}) {
    double sum_readi = 0.0, sum_uforces = 0.0;
    for (int seed = 1; seed <= seeds; ++seed) {
      SpeckleSpec sp;
      sp.lateral_min = -8e-3;
      sp.lateral_max = 8e-3;
      sp.axial_min = 12e-3;
      sp.axial_max = 28e-3;
      sp.density_per_mm2 = 5.0;
      sp.cysts = {{cs.cyst, cs.cyst_radius}};
      ScattererScene scene;
      scene.scatterers = make_speckle(sp, static_cast<std::uint64_t>(seed));
      const auto win = auto_window(scene, cs.geo, cs.pulse, 1, 1);
      // one noise level per channel for both methods, set from a single-element echo
      const double sigma = noise_sigma_for_snr(rms(simulate_multistatic(scene, cs.geo, cs.pulse, win)), channel_snr_db);

      auto readi_data = simulate_encoded(scene, cs.geo, cs.pulse, detail::hadamard_rows(h, 0, q), win);
      add_noise(readi_data, sigma, 100u * static_cast<std::uint64_t>(seed) + static_cast<std::uint64_t>(q));
      const auto hs = sylvester(cs.geo.n_elements / q), hq = sylvester(q);
      const auto low = readi_low_res(readi_data, 1, hs, hq, cs.grid, cs.geo, cfg);

      const auto sel = uforces_elements(cs.geo.n_elements, q);
      auto uf_data = simulate_encoded(scene, cs.geo, cs.pulse, uforces_pattern(cs.geo.n_elements, hq, sel), win);
      add_noise(uf_data, sigma, 100u * static_cast<std::uint64_t>(seed) + static_cast<std::uint64_t>(q) + 50u);
      const auto uf = uforces_reconstruct(uf_data, hq, sel, cs.grid, cs.geo, cfg);

      sum_readi += gcnr(low, cs.inside, cs.background);
      sum_uforces += gcnr(uf, cs.inside, cs.background);
    }
    const double a = sum_readi / seeds, b = sum_uforces / seeds;
    if (!(a >= b)) ok = false;
    detail::append(r.detail, detail::format("Q=%d READI %.3f vs uFORCES %.3f", q, a, b));
  }
  r.pass = ok;
  r.seconds = sw.seconds();
  detail::append(r.detail, detail::format("%d seeds", seeds));
  return r;
}

// ---------------------------------------------------------------------------
// 7. SVD clutter filter on a static-plus-mover ensemble

inline CheckResult check_svd_filter(int frames = 64) {
  detail::Stopwatch sw;
  CheckResult r{7, "SVD filter: drop index 1 removes static, keeps mover", false, {}, 0.0, {}};
  const auto grid = ImagingGrid::centered(0.0, 20e-3, 64, 64, 1e-4, 1e-4);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix<double> tissue(64, 64);
  for (Eigen::Index k = 0; k < tissue.size(); ++k) tissue(k) = {gauss(rng), gauss(rng)};

  ImageEnsemble<double> still, mover, both;
  still.frame_interval = mover.frame_interval = both.frame_interval = 1e-3;
  for (int k = 0; k < frames; ++k) {
    ComplexImage<double> a(grid, ImageKind::readi), b(grid, ImageKind::readi);
    a.pixels = tissue;
    // small bright blob crossing the field with a Doppler phase step per frame
    const double cx = 8.0 + 0.75 * k, cy = 20.0 + 0.3 * k;
    const std::complex<double> phase = std::polar(0.3, 0.9 * k);
    for (int c = 0; c < 64; ++c)
      for (int rr = 0; rr < 64; ++rr) b.pixels(rr, c) = phase * std::exp(-((c - cx) * (c - cx) + (rr - cy) * (rr - cy)) / 4.5);
    ComplexImage<double> sum = a;
    sum.pixels += b.pixels;
    still.frames.push_back(std::move(a));
    mover.frames.push_back(std::move(b));
    both.frames.push_back(std::move(sum));
  }

  std::vector<int> drop_first, all;
  for (int k = 1; k <= frames; ++k) {
    all.push_back(k);
    if (k > 1) drop_first.push_back(k);
  }
  const auto p = svd_projector(both, drop_first);
  const double static_left = energy(apply_projector(still, p)) / energy(still);
  const double mover_kept = energy(apply_projector(mover, p)) / energy(mover);

  const auto same = svd_filter(both, all);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < same.frames.size(); ++k) {
    num += (same.frames[k].pixels - both.frames[k].pixels).squaredNorm();
    den += both.frames[k].pixels.squaredNorm();
  }
  const double identity_err = std::sqrt(num / den);

  r.detail = detail::format("%d frames: static energy removed %.4f%% (need >= 99%%), mover energy kept %.2f%% (need >= 90%%), "
                            "full keep-set rel err %.2e (need <= 1e-6)",
                            frames, 100.0 * (1.0 - static_left), 100.0 * mover_kept, identity_err);
  r.pass = frames == 64 && static_left <= 0.01 && mover_kept >= 0.90 && identity_err <= 1e-6;
  r.seconds = sw.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// 8. Property suites

inline CheckResult check_properties(double elapsed_before = 0.0) {
  detail::Stopwatch sw;
  CheckResult r{8, "Property suites: round trips, analytic signal, CF, warp, gCNR, container", false, {}, 0.0, {}};
  bool ok = true;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 1.0);

  {  // encode then decode over the transmit dimension
    MultistaticDataset<double> s(64, 16, 256, 1.0, 0.0);
    for (auto& x : s.samples()) x = gauss(rng);
    const auto h = sylvester(64);
    const double e = relative_l2(decode_forces(encode_forces(s, h), h), s);
    if (!(e <= 1e-10)) ok = false;
    detail::append(r.detail, detail::format("encode/decode %.1e", e));
  }
  {  // analytic signal: real part is the input, a bin-centred cosine has unit envelope
    std::vector<double> x(512);
    for (auto& v : x) v = gauss(rng);
    const auto a = analytic_signal(std::span<const double>(x));
    double real_err = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) real_err = std::max(real_err, std::abs(a[k].real() - x[k]));
    std::vector<double> cosine(512);
    for (std::size_t k = 0; k < cosine.size(); ++k) cosine[k] = std::cos(2.0 * std::numbers::pi * 37.0 * static_cast<double>(k) / 512.0);
    const auto ac = analytic_signal(std::span<const double>(cosine));
    double env_err = 0.0, quad_err = 0.0;
    for (std::size_t k = 0; k < ac.size(); ++k) {
      env_err = std::max(env_err, std::abs(std::abs(ac[k]) - 1.0));
      quad_err = std::max(quad_err, std::abs(ac[k].imag() - std::sin(2.0 * std::numbers::pi * 37.0 * static_cast<double>(k) / 512.0)));
    }
    if (real_err > 1e-12 || env_err > 1e-9 || quad_err > 1e-9) ok = false;
    detail::append(r.detail, detail::format("analytic re %.1e env %.1e quad %.1e", real_err, env_err, quad_err));
  }
  {  // coherence factor: in [0,1], 1 for aligned phasors, 1/K for a lone sample
    double lo = 1.0, hi = 0.0;
    for (int t = 0; t < 500; ++t) {
      std::vector<std::complex<double>> v(1 + t % 64);
      for (auto& z : v) z = {gauss(rng), gauss(rng)};
      const double cf = coherence_factor(std::span<const std::complex<double>>(v));
      lo = std::min(lo, cf);
      hi = std::max(hi, cf);
    }
    std::vector<std::complex<double>> aligned(32, std::polar(2.0, 0.7)), lone(32, {0.0, 0.0});
    lone[5] = {3.0, -1.0};
    const double cf_aligned = coherence_factor(std::span<const std::complex<double>>(aligned));
    const double cf_lone = coherence_factor(std::span<const std::complex<double>>(lone));
    if (lo < 0.0 || hi > 1.0 || std::abs(cf_aligned - 1.0) > 1e-12 || std::abs(cf_lone - 1.0 / 32.0) > 1e-12) ok = false;
    detail::append(r.detail, detail::format("CF range [%.3f, %.3f] aligned %.3f lone %.4f", lo, hi, cf_aligned, cf_lone));
  }
  {  // warp identities
    const auto grid = ImagingGrid::centered(0.0, 20e-3, 96, 80, 1e-4, 1e-4);
    ComplexImage<double> img(grid, ImageKind::forces);
    for (int c = 0; c < img.cols(); ++c)
      for (int rr = 0; rr < img.rows(); ++rr)
        img.pixels(rr, c) = std::polar(1.0 + 0.5 * std::sin(0.21 * c) * std::cos(0.17 * rr), 0.13 * c + 0.05 * rr);
    const auto zero = warp_image(img, DenseField::uniform(img.rows(), img.cols(), 0.0, 0.0));
    const double zero_err = (zero.pixels - img.pixels).cwiseAbs().maxCoeff();
    const auto shifted = warp_image(img, DenseField::uniform(img.rows(), img.cols(), 3.0, -2.0));
    double shift_err = 0.0;
    for (int c = 0; c < img.cols(); ++c)
      for (int rr = 0; rr < img.rows(); ++rr) {
        const int sc = c + 3, sr = rr - 2;
        const bool in = sc >= 0 && sc < img.cols() && sr >= 0 && sr < img.rows();
        const std::complex<double> want = in ? img.pixels(sr, sc) : std::complex<double>{};
        shift_err = std::max(shift_err, std::abs(shifted.pixels(rr, c) - want));
      }
    const auto there = warp_image(img, DenseField::uniform(img.rows(), img.cols(), 1.4, 0.6));
    const auto back = warp_image(there, DenseField::uniform(img.rows(), img.cols(), -1.4, -0.6));
    const auto core = [](const ComplexMatrix<double>& m) { return m.block(6, 6, m.rows() - 12, m.cols() - 12); };
    const double trip = (core(back.pixels) - core(img.pixels)).norm() / core(img.pixels).norm();
    if (zero_err != 0.0 || shift_err != 0.0 || !(trip <= 1e-2)) ok = false;
    detail::append(r.detail, detail::format("warp zero %.1e shift %.1e round trip %.1e", zero_err, shift_err, trip));
  }
  {  // gCNR of Uniform[0,1] against Uniform[0.5,1.5] is 0.5
    std::uniform_real_distribution<double> a(0.0, 1.0), b(0.5, 1.5);
    std::vector<double> in(10000), out(10000);
    for (auto& x : in) x = a(rng);
    for (auto& x : out) x = b(rng);
    const double g = gcnr(std::span<const double>(in), std::span<const double>(out), 100);
    if (std::abs(g - 0.5) > 0.03) ok = false;
    detail::append(r.detail, detail::format("gCNR uniform %.4f", g));
  }
  {  // container: serialize, parse, rebuild, serialize again
    EncodedDataset<std::complex<float>> d(8, 4, 33, 17.25e6, 1.5e-6);
    for (auto& x : d.samples()) x = {static_cast<float>(gauss(rng)), static_cast<float>(gauss(rng))};
    const auto bytes = serialize(to_container(d));
    const auto back = from_container<std::complex<float>, encoded_tag>(deserialize(bytes));
    const bool same_bytes = serialize(to_container(back)) == bytes;
    const bool same_data = std::equal(back.samples().begin(), back.samples().end(), d.samples().begin(), d.samples().end()) &&
                           back.sample_rate() == d.sample_rate() && back.start_time() == d.start_time();
    if (!same_bytes || !same_data) ok = false;
    detail::append(r.detail, std::string("container ") + (same_bytes && same_data ? "byte-identical" : "MISMATCH"));
  }
  r.seconds = sw.seconds();
  const double total = elapsed_before + r.seconds;
  if (total > 600.0) ok = false;
  detail::append(r.detail, detail::format("suite wall time %.0f s (limit 600 s)", total));
  r.pass = ok;
  return r;
}

// ---------------------------------------------------------------------------

inline std::string summary_line(const CheckResult& r) {
  return detail::format("criterion %d %s  %s  [%.1f s]  ", r.criterion, r.pass ? "PASS" : "FAIL", r.title.c_str(), r.seconds) +
         r.detail;
}

// Runs the selected criteria (all when empty) in order; on_result fires after each.
inline std::vector<CheckResult> run_acceptance(const std::vector<int>& selected = {},
                                               const std::function<void(const CheckResult&)>& on_result = {}) {
  auto want = [&](int k) { return selected.empty() || std::find(selected.begin(), selected.end(), k) != selected.end(); };
  detail::Stopwatch sw;
  std::vector<CheckResult> out;
  auto record = [&](CheckResult r) {
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  };
  if (want(1)) record(check_identity());
  if (want(2)) record(check_cross_terms());
  if (want(3)) record(check_hadamard());
  if (want(4)) record(check_motion_recovery());
  if (want(5)) record(check_motion_estimator());
  if (want(6)) record(check_uforces());
  if (want(7)) record(check_svd_filter());
  if (want(8)) record(check_properties(sw.seconds()));
  return out;
}

}  // namespace readi::lab
