// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "readi/analysis.hpp"

using namespace readi;

namespace {

std::vector<double> uniform(double lo, double hi, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

double gcnr_of(const std::vector<double>& a, const std::vector<double>& b) {
  return gcnr(std::span<const double>(a), std::span<const double>(b));
}

ComplexImage<double> gaussian_blob(const ImagingGrid& grid, double cx, double cz, double sx, double sz, double amp = 1.0) {
  ComplexImage<double> img(grid, ImageKind::das);
  for (int c = 0; c < img.cols(); ++c)
    for (int r = 0; r < img.rows(); ++r) {
      const double x = grid.x(c) - cx, z = grid.z(r) - cz;
      img.pixels(r, c) = amp * std::exp(-0.5 * (x * x / (sx * sx) + z * z / (sz * sz)));
    }
  return img;
}

ImageEnsemble<double> random_ensemble(int frames, std::uint64_t seed) {
  const auto grid = ImagingGrid::centered(0.0, 0.02, 12, 10, 1e-4, 1e-4);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  ImageEnsemble<double> e;
  for (int k = 0; k < frames; ++k) {
    ComplexImage<double> f(grid, ImageKind::readi);
    for (Eigen::Index i = 0; i < f.pixels.size(); ++i) f.pixels(i) = {g(rng), g(rng)};
    e.frames.push_back(f);
  }
  return e;
}

double ensemble_diff(const ImageEnsemble<double>& a, const ImageEnsemble<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    num += (a.frames[k].pixels - b.frames[k].pixels).squaredNorm();
    den += b.frames[k].pixels.squaredNorm();
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace

TEST(Gcnr, IdenticalDistributionsGiveZero) {
  const auto a = uniform(0, 1, 200000, 1);
  EXPECT_NEAR(gcnr_of(a, a), 0.0, 1e-12);
  // independent draws: histogram noise alone, about sqrt(2 * 100 / (pi n))
  const auto b = uniform(0, 1, 200000, 2);
  EXPECT_LE(gcnr_of(a, b), 0.02);
}

TEST(Gcnr, DisjointRangesGiveOne) {
  EXPECT_DOUBLE_EQ(gcnr_of(uniform(0, 1, 1000, 1), uniform(2, 3, 1000, 2)), 1.0);
}

TEST(Gcnr, UniformOverlapIsOneHalf) {
  // overlap of U[0,1] and U[0.5,1.5] is 0.5
  EXPECT_NEAR(gcnr_of(uniform(0, 1, 10000, 3), uniform(0.5, 1.5, 10000, 4)), 0.5, 0.03);
}

TEST(Gcnr, ScaleInvariantAndBounded) {
  const auto a = uniform(0, 1, 3000, 5), b = uniform(0.3, 2, 3000, 6);
  const double g = gcnr_of(a, b);
  EXPECT_GE(g, 0.0);
  EXPECT_LE(g, 1.0);
  auto sa = a, sb = b;
  for (auto& x : sa) x *= 8.0;  // power of two keeps the binning bit-exact
  for (auto& x : sb) x *= 8.0;
  EXPECT_DOUBLE_EQ(gcnr_of(sa, sb), g);
  for (auto& x : sa) x *= 0.37;
  for (auto& x : sb) x *= 0.37;
  EXPECT_NEAR(gcnr_of(sa, sb), g, 1e-2);
}

TEST(Gcnr, MixingTowardEachOtherNeverIncreases) {
  // p_t = (1-t) p + t q, q_t = (1-t) q + t p realized by replicating samples;
  // the histogram difference scales by |1 - 2t|
  const auto a = uniform(0, 1, 400, 7), b = uniform(0.6, 1.4, 400, 8);
  const double g0 = gcnr_of(a, b);
  double prev = g0 + 1e-12;
  for (int j = 0; j <= 5; ++j) {
    std::vector<double> in, out;
    for (int r = 0; r < 10 - j; ++r) {
      in.insert(in.end(), a.begin(), a.end());
      out.insert(out.end(), b.begin(), b.end());
    }
    for (int r = 0; r < j; ++r) {
      in.insert(in.end(), b.begin(), b.end());
      out.insert(out.end(), a.begin(), a.end());
    }
    const double g = gcnr_of(in, out);
    EXPECT_LE(g, prev + 1e-12);
    EXPECT_NEAR(g, (1.0 - 2.0 * j / 10.0) * g0, 1e-9);
    prev = g;
  }
}

TEST(Gcnr, RejectsEmptyInput) {
  std::vector<double> none;
  const auto a = uniform(0, 1, 10, 1);
  EXPECT_THROW(gcnr_of(none, a), error);
  EXPECT_THROW(gcnr(std::span<const double>(a), std::span<const double>(a), 1), error);
}

TEST(Gcnr, ImageRois) {
  const auto grid = ImagingGrid::centered(0.0, 0.02, 41, 41, 1e-4, 1e-4);
  ComplexImage<double> img(grid, ImageKind::forces);
  const auto inside = RoiSpec::circle({-0.001, 0.02}, 0.0006);
  const auto bg = RoiSpec::rectangle({0.001, 0.02}, 0.001, 0.002);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < img.cols(); ++c)
    for (int r = 0; r < img.rows(); ++r)
      img.pixels(r, c) = inside.contains(grid.x(c), grid.z(r)) ? std::polar(0.05 * u(rng), 1.0) : std::polar(1.0 + u(rng), -2.0);
  EXPECT_DOUBLE_EQ(gcnr(img, inside, bg), 1.0);
  EXPECT_THROW((void)gcnr(img, RoiSpec::circle({0.0, 0.02}, 0.01), bg), error);
  EXPECT_THROW((void)gcnr(img, RoiSpec::circle({0.0, 0.02}, 0.0), bg), error);
}

TEST(RoiPixels, CircleCount) {
  const auto grid = ImagingGrid::centered(0.0, 0.02, 101, 101, 1e-4, 1e-4);
  const auto px = roi_pixels(RoiSpec::circle({0.0, 0.02}, 0.002), grid);
  // area pi r^2 / pixel area = 1256.6; lattice count within a few percent
  EXPECT_NEAR(static_cast<double>(px.size()), 1256.6, 40.0);
}

TEST(PsfWidth, GaussianFwhm) {
  const auto grid = ImagingGrid::centered(0.0, 0.02, 201, 151, 2e-5, 2e-5);
  const double sx = 1.5e-4, sz = 0.9e-4;
  const auto img = gaussian_blob(grid, 1e-4, 0.0201, sx, sz);
  const double fwhm_x = 2.0 * std::sqrt(2.0 * std::log(2.0)) * sx, fwhm_z = 2.0 * std::sqrt(2.0 * std::log(2.0)) * sz;
  // -6 dB on amplitude is the half-maximum point
  const auto wl = psf_width(img, Axis::lateral), wa = psf_width(img, Axis::axial);
  EXPECT_NEAR(wl.width, fwhm_x, grid.dx);
  EXPECT_NEAR(wa.width, fwhm_z, grid.dz);
  EXPECT_FALSE(wl.grid_limited);
  EXPECT_NEAR(fwhm_x, 2.355 * sx, 1e-3 * sx);
}

TEST(PsfWidth, AmplitudeScaleInvariant) {
  const auto grid = ImagingGrid::centered(0.0, 0.02, 101, 101, 2e-5, 2e-5);
  const auto a = gaussian_blob(grid, 0.0, 0.02, 1e-4, 1e-4, 1.0), b = gaussian_blob(grid, 0.0, 0.02, 1e-4, 1e-4, 37.5);
  EXPECT_NEAR(psf_width(a).width, psf_width(b).width, 1e-15);
}

TEST(PsfWidth, GridLimitedFlag) {
  const auto grid = ImagingGrid::centered(0.0, 0.02, 21, 21, 2e-5, 2e-5);
  const auto img = gaussian_blob(grid, 0.0, 0.02, 5e-3, 5e-3);
  EXPECT_TRUE(psf_width(img).grid_limited);
  EXPECT_THROW((void)psf_width(img, Axis::lateral, 3.0), error);
}

TEST(MotionRmse, ExactConstantAndEmpty) {
  auto f = MotionField::on_grid(40, 40, 10);
  for (std::size_t k = 0; k < f.size(); ++k) {
    f.valid[k] = 1;
    f.dx[k] = 2.0;
    f.dy[k] = -1.0;
  }
  auto truth = DenseField::uniform(40, 40, 2.0, -1.0);
  auto e = motion_rmse(f, truth);
  EXPECT_TRUE(e.defined);
  EXPECT_DOUBLE_EQ(e.rmse, 0.0);
  EXPECT_DOUBLE_EQ(e.valid_fraction, 1.0);

  truth = DenseField::uniform(40, 40, 3.0, -1.0);
  EXPECT_DOUBLE_EQ(motion_rmse(f, truth).rmse, 1.0);

  f.valid[0] = 0;
  EXPECT_DOUBLE_EQ(motion_rmse(f, truth).valid_fraction, 15.0 / 16.0);

  std::fill(f.valid.begin(), f.valid.end(), 0);
  e = motion_rmse(f, truth);
  EXPECT_FALSE(e.defined);
  EXPECT_THROW((void)motion_rmse(f, DenseField::uniform(10, 10, 0, 0)), error);
}

TEST(KeepSet, Parsing) {
  const auto k = parse_keep_set("1,30-80");
  ASSERT_EQ(k.size(), 52u);
  EXPECT_EQ(k.front(), 1);
  EXPECT_EQ(k[1], 30);
  EXPECT_EQ(k.back(), 80);
  EXPECT_EQ(parse_keep_set("3,1,2-3"), (std::vector<int>{1, 2, 3}));
  EXPECT_TRUE(parse_keep_set("").empty());
  EXPECT_THROW(parse_keep_set("5-2"), error);
  EXPECT_THROW(parse_keep_set("a"), error);
}

TEST(SvdFilter, FullKeepSetIsIdentity) {
  const auto e = random_ensemble(8, 1);
  EXPECT_LE(ensemble_diff(svd_filter(e, parse_keep_set("1-8")), e), 1e-6);
}

TEST(SvdFilter, RankOneEnsembleVanishesWithoutFirstIndex) {
  auto e = random_ensemble(1, 2);
  for (int k = 0; k < 5; ++k) e.frames.push_back(e.frames.front());
  const auto f = svd_filter(e, parse_keep_set("2-6"));
  for (const auto& fr : f.frames) EXPECT_LE(fr.pixels.norm(), 1e-9 * e.frames.front().pixels.norm());
}

TEST(SvdFilter, StaticPlusMover) {
  const auto grid = ImagingGrid::centered(0.0, 0.02, 32, 32, 1e-4, 1e-4);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix<double> tissue(32, 32);
  for (Eigen::Index i = 0; i < tissue.size(); ++i) tissue(i) = {g(rng), g(rng)};
  ImageEnsemble<double> still, mover, both;
  for (int k = 0; k < 32; ++k) {
    ComplexImage<double> a(grid, ImageKind::readi), b(grid, ImageKind::readi);
    a.pixels = tissue;
    const double cx = 4.0 + 0.8 * k;
    for (int c = 0; c < 32; ++c)
      for (int r = 0; r < 32; ++r) b.pixels(r, c) = std::polar(0.2, 1.1 * k) * std::exp(-((c - cx) * (c - cx) + (r - 16.0) * (r - 16.0)) / 3.0);
    ComplexImage<double> s = a;
    s.pixels += b.pixels;
    still.frames.push_back(a);
    mover.frames.push_back(b);
    both.frames.push_back(s);
  }
  const auto p = svd_projector(both, parse_keep_set("2-32"));
  EXPECT_LE(energy(apply_projector(still, p)), 0.01 * energy(still));
  EXPECT_GE(energy(apply_projector(mover, p)), 0.90 * energy(mover));
}

TEST(SvdFilter, ProjectorIsLinearAndIdempotent) {
  const auto x = random_ensemble(10, 5), y = random_ensemble(10, 6);
  const auto p = svd_projector(x, parse_keep_set("2-4,7"));
  ImageEnsemble<double> mix = x;
  const std::complex<double> a(0.7, -0.2), b(-1.3, 0.4);
  for (std::size_t k = 0; k < mix.frames.size(); ++k) mix.frames[k].pixels = a * x.frames[k].pixels + b * y.frames[k].pixels;
  const auto fx = apply_projector(x, p), fy = apply_projector(y, p), fm = apply_projector(mix, p);
  ImageEnsemble<double> want = fx;
  for (std::size_t k = 0; k < want.frames.size(); ++k) want.frames[k].pixels = a * fx.frames[k].pixels + b * fy.frames[k].pixels;
  EXPECT_LE(ensemble_diff(fm, want), 1e-12);
  EXPECT_LE(ensemble_diff(apply_projector(fx, p), fx), 1e-12);
}

TEST(SvdFilter, ComplementaryKeepSetsConserveEnergy) {
  const auto x = random_ensemble(12, 9);
  const double total = energy(x);
  const double split = energy(svd_filter(x, parse_keep_set("1,4-6,11"))) + energy(svd_filter(x, parse_keep_set("2-3,7-10,12")));
  EXPECT_NEAR(split / total, 1.0, 1e-6);
}

TEST(SvdFilter, Errors) {
  const auto x = random_ensemble(6, 1);
  EXPECT_THROW((void)svd_filter(x, {0}), error);
  EXPECT_THROW((void)svd_filter(x, {7}), error);
  const auto one = random_ensemble(1, 1);
  EXPECT_THROW((void)svd_filter(one, {1}), error);
}
