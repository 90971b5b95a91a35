// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "readi/motion.hpp"

using namespace readi;

namespace {

// smooth random texture, shifted copies are crops of one larger field
RealMatrix<double> texture(int rows, int cols, std::uint64_t seed, double sigma = 1.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  RealMatrix<double> raw(rows, cols);
  for (Eigen::Index k = 0; k < raw.size(); ++k) raw(k) = g(rng);
  const int half = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> kern(2 * half + 1);
  for (int i = -half; i <= half; ++i) kern[i + half] = std::exp(-0.5 * i * i / (sigma * sigma));
  RealMatrix<double> tmp = RealMatrix<double>::Zero(rows, cols), out = RealMatrix<double>::Zero(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int i = -half; i <= half; ++i)
        if (c + i >= 0 && c + i < cols) tmp(r, c) += kern[i + half] * raw(r, c + i);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int i = -half; i <= half; ++i)
        if (r + i >= 0 && r + i < rows) out(r, c) += kern[i + half] * tmp(r + i, c);
  return out.array().abs() + 0.1;
}

MotionConfig loose() {
  MotionConfig c;
  c.grid_spacing = 12;
  c.ref_patch = 24;
  c.search_margin = 8;
  c.abs_peak_threshold = 0.5;
  c.rel_peak_threshold = 0.0;
  c.min_curvature = 0.0;
  return c;
}

ComplexImage<double> as_image(const RealMatrix<double>& m) {
  ComplexImage<double> img(ImagingGrid::centered(0.0, 0.02, static_cast<int>(m.cols()), static_cast<int>(m.rows()), 1e-4, 1e-4),
                           ImageKind::readi);
  img.pixels = m.cast<std::complex<double>>();
  return img;
}

}  // namespace

TEST(Ncc, IdentityAndSign) {
  const auto a = texture(10, 12, 1);
  EXPECT_NEAR(ncc_surface(a, a)(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(ncc_surface(a, -a)(0, 0), -1.0, 1e-12);
  const RealMatrix<double> affine = (3.0 * a.array() + 7.0).matrix();
  EXPECT_NEAR(ncc_surface(a, affine)(0, 0), 1.0, 1e-12);
}

TEST(Ncc, LocatesEmbeddedPatch) {
  const auto big = texture(40, 50, 2);
  const RealMatrix<double> patch = big.block(13, 21, 9, 11);
  const auto s = ncc_surface(patch, big);
  ASSERT_EQ(s.rows(), 32);
  ASSERT_EQ(s.cols(), 40);
  Eigen::Index r = 0, c = 0;
  EXPECT_NEAR(s.maxCoeff(&r, &c), 1.0, 1e-9);
  EXPECT_EQ(r, 13);
  EXPECT_EQ(c, 21);
  EXPECT_LE(s.maxCoeff(), 1.0);
  EXPECT_GE(s.minCoeff(), -1.0);
}

TEST(Ncc, FlatRegionsAndErrors) {
  const auto a = texture(6, 6, 3);
  const RealMatrix<double> flat = RealMatrix<double>::Constant(8, 8, 4.0);
  EXPECT_EQ(ncc_surface(a, flat).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(ncc_surface(flat.topLeftCorner(6, 6), texture(8, 8, 4)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW((void)ncc_surface(texture(8, 8, 1), a), error);
}

TEST(Subpixel, RecoversParaboloidVertex) {
  RealMatrix<double> s(11, 11);
  for (int r = 0; r < 11; ++r)
    for (int c = 0; c < 11; ++c) {
      const double x = c - 5 - 0.3, y = r - 5 + 0.2;
      s(r, c) = 1.0 - x * x - y * y;
    }
  const auto p = subpixel_peak(s, 5, 5);
  EXPECT_NEAR(p.dx, 0.3, 1e-12);
  EXPECT_NEAR(p.dy, -0.2, 1e-12);
  EXPECT_NEAR(p.curvature, 2.0, 1e-12);
  EXPECT_NEAR(p.value, 1.0, 1e-12);
}

TEST(Subpixel, ClampsAndFlat) {
  RealMatrix<double> s(9, 9);
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c) s(r, c) = -0.1 * (c - 4 - 3.0) * (c - 4 - 3.0) - (r - 4.0) * (r - 4.0);
  EXPECT_DOUBLE_EQ(subpixel_peak(s, 4, 4).dx, 1.0);
  const RealMatrix<double> flat = RealMatrix<double>::Constant(7, 7, 0.5);
  const auto p = subpixel_peak(flat, 3, 3);
  EXPECT_EQ(p.curvature, 0.0);
  EXPECT_EQ(p.dx, 0.0);
  EXPECT_EQ(p.dy, 0.0);
  // edge peaks keep the integer location
  const auto e = subpixel_peak(s, 0, 0);
  EXPECT_EQ(e.dx, 0.0);
  EXPECT_THROW((void)subpixel_peak(s, 9, 0), error);
}

TEST(EstimateField, IdenticalImagesFailRelativeTest) {
  const auto a = texture(64, 64, 5);
  auto cfg = loose();
  cfg.rel_peak_threshold = 110.5;
  EXPECT_EQ(estimate_field(a, a, cfg).valid_count(), 0u);
  cfg.rel_peak_threshold = 100.0;
  const auto f = estimate_field(a, a, cfg);
  EXPECT_GT(f.valid_count(), 0u);
  // integer argmax is exact; the 5x5 paraboloid vertex carries a small bias
  for (std::size_t k = 0; k < f.size(); ++k)
    if (f.valid[k]) {
      EXPECT_NEAR(f.dx[k], 0.0, 0.15);
      EXPECT_NEAR(f.dy[k], 0.0, 0.15);
    }
}

TEST(EstimateField, IntegerTranslation) {
  const auto big = texture(90, 90, 6);
  const RealMatrix<double> ref = big.block(10, 10, 64, 64);
  const RealMatrix<double> tgt = big.block(10 + 1, 10 - 4, 64, 64);  // tgt(p + (4, -1)) == ref(p)
  const auto f = estimate_field(ref, tgt, loose());
  ASSERT_GT(f.valid_count(), 4u);
  for (std::size_t k = 0; k < f.size(); ++k)
    if (f.valid[k]) {
      EXPECT_NEAR(f.dx[k], 4.0, 0.15);
      EXPECT_NEAR(f.dy[k], -1.0, 0.15);
      EXPECT_NEAR(f.peak[k], 1.0, 1e-9);
    }
  const auto bound = loose().search_margin;
  for (std::size_t k = 0; k < f.size(); ++k) {
    EXPECT_LE(std::abs(f.dx[k]), bound + 1.0);
    EXPECT_LE(std::abs(f.dy[k]), bound + 1.0);
  }
}

TEST(EstimateField, IndependentNoiseMostlyInvalid) {
  const auto a = texture(96, 96, 7, 0.7), b = texture(96, 96, 8, 0.7);
  MotionConfig cfg;
  cfg.grid_spacing = 12;
  cfg.ref_patch = 24;
  cfg.search_margin = 10;
  const auto f = estimate_field(a, b, cfg);
  std::size_t interior = 0;
  for (std::size_t k = 0; k < f.size(); ++k) interior += f.peak[k] != 0.0;
  EXPECT_LT(2 * f.valid_count(), interior);
}

TEST(EstimateField, ThresholdsAreMonotonic) {
  const auto big = texture(90, 90, 9);
  RealMatrix<double> ref = big.block(10, 10, 64, 64), tgt = big.block(12, 9, 64, 64);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.3);
  for (Eigen::Index k = 0; k < tgt.size(); ++k) tgt(k) += g(rng);
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double t : {-1.0, 0.2, 0.5, 0.7, 0.9, 0.99}) {
    auto cfg = loose();
    cfg.abs_peak_threshold = t;
    const auto n = estimate_field(ref, tgt, cfg).valid_count();
    EXPECT_LE(n, prev);
    prev = n;
  }
  prev = std::numeric_limits<std::size_t>::max();
  for (double t : {0.0, 0.1, 0.5, 2.0, 100.0}) {
    auto cfg = loose();
    cfg.min_curvature = t;
    const auto n = estimate_field(ref, tgt, cfg).valid_count();
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(EstimateField, ConfigAndShapeErrors) {
  const auto a = texture(40, 40, 1);
  auto cfg = loose();
  cfg.search_margin = 0;
  EXPECT_THROW((void)estimate_field(a, a, cfg), error);
  cfg = loose();
  cfg.abs_peak_threshold = 1.5;
  EXPECT_THROW((void)estimate_field(a, a, cfg), error);
  EXPECT_THROW((void)estimate_field(a, texture(40, 41, 1), loose()), error);
}

TEST(Densify, UniformFieldStaysUniform) {
  auto f = MotionField::on_grid(30, 40, 10);
  for (std::size_t k = 0; k < f.size(); ++k) {
    f.dx[k] = 1.25;
    f.dy[k] = -0.5;
    f.valid[k] = k % 3 == 0;
  }
  const auto d = densify_field(f);
  ASSERT_EQ(d.rows(), 30);
  ASSERT_EQ(d.cols(), 40);
  EXPECT_NEAR((d.dx.array() - 1.25).abs().maxCoeff(), 0.0, 1e-15);
  EXPECT_NEAR((d.dy.array() + 0.5).abs().maxCoeff(), 0.0, 1e-15);
}

TEST(Densify, AllInvalidIsZero) {
  auto f = MotionField::on_grid(20, 20, 5);
  std::fill(f.dx.begin(), f.dx.end(), 3.0);
  const auto d = densify_field(f);
  EXPECT_EQ(d.dx.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d.dy.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Densify, LinearRampInterpolatesExactly) {
  auto f = MotionField::on_grid(25, 41, 8);
  for (std::size_t iy = 0; iy < f.nodes_y(); ++iy)
    for (std::size_t ix = 0; ix < f.nodes_x(); ++ix) {
      const auto k = f.index(iy, ix);
      f.valid[k] = 1;
      f.dx[k] = 0.1 * f.node_x[ix];
      f.dy[k] = 0.05 * f.node_y[iy] + 0.02 * f.node_x[ix];
    }
  const auto d = densify_field(f);
  const int last_x = f.node_x.back(), last_y = f.node_y.back();
  for (int r = 0; r < 25; ++r)
    for (int c = 0; c < 41; ++c) {
      const int cx = std::min(c, last_x), ry = std::min(r, last_y);
      EXPECT_NEAR(d.dx(r, c), 0.1 * cx, 1e-12);
      EXPECT_NEAR(d.dy(r, c), 0.05 * ry + 0.02 * cx, 1e-12);
    }
}

TEST(Densify, InvalidNodesTakeNearestValid) {
  auto f = MotionField::on_grid(21, 21, 10);  // 3 x 3 nodes
  f.valid[0] = 1;
  f.dx[0] = 2.0;
  f.valid[8] = 1;
  f.dx[8] = -2.0;
  const auto d = densify_field(f);
  EXPECT_DOUBLE_EQ(d.dx(0, 10), 2.0);   // node 1 is nearest to node 0
  EXPECT_DOUBLE_EQ(d.dx(20, 10), -2.0);  // node 7 is nearest to node 8
  EXPECT_DOUBLE_EQ(d.dx(10, 10), 2.0);   // equidistant, lower index wins
}

TEST(Warp, ZeroFieldIsIdentity) {
  const auto img = as_image(texture(20, 30, 1));
  const auto out = warp_image(img, DenseField::uniform(20, 30, 0.0, 0.0));
  EXPECT_EQ(out.pixels, img.pixels);
  EXPECT_EQ(out.provenance, ImageKind::warped);
}

TEST(Warp, IntegerAndHalfShifts) {
  const auto img = as_image(texture(20, 30, 2));
  const auto out = warp_image(img, DenseField::uniform(20, 30, 2.0, -1.0));
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 30; ++c) {
      const int sr = r - 1, sc = c + 2;
      const std::complex<double> want = (sr >= 0 && sc < 30) ? img.pixels(sr, sc) : std::complex<double>();
      EXPECT_EQ(out.pixels(r, c), want);
    }
  const auto half = warp_image(img, DenseField::uniform(20, 30, 0.5, 0.0));
  EXPECT_NEAR(std::abs(half.pixels(4, 7) - 0.5 * (img.pixels(4, 7) + img.pixels(4, 8))), 0.0, 1e-12);
  EXPECT_THROW((void)warp_image(img, DenseField::uniform(21, 30, 0.0, 0.0)), error);
}

TEST(Emc2, StaticImagesReduceToPlainCompound) {
  std::vector<ComplexImage<double>> low;
  for (int s = 0; s < 4; ++s) low.push_back(as_image(texture(48, 48, 11)));
  MotionConfig cfg;
  cfg.grid_spacing = 12;
  cfg.ref_patch = 16;
  cfg.search_margin = 6;
  cfg.reference_index = 2;
  const auto res = emc2_compensate(low, cfg);
  EXPECT_LE(relative_l2(res.image, compound(low)), 1e-15);
  EXPECT_EQ(res.fields[2].size(), 0u);
  EXPECT_EQ(res.fields[0].valid_count(), 0u);
}

TEST(Emc2, SingleImageAndErrors) {
  const std::vector<ComplexImage<double>> one{as_image(texture(32, 32, 1))};
  MotionConfig cfg;
  cfg.ref_patch = 16;
  EXPECT_EQ(emc2_compensate(one, cfg).image.pixels, one[0].pixels);
  cfg.reference_index = 1;
  EXPECT_THROW((void)emc2_compensate(one, cfg), error);
  EXPECT_THROW((void)emc2_compensate(std::vector<ComplexImage<double>>{}, MotionConfig{}), error);
}

TEST(Emc2, RealignsTranslatedImage) {
  const auto big = texture(100, 100, 12);
  std::vector<ComplexImage<double>> low{as_image(big.block(20, 20, 60, 60)), as_image(big.block(20, 23, 60, 60))};
  auto cfg = loose();
  cfg.grid_spacing = 8;
  cfg.ref_patch = 20;
  const auto res = emc2_compensate(low, cfg);
  // target(p + v) = reference(p) with v = (-3, 0)
  for (std::size_t k = 0; k < res.fields[1].size(); ++k)
    if (res.fields[1].valid[k]) EXPECT_NEAR(res.fields[1].dx[k], -3.0, 0.15);
  const auto plain = compound(low);
  double err = 0.0, err_plain = 0.0, ref = 0.0;
  for (int r = 10; r < 50; ++r)
    for (int c = 10; c < 50; ++c) {
      const auto want = 2.0 * low[0].pixels(r, c);
      err += std::norm(res.image.pixels(r, c) - want);
      err_plain += std::norm(plain.pixels(r, c) - want);
      ref += std::norm(want);
    }
  EXPECT_LT(std::sqrt(err / ref), 0.02);
  EXPECT_LT(err, 0.05 * err_plain);
}

TEST(MotionCsv, HeaderAndRows) {
  auto f = MotionField::on_grid(10, 20, 10);
  f.valid[1] = 1;
  f.dx[1] = 0.5;
  std::ostringstream os;
  write_motion_csv(os, f);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("x,y,dx,dy,valid,peak,curvature\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
  EXPECT_NE(s.find("\n10,0,0.5,0,1,0,0\n"), std::string::npos);
}
