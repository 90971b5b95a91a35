// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "readi/error.hpp"
#include "readi/image.hpp"
#include "readi/motion.hpp"
#include "readi/simulate.hpp"

namespace readi {

enum class RoiShape { circle, rectangle };

// center and dimensions in meters; circle uses width as the diameter
struct RoiSpec {
  RoiShape shape = RoiShape::circle;
  Vec2 center;
  double width = 0.0;
  double height = 0.0;

  static RoiSpec circle(Vec2 c, double radius) { return {RoiShape::circle, c, 2.0 * radius, 2.0 * radius}; }
  static RoiSpec rectangle(Vec2 c, double w, double h) { return {RoiShape::rectangle, c, w, h}; }

  bool contains(double x, double z) const noexcept {
    if (shape == RoiShape::circle) {
      const double r = 0.5 * width;
      return (x - center.x) * (x - center.x) + (z - center.z) * (z - center.z) <= r * r;
    }
    return std::abs(x - center.x) <= 0.5 * width && std::abs(z - center.z) <= 0.5 * height;
  }

  bool inside_grid(const ImagingGrid& g) const noexcept {
    const double hw = 0.5 * width, hh = shape == RoiShape::circle ? 0.5 * width : 0.5 * height;
    const double eps = 1e-9;
    return center.x - hw >= g.x_min - eps && center.x + hw <= g.x_max + eps && center.z - hh >= g.z_min - eps &&
           center.z + hh <= g.z_max + eps;
  }
};

// Pixel (row, col) pairs covered by the ROI.
inline std::vector<std::pair<int, int>> roi_pixels(const RoiSpec& roi, const ImagingGrid& grid) {
  if (!(roi.width > 0.0) || (roi.shape == RoiShape::rectangle && !(roi.height > 0.0)))
    throw error(errc::invalid_argument, "ROI dimensions must be > 0");
  if (!roi.inside_grid(grid)) throw error(errc::out_of_range, "ROI extends past the imaging grid");
  std::vector<std::pair<int, int>> out;
  for (int c = 0; c < grid.n_x(); ++c)
    for (int r = 0; r < grid.n_z(); ++r)
      if (roi.contains(grid.x(c), grid.z(r))) out.emplace_back(r, c);
  if (out.empty()) throw error(errc::invalid_argument, "ROI covers no pixels");
  return out;
}

// 1 - sum_b min(p_in, p_out) over a histogram spanning both sample sets.
inline double gcnr(std::span<const double> inside, std::span<const double> background, int n_bins = 100) {
  if (inside.empty() || background.empty()) throw error(errc::invalid_argument, "gcnr: empty region");
  if (n_bins < 2) throw error(errc::invalid_argument, "gcnr: n_bins must be >= 2");
  const auto [a_lo, a_hi] = std::minmax_element(inside.begin(), inside.end());
  const auto [b_lo, b_hi] = std::minmax_element(background.begin(), background.end());
  const double lo = std::min(*a_lo, *b_lo), hi = std::max(*a_hi, *b_hi);
  if (!(hi > lo)) return 0.0;  // a single shared value: complete overlap
  const double scale = n_bins / (hi - lo);
  auto histogram = [&](std::span<const double> v) {
    std::vector<double> h(static_cast<std::size_t>(n_bins), 0.0);
    for (double x : v) {
      const int b = std::min(n_bins - 1, static_cast<int>((x - lo) * scale));
      h[static_cast<std::size_t>(b)] += 1.0;
    }
    for (auto& x : h) x /= static_cast<double>(v.size());
    return h;
  };
  const auto p = histogram(inside), q = histogram(background);
  double overlap = 0.0;
  for (int b = 0; b < n_bins; ++b) overlap += std::min(p[static_cast<std::size_t>(b)], q[static_cast<std::size_t>(b)]);
  return std::clamp(1.0 - overlap, 0.0, 1.0);
}

// gCNR of envelope amplitudes inside vs background.
template <class T>
double gcnr(const ComplexImage<T>& image, const RoiSpec& inside, const RoiSpec& background, int n_bins = 100) {
  auto sample = [&](const RoiSpec& roi) {
    std::vector<double> v;
    for (const auto& [r, c] : roi_pixels(roi, image.grid)) v.push_back(static_cast<double>(std::abs(image.pixels(r, c))));
    return v;
  };
  const auto a = sample(inside), b = sample(background);
  return gcnr(std::span<const double>(a), std::span<const double>(b), n_bins);
}

enum class Axis { lateral, axial };

struct PsfWidth {
  double width = 0.0;  // meters
  bool grid_limited = false;
};

// Width of the envelope profile through the global peak at level_db below it.
template <class T>
PsfWidth psf_width(const ComplexImage<T>& image, Axis axis = Axis::lateral, double level_db = -6.0) {
  if (!(level_db < 0.0)) throw error(errc::invalid_argument, "psf_width: level_db must be negative");
  if (image.pixels.size() == 0) throw error(errc::invalid_argument, "psf_width: empty image");
  const RealMatrix<double> env = envelope(image).template cast<double>();
  Eigen::Index pr = 0, pc = 0;
  const double peak = env.maxCoeff(&pr, &pc);
  if (!(peak > 0.0)) throw error(errc::invalid_argument, "psf_width: image has no peak");
  const Eigen::VectorXd profile = axis == Axis::lateral ? Eigen::VectorXd(env.row(pr).transpose()) : Eigen::VectorXd(env.col(pc));
  const Eigen::Index p = axis == Axis::lateral ? pc : pr;
  const double step = axis == Axis::lateral ? image.grid.dx : image.grid.dz;
  const double level = peak * std::pow(10.0, level_db / 20.0);

  PsfWidth out;
  // fractional index of the crossing walking from the peak in direction dir
  auto crossing = [&](int dir) {
    Eigen::Index k = p;
    while (true) {
      const Eigen::Index next = k + dir;
      if (next < 0 || next >= profile.size()) {
        out.grid_limited = true;
        return static_cast<double>(k);
      }
      if (profile(next) < level) {
        const double t = (profile(k) - level) / (profile(k) - profile(next));
        return static_cast<double>(k) + dir * t;
      }
      k = next;
    }
  };
  const double left = crossing(-1), right = crossing(+1);
  out.width = (right - left) * step;
  return out;
}

struct MotionError {
  double rmse = 0.0;  // pixels
  double valid_fraction = 0.0;
  bool defined = false;  // false when no node is valid
};

// RMSE over valid nodes against the true field sampled at the node pixels.
inline MotionError motion_rmse(const MotionField& estimated, const DenseField& truth) {
  if (truth.rows() != estimated.rows || truth.cols() != estimated.cols)
    throw error(errc::dimension_mismatch, "motion_rmse: field sizes differ");
  MotionError out;
  if (estimated.size() == 0) return out;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t iy = 0; iy < estimated.nodes_y(); ++iy)
    for (std::size_t ix = 0; ix < estimated.nodes_x(); ++ix) {
      const std::size_t k = estimated.index(iy, ix);
      if (!estimated.valid[k]) continue;
      const double ex = estimated.dx[k] - truth.dx(estimated.node_y[iy], estimated.node_x[ix]);
      const double ey = estimated.dy[k] - truth.dy(estimated.node_y[iy], estimated.node_x[ix]);
      sum += ex * ex + ey * ey;
      ++n;
    }
  out.valid_fraction = static_cast<double>(n) / static_cast<double>(estimated.size());
  if (n == 0) return out;
  out.defined = true;
  out.rmse = std::sqrt(sum / static_cast<double>(n));
  return out;
}

template <class T>
struct ImageEnsemble {
  std::vector<ComplexImage<T>> frames;
  double frame_interval = 0.0;  // seconds

  std::size_t size() const noexcept { return frames.size(); }
};

template <class T>
double energy(const ImageEnsemble<T>& e) {
  double s = 0.0;
  for (const auto& f : e.frames) s += static_cast<double>(f.pixels.squaredNorm());
  return s;
}

namespace detail {

template <class T>
Eigen::MatrixXcd casorati(const ImageEnsemble<T>& e) {
  if (e.frames.size() < 2) throw error(errc::invalid_argument, "SVD filter needs at least 2 frames");
  const auto& first = e.frames.front();
  for (const auto& f : e.frames)
    if (!(f.grid == first.grid) || f.rows() != first.rows() || f.cols() != first.cols())
      throw error(errc::dimension_mismatch, "ensemble frames differ in grid");
  const Eigen::Index px = first.pixels.size();
  Eigen::MatrixXcd x(px, static_cast<Eigen::Index>(e.frames.size()));
  for (std::size_t k = 0; k < e.frames.size(); ++k)
    x.col(static_cast<Eigen::Index>(k)) =
        Eigen::Map<const ComplexMatrix<T>>(e.frames[k].pixels.data(), px, 1).template cast<std::complex<double>>();
  return x;
}

}  // namespace detail

// Parses "1,30-80" style singular-index sets (1-based, inclusive ranges).
inline std::vector<int> parse_keep_set(const std::string& text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string tok = text.substr(pos, end - pos);
    if (!tok.empty()) {
      const std::size_t dash = tok.find('-');
      try {
        if (dash == std::string::npos) {
          out.push_back(std::stoi(tok));
        } else {
          const int a = std::stoi(tok.substr(0, dash)), b = std::stoi(tok.substr(dash + 1));
          if (b < a) throw error(errc::invalid_argument, "keep set range '" + tok + "' is reversed");
          for (int i = a; i <= b; ++i) out.push_back(i);
        }
      } catch (const std::logic_error&) {
        throw error(errc::invalid_argument, "bad keep set token '" + tok + "'");
      }
    }
    pos = end + 1;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Temporal projector V_K V_K^H for the 1-based singular indices in keep.
// Casorati X (pixels x frames) filtered with keep-set K is X V_K V_K^H.
template <class T>
Eigen::MatrixXcd svd_projector(const ImageEnsemble<T>& ensemble, const std::vector<int>& keep) {
  const Eigen::MatrixXcd x = detail::casorati(ensemble);
  const Eigen::Index rank = std::min(x.rows(), x.cols());
  for (int k : keep)
    if (k < 1 || k > rank)
      throw error(errc::out_of_range, "singular index " + std::to_string(k) + " outside 1.." + std::to_string(rank));
  const Eigen::BDCSVD<Eigen::MatrixXcd> svd(x, Eigen::ComputeThinV);
  const Eigen::MatrixXcd& v = svd.matrixV();
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(x.cols(), x.cols());
  for (int k : keep) p += v.col(k - 1) * v.col(k - 1).adjoint();
  return p;
}

template <class T>
ImageEnsemble<T> apply_projector(const ImageEnsemble<T>& ensemble, const Eigen::MatrixXcd& projector) {
  const Eigen::MatrixXcd x = detail::casorati(ensemble);
  if (projector.rows() != x.cols() || projector.cols() != x.cols())
    throw error(errc::dimension_mismatch, "projector size does not match the frame count");
  const Eigen::MatrixXcd y = x * projector;
  ImageEnsemble<T> out = ensemble;
  for (std::size_t k = 0; k < out.frames.size(); ++k) {
    auto& f = out.frames[k];
    Eigen::Map<ComplexMatrix<T>>(f.pixels.data(), f.pixels.size(), 1) =
        y.col(static_cast<Eigen::Index>(k)).template cast<std::complex<T>>();
  }
  return out;
}

// Casorati SVD; singular values outside keep (1-based) are zeroed.
template <class T>
ImageEnsemble<T> svd_filter(const ImageEnsemble<T>& ensemble, const std::vector<int>& keep) {
  return apply_projector(ensemble, svd_projector(ensemble, keep));
}

}  // namespace readi
