// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "readi/beamform.hpp"
#include "readi/error.hpp"
#include "readi/image.hpp"
#include "readi/parallel.hpp"

namespace readi {

// Block-matching parameters; defaults sit mid-range of the usual tuning bands.
struct MotionConfig {
  int grid_spacing = 10;   // node spacing, px
  int ref_patch = 40;      // square patch side, px
  int search_margin = 36;  // px added on every side of the patch
  double abs_peak_threshold = 0.255;
  double rel_peak_threshold = 110.5;  // percent of the zero-displacement value
  double min_curvature = 0.0525;
  int reference_index = 0;  // 0-based into the low-res list
  int threads = 1;

  void validate() const {
    if (grid_spacing < 1) throw error(errc::invalid_argument, "motion.grid_spacing must be >= 1");
    if (ref_patch < 5) throw error(errc::invalid_argument, "motion.ref_patch must be >= 5");
    if (search_margin < 1) throw error(errc::invalid_argument, "motion.search_margin must be >= 1 so the search exceeds the patch");
    if (!(abs_peak_threshold >= -1.0 && abs_peak_threshold <= 1.0))
      throw error(errc::invalid_argument, "motion.abs_peak_threshold must lie in [-1, 1]");
    if (!(rel_peak_threshold >= 0.0)) throw error(errc::invalid_argument, "motion.rel_peak_threshold must be >= 0");
    if (!std::isfinite(min_curvature)) throw error(errc::invalid_argument, "motion.min_curvature must be finite");
    if (reference_index < 0) throw error(errc::invalid_argument, "motion.reference_index must be >= 0");
  }
};

// Sparse displacement estimates. Node k sits at pixel (node_x[ix], node_y[iy]),
// k = iy * node_x.size() + ix. Vectors are in pixels, x lateral (columns),
// y axial (rows); target(p + v) matches reference(p).
struct MotionField {
  int rows = 0, cols = 0;
  std::vector<int> node_x, node_y;
  std::vector<double> dx, dy, peak, curvature;
  std::vector<std::uint8_t> valid;

  std::size_t nodes_x() const noexcept { return node_x.size(); }
  std::size_t nodes_y() const noexcept { return node_y.size(); }
  std::size_t size() const noexcept { return node_x.size() * node_y.size(); }
  std::size_t index(std::size_t iy, std::size_t ix) const noexcept { return iy * node_x.size() + ix; }
  std::size_t valid_count() const noexcept { return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1)); }

  static MotionField on_grid(int rows, int cols, int spacing) {
    MotionField f;
    f.rows = rows;
    f.cols = cols;
    for (int x = 0; x < cols; x += spacing) f.node_x.push_back(x);
    for (int y = 0; y < rows; y += spacing) f.node_y.push_back(y);
    const std::size_t n = f.size();
    f.dx.assign(n, 0.0);
    f.dy.assign(n, 0.0);
    f.peak.assign(n, 0.0);
    f.curvature.assign(n, 0.0);
    f.valid.assign(n, 0);
    return f;
  }
};

// Per-pixel displacement, same shape as the image.
struct DenseField {
  RealMatrix<double> dx, dy;

  int rows() const noexcept { return static_cast<int>(dx.rows()); }
  int cols() const noexcept { return static_cast<int>(dx.cols()); }

  static DenseField uniform(int rows, int cols, double vx, double vy) {
    return {RealMatrix<double>::Constant(rows, cols, vx), RealMatrix<double>::Constant(rows, cols, vy)};
  }
};

namespace detail {

// Complex 2D transform, rows then columns.
class Fft2 {
 public:
  void forward(Eigen::MatrixXcd& m) { run(m, false); }
  void inverse(Eigen::MatrixXcd& m) { run(m, true); }

 private:
  void run(Eigen::MatrixXcd& m, bool inv) {
    const auto r = m.rows(), c = m.cols();
    in_.resize(static_cast<std::size_t>(c));
    out_.resize(static_cast<std::size_t>(c));
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) in_[static_cast<std::size_t>(j)] = m(i, j);
      inv ? fft_.inv(out_, in_) : fft_.fwd(out_, in_);
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = out_[static_cast<std::size_t>(j)];
    }
    in_.resize(static_cast<std::size_t>(r));
    out_.resize(static_cast<std::size_t>(r));
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) in_[static_cast<std::size_t>(i)] = m(i, j);
      inv ? fft_.inv(out_, in_) : fft_.fwd(out_, in_);
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = out_[static_cast<std::size_t>(i)];
    }
  }

  Eigen::FFT<double> fft_;
  std::vector<std::complex<double>> in_, out_;
};

}  // namespace detail

// Normalized cross-correlation of ref against every placement inside search.
// surface(r, c) compares ref with search.block(r, c, h, w).
inline RealMatrix<double> ncc_surface(const Eigen::Ref<const RealMatrix<double>>& ref,
                                      const Eigen::Ref<const RealMatrix<double>>& search) {
  const Eigen::Index h = ref.rows(), w = ref.cols(), hs = search.rows(), ws = search.cols();
  if (h < 1 || w < 1) throw error(errc::invalid_argument, "ncc_surface: empty reference patch");
  if (hs < h || ws < w) throw error(errc::dimension_mismatch, "ncc_surface: search region smaller than reference patch");
  const Eigen::Index out_r = hs - h + 1, out_c = ws - w + 1;
  const double n = static_cast<double>(h * w);

  const double ref_mean = ref.mean();
  const RealMatrix<double> p = ref.array() - ref_mean;
  const double p_energy = p.squaredNorm();

  // numerator: circular correlation of search with the zero-mean patch; the
  // valid placements never wrap
  Eigen::MatrixXcd fs = search.cast<std::complex<double>>();
  Eigen::MatrixXcd fp = Eigen::MatrixXcd::Zero(hs, ws);
  fp.topLeftCorner(h, w) = p.cast<std::complex<double>>();
  detail::Fft2 fft;
  fft.forward(fs);
  fft.forward(fp);
  fs.array() *= fp.array().conjugate();
  fft.inverse(fs);

  // window sums of s and s^2 from integral images
  RealMatrix<double> i1 = RealMatrix<double>::Zero(hs + 1, ws + 1), i2 = RealMatrix<double>::Zero(hs + 1, ws + 1);
  for (Eigen::Index r = 0; r < hs; ++r)
    for (Eigen::Index c = 0; c < ws; ++c) {
      const double v = search(r, c);
      i1(r + 1, c + 1) = v + i1(r, c + 1) + i1(r + 1, c) - i1(r, c);
      i2(r + 1, c + 1) = v * v + i2(r, c + 1) + i2(r + 1, c) - i2(r, c);
    }
  auto box = [&](const RealMatrix<double>& ii, Eigen::Index r, Eigen::Index c) {
    return ii(r + h, c + w) - ii(r, c + w) - ii(r + h, c) + ii(r, c);
  };

  RealMatrix<double> out(out_r, out_c);
  for (Eigen::Index r = 0; r < out_r; ++r)
    for (Eigen::Index c = 0; c < out_c; ++c) {
      const double sum = box(i1, r, c), sq = box(i2, r, c);
      const double s_energy = sq - sum * sum / n;
      // flat windows (up to rounding of the running sums) correlate as zero
      const double tol = 1e-12 * std::max(sq, std::numeric_limits<double>::min());
      if (!(p_energy > 1e-12 * std::max(ref.squaredNorm(), std::numeric_limits<double>::min())) || !(s_energy > tol)) {
        out(r, c) = 0.0;
        continue;
      }
      out(r, c) = std::clamp(fs(r, c).real() / std::sqrt(p_energy * s_energy), -1.0, 1.0);
    }
  return out;
}

struct SubpixelPeak {
  double dx = 0.0, dy = 0.0;  // offset from the integer peak (columns, rows)
  double value = 0.0;         // fitted surface value at the vertex
  double curvature = 0.0;     // min eigenvalue of -Hessian; > 0 for a proper maximum
};

// Least-squares paraboloid z = a + b x + c y + d x^2 + e x y + f y^2 over the
// 5x5 neighbourhood of (row, col).
inline SubpixelPeak subpixel_peak(const Eigen::Ref<const RealMatrix<double>>& surface, Eigen::Index row, Eigen::Index col) {
  if (row < 0 || col < 0 || row >= surface.rows() || col >= surface.cols())
    throw error(errc::out_of_range, "subpixel_peak: peak location outside the surface");
  SubpixelPeak out;
  out.value = surface(row, col);

  Eigen::Matrix<double, Eigen::Dynamic, 6> a(25, 6);
  Eigen::VectorXd z(25);
  int m = 0;
  for (int y = -2; y <= 2; ++y)
    for (int x = -2; x <= 2; ++x) {
      const Eigen::Index r = row + y, c = col + x;
      if (r < 0 || c < 0 || r >= surface.rows() || c >= surface.cols()) continue;
      a.row(m) << 1.0, x, y, double(x * x), double(x * y), double(y * y);
      z(m) = surface(r, c);
      ++m;
    }
  const bool full = m == 25;
  const auto qr = a.topRows(m).colPivHouseholderQr();
  if (m < 6 || qr.rank() < 6) return out;  // degenerate support: integer peak, zero curvature
  const Eigen::Matrix<double, 6, 1> k = qr.solve(z.head(m));

  Eigen::Matrix2d hess;
  hess << 2.0 * k(3), k(4), k(4), 2.0 * k(5);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(-hess);
  out.curvature = eig.eigenvalues().minCoeff();
  // a flat fit leaves rounding-level noise; report it as zero
  if (std::abs(out.curvature) < 1e-12) out.curvature = 0.0;

  if (!full || out.curvature <= 0.0) return out;
  const Eigen::Vector2d v = hess.ldlt().solve(Eigen::Vector2d(-k(1), -k(2)));
  out.dx = std::clamp(v(0), -1.0, 1.0);
  out.dy = std::clamp(v(1), -1.0, 1.0);
  out.value = k(0) + k(1) * out.dx + k(2) * out.dy + k(3) * out.dx * out.dx + k(4) * out.dx * out.dy + k(5) * out.dy * out.dy;
  return out;
}

// Block matching of target against reference on real (envelope) images.
inline MotionField estimate_field(const RealMatrix<double>& reference, const RealMatrix<double>& target, const MotionConfig& cfg) {
  cfg.validate();
  if (reference.rows() != target.rows() || reference.cols() != target.cols())
    throw error(errc::dimension_mismatch, "estimate_field: reference and target sizes differ");
  const int rows = static_cast<int>(reference.rows()), cols = static_cast<int>(reference.cols());
  auto field = MotionField::on_grid(rows, cols, cfg.grid_spacing);
  const int h = cfg.ref_patch, half = cfg.ref_patch / 2;

  parallel_for(0, field.size(), cfg.threads, [&](std::size_t k) {
    const int px = field.node_x[k % field.nodes_x()], py = field.node_y[k / field.nodes_x()];
    const int x0 = px - half, y0 = py - half;
    if (x0 < 0 || y0 < 0 || x0 + h > cols || y0 + h > rows) return;  // patch leaves the image
    const int sx0 = std::max(0, x0 - cfg.search_margin), sy0 = std::max(0, y0 - cfg.search_margin);
    const int sx1 = std::min(cols, x0 + h + cfg.search_margin), sy1 = std::min(rows, y0 + h + cfg.search_margin);
    if (sx1 - sx0 <= h && sy1 - sy0 <= h) return;

    const RealMatrix<double> surf =
        ncc_surface(reference.block(y0, x0, h, h), target.block(sy0, sx0, sy1 - sy0, sx1 - sx0));
    Eigen::Index pr = 0, pc = 0;
    const double peak = surf.maxCoeff(&pr, &pc);
    const double zero_value = surf(y0 - sy0, x0 - sx0);
    const auto fit = subpixel_peak(surf, pr, pc);

    field.peak[k] = peak;
    field.curvature[k] = fit.curvature;
    const bool ok = peak >= cfg.abs_peak_threshold && peak >= cfg.rel_peak_threshold / 100.0 * zero_value &&
                    fit.curvature >= cfg.min_curvature;
    if (!ok) return;
    field.valid[k] = 1;
    field.dx[k] = static_cast<double>(sx0 + pc - x0) + fit.dx;
    field.dy[k] = static_cast<double>(sy0 + pr - y0) + fit.dy;
  });
  return field;
}

// Correlation runs on envelopes; phase is left to the warp.
template <class T>
MotionField estimate_field(const ComplexImage<T>& reference, const ComplexImage<T>& target, const MotionConfig& cfg) {
  if (!(reference.grid == target.grid)) throw error(errc::dimension_mismatch, "estimate_field: images are on different grids");
  return estimate_field(envelope(reference).template cast<double>().eval(), envelope(target).template cast<double>().eval(), cfg);
}

// Invalid nodes take the nearest valid node's vector, then the node grid is
// bilinearly interpolated to every pixel (held constant past the last node).
inline DenseField densify_field(const MotionField& field) {
  auto dense = DenseField::uniform(field.rows, field.cols, 0.0, 0.0);
  if (field.valid_count() == 0 || field.size() == 0) return dense;
  if (field.rows <= 0 || field.cols <= 0) return dense;

  const std::size_t nx = field.nodes_x(), ny = field.nodes_y();
  std::vector<double> fx(field.size()), fy(field.size());
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const std::size_t k = field.index(iy, ix);
      if (field.valid[k]) {
        fx[k] = field.dx[k];
        fy[k] = field.dy[k];
        continue;
      }
      // ties go to the lowest node index
      double best = std::numeric_limits<double>::infinity();
      std::size_t pick = 0;
      for (std::size_t j = 0; j < field.size(); ++j) {
        if (!field.valid[j]) continue;
        const double ddx = static_cast<double>(field.node_x[j % nx]) - field.node_x[ix];
        const double ddy = static_cast<double>(field.node_y[j / nx]) - field.node_y[iy];
        const double d2 = ddx * ddx + ddy * ddy;
        if (d2 < best) {
          best = d2;
          pick = j;
        }
      }
      fx[k] = field.dx[pick];
      fy[k] = field.dy[pick];
    }

  // bracket a pixel coordinate between node positions
  auto bracket = [](const std::vector<int>& nodes, int p, std::size_t& i0, double& t) {
    if (nodes.size() == 1 || p <= nodes.front()) {
      i0 = 0;
      t = 0.0;
      return;
    }
    if (p >= nodes.back()) {
      i0 = nodes.size() - 2;
      t = 1.0;
      return;
    }
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), p);
    i0 = static_cast<std::size_t>(it - nodes.begin()) - 1;
    t = static_cast<double>(p - nodes[i0]) / static_cast<double>(nodes[i0 + 1] - nodes[i0]);
  };

  for (int c = 0; c < field.cols; ++c) {
    std::size_t ix0;
    double tx;
    bracket(field.node_x, c, ix0, tx);
    const std::size_t ix1 = nx > 1 ? ix0 + 1 : ix0;
    for (int r = 0; r < field.rows; ++r) {
      std::size_t iy0;
      double ty;
      bracket(field.node_y, r, iy0, ty);
      const std::size_t iy1 = ny > 1 ? iy0 + 1 : iy0;
      auto lerp2 = [&](const std::vector<double>& v) {
        const double top = v[field.index(iy0, ix0)] * (1.0 - tx) + v[field.index(iy0, ix1)] * tx;
        const double bottom = v[field.index(iy1, ix0)] * (1.0 - tx) + v[field.index(iy1, ix1)] * tx;
        return top * (1.0 - ty) + bottom * ty;
      };
      dense.dx(r, c) = lerp2(fx);
      dense.dy(r, c) = lerp2(fy);
    }
  }
  return dense;
}

// Backward warp: out(p) = image(p + v(p)), bilinear on re/im, zero outside.
template <class T>
ComplexImage<T> warp_image(const ComplexImage<T>& image, const DenseField& field, int threads = 1) {
  if (field.rows() != image.rows() || field.cols() != image.cols())
    throw error(errc::dimension_mismatch, "warp_image: field and image sizes differ");
  ComplexImage<T> out(image.grid, ImageKind::warped);
  out.group = image.group;
  const int rows = image.rows(), cols = image.cols();
  parallel_for(0, static_cast<std::size_t>(cols), threads, [&](std::size_t cc) {
    const int c = static_cast<int>(cc);
    for (int r = 0; r < rows; ++r) {
      const double x = c + field.dx(r, c), y = r + field.dy(r, c);
      if (!(x >= 0.0 && y >= 0.0 && x <= cols - 1 && y <= rows - 1)) continue;
      const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
      const T fx = static_cast<T>(x - x0), fy = static_cast<T>(y - y0);
      auto at_row = [&](int yy) {
        std::complex<T> v = image.pixels(yy, x0);
        if (fx > T(0)) v += fx * (image.pixels(yy, x0 + 1) - v);
        return v;
      };
      std::complex<T> v = at_row(y0);
      if (fy > T(0)) v += fy * (at_row(y0 + 1) - v);
      out.pixels(r, c) = v;
    }
  });
  return out;
}

template <class T>
struct Emc2Result {
  ComplexImage<T> image;
  std::vector<MotionField> fields;  // one per low-res image; the reference's is empty
};

// Estimate each target against the reference, warp onto it, compound.
template <class T>
Emc2Result<T> emc2_compensate(const std::vector<ComplexImage<T>>& low_res, const MotionConfig& cfg) {
  cfg.validate();
  if (low_res.empty()) throw error(errc::invalid_argument, "emc2_compensate needs at least one image");
  const auto ref = static_cast<std::size_t>(cfg.reference_index);
  if (ref >= low_res.size())
    throw error(errc::out_of_range, "motion.reference_index " + std::to_string(cfg.reference_index) + " but only " +
                                        std::to_string(low_res.size()) + " low-res images");
  for (const auto& img : low_res)
    if (!(img.grid == low_res[ref].grid)) throw error(errc::dimension_mismatch, "emc2_compensate: images are on different grids");

  Emc2Result<T> res;
  res.fields.resize(low_res.size());
  std::vector<ComplexImage<T>> aligned;
  aligned.reserve(low_res.size());
  for (std::size_t s = 0; s < low_res.size(); ++s) {
    if (s == ref) {
      aligned.push_back(low_res[s]);
      continue;
    }
    res.fields[s] = estimate_field(low_res[ref], low_res[s], cfg);
    aligned.push_back(warp_image(low_res[s], densify_field(res.fields[s]), cfg.threads));
  }
  res.image = compound(aligned);
  return res;
}

// CSV: x, y, dx, dy, valid, peak, curvature (pixels).
inline void write_motion_csv(std::ostream& os, const MotionField& f) {
  os << "x,y,dx,dy,valid,peak,curvature\n";
  os.precision(9);
  for (std::size_t iy = 0; iy < f.nodes_y(); ++iy)
    for (std::size_t ix = 0; ix < f.nodes_x(); ++ix) {
      const std::size_t k = f.index(iy, ix);
      os << f.node_x[ix] << ',' << f.node_y[iy] << ',' << f.dx[k] << ',' << f.dy[k] << ',' << int(f.valid[k]) << ',' << f.peak[k]
         << ',' << f.curvature[k] << '\n';
    }
}

}  // namespace readi
