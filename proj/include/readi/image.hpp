// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "readi/error.hpp"

namespace readi {

// Pixel (ix, iz) sits at (x_min + ix*dx, z_min + iz*dz).
struct ImagingGrid {
  double x_min = -5e-3, x_max = 5e-3;
  double z_min = 15e-3, z_max = 25e-3;
  double dx = 5e-5, dz = 5e-5;

  int n_x() const noexcept { return static_cast<int>(std::floor((x_max - x_min) / dx + 1e-6)) + 1; }
  int n_z() const noexcept { return static_cast<int>(std::floor((z_max - z_min) / dz + 1e-6)) + 1; }
  double x(int ix) const noexcept { return x_min + ix * dx; }
  double z(int iz) const noexcept { return z_min + iz * dz; }

  static ImagingGrid centered(double x_center, double z_center, int nx, int nz, double dx, double dz) {
    ImagingGrid g;
    g.dx = dx;
    g.dz = dz;
    g.x_min = x_center - 0.5 * (nx - 1) * dx;
    g.x_max = g.x_min + (nx - 1) * dx;
    g.z_min = z_center - 0.5 * (nz - 1) * dz;
    g.z_max = g.z_min + (nz - 1) * dz;
    return g;
  }

  void validate() const {
    if (!(dx > 0.0) || !(dz > 0.0)) throw error(errc::invalid_argument, "grid.pixel_size must be > 0");
    if (!(x_max >= x_min) || !(z_max >= z_min)) throw error(errc::invalid_argument, "grid extents must be nonempty");
  }

  bool operator==(const ImagingGrid&) const = default;
};

enum class ImageKind { das, forces, readi, compound, warped, uforces };

inline const char* to_string(ImageKind k) {
  switch (k) {
    case ImageKind::das: return "das";
    case ImageKind::forces: return "forces";
    case ImageKind::readi: return "readi";
    case ImageKind::compound: return "compound";
    case ImageKind::warped: return "warped";
    case ImageKind::uforces: return "uforces";
  }
  return "unknown";
}

template <class T>
using ComplexMatrix = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using RealMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Beamformed analytic image; rows are axial samples, columns lateral.
template <class T>
struct ComplexImage {
  ImagingGrid grid;
  ComplexMatrix<T> pixels;
  ImageKind provenance = ImageKind::das;
  int group = 0;  // READI group s for provenance == readi

  ComplexImage() = default;
  ComplexImage(const ImagingGrid& g, ImageKind kind) : grid(g), pixels(ComplexMatrix<T>::Zero(g.n_z(), g.n_x())), provenance(kind) {}

  int rows() const noexcept { return static_cast<int>(pixels.rows()); }
  int cols() const noexcept { return static_cast<int>(pixels.cols()); }
};

template <class T>
RealMatrix<T> envelope(const ComplexImage<T>& img) {
  return img.pixels.cwiseAbs();
}

template <class T>
double relative_l2(const ComplexImage<T>& a, const ComplexImage<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw error(errc::dimension_mismatch, "image size mismatch");
  double num = 0.0, den = 0.0;
  for (Eigen::Index k = 0; k < a.pixels.size(); ++k) {
    num += static_cast<double>(std::norm(a.pixels(k) - b.pixels(k)));
    den += static_cast<double>(std::norm(b.pixels(k)));
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

template <class To, class T>
ComplexImage<To> cast(const ComplexImage<T>& in) {
  ComplexImage<To> out;
  out.grid = in.grid;
  out.provenance = in.provenance;
  out.group = in.group;
  out.pixels = in.pixels.template cast<std::complex<To>>();
  return out;
}

// 8-bit display image, row-major (axial rows).
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t operator()(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  bool operator==(const GrayImage&) const = default;
};

// 20 log10(|p| / max) clipped to [-dr, 0] and mapped onto [0, 255].
template <class T>
GrayImage envelope_log(const ComplexImage<T>& img, double dynamic_range_db = 60.0) {
  if (!(dynamic_range_db > 0.0)) throw error(errc::invalid_argument, "dynamic_range_db must be > 0");
  GrayImage out{img.cols(), img.rows(), std::vector<std::uint8_t>(static_cast<std::size_t>(img.pixels.size()), 0)};
  double peak = 0.0;
  for (Eigen::Index k = 0; k < img.pixels.size(); ++k) peak = std::max(peak, static_cast<double>(std::abs(img.pixels(k))));
  if (peak == 0.0) return out;
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c) {
      const double a = static_cast<double>(std::abs(img.pixels(r, c))) / peak;
      const double db = a > 0.0 ? 20.0 * std::log10(a) : -dynamic_range_db;
      const double level = std::clamp((db + dynamic_range_db) / dynamic_range_db, 0.0, 1.0);
      out.pixels[static_cast<std::size_t>(r) * out.width + c] = static_cast<std::uint8_t>(std::lround(255.0 * level));
    }
  return out;
}

}  // namespace readi
