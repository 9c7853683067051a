/* GRID.HPP  Dense complex/real 2-D fields and windowed extract/accumulate
 *           primitives shared by all reconstruction code.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptycho {

using cdouble = std::complex<double>;

/// Top-left corner of a probe-sized window inside the object canvas, in
/// integer pixels.
struct ScanPosition {
  int y = 0;
  int x = 0;
};

struct GridShape {
  int height = 0;
  int width = 0;
  bool operator==(const GridShape&) const = default;
  std::int64_t pixels() const { return std::int64_t(height) * width; }
};

namespace detail {
inline void check_shape(int height, int width) {
  if (height <= 0 || width <= 0)
    throw std::invalid_argument("grid dimensions must be positive");
}
}  // namespace detail

/// Row-major complex field. Used for objects, probes, exit waves and spectra.
class ComplexGrid {
 public:
  ComplexGrid() = default;
  ComplexGrid(int height, int width)
      : height_(height), width_(width), data_(std::size_t(height) * width) {
    detail::check_shape(height, width);
  }
  ComplexGrid(int height, int width, std::vector<cdouble> data)
      : height_(height), width_(width), data_(std::move(data)) {
    detail::check_shape(height, width);
    if (data_.size() != std::size_t(height) * width)
      throw std::invalid_argument("data length does not match grid shape");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  GridShape shape() const { return {height_, width_}; }
  std::int64_t size() const { return std::int64_t(height_) * width_; }
  bool empty() const { return data_.empty(); }

  cdouble& at(int y, int x) { return data_[std::size_t(y) * width_ + x]; }
  const cdouble& at(int y, int x) const { return data_[std::size_t(y) * width_ + x]; }
  cdouble& operator[](std::size_t i) { return data_[i]; }
  const cdouble& operator[](std::size_t i) const { return data_[i]; }

  std::vector<cdouble>& data() { return data_; }
  const std::vector<cdouble>& data() const { return data_; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<cdouble> data_;
};

/// Row-major real field. Intensities and amplitudes are non-negative.
class RealGrid {
 public:
  RealGrid() = default;
  RealGrid(int height, int width)
      : height_(height), width_(width), data_(std::size_t(height) * width) {
    detail::check_shape(height, width);
  }
  RealGrid(int height, int width, std::vector<double> data)
      : height_(height), width_(width), data_(std::move(data)) {
    detail::check_shape(height, width);
    if (data_.size() != std::size_t(height) * width)
      throw std::invalid_argument("data length does not match grid shape");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  GridShape shape() const { return {height_, width_}; }
  std::int64_t size() const { return std::int64_t(height_) * width_; }
  bool empty() const { return data_.empty(); }

  double& at(int y, int x) { return data_[std::size_t(y) * width_ + x]; }
  const double& at(int y, int x) const { return data_[std::size_t(y) * width_ + x]; }
  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

inline bool all_finite(const ComplexGrid& g) {
  for (const auto& v : g.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

inline bool all_finite(const RealGrid& g) {
  for (double v : g.data())
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool all_nonnegative(const RealGrid& g) {
  for (double v : g.data())
    if (v < 0.0) return false;
  return true;
}

inline void require_same_shape(const GridShape& a, const GridShape& b,
                               const char* what) {
  if (!(a == b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(a.height) + "x" + std::to_string(a.width) +
                                " vs " + std::to_string(b.height) + "x" +
                                std::to_string(b.width) + ")");
}

inline void require_window_in_bounds(const GridShape& target, ScanPosition pos,
                                     int h, int w) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("window dimensions must be positive");
  if (pos.y < 0 || pos.x < 0 || pos.y + h > target.height || pos.x + w > target.width)
    throw std::out_of_range("window [" + std::to_string(pos.y) + "," + std::to_string(pos.x) +
                            "]+" + std::to_string(h) + "x" + std::to_string(w) +
                            " not inside " + std::to_string(target.height) + "x" +
                            std::to_string(target.width) + " grid");
}

/// Copies the h×w sub-grid with top-left corner at pos.
inline ComplexGrid extract_window(const ComplexGrid& obj, ScanPosition pos, int h, int w) {
  require_window_in_bounds(obj.shape(), pos, h, w);
  ComplexGrid out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(y, x) = obj.at(pos.y + y, pos.x + x);
  return out;
}

/// target[pos + r] += patch[r]; everything outside the window is untouched.
inline void accumulate_window(ComplexGrid& target, ScanPosition pos, const ComplexGrid& patch) {
  require_window_in_bounds(target.shape(), pos, patch.height(), patch.width());
  for (int y = 0; y < patch.height(); ++y)
    for (int x = 0; x < patch.width(); ++x) target.at(pos.y + y, pos.x + x) += patch.at(y, x);
}

inline void accumulate_window(RealGrid& target, ScanPosition pos, const RealGrid& patch) {
  require_window_in_bounds(target.shape(), pos, patch.height(), patch.width());
  for (int y = 0; y < patch.height(); ++y)
    for (int x = 0; x < patch.width(); ++x) target.at(pos.y + y, pos.x + x) += patch.at(y, x);
}

inline double norm2_squared(const ComplexGrid& g) {
  double s = 0.0;
  for (const auto& v : g.data()) s += std::norm(v);
  return s;
}

inline double norm2(const ComplexGrid& g) { return std::sqrt(norm2_squared(g)); }

inline double norm2(const RealGrid& g) {
  double s = 0.0;
  for (double v : g.data()) s += v * v;
  return std::sqrt(s);
}

inline RealGrid amplitudes(const ComplexGrid& g) {
  RealGrid out(g.height(), g.width());
  for (std::int64_t i = 0; i < g.size(); ++i) out[i] = std::abs(g[i]);
  return out;
}

inline RealGrid sqrt_grid(const RealGrid& g) {
  RealGrid out(g.height(), g.width());
  for (std::int64_t i = 0; i < g.size(); ++i) out[i] = std::sqrt(g[i]);
  return out;
}

inline void scale(ComplexGrid& g, double factor) {
  for (auto& v : g.data()) v *= factor;
}

inline double max_abs_diff(const ComplexGrid& a, const ComplexGrid& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_error(const ComplexGrid& estimate, const ComplexGrid& reference) {
  require_same_shape(estimate.shape(), reference.shape(), "rel_error");
  double num = 0.0, den = 0.0;
  for (std::int64_t i = 0; i < estimate.size(); ++i) {
    num += std::norm(estimate[i] - reference[i]);
    den += std::norm(reference[i]);
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

}  // namespace ptycho
