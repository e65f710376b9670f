#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phaseforge/errors.hpp"

namespace phaseforge {

namespace detail {

inline bool is_finite(double v) { return std::isfinite(v); }
inline bool is_finite(const std::complex<double>& v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

}  // namespace detail

/// Dense row-major 2-D grid. `Image` (real pixels) and `ComplexGrid` (Fourier
/// coefficients, phase fields) are the two instantiations used throughout.
///
/// Construction from external data rejects non-finite entries; solvers check
/// their iterates explicitly since mutable access cannot be policed here.
template <typename T>
class Grid {
public:
  using value_type = T;

  Grid() = default;

  Grid(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width), data_(height * width, fill) {}

  Grid(std::size_t height, std::size_t width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != height_ * width_) {
      throw ShapeError("grid data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(height_) + "x" +
                       std::to_string(width_));
    }
    if (!all_finite()) throw NumericalError("grid data contains non-finite values");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const {
    return data_[row * width_ + col];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T>& vector() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool same_shape(const Grid& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](const T& v) { return detail::is_finite(v); });
  }

  friend bool operator==(const Grid&, const Grid&) = default;

private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

using Image = Grid<double>;
using ComplexGrid = Grid<std::complex<double>>;

template <typename T, typename U>
void require_same_shape(const Grid<T>& a, const Grid<U>& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) +
                     "x" + std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                     "x" + std::to_string(b.width()) + ")");
  }
}

// Small vector-space helpers over grids; all treat the grid as a flat vector.

template <typename T>
double squared_norm(const Grid<T>& g) {
  double s = 0.0;
  for (const auto& v : g) s += std::norm(v);
  return s;
}

template <typename T>
double norm(const Grid<T>& g) {
  return std::sqrt(squared_norm(g));
}

/// Real inner product; complex grids are treated as paired reals.
inline double dot(const Image& a, const Image& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double dot(const ComplexGrid& a, const ComplexGrid& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  }
  return s;
}

/// y <- y + alpha * x
template <typename T>
void axpy(double alpha, const Grid<T>& x, Grid<T>& y) {
  require_same_shape(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

template <typename T>
Grid<T> operator+(Grid<T> a, const Grid<T>& b) {
  axpy(1.0, b, a);
  return a;
}

template <typename T>
Grid<T> operator-(Grid<T> a, const Grid<T>& b) {
  axpy(-1.0, b, a);
  return a;
}

template <typename T>
Grid<T> operator*(double c, Grid<T> a) {
  for (auto& v : a) v *= c;
  return a;
}

inline Image clamp(Image x, double lo = 0.0, double hi = 255.0) {
  for (auto& v : x) v = std::clamp(v, lo, hi);
  return x;
}

/// Centers `image` in a zero frame of the given size.
inline Image embed(const Image& image, std::size_t frame_height, std::size_t frame_width) {
  if (frame_height < image.height() || frame_width < image.width()) {
    throw ShapeError("embed: frame " + std::to_string(frame_height) + "x" +
                     std::to_string(frame_width) + " smaller than image " +
                     std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  Image frame(frame_height, frame_width);
  const std::size_t top = (frame_height - image.height()) / 2;
  const std::size_t left = (frame_width - image.width()) / 2;
  for (std::size_t r = 0; r < image.height(); ++r) {
    std::copy_n(&image(r, 0), image.width(), &frame(top + r, left));
  }
  return frame;
}

/// Rectangular support region inside a frame.
struct Support {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  /// The centered region `embed` writes to.
  static Support centered(std::size_t frame_height, std::size_t frame_width,
                          std::size_t height, std::size_t width) {
    if (frame_height < height || frame_width < width) {
      throw ShapeError("support larger than frame");
    }
    return {(frame_height - height) / 2, (frame_width - width) / 2, height, width};
  }

  bool contains(std::size_t row, std::size_t col) const noexcept {
    return row >= top && row < top + height && col >= left && col < left + width;
  }

  friend bool operator==(const Support&, const Support&) = default;
};

template <typename T>
Grid<T> crop(const Grid<T>& frame, const Support& support) {
  if (support.top + support.height > frame.height() ||
      support.left + support.width > frame.width()) {
    throw ShapeError("crop: support exceeds frame");
  }
  Grid<T> out(support.height, support.width);
  for (std::size_t r = 0; r < support.height; ++r) {
    for (std::size_t c = 0; c < support.width; ++c) {
      out(r, c) = frame(support.top + r, support.left + c);
    }
  }
  return out;
}

/// Real part of a complex grid.
inline Image real_part(const ComplexGrid& z) {
  Image out(z.height(), z.width());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].real();
  return out;
}

inline ComplexGrid to_complex(const Image& x) {
  ComplexGrid out(x.height(), x.width());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = {x[i], 0.0};
  return out;
}

/// Elementwise modulus.
inline Image magnitude(const ComplexGrid& z) {
  Image out(z.height(), z.width());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::abs(z[i]);
  return out;
}

}  // namespace phaseforge
