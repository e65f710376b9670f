#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "phaseforge/errors.hpp"
#include "phaseforge/fft.hpp"
#include "phaseforge/image.hpp"
#include "phaseforge/rng.hpp"

namespace phaseforge {

/// Linear map from a real (height x width) image to a complex measurement grid.
///
/// `adjoint` is the transpose with respect to the real inner product in which
/// complex entries count as (real, imag) pairs, so <A x, y> = <x, A^T y>.
class LinearOperator {
public:
  virtual ~LinearOperator() = default;

  virtual std::size_t input_height() const = 0;
  virtual std::size_t input_width() const = 0;
  virtual std::size_t output_height() const = 0;
  virtual std::size_t output_width() const = 0;

  /// True when A^T A = I holds exactly, so the least-squares inverse is A^T.
  virtual bool is_isometry() const = 0;

  virtual ComplexGrid apply(const Image& x) const = 0;
  virtual Image adjoint(const ComplexGrid& y) const = 0;

  std::size_t input_size() const { return input_height() * input_width(); }
  std::size_t output_size() const { return output_height() * output_width(); }

protected:
  void check_input(const Image& x) const {
    if (x.height() != input_height() || x.width() != input_width()) {
      throw ShapeError("operator input is " + std::to_string(x.height()) + "x" +
                       std::to_string(x.width()) + ", expected " +
                       std::to_string(input_height()) + "x" + std::to_string(input_width()));
    }
  }
  void check_output(const ComplexGrid& y) const {
    if (y.height() != output_height() || y.width() != output_width()) {
      throw ShapeError("operator adjoint input is " + std::to_string(y.height()) + "x" +
                       std::to_string(y.width()) + ", expected " +
                       std::to_string(output_height()) + "x" + std::to_string(output_width()));
    }
  }
};

/// Oversampled Fourier measurements: unitary 2-D DFT of the image centered in
/// a zero frame. With unitary normalization the operator is an exact isometry.
class FourierOperator final : public LinearOperator {
public:
  FourierOperator(std::size_t height, std::size_t width, std::size_t frame_height,
                  std::size_t frame_width)
      : support_(Support::centered(frame_height, frame_width, height, width)),
        frame_height_(frame_height),
        frame_width_(frame_width) {
    if (height == 0 || width == 0) throw ShapeError("FourierOperator: empty support");
  }

  /// Frame of `factor` times the image size along each axis.
  static FourierOperator oversampled(std::size_t height, std::size_t width, std::size_t factor) {
    if (factor < 1) throw ConfigError("oversample factor must be >= 1");
    return {height, width, factor * height, factor * width};
  }

  std::size_t input_height() const override { return support_.height; }
  std::size_t input_width() const override { return support_.width; }
  std::size_t output_height() const override { return frame_height_; }
  std::size_t output_width() const override { return frame_width_; }
  bool is_isometry() const override { return true; }

  const Support& support() const noexcept { return support_; }
  std::size_t frame_height() const noexcept { return frame_height_; }
  std::size_t frame_width() const noexcept { return frame_width_; }

  ComplexGrid apply(const Image& x) const override {
    check_input(x);
    return fft2(embed(x, frame_height_, frame_width_));
  }

  Image adjoint(const ComplexGrid& y) const override {
    check_output(y);
    ComplexGrid z = y;
    ifft2(z);
    return real_part(crop(z, support_));
  }

  /// Forward transform of a full frame (no support restriction).
  ComplexGrid apply_frame(const Image& frame) const {
    if (frame.height() != frame_height_ || frame.width() != frame_width_) {
      throw ShapeError("apply_frame: frame shape mismatch");
    }
    return fft2(frame);
  }

  /// Real part of the inverse transform over the full frame.
  Image adjoint_frame(const ComplexGrid& y) const {
    check_output(y);
    ComplexGrid z = y;
    ifft2(z);
    return real_part(z);
  }

private:
  Support support_;
  std::size_t frame_height_;
  std::size_t frame_width_;
};

/// Dense real Gaussian matrix, entries i.i.d. N(0, 1/m). Optionally the rows
/// are orthonormalized (requires m <= n), which makes A A^T = I and
/// I - A^T A the projector onto the null space.
class GaussianOperator final : public LinearOperator {
public:
  GaussianOperator(std::size_t rows, std::size_t height, std::size_t width, std::uint64_t seed,
                   bool orthonormal_rows = false)
      : rows_(rows),
        height_(height),
        width_(width),
        seed_(seed),
        orthonormal_(orthonormal_rows),
        matrix_(rows * height * width) {
    const std::size_t n = height * width;
    if (rows == 0 || n == 0) throw ShapeError("GaussianOperator: empty dimensions");
    if (orthonormal_rows && rows > n) {
      throw ConfigError("GaussianOperator: orthonormal rows need m <= n");
    }
    RngStream rng(seed, 0x6761757373ull);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    for (auto& v : matrix_) v = scale * rng.normal();
    if (orthonormal_rows) orthonormalize();
  }

  std::size_t input_height() const override { return height_; }
  std::size_t input_width() const override { return width_; }
  std::size_t output_height() const override { return rows_; }
  std::size_t output_width() const override { return 1; }
  bool is_isometry() const override { return false; }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return height_ * width_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool orthonormal_rows() const noexcept { return orthonormal_; }
  double entry(std::size_t r, std::size_t c) const { return matrix_[r * cols() + c]; }

  ComplexGrid apply(const Image& x) const override {
    check_input(x);
    const std::size_t n = cols();
    ComplexGrid out(rows_, 1);
    for (std::size_t r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += matrix_[r * n + c] * x[c];
      out[r] = {s, 0.0};
    }
    return out;
  }

  Image adjoint(const ComplexGrid& y) const override {
    check_output(y);
    const std::size_t n = cols();
    Image out(height_, width_);
    for (std::size_t r = 0; r < rows_; ++r) {
      const double yr = y[r].real();
      for (std::size_t c = 0; c < n; ++c) out[c] += matrix_[r * n + c] * yr;
    }
    return out;
  }

private:
  // Modified Gram-Schmidt over rows, applied twice for stability.
  void orthonormalize() {
    const std::size_t n = cols();
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t r = 0; r < rows_; ++r) {
        double* row = &matrix_[r * n];
        for (std::size_t q = 0; q < r; ++q) {
          const double* prev = &matrix_[q * n];
          double proj = 0.0;
          for (std::size_t c = 0; c < n; ++c) proj += row[c] * prev[c];
          for (std::size_t c = 0; c < n; ++c) row[c] -= proj * prev[c];
        }
        double len = 0.0;
        for (std::size_t c = 0; c < n; ++c) len += row[c] * row[c];
        len = std::sqrt(len);
        if (len == 0.0) throw NumericalError("GaussianOperator: rank-deficient draw");
        for (std::size_t c = 0; c < n; ++c) row[c] /= len;
      }
    }
  }

  std::size_t rows_;
  std::size_t height_;
  std::size_t width_;
  std::uint64_t seed_;
  bool orthonormal_;
  std::vector<double> matrix_;
};

/// Elementwise z/|z|, with Ph(0) = 1.
inline ComplexGrid phase(const ComplexGrid& z) {
  ComplexGrid out(z.height(), z.width());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = std::abs(z[i]);
    out[i] = r > 0.0 ? z[i] / r : std::complex<double>(1.0, 0.0);
  }
  return out;
}

/// p ⊙ b for a phase field and real amplitudes of the same shape.
inline ComplexGrid apply_phase(const ComplexGrid& p, const Image& b) {
  require_same_shape(p, b, "apply_phase");
  ComplexGrid out(p.height(), p.width());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] * b[i];
  return out;
}

}  // namespace phaseforge
