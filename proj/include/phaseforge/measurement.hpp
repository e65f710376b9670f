#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "phaseforge/binary_io.hpp"
#include "phaseforge/errors.hpp"
#include "phaseforge/image.hpp"
#include "phaseforge/operators.hpp"
#include "phaseforge/pgm.hpp"
#include "phaseforge/rng.hpp"

namespace phaseforge {

enum class NoiseModel {
  /// b² = |Ax|² + w, w ~ N(0, α² |Ax|²); negative intensities clamp to 0.
  intensity,
  /// b = |Ax| + w, w ~ N(0, α²); negative amplitudes clamp to 0.
  amplitude,
};

/// Phaseless measurements b of an unknown image under a known operator.
struct MeasurementProblem {
  std::shared_ptr<const LinearOperator> op;
  Image amplitudes;  ///< b, shaped like the operator output; entries >= 0
  double alpha = 0.0;
  std::uint64_t seed = 0;
  NoiseModel noise = NoiseModel::intensity;

  /// Non-null when the operator is the oversampled Fourier transform.
  const FourierOperator* fourier() const {
    return dynamic_cast<const FourierOperator*>(op.get());
  }

  std::size_t image_height() const { return op->input_height(); }
  std::size_t image_width() const { return op->input_width(); }
};

/// Builds b from x_true. The noise draws come from `rng` in row-major order.
inline MeasurementProblem synthesize(std::shared_ptr<const LinearOperator> op,
                                     const Image& x_true, double alpha, RngStream& rng,
                                     NoiseModel noise = NoiseModel::intensity) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("noise level alpha must be finite and >= 0");
  }
  const Image m = magnitude(op->apply(x_true));
  Image b(m.height(), m.width());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double z = rng.normal();
    if (noise == NoiseModel::intensity) {
      const double b2 = m[i] * m[i] + alpha * m[i] * z;
      b[i] = std::sqrt(std::max(b2, 0.0));
    } else {
      b[i] = std::max(m[i] + alpha * z, 0.0);
    }
  }
  return {std::move(op), std::move(b), alpha, rng.seed(), noise};
}

/// Fourier measurements with a frame `oversample` times the image per axis.
inline MeasurementProblem synthesize(const Image& x_true, std::size_t oversample, double alpha,
                                     RngStream& rng, NoiseModel noise = NoiseModel::intensity) {
  auto op = std::make_shared<FourierOperator>(
      FourierOperator::oversampled(x_true.height(), x_true.width(), oversample));
  return synthesize(std::move(op), x_true, alpha, rng, noise);
}

/// ‖b − |Ax|‖₂
inline double residual_norm(const MeasurementProblem& problem, const Image& x) {
  const auto ax = problem.op->apply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    const double d = problem.amplitudes[i] - std::abs(ax[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

// --- PRM1 measurement file -------------------------------------------------

inline std::vector<unsigned char> encode_measurement(const MeasurementProblem& problem) {
  const auto* f = problem.fourier();
  if (f == nullptr) throw ConfigError("only Fourier measurements can be serialized");
  detail::ByteWriter w;
  w.magic("PRM1");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(f->support().height));
  w.u32(static_cast<std::uint32_t>(f->support().width));
  w.u32(static_cast<std::uint32_t>(f->frame_height()));
  w.u32(static_cast<std::uint32_t>(f->frame_width()));
  w.f64(problem.alpha);
  w.u64(problem.seed);
  w.u64(problem.amplitudes.size());
  for (double v : problem.amplitudes) w.f64(v);
  return w.bytes();
}

inline MeasurementProblem decode_measurement(const std::vector<unsigned char>& bytes) {
  using Kind = ParseError::Kind;
  detail::ByteReader r(bytes, "measurement file");
  if (!r.magic("PRM1")) throw ParseError(Kind::bad_magic, "measurement file: bad magic");
  const auto version = r.u32();
  if (version != 1) {
    throw ParseError(Kind::version_mismatch,
                     "measurement file: unsupported version " + std::to_string(version));
  }
  const std::size_t h = r.u32(), w = r.u32(), fh = r.u32(), fw = r.u32();
  const double alpha = r.f64();
  const std::uint64_t seed = r.u64();
  const std::uint64_t count = r.u64();
  if (h == 0 || w == 0 || fh < h || fw < w) {
    throw ParseError(Kind::malformed_header, "measurement file: inconsistent geometry");
  }
  if (count != fh * fw) {
    throw ParseError(Kind::malformed_header, "measurement file: amplitude count " +
                                                 std::to_string(count) + " != frame size");
  }
  r.need(count * 8);
  Image b(fh, fw);
  for (auto& v : b) {
    v = r.f64();
    if (!std::isfinite(v) || v < 0.0) {
      throw ParseError(Kind::malformed_header, "measurement file: invalid amplitude");
    }
  }
  if (!r.at_end()) throw ParseError(Kind::malformed_header, "measurement file: trailing bytes");
  return {std::make_shared<FourierOperator>(h, w, fh, fw), std::move(b), alpha, seed,
          NoiseModel::intensity};
}

inline void save_measurement(const std::filesystem::path& path,
                             const MeasurementProblem& problem) {
  detail::write_file_bytes(path, encode_measurement(problem));
}

inline MeasurementProblem load_measurement(const std::filesystem::path& path) {
  return decode_measurement(detail::read_file_bytes(path));
}

}  // namespace phaseforge
