#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phaseforge/binary_io.hpp"
#include "phaseforge/errors.hpp"
#include "phaseforge/image.hpp"
#include "phaseforge/pgm.hpp"

namespace phaseforge {

/// Implicit image prior. `residual(y)` approximates x̂(y) − y, the MMSE
/// correction, which for Gaussian noise of variance σ² equals σ²∇log p(y).
class Denoiser {
public:
  virtual ~Denoiser() = default;

  virtual Image residual(const Image& y) const = 0;

  Image denoise(const Image& y) const { return y + residual(y); }

  virtual std::string describe() const = 0;
};

/// x̂(y) = y.
class IdentityDenoiser final : public Denoiser {
public:
  Image residual(const Image& y) const override { return Image(y.height(), y.width()); }
  std::string describe() const override { return "identity"; }
};

/// Exact MMSE denoiser for the prior N(μ, τ²I) under noise N(0, σ²I):
/// residual(y) = σ²/(τ² + σ²) · (μ − y).
class GaussianMmseDenoiser final : public Denoiser {
public:
  GaussianMmseDenoiser(double prior_variance, double noise_variance, double prior_mean = 0.0)
      : tau2_(prior_variance), sigma2_(noise_variance), mean_value_(prior_mean) {
    validate();
  }

  GaussianMmseDenoiser(double prior_variance, double noise_variance, Image prior_mean)
      : tau2_(prior_variance), sigma2_(noise_variance), mean_image_(std::move(prior_mean)) {
    validate();
  }

  double prior_variance() const noexcept { return tau2_; }
  double noise_variance() const noexcept { return sigma2_; }
  double shrinkage() const noexcept { return sigma2_ / (tau2_ + sigma2_); }

  Image residual(const Image& y) const override {
    const double k = shrinkage();
    Image out(y.height(), y.width());
    if (mean_image_) {
      require_same_shape(*mean_image_, y, "GaussianMmseDenoiser");
      for (std::size_t i = 0; i < y.size(); ++i) out[i] = k * ((*mean_image_)[i] - y[i]);
    } else {
      for (std::size_t i = 0; i < y.size(); ++i) out[i] = k * (mean_value_ - y[i]);
    }
    return out;
  }

  std::string describe() const override {
    return "gaussian:tau2=" + std::to_string(tau2_) + ",sigma2=" + std::to_string(sigma2_) +
           (mean_image_ ? ",mu=<image>" : ",mu=" + std::to_string(mean_value_));
  }

private:
  void validate() const {
    if (!(tau2_ >= 0.0) || !(sigma2_ > 0.0) || !std::isfinite(tau2_) || !std::isfinite(sigma2_)) {
      throw ConfigError("GaussianMmseDenoiser: need tau2 >= 0 and sigma2 > 0");
    }
  }

  double tau2_;
  double sigma2_;
  double mean_value_ = 0.0;
  std::optional<Image> mean_image_;
};

/// One bias-free 2-D convolution; weights in (out, in, kh, kw) order.
struct ConvLayer {
  std::uint32_t out_channels = 0;
  std::uint32_t in_channels = 0;
  std::uint32_t kernel_height = 0;
  std::uint32_t kernel_width = 0;
  std::vector<float> weights;

  float weight(std::size_t o, std::size_t i, std::size_t a, std::size_t b) const {
    return weights[((o * in_channels + i) * kernel_height + a) * kernel_width + b];
  }

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

/// Convolutional denoiser without additive biases: same-size zero-padded
/// convolutions with ReLU between layers and a linear last layer. Such a
/// network is positively homogeneous, so residual(c·y) = c·residual(y) for
/// c > 0 and residual(0) = 0.
class BiasFreeCnn final : public Denoiser {
public:
  /// `outputs_residual` false means the network predicts the clean image.
  BiasFreeCnn(std::vector<ConvLayer> layers, bool outputs_residual = true)
      : layers_(std::move(layers)), outputs_residual_(outputs_residual) {
    validate();
  }

  const std::vector<ConvLayer>& layers() const noexcept { return layers_; }
  bool outputs_residual() const noexcept { return outputs_residual_; }

  /// Raw network output for a single-channel input.
  Image forward(const Image& y) const {
    const std::size_t h = y.height(), w = y.width(), plane = h * w;
    std::vector<double> current(y.begin(), y.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      std::vector<double> next(layer.out_channels * plane, 0.0);
      const long pad_r = (static_cast<long>(layer.kernel_height) - 1) / 2;
      const long pad_c = (static_cast<long>(layer.kernel_width) - 1) / 2;
      for (std::size_t o = 0; o < layer.out_channels; ++o) {
        double* dst = &next[o * plane];
        for (std::size_t i = 0; i < layer.in_channels; ++i) {
          const double* src = &current[i * plane];
          for (std::size_t a = 0; a < layer.kernel_height; ++a) {
            const long dr = static_cast<long>(a) - pad_r;
            for (std::size_t b = 0; b < layer.kernel_width; ++b) {
              const double k = layer.weight(o, i, a, b);
              if (k == 0.0) continue;
              const long dc = static_cast<long>(b) - pad_c;
              accumulate_shifted(dst, src, h, w, dr, dc, k);
            }
          }
        }
      }
      if (l + 1 < layers_.size()) {
        for (auto& v : next) v = v > 0.0 ? v : 0.0;
      }
      current = std::move(next);
    }
    return Image(h, w, std::move(current));
  }

  Image residual(const Image& y) const override {
    Image out = forward(y);
    if (!outputs_residual_) axpy(-1.0, y, out);
    return out;
  }

  std::string describe() const override {
    return "cnn:" + std::to_string(layers_.size()) + " layers";
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size();
    return n;
  }

private:
  // dst(r, c) += k * src(r + dr, c + dc), zero outside the plane.
  static void accumulate_shifted(double* dst, const double* src, std::size_t h, std::size_t w,
                                 long dr, long dc, double k) {
    const long H = static_cast<long>(h), W = static_cast<long>(w);
    const long r0 = std::max(0L, -dr), r1 = std::min(H, H - dr);
    const long c0 = std::max(0L, -dc), c1 = std::min(W, W - dc);
    for (long r = r0; r < r1; ++r) {
      double* drow = dst + r * W;
      const double* srow = src + (r + dr) * W + dc;
      for (long c = c0; c < c1; ++c) drow[c] += k * srow[c];
    }
  }

  void validate() const {
    using Kind = ParseError::Kind;
    if (layers_.empty()) throw ParseError(Kind::malformed_header, "network has no layers");
    std::uint32_t channels = 1;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (layer.in_channels != channels) {
        throw ParseError(Kind::channel_chain_mismatch,
                         "channel chain mismatch at layer " + std::to_string(l) + ": expects " +
                             std::to_string(layer.in_channels) + " input channels, got " +
                             std::to_string(channels));
      }
      if (layer.out_channels == 0 || layer.kernel_height == 0 || layer.kernel_width == 0) {
        throw ParseError(Kind::malformed_header,
                         "layer " + std::to_string(l) + " has a zero dimension");
      }
      const std::size_t expected = std::size_t{layer.out_channels} * layer.in_channels *
                                   layer.kernel_height * layer.kernel_width;
      if (layer.weights.size() != expected) {
        throw ParseError(Kind::truncated, "layer " + std::to_string(l) + " holds " +
                                              std::to_string(layer.weights.size()) +
                                              " weights, expected " + std::to_string(expected));
      }
      channels = layer.out_channels;
    }
    if (channels != 1) {
      throw ParseError(Kind::channel_chain_mismatch,
                       "channel chain mismatch: network must end with 1 channel, got " +
                           std::to_string(channels));
    }
  }

  std::vector<ConvLayer> layers_;
  bool outputs_residual_;
};

// --- BFC1 weight file ------------------------------------------------------

inline std::vector<unsigned char> encode_weights(const BiasFreeCnn& net) {
  detail::ByteWriter w;
  w.magic("BFC1");
  w.u32(1);
  w.u8(net.outputs_residual() ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& layer : net.layers()) {
    w.u32(layer.out_channels);
    w.u32(layer.in_channels);
    w.u32(layer.kernel_height);
    w.u32(layer.kernel_width);
    for (float v : layer.weights) w.f32(v);
  }
  return w.bytes();
}

inline BiasFreeCnn decode_weights(const std::vector<unsigned char>& bytes) {
  using Kind = ParseError::Kind;
  detail::ByteReader r(bytes, "weight file");
  if (!r.magic("BFC1")) throw ParseError(Kind::bad_magic, "weight file: bad magic");
  const auto version = r.u32();
  if (version != 1) {
    throw ParseError(Kind::version_mismatch,
                     "weight file: unsupported version " + std::to_string(version));
  }
  const auto convention = r.u8();
  if (convention > 1) {
    throw ParseError(Kind::malformed_header, "weight file: invalid residual-convention flag");
  }
  const auto count = r.u32();
  std::vector<ConvLayer> layers;
  std::uint32_t channels = 1;
  for (std::uint32_t l = 0; l < count; ++l) {
    ConvLayer layer;
    layer.out_channels = r.u32();
    layer.in_channels = r.u32();
    layer.kernel_height = r.u32();
    layer.kernel_width = r.u32();
    // Check chaining before trusting the sizes for allocation.
    if (layer.in_channels != channels) {
      throw ParseError(Kind::channel_chain_mismatch,
                       "channel chain mismatch at layer " + std::to_string(l) + ": expects " +
                           std::to_string(layer.in_channels) + " input channels, got " +
                           std::to_string(channels));
    }
    const std::uint64_t n = std::uint64_t{layer.out_channels} * layer.in_channels *
                            layer.kernel_height * layer.kernel_width;
    r.need(n * 4);
    layer.weights.resize(n);
    for (auto& v : layer.weights) {
      v = r.f32();
      if (!std::isfinite(v)) throw ParseError(Kind::malformed_header, "weight file: non-finite weight");
    }
    channels = layer.out_channels;
    layers.push_back(std::move(layer));
  }
  if (!r.at_end()) {
    throw ParseError(Kind::bias_record,
                     "weight file: trailing data after the last layer (bias records are not "
                     "part of the format)");
  }
  return BiasFreeCnn(std::move(layers), convention == 1);
}

inline BiasFreeCnn load_weights(const std::filesystem::path& path) {
  return decode_weights(detail::read_file_bytes(path));
}

inline void save_weights(const std::filesystem::path& path, const BiasFreeCnn& net) {
  detail::write_file_bytes(path, encode_weights(net));
}

}  // namespace phaseforge
