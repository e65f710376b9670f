#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "phaseforge/denoiser_factory.hpp"
#include "phaseforge/denoisers.hpp"
#include "phaseforge/rng.hpp"

using namespace phaseforge;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("phaseforge_den_" + name);
}

// Straightforward reference forward pass: per-pixel sums over the kernel with
// explicit bounds checks.
Image naive_forward(const BiasFreeCnn& net, const Image& y) {
  const long h = static_cast<long>(y.height()), w = static_cast<long>(y.width());
  std::vector<std::vector<double>> planes{std::vector<double>(y.begin(), y.end())};
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& L = net.layers()[l];
    std::vector<std::vector<double>> out(L.out_channels, std::vector<double>(h * w, 0.0));
    const long pr = (static_cast<long>(L.kernel_height) - 1) / 2;
    const long pc = (static_cast<long>(L.kernel_width) - 1) / 2;
    for (std::size_t o = 0; o < L.out_channels; ++o) {
      for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
          double acc = 0;
          for (std::size_t i = 0; i < L.in_channels; ++i) {
            for (long a = 0; a < static_cast<long>(L.kernel_height); ++a) {
              for (long b = 0; b < static_cast<long>(L.kernel_width); ++b) {
                const long rr = r + a - pr, cc = c + b - pc;
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                acc += L.weight(o, i, a, b) * planes[i][rr * w + cc];
              }
            }
          }
          out[o][r * w + c] = l + 1 < net.layers().size() ? std::max(acc, 0.0) : acc;
        }
      }
    }
    planes = std::move(out);
  }
  return Image(y.height(), y.width(), planes[0]);
}

ParseError::Kind kind_of(const std::vector<unsigned char>& bytes) {
  try {
    decode_weights(bytes);
  } catch (const ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ParseError::Kind::io;
}

}  // namespace

TEST(Identity, ResidualIsZero) {
  RngStream rng(1);
  const Image y = rng.normal_image(5, 7);
  const IdentityDenoiser d;
  EXPECT_EQ(d.residual(y), Image(5, 7));
  EXPECT_EQ(d.denoise(y), y);
}

TEST(GaussianMmse, EqualVariancesHalveTheInput) {
  const GaussianMmseDenoiser d(1.0, 1.0);
  RngStream rng(2);
  const Image y = rng.normal_image(4, 4);
  const Image r = d.residual(y);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(r[i], -y[i] / 2.0, 1e-15);
}

TEST(GaussianMmse, MatchesClosedFormAndNumericalScore) {
  const double tau2 = 900.0, sigma2 = 100.0, mu = 128.0;
  const GaussianMmseDenoiser d(tau2, sigma2, mu);
  RngStream rng(3);
  const Image y = rng.uniform_image(6, 6, 0, 255);
  const Image r = d.residual(y);
  // σ²·∇ log N(y; μ, τ²+σ²), closed form and by central differences.
  auto log_density = [&](const Image& v) {
    double s = 0;
    for (double x : v) s += (x - mu) * (x - mu);
    return -s / (2.0 * (tau2 + sigma2));
  };
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_NEAR(r[i], sigma2 * (mu - y[i]) / (tau2 + sigma2), 1e-12);
    Image up = y, down = y;
    const double eps = 1e-3;
    up[i] += eps;
    down[i] -= eps;
    const double fd = sigma2 * (log_density(up) - log_density(down)) / (2 * eps);
    EXPECT_NEAR(r[i], fd, 1e-6);
  }
  EXPECT_EQ(d.denoise(Image(6, 6, mu)), Image(6, 6, mu));
}

TEST(GaussianMmse, RejectsBadVariances) {
  EXPECT_THROW(GaussianMmseDenoiser(-1.0, 1.0), ConfigError);
  EXPECT_THROW(GaussianMmseDenoiser(1.0, -1.0), ConfigError);
}

TEST(Cnn, ZeroWeightsGiveZeroResidual) {
  const BiasFreeCnn net({ConvLayer{1, 1, 3, 3, std::vector<float>(9, 0.0f)}});
  RngStream rng(4);
  EXPECT_EQ(net.residual(rng.normal_image(5, 5)), Image(5, 5));
}

TEST(Cnn, PointwiseScaleLayer) {
  const BiasFreeCnn net({ConvLayer{1, 1, 1, 1, {2.0f}}});
  RngStream rng(5);
  const Image y = rng.normal_image(3, 8);
  EXPECT_EQ(net.residual(y), 2.0 * y);
  const BiasFreeCnn clean({ConvLayer{1, 1, 1, 1, {2.0f}}}, false);
  EXPECT_EQ(clean.residual(y), y);
  EXPECT_EQ(clean.denoise(y), 2.0 * y);
}

TEST(Cnn, ForwardMatchesNaiveConvolution) {
  const auto net = make_random_cnn(3, 5, 9);
  RngStream rng(6);
  const Image y = rng.normal_image(7, 6);
  const Image fast = net.forward(y), slow = naive_forward(net, y);
  EXPECT_LT(norm(fast - slow), 1e-10 * (1.0 + norm(slow)));

  // Even-size kernels pad one pixel less on the trailing side.
  const BiasFreeCnn even({ConvLayer{1, 1, 2, 2, {1.0f, 2.0f, 3.0f, 4.0f}}});
  EXPECT_LT(norm(even.forward(y) - naive_forward(even, y)), 1e-12);
}

// Property: bias-free ReLU networks are positively homogeneous.
TEST(Cnn, PositiveHomogeneity) {
  const auto net = make_random_cnn(8, 32, 1);
  RngStream rng(7);
  const Image y = rng.normal_image(16, 16);
  const Image base = net.residual(y);
  for (double c : {0.5, 3.0, 17.0}) {
    const Image scaled = net.residual(c * y);
    EXPECT_LE(norm(scaled - c * base) / norm(c * base), 1e-8) << "c=" << c;
  }
  EXPECT_EQ(net.residual(Image(16, 16)), Image(16, 16));
}

TEST(Cnn, SmoothingNetworkIsLinearBlurMinusInput) {
  const auto net = make_smoothing_cnn(0.5);
  RngStream rng(8);
  const Image y = rng.normal_image(6, 6);
  const Image r = net.residual(y);
  const double g[3] = {1, 2, 1};
  for (long i = 0; i < 6; ++i) {
    for (long j = 0; j < 6; ++j) {
      double blur = 0;
      for (long a = -1; a <= 1; ++a) {
        for (long b = -1; b <= 1; ++b) {
          if (i + a < 0 || i + a >= 6 || j + b < 0 || j + b >= 6) continue;
          blur += g[a + 1] * g[b + 1] / 16.0 * y(i + a, j + b);
        }
      }
      EXPECT_NEAR(r(i, j), 0.5 * (blur - y(i, j)), 1e-7);
    }
  }
}

TEST(WeightFile, RoundTripPreservesOutputs) {
  const auto net = make_random_cnn(4, 6, 2);
  const auto path = temp_path("rt.bfc");
  save_weights(path, net);
  const auto back = load_weights(path);
  EXPECT_EQ(back.layers(), net.layers());
  EXPECT_EQ(back.outputs_residual(), net.outputs_residual());
  RngStream rng(9);
  const Image y = rng.normal_image(8, 8);
  EXPECT_EQ(back.residual(y), net.residual(y));
  EXPECT_EQ(detail::read_file_bytes(path), encode_weights(back));
}

TEST(WeightFile, SingleLayerLayout) {
  const BiasFreeCnn net({ConvLayer{1, 1, 3, 3, std::vector<float>(9, 0.25f)}});
  const auto bytes = encode_weights(net);
  // magic, version, flag, count, 4 dims, 9 floats
  EXPECT_EQ(bytes.size(), 4u + 4 + 1 + 4 + 16 + 9 * 4);
  EXPECT_EQ(decode_weights(bytes).parameter_count(), 9u);
}

TEST(WeightFile, Errors) {
  const auto good = encode_weights(make_random_cnn(2, 3, 1));
  auto bad = good;
  bad[1] = 'X';
  EXPECT_EQ(kind_of(bad), ParseError::Kind::bad_magic);
  bad = good;
  bad[4] = 7;
  EXPECT_EQ(kind_of(bad), ParseError::Kind::version_mismatch);
  bad = good;
  bad.resize(bad.size() - 1);
  EXPECT_EQ(kind_of(bad), ParseError::Kind::truncated);
  bad = good;
  for (int i = 0; i < 4; ++i) bad.push_back(0);  // a would-be bias
  EXPECT_EQ(kind_of(bad), ParseError::Kind::bias_record);

  // Second layer claims 4 inputs after a 3-channel first layer.
  detail::ByteWriter w;
  w.magic("BFC1");
  w.u32(1);
  w.u8(1);
  w.u32(2);
  for (std::uint32_t v : {3u, 1u, 1u, 1u}) w.u32(v);
  for (int i = 0; i < 3; ++i) w.f32(1.0f);
  for (std::uint32_t v : {1u, 4u, 1u, 1u}) w.u32(v);
  for (int i = 0; i < 4; ++i) w.f32(1.0f);
  try {
    decode_weights(w.bytes());
    FAIL() << "no error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::channel_chain_mismatch);
    EXPECT_NE(std::string(e.what()).find("channel chain mismatch"), std::string::npos);
  }
  EXPECT_THROW(BiasFreeCnn({ConvLayer{2, 1, 1, 1, {1.0f, 1.0f}}}), ParseError);
  EXPECT_THROW(load_weights(temp_path("does_not_exist.bfc")), ParseError);
}

TEST(Denoise, EqualsInputPlusResidual) {
  RngStream rng(10);
  const Image y = rng.uniform_image(8, 8, 0, 255);
  const auto net = make_random_cnn(3, 4, 3);
  const GaussianMmseDenoiser g(10.0, 5.0, 3.0);
  for (const Denoiser* d : std::initializer_list<const Denoiser*>{&net, &g}) {
    EXPECT_LT(norm(d->denoise(y) - y - d->residual(y)), 1e-9);
  }
}

TEST(Factory, ParsesSpecs) {
  EXPECT_EQ(make_denoiser("identity")->describe(), "identity");
  auto g = make_denoiser("gaussian:tau2=4,sigma2=4");
  const Image y(2, 2, 8.0);
  EXPECT_EQ(g->residual(y), Image(2, 2, -4.0));
  auto gm = make_denoiser("gaussian:tau2=1,sigma2=1,mu=8");
  EXPECT_EQ(gm->residual(y), Image(2, 2));

  const auto path = temp_path("factory.bfc");
  save_weights(path, make_smoothing_cnn(0.1));
  RngStream rng(11);
  const Image z = rng.normal_image(5, 5);
  const auto from_file = make_denoiser("cnn:" + path.string());
  const auto from_key = make_denoiser("cnn:path=" + path.string());
  const auto builtin = make_denoiser("smooth:strength=0.1");
  EXPECT_EQ(from_file->residual(z), builtin->residual(z));
  EXPECT_EQ(from_key->residual(z), builtin->residual(z));
  EXPECT_EQ(make_denoiser("smooth")->residual(z), make_smoothing_cnn(0.05).residual(z));

  EXPECT_THROW(make_denoiser("median"), ConfigError);
  EXPECT_THROW(make_denoiser("gaussian:sigma2=1"), ConfigError);
  EXPECT_THROW(make_denoiser("gaussian:tau2=abc"), ConfigError);
  EXPECT_THROW(make_denoiser("smooth:width=3"), ConfigError);
  EXPECT_THROW(make_denoiser("cnn:"), ConfigError);
}
