#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "phaseforge/denoisers.hpp"
#include "phaseforge/errors.hpp"
#include "phaseforge/rng.hpp"

namespace phaseforge {

/// He-initialized bias-free network: `depth` 3x3 layers, `channels` wide.
/// A test fixture for the forward pass and weight I/O, not a trained model.
inline BiasFreeCnn make_random_cnn(std::size_t depth = 8, std::uint32_t channels = 32,
                                   std::uint64_t seed = 1) {
  if (depth < 1) throw ConfigError("network depth must be >= 1");
  RngStream rng(seed, 0x636e6e);
  std::vector<ConvLayer> layers;
  std::uint32_t in = 1;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::uint32_t out = l + 1 == depth ? 1 : channels;
    ConvLayer layer{out, in, 3, 3, {}};
    const double scale = std::sqrt(2.0 / (9.0 * in));
    layer.weights.resize(std::size_t{out} * in * 9);
    for (auto& w : layer.weights) w = static_cast<float>(scale * rng.normal());
    layers.push_back(std::move(layer));
    in = out;
  }
  return BiasFreeCnn(std::move(layers), true);
}

/// Two-layer bias-free network computing strength·(G ∗ y − y), G the 3x3
/// binomial blur. The first layer splits y into ReLU(y) and ReLU(−y) so the
/// network is exactly linear despite the nonlinearity.
inline BiasFreeCnn make_smoothing_cnn(double strength) {
  ConvLayer split{2, 1, 1, 1, {1.0f, -1.0f}};
  ConvLayer merge{1, 2, 3, 3, std::vector<float>(18)};
  const double g[3] = {1.0, 2.0, 1.0};
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      double k = g[a] * g[b] / 16.0 - (a == 1 && b == 1 ? 1.0 : 0.0);
      k *= strength;
      merge.weights[a * 3 + b] = static_cast<float>(k);
      merge.weights[9 + a * 3 + b] = static_cast<float>(-k);
    }
  }
  return BiasFreeCnn({split, merge}, true);
}

namespace detail {

inline std::map<std::string, std::string> parse_options(const std::string& text,
                                                        const std::string& spec) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("denoiser spec '" + spec + "': expected key=value, got '" + item + "'");
    }
    out[item.substr(0, eq)] = item.substr(eq + 1);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline double parse_number(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("denoiser option " + key + ": '" + value + "' is not a number");
  }
}

}  // namespace detail

/// Builds a denoiser from a spec string:
///   identity
///   gaussian:tau2=<τ²>[,sigma2=<σ²>][,mu=<μ>]     (σ² defaults to 100, μ to 0)
///   cnn:<weights.bfc>
///   smooth[:strength=<s>]                           (s defaults to 0.05)
inline std::unique_ptr<Denoiser> make_denoiser(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);

  if (kind == "identity" && rest.empty()) return std::make_unique<IdentityDenoiser>();
  if (kind == "cnn") {
    if (rest.empty()) throw ConfigError("denoiser spec 'cnn' needs a weight file path");
    const std::string path = rest.rfind("path=", 0) == 0 ? rest.substr(5) : rest;
    return std::make_unique<BiasFreeCnn>(load_weights(path));
  }
  if (kind == "gaussian" || kind == "smooth") {
    const auto opts = detail::parse_options(rest, spec);
    auto get = [&](const std::string& key, double fallback) {
      auto it = opts.find(key);
      return it == opts.end() ? fallback : detail::parse_number(it->second, key);
    };
    if (kind == "smooth") {
      for (const auto& [k, v] : opts) {
        if (k != "strength") throw ConfigError("smooth denoiser: unknown option " + k);
      }
      return std::make_unique<BiasFreeCnn>(make_smoothing_cnn(get("strength", 0.05)));
    }
    for (const auto& [k, v] : opts) {
      if (k != "tau2" && k != "sigma2" && k != "mu") {
        throw ConfigError("gaussian denoiser: unknown option " + k);
      }
    }
    if (!opts.count("tau2")) throw ConfigError("gaussian denoiser requires tau2");
    return std::make_unique<GaussianMmseDenoiser>(get("tau2", 0.0), get("sigma2", 100.0),
                                                  get("mu", 0.0));
  }
  throw ConfigError("unknown denoiser spec '" + spec +
                    "' (expected identity, gaussian:..., cnn:<path> or smooth[:...])");
}

}  // namespace phaseforge
