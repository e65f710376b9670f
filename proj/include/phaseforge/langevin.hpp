#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "phaseforge/denoisers.hpp"
#include "phaseforge/errors.hpp"
#include "phaseforge/image.hpp"
#include "phaseforge/operators.hpp"
#include "phaseforge/rng.hpp"

namespace phaseforge {

/// How the sampling direction combines the prior and the measurements.
enum class ConsistencyMode {
  /// d = (I − AᵀA) D(x) + Aᵀ(xc − Ax). For an isometric A the prior term
  /// vanishes identically.
  strict,
  /// d = D(x) + λ Aᵀ(xc − Ax).
  relaxed,
};

inline const char* to_string(ConsistencyMode mode) {
  return mode == ConsistencyMode::strict ? "strict" : "relaxed";
}

inline ConsistencyMode parse_consistency_mode(const std::string& s) {
  if (s == "strict") return ConsistencyMode::strict;
  if (s == "relaxed") return ConsistencyMode::relaxed;
  throw ConfigError("unknown consistency mode '" + s + "' (expected strict or relaxed)");
}

struct LangevinConfig {
  double h0 = 0.1;
  double beta = 0.0001;  ///< noise retention, in (0, 1]; 1 disables injected noise
  std::size_t t1 = 1;    ///< steps per call
  ConsistencyMode mode = ConsistencyMode::relaxed;
  double lambda = 1.0;   ///< data weight, relaxed mode only

  void validate() const {
    if (!(h0 > 0.0 && h0 <= 1.0)) throw ConfigError("h0 must lie in (0, 1]");
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
    if (t1 < 1) throw ConfigError("T1 must be >= 1");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be > 0");
  }

  std::string echo() const {
    return fmt::format("h0={},beta={},t1={},mode={},lambda={}", h0, beta, t1, to_string(mode),
                       lambda);
  }
};

/// h_t = h0·t / (1 + h0·(t − 1)), t >= 1. Increases from h0 towards 1.
inline double step_size(double h0, std::size_t t) {
  const double td = static_cast<double>(t);
  return h0 * td / (1.0 + h0 * (td - 1.0));
}

/// γ²/σ² = (1 − βh)² − (1 − h)². Zero when β = 1, nonnegative for h, β in (0, 1].
inline double injected_noise_factor(double h, double beta) {
  const double a = 1.0 - beta * h;
  const double b = 1.0 - h;
  return a * a - b * b;
}

struct LangevinStep {
  double h = 0.0;
  double sigma = 0.0;
  double gamma = 0.0;
};

struct LangevinResult {
  Image image;
  std::vector<LangevinStep> steps;
};

/// Sampling direction at x for the linear constraint Ax = xc.
inline Image langevin_direction(const ComplexGrid& xc, const LinearOperator& op,
                                const Denoiser& denoiser, const Image& x,
                                const LangevinConfig& config) {
  Image d = denoiser.residual(x);
  require_same_shape(d, x, "denoiser residual");
  if (config.mode == ConsistencyMode::strict) {
    // (I − AᵀA) r + Aᵀ(xc − Ax) = r + Aᵀ(xc − A(x + r))
    const Image data = op.adjoint(xc - op.apply(x + d));
    axpy(1.0, data, d);
  } else {
    const Image data = op.adjoint(xc - op.apply(x));
    axpy(config.lambda, data, d);
  }
  return d;
}

/// Posterior sampling with the implicit prior of `denoiser`, conditioned on
/// Ax = xc. Runs config.t1 steps from x0:
///   x ← x + h_t d_t + γ_t z_t,  σ_t² = ‖d_t‖²/N,
///   γ_t² = ((1 − βh_t)² − (1 − h_t)²) σ_t²,  z_t ~ N(0, I).
/// One normal image is drawn per step even when γ_t = 0.
inline LangevinResult langevin_sample(const ComplexGrid& xc, const LinearOperator& op,
                                      const Denoiser& denoiser, const Image& x0,
                                      const LangevinConfig& config, RngStream& rng) {
  config.validate();
  LangevinResult result{x0, {}};
  result.steps.reserve(config.t1);
  Image& x = result.image;
  const double pixels = static_cast<double>(x.size());
  for (std::size_t t = 1; t <= config.t1; ++t) {
    const double h = step_size(config.h0, t);
    const Image d = langevin_direction(xc, op, denoiser, x, config);
    const double sigma2 = squared_norm(d) / pixels;
    const double gamma2 = injected_noise_factor(h, config.beta) * sigma2;
    if (gamma2 < 0.0) {
      throw NumericalError(fmt::format("negative injected noise variance {:.3e} at step {}",
                                       gamma2, t));
    }
    const double gamma = std::sqrt(gamma2);
    const Image z = rng.normal_image(x.height(), x.width());
    axpy(h, d, x);
    axpy(gamma, z, x);
    if (!x.all_finite()) {
      throw NumericalError(fmt::format(
          "Langevin iterate became non-finite at step {} (h={:.4g}, sigma={:.4g})", t, h,
          std::sqrt(sigma2)));
    }
    result.steps.push_back({h, std::sqrt(sigma2), gamma});
  }
  return result;
}

}  // namespace phaseforge
