#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "phaseforge/denoisers.hpp"
#include "phaseforge/errors.hpp"
#include "phaseforge/image.hpp"
#include "phaseforge/langevin.hpp"
#include "phaseforge/measurement.hpp"
#include "phaseforge/metrics.hpp"
#include "phaseforge/operators.hpp"
#include "phaseforge/report.hpp"
#include "phaseforge/rng.hpp"

namespace phaseforge {

struct AplsConfig {
  LangevinConfig langevin;
  std::size_t t2 = 500;  ///< outer (phase update) iterations
  std::uint64_t seed = 0;

  void validate() const {
    langevin.validate();
    if (t2 < 1) throw ConfigError("T2 must be >= 1");
  }

  std::string echo() const { return fmt::format("{},t2={},seed={}", langevin.echo(), t2, seed); }
};

/// Alternating phase Langevin sampling.
///
/// Each outer iteration fixes the phase p_t = Ph(A x_{t-1}) and then draws
/// x_t with langevin_sample conditioned on Ax = p_t ⊙ b, warm-started at
/// x_{t-1}. The iterate is never clamped mid-run; the report's final image is
/// clamped to [0, 255] and its residual is measured on that clamped image.
inline RunReport apls(const MeasurementProblem& problem, const Denoiser& denoiser,
                      const AplsConfig& config, const Image& x0, RngStream& rng,
                      const std::optional<Image>& reference = std::nullopt) {
  config.validate();
  const auto& op = *problem.op;
  if (x0.height() != op.input_height() || x0.width() != op.input_width()) {
    throw ShapeError("apls: initial image shape does not match the operator");
  }
  const auto started = std::chrono::steady_clock::now();

  RunReport report;
  report.method = "apls";
  report.seed = config.seed;
  report.config = fmt::format("{},denoiser={}", config.echo(), denoiser.describe());
  report.iterations.reserve(config.t2);

  Image x = x0;
  ComplexGrid ax = op.apply(x);
  auto residual_of = [&](const ComplexGrid& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = problem.amplitudes[i] - std::abs(y[i]);
      s += d * d;
    }
    return std::sqrt(s);
  };
  report.initial_residual = residual_of(ax);

  for (std::size_t t = 1; t <= config.t2; ++t) {
    const ComplexGrid xc = apply_phase(phase(ax), problem.amplitudes);
    auto sample = langevin_sample(xc, op, denoiser, x, config.langevin, rng);
    x = std::move(sample.image);
    ax = op.apply(x);
    const auto& last = sample.steps.back();
    report.iterations.push_back({t, residual_of(ax), last.sigma, last.h, last.gamma,
                                 reference ? psnr(x, *reference) : NAN});
  }

  report.final_image = clamp(x);
  report.final_residual = residual_norm(problem, report.final_image);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace phaseforge
