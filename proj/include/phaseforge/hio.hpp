#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "phaseforge/errors.hpp"
#include "phaseforge/image.hpp"
#include "phaseforge/measurement.hpp"
#include "phaseforge/operators.hpp"
#include "phaseforge/rng.hpp"

namespace phaseforge {

struct HioConfig {
  double beta = 0.9;                 ///< feedback parameter, 0 <= beta < 1
  std::size_t iterations = 1000;     ///< plain run / continuation length
  bool nonnegative = true;
  std::size_t restarts = 50;
  std::size_t restart_iterations = 50;
  bool return_best = true;           ///< return the lowest-residual iterate, not the last

  void validate() const {
    // beta = 0 is accepted: it freezes everything outside the feasible set.
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("HIO beta must lie in [0, 1)");
    if (restarts < 1) throw ConfigError("HIO restarts must be >= 1");
  }

  std::string echo() const {
    return fmt::format("hio_beta={},hio_iterations={},nonnegative={},restarts={},"
                       "restart_iterations={},return_best={}",
                       beta, iterations, nonnegative, restarts, restart_iterations, return_best);
  }
};

/// Evolving HIO chain: the full frame iterate plus the best support image seen.
struct HioState {
  Image frame;
  Image best;
  double best_residual = std::numeric_limits<double>::infinity();
  Image last;
  double last_residual = std::numeric_limits<double>::infinity();
  std::vector<double> residuals;  ///< one entry per iteration
};

struct HioResult {
  Image image;
  double residual = 0.0;
  std::vector<double> residuals;
};

namespace detail {

inline const FourierOperator& require_fourier(const MeasurementProblem& problem) {
  const auto* f = problem.fourier();
  if (f == nullptr) throw ConfigError("HIO requires an oversampled Fourier measurement problem");
  return *f;
}

inline HioState start_chain(const MeasurementProblem& problem, const Image& initial) {
  const auto& f = require_fourier(problem);
  require_same_shape(initial, Image(f.input_height(), f.input_width()), "hio initial image");
  HioState s;
  s.frame = embed(initial, f.frame_height(), f.frame_width());
  s.last = initial;
  s.last_residual = residual_norm(problem, initial);
  s.best = initial;
  s.best_residual = s.last_residual;
  return s;
}

inline void run_chain(const MeasurementProblem& problem, const HioConfig& cfg, HioState& s,
                      std::size_t iterations) {
  const auto& f = require_fourier(problem);
  const Support& sup = f.support();
  const Image& b = problem.amplitudes;
  for (std::size_t it = 0; it < iterations; ++it) {
    ComplexGrid spectrum = f.apply_frame(s.frame);
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      const double r = std::abs(spectrum[i]);
      spectrum[i] = r > 0.0 ? spectrum[i] * (b[i] / r) : std::complex<double>(b[i], 0.0);
    }
    const Image y = f.adjoint_frame(spectrum);
    for (std::size_t row = 0; row < s.frame.height(); ++row) {
      for (std::size_t col = 0; col < s.frame.width(); ++col) {
        const double v = y(row, col);
        const bool feasible = sup.contains(row, col) && (!cfg.nonnegative || v >= 0.0);
        double& x = s.frame(row, col);
        x = feasible ? v : x - cfg.beta * v;
      }
    }
    if (!s.frame.all_finite()) throw NumericalError("HIO produced a non-finite iterate");
    s.last = crop(s.frame, sup);
    s.last_residual = residual_norm(problem, s.last);
    s.residuals.push_back(s.last_residual);
    if (s.last_residual < s.best_residual) {
      s.best = s.last;
      s.best_residual = s.last_residual;
    }
  }
}

inline HioResult finish(const HioConfig& cfg, HioState&& s) {
  if (cfg.return_best) return {std::move(s.best), s.best_residual, std::move(s.residuals)};
  return {std::move(s.last), s.last_residual, std::move(s.residuals)};
}

inline Image random_support_image(const MeasurementProblem& problem, RngStream& rng) {
  return rng.uniform_image(problem.image_height(), problem.image_width(), 0.0, 255.0);
}

}  // namespace detail

/// Fienup's hybrid input-output iteration with a known, centered support.
///
/// Each iteration replaces the Fourier magnitudes of the frame by b and
/// transforms back to y. Pixels inside the support that satisfy the
/// constraints take y; all others are pushed by -beta * y. The returned image
/// is the support crop of the frame iterate (the best one when
/// `return_best`). Without `initial`, the start is uniform on [0, 255].
inline HioResult hio(const MeasurementProblem& problem, const HioConfig& config, RngStream& rng,
                     const std::optional<Image>& initial = std::nullopt) {
  config.validate();
  detail::require_fourier(problem);
  const Image start = initial ? *initial : detail::random_support_image(problem, rng);
  auto state = detail::start_chain(problem, start);
  detail::run_chain(problem, config, state, config.iterations);
  return detail::finish(config, std::move(state));
}

/// Multi-start HIO initialization: `restarts` chains of `restart_iterations`
/// from random starts, then the chain with the lowest residual continues for
/// `iterations` more. With one restart this is a single hio() run of
/// restart_iterations + iterations.
inline HioResult hio_init(const MeasurementProblem& problem, const HioConfig& config,
                          RngStream& rng) {
  config.validate();
  detail::require_fourier(problem);
  std::optional<HioState> winner;
  for (std::size_t k = 0; k < config.restarts; ++k) {
    auto state = detail::start_chain(problem, detail::random_support_image(problem, rng));
    detail::run_chain(problem, config, state, config.restart_iterations);
    const double score = config.return_best ? state.best_residual : state.last_residual;
    const double incumbent = !winner                ? std::numeric_limits<double>::infinity()
                             : config.return_best ? winner->best_residual
                                                  : winner->last_residual;
    if (score < incumbent) winner = std::move(state);
  }
  detail::run_chain(problem, config, *winner, config.iterations);
  return detail::finish(config, std::move(*winner));
}

}  // namespace phaseforge
