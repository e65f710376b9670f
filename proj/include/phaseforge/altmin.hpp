#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <fmt/format.h>

#include "phaseforge/errors.hpp"
#include "phaseforge/image.hpp"
#include "phaseforge/measurement.hpp"
#include "phaseforge/operators.hpp"

namespace phaseforge {

struct CgOptions {
  double tolerance = 1e-8;  ///< on ‖A^T(c − Ax)‖ relative to ‖A^T c‖
  std::size_t max_iterations = 200;
};

/// argmin_x ‖Ax − c‖₂ by conjugate gradients on A^T A x = A^T c, starting
/// from `x`. Throws NumericalError when the tolerance is not reached.
inline Image least_squares(const LinearOperator& op, const ComplexGrid& c, Image x,
                           const CgOptions& options = {}) {
  const Image rhs = op.adjoint(c);
  const double rhs_norm = norm(rhs);
  if (rhs_norm == 0.0) return Image(x.height(), x.width());
  Image r = rhs - op.adjoint(op.apply(x));
  Image p = r;
  double rr = squared_norm(r);
  const double target = options.tolerance * rhs_norm;
  for (std::size_t k = 0; k < options.max_iterations && std::sqrt(rr) > target; ++k) {
    const Image q = op.adjoint(op.apply(p));
    const double pq = dot(p, q);
    if (pq <= 0.0) break;
    const double step = rr / pq;
    axpy(step, p, x);
    axpy(-step, q, r);
    const double rr_next = squared_norm(r);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + (rr_next / rr) * p[i];
    rr = rr_next;
  }
  if (std::sqrt(rr) > target) {
    throw NumericalError(fmt::format(
        "conjugate gradient did not converge: relative normal-equation residual {:.3e}",
        std::sqrt(rr) / rhs_norm));
  }
  return x;
}

struct AltMinResult {
  Image image;
  std::vector<double> objective;  ///< ‖A x_t − p_t ⊙ b‖₂ after each signal update
};

/// Classical alternating minimization: p_t = Ph(A x_{t-1}), then
/// x_t = argmin_x ‖Ax − p_t ⊙ b‖₂. Isometric operators use x = A^T(p ⊙ b);
/// others run CG warm-started at x_{t-1}, which keeps the objective monotone.
inline AltMinResult altmin(const MeasurementProblem& problem, std::size_t iterations,
                           const Image& x0, const CgOptions& cg = {}) {
  const auto& op = *problem.op;
  AltMinResult result{x0, {}};
  result.objective.reserve(iterations);
  for (std::size_t t = 0; t < iterations; ++t) {
    const ComplexGrid target = apply_phase(phase(op.apply(result.image)), problem.amplitudes);
    if (op.is_isometry()) {
      result.image = op.adjoint(target);
    } else {
      result.image = least_squares(op, target, result.image, cg);
    }
    result.objective.push_back(norm(op.apply(result.image) - target));
    if (!result.image.all_finite()) throw NumericalError("altmin produced a non-finite iterate");
  }
  return result;
}

}  // namespace phaseforge
