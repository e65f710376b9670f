#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "phaseforge/fft.hpp"
#include "phaseforge/image.hpp"

namespace phaseforge {

/// Value reported when the estimate matches the reference exactly.
inline constexpr double kPsnrCap = 300.0;

inline double mean_squared_error(const Image& estimate, const Image& reference) {
  require_same_shape(estimate, reference, "mse");
  if (estimate.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate[i] - reference[i];
    s += d * d;
  }
  return s / static_cast<double>(estimate.size());
}

/// 10·log10(peak² / MSE), capped at kPsnrCap.
inline double psnr(const Image& estimate, const Image& reference, double peak = 255.0) {
  const double mse = mean_squared_error(estimate, reference);
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

/// 180° rotation about the image center.
inline Image rotate180(const Image& x) {
  Image out(x.height(), x.width());
  for (std::size_t r = 0; r < x.height(); ++r) {
    for (std::size_t c = 0; c < x.width(); ++c) {
      out(r, c) = x(x.height() - 1 - r, x.width() - 1 - c);
    }
  }
  return out;
}

/// out(r, c) = x(r - dr, c - dc), indices taken modulo the shape.
inline Image circular_shift(const Image& x, long dr, long dc) {
  const long h = static_cast<long>(x.height());
  const long w = static_cast<long>(x.width());
  Image out(x.height(), x.width());
  if (x.empty()) return out;
  for (long r = 0; r < h; ++r) {
    const long sr = ((r - dr) % h + h) % h;
    for (long c = 0; c < w; ++c) {
      const long sc = ((c - dc) % w + w) % w;
      out(r, c) = x(sr, sc);
    }
  }
  return out;
}

struct Registration {
  Image aligned;
  double psnr = 0.0;
  bool flipped = false;
  long shift_rows = 0;
  long shift_cols = 0;
};

/// Aligns `candidate` to `reference` over the ambiguity group of Fourier
/// magnitudes: {identity, 180° rotation} x integer circular shifts. Shift
/// candidates come from FFT cross-correlation; the best few per flip are then
/// scored exactly, together with the untouched candidate, so the result is
/// never worse than the unregistered PSNR.
inline Registration register_image(const Image& candidate, const Image& reference,
                                   double peak = 255.0) {
  require_same_shape(candidate, reference, "register");
  Registration best{candidate, psnr(candidate, reference, peak), false, 0, 0};
  if (candidate.empty()) return best;

  const long h = static_cast<long>(reference.height());
  const long w = static_cast<long>(reference.width());
  const auto ref_hat = fft2(reference);
  constexpr std::size_t kShortlist = 4;

  for (bool flipped : {false, true}) {
    const Image variant = flipped ? rotate180(candidate) : candidate;
    // corr(s) = sum_p ref(p) * variant(p - s)
    auto corr = fft2(variant);
    for (std::size_t i = 0; i < corr.size(); ++i) corr[i] = ref_hat[i] * std::conj(corr[i]);
    ifft2(corr);

    std::vector<std::size_t> order(corr.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t keep = std::min(kShortlist, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return corr[a].real() > corr[b].real() ||
                               (corr[a].real() == corr[b].real() && a < b);
                      });
    for (std::size_t k = 0; k < keep; ++k) {
      long dr = static_cast<long>(order[k]) / w;
      long dc = static_cast<long>(order[k]) % w;
      if (dr > h / 2) dr -= h;
      if (dc > w / 2) dc -= w;
      Image shifted = circular_shift(variant, dr, dc);
      const double score = psnr(shifted, reference, peak);
      if (score > best.psnr) best = {std::move(shifted), score, flipped, dr, dc};
    }
  }
  return best;
}

}  // namespace phaseforge
