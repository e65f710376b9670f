#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

#include "phaseforge/image.hpp"

namespace phaseforge {

namespace detail {

// FFTW's planner is not reentrant; only fftw_execute is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// One in-place plan plus its aligned buffer. FFTW_ESTIMATE keeps plan choice
// (and therefore rounding) identical across runs and threads.
class FftPlan {
public:
  FftPlan(std::size_t height, std::size_t width, int sign) : size_(height * width) {
    std::lock_guard lock(fftw_planner_mutex());
    buffer_ = fftw_alloc_complex(size_);
    plan_ = fftw_plan_dft_2d(static_cast<int>(height), static_cast<int>(width), buffer_, buffer_,
                             sign, FFTW_ESTIMATE);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(buffer_);
  }

  void execute(ComplexGrid& grid) {
    auto* data = grid.values().data();
    std::memcpy(buffer_, data, size_ * sizeof(fftw_complex));
    fftw_execute(plan_);
    std::memcpy(data, buffer_, size_ * sizeof(fftw_complex));
  }

private:
  std::size_t size_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan plan_ = nullptr;
};

inline FftPlan& cached_plan(std::size_t height, std::size_t width, int sign) {
  thread_local std::map<std::tuple<std::size_t, std::size_t, int>, FftPlan> plans;
  auto key = std::make_tuple(height, width, sign);
  auto it = plans.find(key);
  if (it == plans.end()) {
    it = plans
             .emplace(std::piecewise_construct, std::forward_as_tuple(key),
                      std::forward_as_tuple(height, width, sign))
             .first;
  }
  return it->second;
}

inline void unitary_transform(ComplexGrid& grid, int sign) {
  if (grid.empty()) return;
  cached_plan(grid.height(), grid.width(), sign).execute(grid);
  const double scale = 1.0 / std::sqrt(static_cast<double>(grid.size()));
  for (auto& v : grid) v *= scale;
}

}  // namespace detail

/// Unitary 2-D DFT in place (forward sign -1).
inline void fft2(ComplexGrid& grid) { detail::unitary_transform(grid, FFTW_FORWARD); }

/// Unitary inverse 2-D DFT in place.
inline void ifft2(ComplexGrid& grid) { detail::unitary_transform(grid, FFTW_BACKWARD); }

inline ComplexGrid fft2(const Image& image) {
  auto z = to_complex(image);
  fft2(z);
  return z;
}

}  // namespace phaseforge
