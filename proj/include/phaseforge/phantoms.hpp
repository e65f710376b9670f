#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "phaseforge/image.hpp"
#include "phaseforge/rng.hpp"

namespace phaseforge {

// Procedural grayscale test images. "Natural" ones are smooth fields with
// soft structures and fine texture; "unnatural" ones are piecewise-constant
// graphics with hard edges. Both fill the whole support and span roughly
// [0, 255].

namespace detail {

inline Image box_blur(const Image& x) {
  Image out(x.height(), x.width());
  const long h = static_cast<long>(x.height()), w = static_cast<long>(x.width());
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      double s = 0.0;
      int n = 0;
      for (long dr = -1; dr <= 1; ++dr) {
        for (long dc = -1; dc <= 1; ++dc) {
          const long rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          s += x(rr, cc);
          ++n;
        }
      }
      out(r, c) = s / n;
    }
  }
  return out;
}

inline Image rescale(Image x, double lo, double hi) {
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const double a = *mn, b = *mx;
  for (auto& v : x) v = b > a ? lo + (hi - lo) * (v - a) / (b - a) : 0.5 * (lo + hi);
  return x;
}

}  // namespace detail

inline Image phantom_natural(std::size_t height, std::size_t width, std::uint64_t seed) {
  RngStream rng(seed, 0x6e6174);
  Image img(height, width);
  const double h = static_cast<double>(height), w = static_cast<double>(width);
  const double gr = rng.uniform(-1.0, 1.0), gc = rng.uniform(-1.0, 1.0);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) img(r, c) = 40.0 * (gr * r / h + gc * c / w);
  }
  const int blobs = 6 + static_cast<int>(rng.uniform() * 5);
  for (int k = 0; k < blobs; ++k) {
    const double cr = rng.uniform(0.0, h), cc = rng.uniform(0.0, w);
    const double s = rng.uniform(0.06, 0.25) * std::min(h, w);
    const double amp = rng.uniform(-90.0, 120.0);
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
        img(r, c) += amp * std::exp(-d2 / (2.0 * s * s));
      }
    }
  }
  // A couple of soft-edged ellipses give the image some object boundaries.
  for (int k = 0; k < 2; ++k) {
    const double cr = rng.uniform(0.2 * h, 0.8 * h), cc = rng.uniform(0.2 * w, 0.8 * w);
    const double ar = rng.uniform(0.1, 0.3) * h, ac = rng.uniform(0.1, 0.3) * w;
    const double amp = rng.uniform(-60.0, 60.0);
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        const double q = std::hypot((r - cr) / ar, (c - cc) / ac);
        img(r, c) += amp / (1.0 + std::exp((q - 1.0) * 8.0));
      }
    }
  }
  Image texture = rng.normal_image(height, width);
  texture = detail::box_blur(texture);
  axpy(12.0, texture, img);
  return detail::rescale(std::move(img), 16.0, 240.0);
}

inline Image phantom_unnatural(std::size_t height, std::size_t width, std::uint64_t seed) {
  RngStream rng(seed, 0x756e6e);
  const double levels[] = {0.0, 48.0, 96.0, 160.0, 208.0, 255.0};
  auto level = [&] { return levels[static_cast<std::size_t>(rng.uniform() * 6.0) % 6]; };
  Image img(height, width, level());
  const long h = static_cast<long>(height), w = static_cast<long>(width);
  const int shapes = 5 + static_cast<int>(rng.uniform() * 4);
  for (int k = 0; k < shapes; ++k) {
    const double v = level();
    const long r0 = static_cast<long>(rng.uniform() * h), c0 = static_cast<long>(rng.uniform() * w);
    const long rh = 2 + static_cast<long>(rng.uniform() * h / 2);
    const long cw = 2 + static_cast<long>(rng.uniform() * w / 2);
    const double kind = rng.uniform();
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        bool inside = false;
        if (kind < 0.4) {
          inside = r >= r0 && r < r0 + rh && c >= c0 && c < c0 + cw;
        } else if (kind < 0.7) {
          const double q = std::hypot(double(r - r0) / rh, double(c - c0) / cw);
          inside = q < 1.0;
        } else if (kind < 0.85) {
          const double q = std::hypot(double(r - r0) / rh, double(c - c0) / cw);
          inside = q < 1.0 && q > 0.6;
        } else {
          // stripes
          inside = r >= r0 && r < r0 + rh && c >= c0 && c < c0 + cw && ((r + c) / 2) % 2 == 0;
        }
        if (inside) img(r, c) = v;
      }
    }
  }
  return img;
}

struct TestImage {
  std::string name;
  std::string group;  ///< "natural" or "unnatural"
  Image image;
};

/// `count` images alternating natural/unnatural.
inline std::vector<TestImage> phantom_set(std::size_t count, std::size_t size,
                                          std::uint64_t seed) {
  std::vector<TestImage> out;
  for (std::size_t k = 0; k < count; ++k) {
    const bool natural = k % 2 == 0;
    const std::uint64_t s = seed * 1000 + k;
    out.push_back({(natural ? "natural" : "unnatural") + std::to_string(k / 2),
                   natural ? "natural" : "unnatural",
                   natural ? phantom_natural(size, size, s) : phantom_unnatural(size, size, s)});
  }
  return out;
}

}  // namespace phaseforge
