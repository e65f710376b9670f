#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "phaseforge/errors.hpp"
#include "phaseforge/image.hpp"

namespace phaseforge {

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseError::Kind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError(ParseError::Kind::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ParseError(ParseError::Kind::io, "write failed for " + path.string());
}

// Reads one whitespace-delimited unsigned header field, skipping '#' comments.
inline std::uint64_t read_header_number(const std::vector<unsigned char>& bytes,
                                        std::size_t& pos) {
  while (pos < bytes.size()) {
    if (std::isspace(bytes[pos])) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
    throw ParseError(ParseError::Kind::malformed_header, "PGM header: expected a number");
  }
  std::uint64_t value = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    value = value * 10 + (bytes[pos] - '0');
    if (value > 0xffffffffull) {
      throw ParseError(ParseError::Kind::malformed_header, "PGM header: number too large");
    }
    ++pos;
  }
  return value;
}

}  // namespace detail

/// Parses binary PGM (P5) bytes. Pixel values land in [0, 255]; 16-bit
/// (big-endian) payloads are scaled by 255/65535.
inline Image decode_pgm(const std::vector<unsigned char>& bytes) {
  using Kind = ParseError::Kind;
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw ParseError(Kind::malformed_header, "not a PGM file");
  }
  if (bytes[1] != '5') {
    throw ParseError(Kind::unsupported_format,
                     std::string("unsupported format: P") + static_cast<char>(bytes[1]) +
                         " (only binary P5 is supported)");
  }
  std::size_t pos = 2;
  const auto width = detail::read_header_number(bytes, pos);
  const auto height = detail::read_header_number(bytes, pos);
  const auto maxval = detail::read_header_number(bytes, pos);
  if (width == 0 || height == 0) throw ParseError(Kind::malformed_header, "PGM: zero dimension");
  if (maxval != 255 && maxval != 65535) {
    throw ParseError(Kind::unsupported_maxval,
                     "PGM: unsupported maxval " + std::to_string(maxval));
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw ParseError(Kind::malformed_header, "PGM: missing whitespace after maxval");
  }
  ++pos;

  const std::size_t count = width * height;
  const std::size_t bytes_per_pixel = maxval == 255 ? 1 : 2;
  if (bytes.size() - pos < count * bytes_per_pixel) {
    throw ParseError(Kind::truncated, "PGM: truncated payload (expected " +
                                          std::to_string(count * bytes_per_pixel) +
                                          " bytes, found " + std::to_string(bytes.size() - pos) +
                                          ")");
  }
  Image img(height, width);
  for (std::size_t i = 0; i < count; ++i) {
    if (bytes_per_pixel == 1) {
      img[i] = bytes[pos + i];
    } else {
      const unsigned v = (unsigned{bytes[pos + 2 * i]} << 8) | bytes[pos + 2 * i + 1];
      img[i] = v * (255.0 / 65535.0);
    }
  }
  return img;
}

/// Encodes as 8-bit P5: clamped to [0, 255], rounded half-to-even.
inline std::vector<unsigned char> encode_pgm(const Image& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(header.size() + image.size());
  for (double v : image) {
    const double clamped = std::clamp(v, 0.0, 255.0);
    bytes.push_back(static_cast<unsigned char>(std::nearbyint(clamped)));
  }
  return bytes;
}

inline Image load_pgm(const std::filesystem::path& path) {
  return decode_pgm(detail::read_file_bytes(path));
}

inline void save_pgm(const std::filesystem::path& path, const Image& image) {
  detail::write_file_bytes(path, encode_pgm(image));
}

}  // namespace phaseforge
