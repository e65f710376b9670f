#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "phaseforge/errors.hpp"
#include "phaseforge/image.hpp"

namespace phaseforge {

struct IterationRecord {
  std::size_t iter = 0;
  double residual = 0.0;  ///< ‖b − |A x_t|‖₂
  double sigma = 0.0;     ///< σ_t of the last Langevin step, 0 for non-sampling solvers
  double h = 0.0;
  double gamma = 0.0;
  double psnr = NAN;      ///< against the reference image, NaN when none was given
};

/// Per-iteration diagnostics plus the final reconstruction of one solver run.
struct RunReport {
  std::string method;
  std::vector<IterationRecord> iterations;
  Image final_image;  ///< clamped to [0, 255]
  double initial_residual = 0.0;
  double final_residual = 0.0;  ///< residual of final_image
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string config;  ///< echo of the configuration, key=value pairs
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  return fmt::format("{:.9g}", v);
}

inline std::string report_csv(const RunReport& report) {
  std::string out = "iter,residual,sigma,h,gamma,psnr_if_reference_given\n";
  for (const auto& r : report.iterations) {
    out += fmt::format("{},{},{},{},{},{}\n", r.iter, format_double(r.residual),
                       format_double(r.sigma), format_double(r.h), format_double(r.gamma),
                       format_double(r.psnr));
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace phaseforge
