#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "phaseforge/altmin.hpp"
#include "phaseforge/apls.hpp"
#include "phaseforge/denoiser_factory.hpp"
#include "phaseforge/errors.hpp"
#include "phaseforge/hio.hpp"
#include "phaseforge/measurement.hpp"
#include "phaseforge/metrics.hpp"
#include "phaseforge/pgm.hpp"
#include "phaseforge/report.hpp"

namespace phaseforge {

struct BenchImage {
  std::string path;
  std::string group = "all";  ///< free-form tag, e.g. natural / unnatural

  friend bool operator==(const BenchImage&, const BenchImage&) = default;
};

/// One benchmark matrix: images x noise levels x methods x trials.
struct ExperimentConfig {
  std::vector<BenchImage> images;
  std::size_t oversample = 2;
  std::vector<double> alphas = {2.0, 3.0, 4.0};
  std::vector<std::string> methods = {"hio", "altmin", "apls"};
  std::string denoiser = "smooth:strength=0.05";
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  std::string output_dir = "bench_out";
  bool save_images = true;
  HioConfig hio;
  AplsConfig apls;
  std::size_t altmin_iterations = 100;

  void validate() const {
    if (images.empty()) throw ConfigError("experiment: no images");
    if (alphas.empty()) throw ConfigError("experiment: no noise levels");
    for (double a : alphas) {
      if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("experiment: alpha must be >= 0");
    }
    if (methods.empty()) throw ConfigError("experiment: no methods");
    for (const auto& m : methods) {
      if (m != "hio" && m != "altmin" && m != "apls") {
        throw ConfigError("experiment: unknown method '" + m + "'");
      }
    }
    if (trials < 1) throw ConfigError("experiment: trials must be >= 1");
    if (oversample < 1) throw ConfigError("experiment: oversample must be >= 1");
    hio.validate();
    apls.validate();
  }

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    auto key = [](const ExperimentConfig& c) {
      return std::tie(c.images, c.oversample, c.alphas, c.methods, c.denoiser, c.trials,
                      c.base_seed, c.output_dir, c.save_images, c.altmin_iterations);
    };
    const auto& ha = a.hio;
    const auto& hb = b.hio;
    const auto& la = a.apls.langevin;
    const auto& lb = b.apls.langevin;
    return key(a) == key(b) &&
           std::tie(ha.beta, ha.iterations, ha.nonnegative, ha.restarts, ha.restart_iterations,
                    ha.return_best) == std::tie(hb.beta, hb.iterations, hb.nonnegative,
                                                hb.restarts, hb.restart_iterations,
                                                hb.return_best) &&
           std::tie(la.h0, la.beta, la.t1, la.mode, la.lambda, a.apls.t2) ==
               std::tie(lb.h0, lb.beta, lb.t1, lb.mode, lb.lambda, b.apls.t2);
  }
};

// --- config text format ----------------------------------------------------
//
// INI file with sections [experiment], [hio], [langevin], [apls], [altmin].
// Lists are comma separated. Unknown keys are rejected.

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

template <typename T>
T parse_value(const std::string& text, const std::string& key) {
  if (std::is_unsigned_v<T> && text.find('-') != std::string::npos) {
    throw ConfigError("config key " + key + ": expected a nonnegative integer, got '" + text + "'");
  }
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw ConfigError("config key " + key + ": cannot parse '" + text + "'");
  }
  return v;
}

template <>
inline bool parse_value<bool>(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config key " + key + ": expected true/false, got '" + text + "'");
}

template <>
inline double parse_value<double>(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": cannot parse '" + text + "' as a number");
  }
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  static const std::map<std::string, std::set<std::string>> known = {
      {"experiment",
       {"images", "groups", "oversample", "alphas", "methods", "denoiser", "trials", "base_seed",
        "output", "save_images"}},
      {"hio", {"beta", "iterations", "nonnegative", "restarts", "restart_iterations", "return_best"}},
      {"langevin", {"h0", "beta", "t1", "mode", "lambda"}},
      {"apls", {"t2"}},
      {"altmin", {"iterations"}},
  };
  for (const auto& [section, body] : tree) {
    auto it = known.find(section);
    if (it == known.end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("config: unknown key " + section + "." + key);
    }
  }

  ExperimentConfig c;
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(path)) return *v;
    return std::nullopt;
  };
  if (auto v = get("experiment.images")) {
    for (const auto& p : detail::split_list(*v)) c.images.push_back({p, "all"});
  }
  if (auto v = get("experiment.groups")) {
    const auto groups = detail::split_list(*v);
    if (groups.size() != c.images.size()) {
      throw ConfigError("config: experiment.groups must list one tag per image");
    }
    for (std::size_t i = 0; i < groups.size(); ++i) c.images[i].group = groups[i];
  }
  if (auto v = get("experiment.oversample")) c.oversample = detail::parse_value<std::size_t>(*v, "oversample");
  if (auto v = get("experiment.alphas")) {
    c.alphas.clear();
    for (const auto& a : detail::split_list(*v)) c.alphas.push_back(detail::parse_value<double>(a, "alphas"));
  }
  if (auto v = get("experiment.methods")) c.methods = detail::split_list(*v);
  if (auto v = get("experiment.denoiser")) c.denoiser = *v;
  if (auto v = get("experiment.trials")) c.trials = detail::parse_value<std::size_t>(*v, "trials");
  if (auto v = get("experiment.base_seed")) c.base_seed = detail::parse_value<std::uint64_t>(*v, "base_seed");
  if (auto v = get("experiment.output")) c.output_dir = *v;
  if (auto v = get("experiment.save_images")) c.save_images = detail::parse_value<bool>(*v, "save_images");

  if (auto v = get("hio.beta")) c.hio.beta = detail::parse_value<double>(*v, "hio.beta");
  if (auto v = get("hio.iterations")) c.hio.iterations = detail::parse_value<std::size_t>(*v, "hio.iterations");
  if (auto v = get("hio.nonnegative")) c.hio.nonnegative = detail::parse_value<bool>(*v, "hio.nonnegative");
  if (auto v = get("hio.restarts")) c.hio.restarts = detail::parse_value<std::size_t>(*v, "hio.restarts");
  if (auto v = get("hio.restart_iterations")) c.hio.restart_iterations = detail::parse_value<std::size_t>(*v, "hio.restart_iterations");
  if (auto v = get("hio.return_best")) c.hio.return_best = detail::parse_value<bool>(*v, "hio.return_best");

  auto& lc = c.apls.langevin;
  if (auto v = get("langevin.h0")) lc.h0 = detail::parse_value<double>(*v, "langevin.h0");
  if (auto v = get("langevin.beta")) lc.beta = detail::parse_value<double>(*v, "langevin.beta");
  if (auto v = get("langevin.t1")) lc.t1 = detail::parse_value<std::size_t>(*v, "langevin.t1");
  if (auto v = get("langevin.mode")) lc.mode = parse_consistency_mode(*v);
  if (auto v = get("langevin.lambda")) lc.lambda = detail::parse_value<double>(*v, "langevin.lambda");
  if (auto v = get("apls.t2")) c.apls.t2 = detail::parse_value<std::size_t>(*v, "apls.t2");
  if (auto v = get("altmin.iterations")) c.altmin_iterations = detail::parse_value<std::size_t>(*v, "altmin.iterations");

  c.validate();
  return c;
}

inline std::string serialize_experiment_config(const ExperimentConfig& c) {
  std::vector<std::string> paths, groups, alphas;
  for (const auto& im : c.images) {
    paths.push_back(im.path);
    groups.push_back(im.group);
  }
  for (double a : c.alphas) alphas.push_back(fmt::format("{}", a));
  const auto& h = c.hio;
  const auto& l = c.apls.langevin;
  return fmt::format(
      "[experiment]\nimages = {}\ngroups = {}\noversample = {}\nalphas = {}\nmethods = {}\n"
      "denoiser = {}\ntrials = {}\nbase_seed = {}\noutput = {}\nsave_images = {}\n\n"
      "[hio]\nbeta = {}\niterations = {}\nnonnegative = {}\nrestarts = {}\n"
      "restart_iterations = {}\nreturn_best = {}\n\n"
      "[langevin]\nh0 = {}\nbeta = {}\nt1 = {}\nmode = {}\nlambda = {}\n\n"
      "[apls]\nt2 = {}\n\n[altmin]\niterations = {}\n",
      detail::join(paths), detail::join(groups), c.oversample, detail::join(alphas),
      detail::join(c.methods), c.denoiser, c.trials, c.base_seed, c.output_dir, c.save_images,
      h.beta, h.iterations, h.nonnegative, h.restarts, h.restart_iterations, h.return_best, l.h0,
      l.beta, l.t1, to_string(l.mode), l.lambda, c.apls.t2, c.altmin_iterations);
}

/// Reads a config file. Relative image and output paths resolve against the
/// file's directory; every image must exist.
inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  auto c = parse_experiment_config(text.str());
  const auto base = path.parent_path();
  for (auto& im : c.images) {
    std::filesystem::path p(im.path);
    if (p.is_relative()) im.path = (base / p).lexically_normal().string();
    if (!std::filesystem::exists(im.path)) throw ConfigError("image not found: " + im.path);
  }
  // Weight files named by the denoiser spec follow the same rule.
  if (c.denoiser.rfind("cnn:", 0) == 0) {
    const bool keyed = c.denoiser.rfind("cnn:path=", 0) == 0;
    const std::filesystem::path weights(c.denoiser.substr(keyed ? 9 : 4));
    if (weights.is_relative()) {
      c.denoiser = "cnn:" + (base / weights).lexically_normal().string();
    }
  }
  if (std::filesystem::path(c.output_dir).is_relative()) {
    c.output_dir = (base / c.output_dir).lexically_normal().string();
  }
  return c;
}

// --- running the matrix ----------------------------------------------------

struct ResultRow {
  std::string image;
  std::string group;
  std::string method;
  double alpha = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double raw_psnr = 0.0;
  double registered_psnr = 0.0;
  double final_residual = 0.0;
  double wall_seconds = 0.0;
  std::string status = "ok";
};

/// Stable 64-bit FNV-1a.
inline std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Seed of one (image, method, α, trial) cell; reproducible in isolation.
inline std::uint64_t cell_seed(std::uint64_t base, const std::string& image,
                               const std::string& method, double alpha, std::size_t trial) {
  return base ^ stable_hash(fmt::format("{}|{}|{}|{}", image, method, alpha, trial));
}

inline std::string image_id(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

inline std::string cell_image_name(const ResultRow& row) {
  return fmt::format("{}_{}_a{}_s{}.pgm", row.image, row.method, row.alpha, row.seed);
}

struct BenchResult {
  std::vector<ResultRow> rows;  ///< canonical order: image, method, α, trial
  std::string summary;
};

namespace detail {

struct CellGroup {
  std::size_t image_index;
  double alpha;
  std::size_t trial;
};

inline std::size_t bench_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PHASEFORGE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) n = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return n;
}

// Measurement synthesis and the HIO initialization depend only on
// (image, α, trial), so every method in a group starts from the same x0.
inline std::vector<ResultRow> run_group(const ExperimentConfig& c, const Image& truth,
                                        const std::string& id, const std::string& group,
                                        double alpha, std::size_t trial,
                                        const Denoiser& denoiser) {
  std::vector<ResultRow> rows;
  const std::uint64_t measure_seed = cell_seed(c.base_seed, id, "measure", alpha, trial);
  const std::uint64_t init_seed = cell_seed(c.base_seed, id, "init", alpha, trial);

  std::optional<MeasurementProblem> problem;
  std::optional<HioResult> init;
  double init_seconds = 0.0;
  std::string group_error;
  try {
    RngStream noise_rng(measure_seed, 1);
    problem = synthesize(truth, c.oversample, alpha, noise_rng);
    const auto t0 = std::chrono::steady_clock::now();
    RngStream init_rng(init_seed, 2);
    init = hio_init(*problem, c.hio, init_rng);
    init_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  } catch (const std::exception& e) {
    group_error = e.what();
  }

  for (const auto& method : c.methods) {
    ResultRow row;
    row.image = id;
    row.group = group;
    row.method = method;
    row.alpha = alpha;
    row.trial = trial;
    row.seed = cell_seed(c.base_seed, id, method, alpha, trial);
    try {
      if (!group_error.empty()) throw Error(group_error);
      const auto t0 = std::chrono::steady_clock::now();
      Image estimate;
      if (method == "hio") {
        estimate = clamp(init->image);
      } else if (method == "altmin") {
        estimate = clamp(altmin(*problem, c.altmin_iterations, init->image).image);
      } else {
        AplsConfig cfg = c.apls;
        cfg.seed = row.seed;
        RngStream rng(row.seed, 3);
        estimate = apls(*problem, denoiser, cfg, init->image, rng).final_image;
      }
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() +
          (method == "hio" ? init_seconds : 0.0);
      row.final_residual = residual_norm(*problem, estimate);
      row.raw_psnr = psnr(estimate, truth);
      const auto reg = register_image(estimate, truth);
      row.registered_psnr = reg.psnr;
      if (c.save_images) save_pgm(std::filesystem::path(c.output_dir) / cell_image_name(row), estimate);
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
      row.raw_psnr = row.registered_psnr = row.final_residual = 0.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Mean registered PSNR per (group, method, α) over rows with status ok.
/// Group "all" aggregates every image.
inline std::map<std::tuple<std::string, std::string, double>, double> summarize(
    const std::vector<ResultRow>& rows) {
  std::map<std::tuple<std::string, std::string, double>, std::pair<double, std::size_t>> acc;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    for (const auto& g : {r.group, std::string("all")}) {
      auto& [sum, n] = acc[{g, r.method, r.alpha}];
      sum += r.registered_psnr;
      ++n;
    }
  }
  std::map<std::tuple<std::string, std::string, double>, double> out;
  for (const auto& [key, v] : acc) out[key] = v.first / static_cast<double>(v.second);
  return out;
}

/// Table of mean registered PSNR laid out as groups x (α, method).
inline std::string format_summary(const std::vector<ResultRow>& rows,
                                  const std::vector<std::string>& methods,
                                  const std::vector<double>& alphas) {
  const auto means = summarize(rows);
  std::vector<std::string> groups;
  for (const auto& r : rows) {
    if (r.group != "all" && std::find(groups.begin(), groups.end(), r.group) == groups.end()) {
      groups.push_back(r.group);
    }
  }
  std::sort(groups.begin(), groups.end());
  groups.push_back("all");

  std::string out = "Mean registered PSNR (dB)\n";
  out += fmt::format("{:<12}", "");
  for (double a : alphas) {
    out += fmt::format("| {:^{}} ", fmt::format("alpha = {}", a), methods.size() * 9 - 1);
  }
  out += "|\n" + fmt::format("{:<12}", "");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    out += "|";
    for (const auto& m : methods) out += fmt::format(" {:>8}", m);
    out += " ";
  }
  out += "|\n";
  for (const auto& g : groups) {
    out += fmt::format("{:<12}", g);
    for (double a : alphas) {
      out += "|";
      for (const auto& m : methods) {
        auto it = means.find({g, m, a});
        out += it == means.end() ? fmt::format(" {:>8}", "-") : fmt::format(" {:>8.2f}", it->second);
      }
      out += " ";
    }
    out += "|\n";
  }
  return out;
}

inline std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out =
      "image,group,method,alpha,trial,seed,raw_psnr,registered_psnr,final_residual,status\n";
  for (const auto& r : rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out += fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{}\n", r.image, r.group, r.method,
                       r.alpha, r.trial, r.seed, r.raw_psnr, r.registered_psnr, r.final_residual,
                       status);
  }
  return out;
}

/// Wall-clock timings live apart from results.csv so that file stays
/// byte-identical across runs.
inline std::string timings_csv(const std::vector<ResultRow>& rows) {
  std::string out = "image,method,alpha,trial,wall_seconds\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{:.3f}\n", r.image, r.method, r.alpha, r.trial,
                       r.wall_seconds);
  }
  return out;
}

/// Runs every (image, α, trial) group, possibly in parallel (PHASEFORGE_THREADS
/// caps the worker count), and writes results.csv, timings.csv, summary.txt
/// and per-cell PGMs into config.output_dir.
inline BenchResult run_bench(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.output_dir);
  const auto denoiser = make_denoiser(config.denoiser);

  std::vector<Image> truths;
  std::vector<std::string> ids;
  for (const auto& im : config.images) {
    truths.push_back(load_pgm(im.path));
    ids.push_back(image_id(im.path));
  }
  {
    std::set<std::string> unique(ids.begin(), ids.end());
    if (unique.size() != ids.size()) throw ConfigError("experiment: image file stems must be unique");
  }

  std::vector<detail::CellGroup> groups;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    for (double a : config.alphas) {
      for (std::size_t t = 0; t < config.trials; ++t) groups.push_back({i, a, t});
    }
  }

  std::vector<std::vector<ResultRow>> per_group(groups.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t g = next++; g < groups.size(); g = next++) {
      const auto& cg = groups[g];
      per_group[g] = detail::run_group(config, truths[cg.image_index], ids[cg.image_index],
                                       config.images[cg.image_index].group, cg.alpha, cg.trial,
                                       *denoiser);
    }
  };
  const std::size_t workers = std::min(detail::bench_threads(), groups.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  BenchResult result;
  for (auto& rows : per_group) {
    for (auto& r : rows) result.rows.push_back(std::move(r));
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.image, a.method, a.alpha, a.trial) <
           std::tie(b.image, b.method, b.alpha, b.trial);
  });
  result.summary = format_summary(result.rows, config.methods, config.alphas);

  const std::filesystem::path out(config.output_dir);
  write_text_file(out / "results.csv", results_csv(result.rows));
  write_text_file(out / "timings.csv", timings_csv(result.rows));
  write_text_file(out / "summary.txt", result.summary);
  return result;
}

}  // namespace phaseforge
