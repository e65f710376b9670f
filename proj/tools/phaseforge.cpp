// Command-line front end: synthesize, reconstruct, denoise, register, bench.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error (including invalid
// option values). Errors are printed to stderr as a single JSON object.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "phaseforge/altmin.hpp"
#include "phaseforge/apls.hpp"
#include "phaseforge/bench.hpp"
#include "phaseforge/denoiser_factory.hpp"
#include "phaseforge/hio.hpp"
#include "phaseforge/measurement.hpp"
#include "phaseforge/metrics.hpp"
#include "phaseforge/pgm.hpp"
#include "phaseforge/report.hpp"

namespace pf = phaseforge;
using json = nlohmann::json;

namespace {

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

struct SynthesizeArgs {
  std::string image, out, noise = "intensity";
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::size_t oversample = 2;
};

struct ReconstructArgs {
  std::string meas, method = "apls", denoiser = "smooth:strength=0.05", out, report, ref, init;
  std::string mode = "relaxed";
  double h0 = 0.1, beta = 0.0001, lambda = 1.0, hio_beta = 0.9;
  std::size_t t1 = 1, t2 = 500, hio_iters = 1000, restarts = 50, restart_iters = 50;
  std::size_t altmin_iters = 100;
  std::uint64_t seed = 0;
};

struct DenoiseArgs {
  std::string denoiser, in, out;
};

struct RegisterArgs {
  std::string ref, in, out;
};

struct BenchArgs {
  std::string config, out;
};

int run_synthesize(const SynthesizeArgs& a) {
  const auto noise = a.noise == "amplitude" ? pf::NoiseModel::amplitude : pf::NoiseModel::intensity;
  const auto x = pf::load_pgm(a.image);
  pf::RngStream rng(a.seed, 1);
  const auto problem = pf::synthesize(x, a.oversample, a.alpha, rng, noise);
  pf::save_measurement(a.out, problem);
  std::cout << json{{"out", a.out},
                    {"support", {x.height(), x.width()}},
                    {"frame", {problem.amplitudes.height(), problem.amplitudes.width()}},
                    {"alpha", a.alpha},
                    {"seed", a.seed}}
                   .dump()
            << "\n";
  return 0;
}

int run_reconstruct(const ReconstructArgs& a) {
  const auto problem = pf::load_measurement(a.meas);
  std::optional<pf::Image> reference;
  if (!a.ref.empty()) reference = pf::load_pgm(a.ref);

  pf::HioConfig hio_cfg;
  hio_cfg.beta = a.hio_beta;
  hio_cfg.iterations = a.hio_iters;
  hio_cfg.restarts = a.restarts;
  hio_cfg.restart_iterations = a.restart_iters;

  pf::Image x0;
  double init_residual = 0.0;
  if (!a.init.empty()) {
    x0 = pf::load_pgm(a.init);
    init_residual = pf::residual_norm(problem, x0);
  } else {
    pf::RngStream init_rng(a.seed, 2);
    auto init = pf::hio_init(problem, hio_cfg, init_rng);
    x0 = std::move(init.image);
    init_residual = init.residual;
  }

  pf::RunReport report;
  if (a.method == "hio") {
    report.method = "hio";
    report.final_image = pf::clamp(x0);
    report.initial_residual = init_residual;
  } else if (a.method == "altmin") {
    auto result = pf::altmin(problem, a.altmin_iters, x0);
    report.method = "altmin";
    for (std::size_t t = 0; t < result.objective.size(); ++t) {
      report.iterations.push_back({t + 1, result.objective[t], 0.0, 0.0, 0.0, NAN});
    }
    report.final_image = pf::clamp(result.image);
    report.initial_residual = init_residual;
  } else if (a.method == "apls") {
    pf::AplsConfig cfg;
    cfg.langevin.h0 = a.h0;
    cfg.langevin.beta = a.beta;
    cfg.langevin.t1 = a.t1;
    cfg.langevin.mode = pf::parse_consistency_mode(a.mode);
    cfg.langevin.lambda = a.lambda;
    cfg.t2 = a.t2;
    cfg.seed = a.seed;
    const auto denoiser = pf::make_denoiser(a.denoiser);
    pf::RngStream rng(a.seed, 3);
    report = pf::apls(problem, *denoiser, cfg, x0, rng, reference);
  } else {
    throw pf::ConfigError("unknown method '" + a.method + "'");
  }
  report.final_residual = pf::residual_norm(problem, report.final_image);
  pf::save_pgm(a.out, report.final_image);
  if (!a.report.empty()) pf::write_text_file(a.report, pf::report_csv(report));

  json summary{{"method", report.method},
               {"out", a.out},
               {"initial_residual", report.initial_residual},
               {"final_residual", report.final_residual}};
  if (reference) {
    summary["raw_psnr"] = pf::psnr(report.final_image, *reference);
    summary["registered_psnr"] = pf::register_image(report.final_image, *reference).psnr;
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_denoise(const DenoiseArgs& a) {
  const auto denoiser = pf::make_denoiser(a.denoiser);
  const auto y = pf::load_pgm(a.in);
  pf::save_pgm(a.out, denoiser->denoise(y));
  std::cout << json{{"denoiser", denoiser->describe()}, {"out", a.out}}.dump() << "\n";
  return 0;
}

int run_register(const RegisterArgs& a) {
  const auto ref = pf::load_pgm(a.ref);
  const auto in = pf::load_pgm(a.in);
  const auto reg = pf::register_image(in, ref);
  if (!a.out.empty()) pf::save_pgm(a.out, reg.aligned);
  std::cout << json{{"raw_psnr", pf::psnr(in, ref)},
                    {"registered_psnr", reg.psnr},
                    {"flipped", reg.flipped},
                    {"shift", {reg.shift_rows, reg.shift_cols}}}
                   .dump()
            << "\n";
  return 0;
}

int run_bench(const BenchArgs& a) {
  auto config = pf::load_experiment_config(a.config);
  if (!a.out.empty()) config.output_dir = a.out;
  const auto result = pf::run_bench(config);
  std::cout << result.summary;
  std::size_t failed = 0;
  for (const auto& r : result.rows) failed += r.status != "ok";
  std::cout << json{{"rows", result.rows.size()}, {"failed", failed}, {"output", config.output_dir}}
                   .dump()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase retrieval from Fourier magnitudes: HIO, alternating minimization and "
               "alternating phase Langevin sampling"};
  app.require_subcommand(1);

  SynthesizeArgs syn;
  auto* synthesize = app.add_subcommand("synthesize", "Simulate noisy oversampled Fourier magnitudes");
  synthesize->add_option("--image", syn.image, "Ground-truth PGM")->required()->check(CLI::ExistingFile);
  synthesize->add_option("--alpha", syn.alpha, "Noise level")->check(CLI::NonNegativeNumber);
  synthesize->add_option("--seed", syn.seed, "Noise seed");
  synthesize->add_option("--oversample", syn.oversample, "Frame size factor per axis")->check(CLI::PositiveNumber);
  synthesize->add_option("--noise", syn.noise, "intensity (Poisson-like) or amplitude (additive)")
      ->check(CLI::IsMember({"intensity", "amplitude"}));
  synthesize->add_option("--out", syn.out, "Measurement file (.prm)")->required();

  ReconstructArgs rec;
  auto* reconstruct = app.add_subcommand("reconstruct", "Recover an image from a measurement file");
  reconstruct->add_option("--meas", rec.meas, "Measurement file")->required()->check(CLI::ExistingFile);
  reconstruct->add_option("--method", rec.method, "hio, altmin or apls")
      ->check(CLI::IsMember({"hio", "altmin", "apls"}));
  reconstruct->add_option("--denoiser", rec.denoiser, "identity | gaussian:tau2=..[,sigma2=..,mu=..] | cnn:<file> | smooth[:strength=..]");
  reconstruct->add_option("--h0", rec.h0, "Initial Langevin step size");
  reconstruct->add_option("--beta", rec.beta, "Langevin noise retention in (0, 1]");
  reconstruct->add_option("--t1", rec.t1, "Langevin steps per phase update");
  reconstruct->add_option("--t2", rec.t2, "Phase updates");
  reconstruct->add_option("--mode", rec.mode, "strict or relaxed")->check(CLI::IsMember({"strict", "relaxed"}));
  reconstruct->add_option("--lambda", rec.lambda, "Data weight in relaxed mode");
  reconstruct->add_option("--seed", rec.seed, "Seed for initialization and sampling");
  reconstruct->add_option("--hio-beta", rec.hio_beta, "HIO feedback parameter");
  reconstruct->add_option("--hio-iters", rec.hio_iters, "HIO continuation iterations");
  reconstruct->add_option("--restarts", rec.restarts, "HIO random restarts");
  reconstruct->add_option("--restart-iters", rec.restart_iters, "Iterations per HIO restart");
  reconstruct->add_option("--altmin-iters", rec.altmin_iters, "Alternating minimization iterations");
  reconstruct->add_option("--init", rec.init, "Start from this PGM instead of HIO")->check(CLI::ExistingFile);
  reconstruct->add_option("--ref", rec.ref, "Ground truth for PSNR reporting")->check(CLI::ExistingFile);
  reconstruct->add_option("--report", rec.report, "Per-iteration CSV report");
  reconstruct->add_option("--out", rec.out, "Reconstruction PGM")->required();

  DenoiseArgs den;
  auto* denoise = app.add_subcommand("denoise", "Apply a denoiser to a PGM image");
  denoise->add_option("--denoiser", den.denoiser, "Denoiser spec")->required();
  denoise->add_option("--in", den.in, "Input PGM")->required()->check(CLI::ExistingFile);
  denoise->add_option("--out", den.out, "Output PGM")->required();

  RegisterArgs reg;
  auto* registration = app.add_subcommand("register", "PSNR after resolving flip/shift ambiguities");
  registration->add_option("--ref", reg.ref, "Reference PGM")->required()->check(CLI::ExistingFile);
  registration->add_option("--in", reg.in, "Candidate PGM")->required()->check(CLI::ExistingFile);
  registration->add_option("--out", reg.out, "Write the aligned candidate");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark matrix from a config file");
  bench_cmd->add_option("--config", bench.config, "Experiment INI file")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--out", bench.out, "Override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*synthesize) return run_synthesize(syn);
    if (*reconstruct) return run_reconstruct(rec);
    if (*denoise) return run_denoise(den);
    if (*registration) return run_register(reg);
    if (*bench_cmd) return run_bench(bench);
  } catch (const pf::ConfigError& e) {
    print_error("usage", e.what());
    return 2;
  } catch (const pf::ParseError& e) {
    print_error("parse", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return 1;
  }
  return 2;
}
