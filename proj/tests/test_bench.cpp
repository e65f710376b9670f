#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "phaseforge/bench.hpp"
#include "phaseforge/pgm.hpp"
#include "phaseforge/phantoms.hpp"

using namespace phaseforge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("phaseforge_bench_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Two tiny images and cheap solver settings so a full matrix runs in seconds.
ExperimentConfig small_config(const fs::path& dir) {
  ExperimentConfig c;
  const auto set = phantom_set(2, 12, 3);
  for (const auto& im : set) {
    const auto path = dir / (im.name + ".pgm");
    save_pgm(path, im.image);
    c.images.push_back({path.string(), im.group});
  }
  c.alphas = {0.0, 3.0};
  c.trials = 2;
  c.base_seed = 99;
  c.hio.restarts = 3;
  c.hio.restart_iterations = 20;
  c.hio.iterations = 100;
  c.apls.t2 = 30;
  c.altmin_iterations = 20;
  c.output_dir = (dir / "out").string();
  return c;
}

std::string slurp(const fs::path& p) {
  const auto bytes = detail::read_file_bytes(p);
  return {bytes.begin(), bytes.end()};
}

}  // namespace

TEST(Config, SerializeParseRoundTrip) {
  ExperimentConfig c;
  c.images = {{"a.pgm", "natural"}, {"b.pgm", "unnatural"}};
  c.alphas = {0.5, 3.0, 1e-3};
  c.methods = {"apls", "hio"};
  c.denoiser = "gaussian:tau2=900,mu=128";
  c.trials = 4;
  c.base_seed = 18446744073709551615ull;
  c.hio.beta = 0.0;
  c.hio.return_best = false;
  c.apls.langevin.mode = ConsistencyMode::strict;
  c.apls.langevin.beta = 0.1 + 0.2;
  c.apls.t2 = 7;
  c.altmin_iterations = 3;
  EXPECT_EQ(parse_experiment_config(serialize_experiment_config(c)), c);
  ExperimentConfig defaults;
  defaults.images = {{"x.pgm", "all"}};
  EXPECT_EQ(parse_experiment_config(serialize_experiment_config(defaults)), defaults);
}

TEST(Config, Defaults) {
  const auto c = parse_experiment_config("[experiment]\nimages = x.pgm\n");
  EXPECT_EQ(c.alphas, (std::vector<double>{2, 3, 4}));
  EXPECT_EQ(c.hio.restarts, 50u);
  EXPECT_EQ(c.hio.restart_iterations, 50u);
  EXPECT_EQ(c.hio.iterations, 1000u);
  EXPECT_EQ(c.apls.t2, 500u);
  EXPECT_EQ(c.apls.langevin.t1, 1u);
  EXPECT_EQ(c.apls.langevin.h0, 0.1);
  EXPECT_EQ(c.apls.langevin.beta, 1e-4);
  EXPECT_EQ(c.images[0].group, "all");
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(parse_experiment_config("[experiment]\nimages = x.pgm\ncolour = red\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[solver]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nimages = x.pgm\ntrials = -1\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nimages = x.pgm\nalphas = 2,abc\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nimages = x.pgm\nmethods = hio,pie\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nimages = a.pgm,b.pgm\ngroups = g\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nimages = x.pgm\n[langevin]\nbeta = 0\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config(""), ConfigError);
  const auto dir = scratch("missing");
  const std::string ini = "[experiment]\nimages = nowhere.pgm\n";
  detail::write_file_bytes(dir / "c.ini", {ini.begin(), ini.end()});
  EXPECT_THROW(load_experiment_config(dir / "c.ini"), ConfigError);
}

TEST(Summary, MeansPerCellAndOverall) {
  std::vector<ResultRow> rows(3);
  rows[0].group = "natural";
  rows[0].method = "apls";
  rows[0].alpha = 3;
  rows[0].registered_psnr = 20;
  rows[1] = rows[0];
  rows[1].registered_psnr = 30;
  rows[2] = rows[0];
  rows[2].group = "unnatural";
  rows[2].registered_psnr = 40;
  auto failed = rows[0];
  failed.status = "error: boom";
  failed.registered_psnr = 1000;
  rows.push_back(failed);
  const auto s = summarize(rows);
  EXPECT_DOUBLE_EQ(s.at({"natural", "apls", 3.0}), 25.0);
  EXPECT_DOUBLE_EQ(s.at({"unnatural", "apls", 3.0}), 40.0);
  EXPECT_DOUBLE_EQ(s.at({"all", "apls", 3.0}), 30.0);
}

TEST(Seeds, StablePerCellAndDistinct) {
  EXPECT_EQ(stable_hash(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(stable_hash("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(cell_seed(1, "img", "apls", 3.0, 0), cell_seed(1, "img", "apls", 3.0, 0));
  EXPECT_NE(cell_seed(1, "img", "apls", 3.0, 0), cell_seed(1, "img", "apls", 3.0, 1));
  EXPECT_NE(cell_seed(1, "img", "apls", 3.0, 0), cell_seed(1, "img", "hio", 3.0, 0));
  EXPECT_NE(cell_seed(1, "img", "apls", 3.0, 0), cell_seed(2, "img", "apls", 3.0, 0));
}

TEST(Bench, DeterministicAcrossRunsAndThreadCounts) {
  const auto dir = scratch("det");
  auto c = small_config(dir);
  ::setenv("PHASEFORGE_THREADS", "1", 1);
  const auto first = run_bench(c);
  const auto csv1 = slurp(fs::path(c.output_dir) / "results.csv");
  c.output_dir = (dir / "out2").string();
  ::setenv("PHASEFORGE_THREADS", "3", 1);
  const auto second = run_bench(c);
  ::unsetenv("PHASEFORGE_THREADS");
  const auto csv2 = slurp(fs::path(c.output_dir) / "results.csv");
  EXPECT_EQ(csv1, csv2);
  ASSERT_EQ(first.rows.size(), 2u * 2 * 2 * 3);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "timings.csv"));
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "summary.txt"));
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / cell_image_name(second.rows[0])));
  EXPECT_EQ(csv1.substr(0, csv1.find('\n')),
            "image,group,method,alpha,trial,seed,raw_psnr,registered_psnr,final_residual,status");
  for (const auto& r : first.rows) EXPECT_EQ(r.status, "ok") << r.image << " " << r.method;
}

TEST(Bench, RegisteredNeverBelowRawAndApplsFitsNoiselessData) {
  const auto dir = scratch("props");
  auto c = small_config(dir);
  c.save_images = false;
  c.alphas = {0.0};
  c.trials = 1;
  c.apls.t2 = 100;
  c.apls.langevin.beta = 1.0;
  c.denoiser = "identity";
  const auto result = run_bench(c);
  EXPECT_FALSE(fs::exists(fs::path(c.output_dir) / cell_image_name(result.rows[0])));
  for (const auto& r : result.rows) EXPECT_GE(r.registered_psnr, r.raw_psnr);
  for (const auto& apls_row : result.rows) {
    if (apls_row.method != "apls") continue;
    for (const auto& hio_row : result.rows) {
      if (hio_row.method == "hio" && hio_row.image == apls_row.image) {
        EXPECT_LE(apls_row.final_residual, hio_row.final_residual + 1e-9);
      }
    }
  }
}

TEST(Bench, SharedInitializationAcrossMethods) {
  // altmin with zero iterations returns its start, which must be the same
  // clamped HIO image the hio row reports.
  const auto dir = scratch("shared");
  auto c = small_config(dir);
  c.trials = 1;
  c.alphas = {3.0};
  c.methods = {"hio", "altmin"};
  c.altmin_iterations = 0;
  c.save_images = false;
  const auto result = run_bench(c);
  ASSERT_EQ(result.rows.size(), 4u);
  EXPECT_EQ(result.rows[0].method, "altmin");
  EXPECT_EQ(result.rows[0].final_residual, result.rows[1].final_residual);
  EXPECT_EQ(result.rows[0].raw_psnr, result.rows[1].raw_psnr);
}

TEST(Bench, ConfigFileResolvesRelativePaths) {
  const auto dir = scratch("file");
  save_pgm(dir / "tiny.pgm", phantom_natural(8, 8, 1));
  const std::string ini =
      "[experiment]\nimages = tiny.pgm\nalphas = 2\nmethods = hio\noutput = res\n"
      "[hio]\nrestarts = 2\nrestart_iterations = 5\niterations = 10\n";
  detail::write_file_bytes(dir / "exp.ini", {ini.begin(), ini.end()});
  const auto c = load_experiment_config(dir / "exp.ini");
  EXPECT_EQ(fs::path(c.images[0].path), (dir / "tiny.pgm").lexically_normal());
  const auto result = run_bench(c);
  EXPECT_EQ(result.rows.size(), 1u);
  EXPECT_TRUE(fs::exists(dir / "res" / "results.csv"));
}
