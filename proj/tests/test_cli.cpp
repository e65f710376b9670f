#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "phaseforge/denoiser_factory.hpp"
#include "phaseforge/measurement.hpp"
#include "phaseforge/pgm.hpp"
#include "phaseforge/phantoms.hpp"

using namespace phaseforge;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("phaseforge_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    save_pgm(dir_ / "truth.pgm", phantom_natural(16, 16, 4));
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Outcome run(const std::string& args) const {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + PHASEFORGE_CLI + "\" " + args + " >\"" +
                            out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    auto text = [](const fs::path& p) {
      const auto b = detail::read_file_bytes(p);
      return std::string(b.begin(), b.end());
    };
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, text(out), text(err)};
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthesizeWritesMeasurementFile) {
  const auto r = run("synthesize --image " + path("truth.pgm") + " --alpha 3 --seed 5 --out " +
                     path("m.prm"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = json::parse(r.out);
  EXPECT_EQ(summary["frame"][0], 32);
  const auto p = load_measurement(path("m.prm"));
  EXPECT_EQ(p.alpha, 3.0);
  EXPECT_EQ(p.seed, 5u);
  EXPECT_EQ(p.amplitudes.height(), 32u);

  // Same seed, same bytes.
  ASSERT_EQ(run("synthesize --image " + path("truth.pgm") + " --alpha 3 --seed 5 --out " +
                path("m2.prm")).code, 0);
  EXPECT_EQ(detail::read_file_bytes(path("m.prm")), detail::read_file_bytes(path("m2.prm")));
}

TEST_F(Cli, ReconstructEachMethod) {
  ASSERT_EQ(run("synthesize --image " + path("truth.pgm") + " --alpha 0 --out " + path("m.prm")).code, 0);
  for (const std::string method : {"hio", "altmin", "apls"}) {
    const auto r = run("reconstruct --meas " + path("m.prm") + " --method " + method +
                       " --restarts 5 --hio-iters 200 --t2 50 --altmin-iters 20 --ref " +
                       path("truth.pgm") + " --report " + path(method + ".csv") + " --out " +
                       path(method + ".pgm"));
    ASSERT_EQ(r.code, 0) << method << ": " << r.err;
    const auto summary = json::parse(r.out);
    EXPECT_EQ(summary["method"], method);
    EXPECT_GE(summary["registered_psnr"].get<double>(), summary["raw_psnr"].get<double>());
    const Image est = load_pgm(path(method + ".pgm"));
    EXPECT_EQ(est.height(), 16u);
  }
  const auto report = detail::read_file_bytes(path("apls.csv"));
  const std::string text(report.begin(), report.end());
  EXPECT_EQ(text.substr(0, text.find('\n')), "iter,residual,sigma,h,gamma,psnr_if_reference_given");
}

TEST_F(Cli, DenoiseWithWeightFile) {
  save_weights(path("w.bfc"), make_smoothing_cnn(0.05));
  const auto r = run("denoise --denoiser cnn:" + path("w.bfc") + " --in " + path("truth.pgm") +
                     " --out " + path("d.pgm"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("d.pgm")));
}

TEST_F(Cli, RegisterIdenticalImagesHitsTheCap) {
  const auto r = run("register --ref " + path("truth.pgm") + " --in " + path("truth.pgm"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["registered_psnr"], 300.0);
}

TEST_F(Cli, BenchFromConfig) {
  const std::string ini =
      "[experiment]\nimages = truth.pgm\nalphas = 3\nmethods = hio,apls\noutput = out\n"
      "[hio]\nrestarts = 2\nrestart_iterations = 10\niterations = 50\n[apls]\nt2 = 10\n";
  detail::write_file_bytes(path("exp.ini"), {ini.begin(), ini.end()});
  const auto r = run("bench --config " + path("exp.ini"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "results.csv"));
}

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("transmogrify").code, 2);
  EXPECT_EQ(run("register --ref " + path("truth.pgm") + " --in " + path("truth.pgm") + " --bogus").code, 2);
  const auto r = run("synthesize --image " + path("truth.pgm") + " --alpha -1 --out " + path("m.prm"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err.substr(0, r.err.find('\n')))["error"], "usage");
  ASSERT_EQ(run("synthesize --image " + path("truth.pgm") + " --out " + path("m.prm")).code, 0);
  EXPECT_EQ(run("reconstruct --meas " + path("m.prm") + " --denoiser median --out " + path("x.pgm")).code, 2);
}

TEST_F(Cli, RuntimeErrorsExitWithOneAndReportJson) {
  const std::string junk = "P2\n1 1\n255\n0\n";
  detail::write_file_bytes(path("ascii.pgm"), {junk.begin(), junk.end()});
  const auto r = run("register --ref " + path("truth.pgm") + " --in " + path("ascii.pgm"));
  EXPECT_EQ(r.code, 1);
  const auto err = json::parse(r.err);
  EXPECT_EQ(err["error"], "parse");
  EXPECT_NE(err["message"].get<std::string>().find("unsupported format"), std::string::npos);

  detail::write_file_bytes(path("bad.prm"), {'P', 'R', 'M', '9'});
  EXPECT_EQ(run("reconstruct --meas " + path("bad.prm") + " --out " + path("x.pgm")).code, 1);
}
