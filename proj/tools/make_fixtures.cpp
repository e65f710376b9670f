// Writes the shipped fixture data: procedural test images, demo weight files
// and an example benchmark config.
//
//   make_fixtures <output-dir>

#include <filesystem>
#include <iostream>

#include "phaseforge/denoiser_factory.hpp"
#include "phaseforge/denoisers.hpp"
#include "phaseforge/phantoms.hpp"
#include "phaseforge/pgm.hpp"
#include "phaseforge/report.hpp"

namespace pf = phaseforge;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <output-dir>\n";
    return 2;
  }
  const std::filesystem::path root(argv[1]);
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "weights");

  std::string paths, groups;
  for (const auto& im : pf::phantom_set(6, 64, 7)) {
    pf::save_pgm(root / "images" / (im.name + ".pgm"), im.image);
    paths += (paths.empty() ? "" : ", ") + ("images/" + im.name + ".pgm");
    groups += (groups.empty() ? "" : ", ") + im.group;
  }
  pf::save_weights(root / "weights" / "random_8x32.bfc", pf::make_random_cnn(8, 32, 1));
  pf::save_weights(root / "weights" / "smooth_0.05.bfc", pf::make_smoothing_cnn(0.05));

  pf::write_text_file(root / "bench_example.ini",
                      "; Six 64x64 procedural images at the three noise levels.\n"
                      "[experiment]\n"
                      "images = " + paths + "\n"
                      "groups = " + groups + "\n"
                      "alphas = 2, 3, 4\n"
                      "methods = hio, altmin, apls\n"
                      "denoiser = cnn:weights/smooth_0.05.bfc\n"
                      "trials = 1\n"
                      "base_seed = 0\n"
                      "output = bench_out\n\n"
                      "[langevin]\nh0 = 0.1\nbeta = 0.0001\nt1 = 1\nmode = relaxed\nlambda = 1\n\n"
                      "[apls]\nt2 = 500\n");
  std::cout << "fixtures written to " << root << "\n";
  return 0;
}
