#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "cfreg/kernel_spec.hpp"
#include "cfreg/point_set.hpp"
#include "cfreg/solver.hpp"

namespace cfreg {

/// Noise/occlusion x kernel robustness grid on a synthetic-warp fixture.
struct BenchGrid {
  std::string experiment = "robustness";
  std::vector<KernelFamily> kernels{KernelFamily::Laplacian, KernelFamily::Gaussian};
  std::vector<double> gammas{1.0, 2.0, 3.0};
  std::vector<double> noise_sigmas{0.0, 0.02, 0.04, 0.06};
  std::vector<double> occlusions{0.0};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  double magnitude = 0.3;
  double bandwidth = 2.0;
  RegistrationConfig base_config{};
};

struct BenchRow {
  std::string experiment;
  KernelFamily kernel = KernelFamily::Laplacian;
  double gamma = 0.0;
  double noise_sigma = 0.0;
  double occlusion = 0.0;
  std::uint64_t seed = 0;
  double rmse_pre = 0.0;
  double rmse_post = 0.0;
  int iterations = 0;
  double seconds = 0.0;
};

/// Runs every grid cell on `base`. For each seed the target is a synthetic warp
/// of `base`; the source is `base` with noise and then occlusion applied.
/// Rows come back in grid order: kernel, gamma, noise, occlusion, then seed.
std::vector<BenchRow> run_bench(const PointSet& base, const BenchGrid& grid);

/// Header plus one row per run. With `timing` false the seconds column is 0.
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows, bool timing = true);

/// Mean rmse_post over the rows that used `kernel`.
double mean_rmse_post(const std::vector<BenchRow>& rows, KernelFamily kernel);

}  // namespace cfreg
