#include "cfreg/bench.hpp"

#include <charconv>

#include "cfreg/eval.hpp"

namespace cfreg {
namespace {

// Independent streams for the three random draws made per seed.
constexpr std::uint64_t kNoiseStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kOcclusionStream = 0xbf58476d1ce4e5b9ULL;

std::string number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<BenchRow> run_bench(const PointSet& base, const BenchGrid& grid) {
  std::vector<BenchRow> rows;
  for (const KernelFamily kernel : grid.kernels) {
    for (const double gamma : grid.gammas) {
      for (const double noise : grid.noise_sigmas) {
        for (const double occlusion : grid.occlusions) {
          for (const std::uint64_t seed : grid.seeds) {
            const SyntheticWarp warp = synthetic_warp(base, grid.magnitude, grid.bandwidth, seed);
            const PointSet noisy = add_noise(base, noise, seed ^ kNoiseStream);
            const Occlusion occluded = occlude(noisy, occlusion, seed ^ kOcclusionStream);

            Correspondence truth;
            truth.mode = CorrespondenceMode::GroundTruth;
            for (size_t k = 0; k < occluded.kept_indices.size(); ++k) {
              truth.pairs.emplace_back(static_cast<Eigen::Index>(k), occluded.kept_indices[k]);
            }

            RegistrationConfig cfg = grid.base_config;
            cfg.kernel = KernelSpec{kernel, gamma};
            const RegistrationResult result = register_point_sets(occluded.kept, warp.warped, cfg);

            BenchRow row;
            row.experiment = grid.experiment;
            row.kernel = kernel;
            row.gamma = gamma;
            row.noise_sigma = noise;
            row.occlusion = occlusion;
            row.seed = seed;
            row.rmse_pre = rmse(occluded.kept, warp.warped, truth);
            row.rmse_post = rmse(result.deformed, warp.warped, truth);
            row.iterations = result.iterations;
            row.seconds = result.wall_time;
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows, bool timing) {
  out << "experiment,kernel,gamma,noise_sigma,occlusion,seed,rmse_pre,rmse_post,iters,seconds\n";
  for (const auto& r : rows) {
    out << r.experiment << ',' << to_string(r.kernel) << ',' << number(r.gamma) << ','
        << number(r.noise_sigma) << ',' << number(r.occlusion) << ',' << r.seed << ','
        << number(r.rmse_pre) << ',' << number(r.rmse_post) << ',' << r.iterations << ','
        << number(timing ? r.seconds : 0.0) << '\n';
  }
}

double mean_rmse_post(const std::vector<BenchRow>& rows, KernelFamily kernel) {
  double total = 0.0;
  int count = 0;
  for (const auto& r : rows) {
    if (r.kernel != kernel) continue;
    total += r.rmse_post;
    ++count;
  }
  return count > 0 ? total / count : 0.0;
}

}  // namespace cfreg
