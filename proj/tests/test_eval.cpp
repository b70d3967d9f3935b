#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <set>
#include <sstream>

#include "cfreg/bench.hpp"
#include "cfreg/eval.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

using cfreg::Correspondence;
using cfreg::PointSet;
using Index = Eigen::Index;

TEST_CASE("rmse basics") {
  const PointSet a(oracle::random_matrix(10, 3, 1));
  CHECK(cfreg::rmse(a, a, cfreg::identity_pairs(a, a)) == 0.0);

  Eigen::MatrixXd p(1, 2), q(1, 2);
  p << 0, 0;
  q << 3, 4;
  CHECK(cfreg::rmse(PointSet(p), PointSet(q), cfreg::identity_pairs(PointSet(p), PointSet(q))) == 5.0);
}

TEST_CASE("rmse matches a scalar loop and is symmetric") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd a = oracle::random_matrix(10, 2, seed);
    const Eigen::MatrixXd b = oracle::random_matrix(12, 2, seed + 20);
    Correspondence corr;
    for (Index i = 0; i < 10; ++i) corr.pairs.emplace_back(i, (i * 7 + static_cast<Index>(seed)) % 12);
    CHECK(oracle::rel_diff(cfreg::rmse(PointSet(a), PointSet(b), corr), oracle::rmse(a, b, corr.pairs)) < 1e-12);
  }
  const PointSet a(oracle::random_matrix(15, 3, 3)), b(oracle::random_matrix(15, 3, 4));
  CHECK(cfreg::rmse(a, b, cfreg::identity_pairs(a, b)) == cfreg::rmse(b, a, cfreg::identity_pairs(b, a)));
}

TEST_CASE("rmse errors") {
  const PointSet a(oracle::random_matrix(3, 2, 1));
  CHECK(kind_of([&] { (void)cfreg::rmse(a, a, Correspondence{}); }) == cfreg::ErrorKind::EmptyCorrespondence);
  Correspondence bad;
  bad.pairs.emplace_back(0, 3);
  CHECK(kind_of([&] { (void)cfreg::rmse(a, a, bad); }) == cfreg::ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { (void)cfreg::identity_pairs(a, PointSet(oracle::random_matrix(4, 2, 1))); }) ==
        cfreg::ErrorKind::DimensionMismatch);
}

TEST_CASE("nearest neighbour pairing") {
  const PointSet a(oracle::random_matrix(30, 3, 2));
  const auto self = cfreg::nearest_neighbor_pairs(a, a);
  CHECK(self.mode == cfreg::CorrespondenceMode::NearestNeighbor);
  for (Index i = 0; i < 30; ++i) CHECK(self.pairs[static_cast<size_t>(i)] == std::pair<Index, Index>(i, i));

  Eigen::MatrixXd q(1, 2), t(2, 2);
  q << 0.9, 0;
  t << 0, 0, 1, 0;
  CHECK(cfreg::nearest_neighbor_pairs(PointSet(q), PointSet(t)).pairs[0].second == 1);

  // Ties go to the lowest index.
  Eigen::MatrixXd tie(3, 2);
  tie << 1, 0, -1, 0, 0, 1;
  Eigen::MatrixXd origin = Eigen::MatrixXd::Zero(1, 2);
  CHECK(cfreg::nearest_neighbor_pairs(PointSet(origin), PointSet(tie)).pairs[0].second == 0);
  Eigen::MatrixXd dup(3, 2);
  dup << 5, 5, 1, 1, 1, 1;
  CHECK(cfreg::nearest_neighbor_pairs(PointSet(origin), PointSet(dup)).pairs[0].second == 1);
}

TEST_CASE("nearest neighbour matches brute force") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd q = oracle::random_matrix(100, 2 + static_cast<Index>(seed % 2), seed);
    const Eigen::MatrixXd t = oracle::random_matrix(100, 2 + static_cast<Index>(seed % 2), seed + 9);
    const auto corr = cfreg::nearest_neighbor_pairs(PointSet(q), PointSet(t));
    for (Index i = 0; i < 100; ++i) CHECK(corr.pairs[static_cast<size_t>(i)].second == oracle::nearest(q, i, t));
  }
  // Grid data has many exact ties.
  const PointSet grid = cfreg::make_grid(49);
  Eigen::MatrixXd mids = grid.points();
  mids.col(0).array() += 0.5 * (grid.points()(1, 0) - grid.points()(0, 0));
  const auto corr = cfreg::nearest_neighbor_pairs(PointSet(mids), grid);
  for (Index i = 0; i < 49; ++i)
    CHECK(corr.pairs[static_cast<size_t>(i)].second == oracle::nearest(mids, i, grid.points()));
}

TEST_CASE("noise") {
  const PointSet a(oracle::random_matrix(20, 2, 1));
  CHECK(cfreg::add_noise(a, 0.0, 3).points() == a.points());
  CHECK(cfreg::add_noise(a, 0.1, 3).points() == cfreg::add_noise(a, 0.1, 3).points());
  CHECK(cfreg::add_noise(a, 0.1, 3).points() != cfreg::add_noise(a, 0.1, 4).points());

  const PointSet big(Eigen::MatrixXd::Zero(10000, 1));
  const Eigen::VectorXd d = cfreg::add_noise(big, 0.05, 7).points().col(0);
  const double mean = d.mean();
  const double sd = std::sqrt((d.array() - mean).square().sum() / (d.size() - 1));
  CHECK(std::abs(sd - 0.05) < 0.05 * 0.05);
  CHECK(kind_of([&] { (void)cfreg::add_noise(a, -1.0, 0); }) == cfreg::ErrorKind::InvalidArgument);
}

TEST_CASE("occlusion") {
  const PointSet a(oracle::random_matrix(100, 3, 2));
  const auto none = cfreg::occlude(a, 0.0, 1);
  CHECK(none.kept.points() == a.points());
  const auto some = cfreg::occlude(a, 0.2, 1);
  CHECK(some.kept.size() == 80);
  REQUIRE(some.kept_indices.size() == 80);
  for (Index k = 0; k < 80; ++k) CHECK(some.kept.points().row(k) == a.points().row(some.kept_indices[static_cast<size_t>(k)]));
  CHECK(std::is_sorted(some.kept_indices.begin(), some.kept_indices.end()));
  CHECK(cfreg::occlude(a, 0.2, 1).kept_indices == some.kept_indices);
  CHECK(cfreg::occlude(a, 0.2, 2).kept_indices != some.kept_indices);
  CHECK(cfreg::occlude(PointSet(oracle::random_matrix(3, 2, 0)), 0.9, 0).kept.size() == 1);
  CHECK(kind_of([&] { (void)cfreg::occlude(a, 1.0, 0); }) == cfreg::ErrorKind::InvalidArgument);
}

TEST_CASE("synthetic warp") {
  const PointSet ring = cfreg::make_ring(500);
  const auto still = cfreg::synthetic_warp(ring, 0.0, 2.0, 4);
  CHECK(still.warped.points() == ring.points());
  for (const double magnitude : {0.05, 0.3, 1.0}) {
    const auto w = cfreg::synthetic_warp(ring, magnitude, 2.0, 4);
    double peak = 0.0;
    for (Index i = 0; i < 500; ++i) peak = std::max(peak, (w.warped.points().row(i) - ring.points().row(i)).norm());
    CHECK(std::abs(peak - magnitude) < 1e-6);
    REQUIRE(w.truth.pairs.size() == 500);
    for (Index i = 0; i < 500; ++i) CHECK(w.truth.pairs[static_cast<size_t>(i)] == std::pair<Index, Index>(i, i));
  }
  CHECK(cfreg::synthetic_warp(ring, 0.3, 2.0, 4).warped.points() == cfreg::synthetic_warp(ring, 0.3, 2.0, 4).warped.points());
  CHECK(kind_of([&] { (void)cfreg::synthetic_warp(ring, -0.1, 2.0, 0); }) == cfreg::ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { (void)cfreg::synthetic_warp(ring, 0.1, 0.0, 0); }) == cfreg::ErrorKind::InvalidArgument);
}

TEST_CASE("fixture shapes are normalized") {
  for (const auto& s : {cfreg::make_ring(100), cfreg::make_grid(100), cfreg::make_sphere(100)}) {
    CHECK(s.size() == 100);
    CHECK(s.points().colwise().mean().norm() < 1e-12);
    CHECK(std::abs(std::sqrt(s.points().rowwise().squaredNorm().mean()) - 1.0) < 1e-12);
  }
  CHECK(cfreg::make_ring(10).dim() == 2);
  CHECK(cfreg::make_grid(10).dim() == 2);
  CHECK(cfreg::make_sphere(10).dim() == 3);
}

TEST_CASE("bench grid") {
  cfreg::BenchGrid grid;
  grid.kernels = {cfreg::KernelFamily::Laplacian};
  grid.gammas = {2.0};
  grid.noise_sigmas = {0.0};
  grid.seeds = {0};
  const PointSet base = cfreg::make_ring(120);
  const auto rows = cfreg::run_bench(base, grid);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].experiment == "robustness");
  CHECK(rows[0].rmse_post < rows[0].rmse_pre);
  std::ostringstream csv;
  cfreg::write_bench_csv(csv, rows, false);
  const std::string text = csv.str();
  CHECK(text.rfind("experiment,kernel,gamma,noise_sigma,occlusion,seed,rmse_pre,rmse_post,iters,seconds\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.substr(text.size() - 3) == ",0\n");

  grid.kernels = {cfreg::KernelFamily::Laplacian, cfreg::KernelFamily::Gaussian};
  grid.noise_sigmas = {0.0, 0.02};
  grid.occlusions = {0.0, 0.1};
  grid.seeds = {0, 1};
  const auto many = cfreg::run_bench(base, grid);
  CHECK(many.size() == 16);
  CHECK(many[0].kernel == cfreg::KernelFamily::Laplacian);
  CHECK(many[15].kernel == cfreg::KernelFamily::Gaussian);
  CHECK(many[1].seed == 1);
  CHECK(many[2].occlusion == 0.1);
  CHECK(many[4].noise_sigma == 0.02);
  double sum = 0.0;
  for (int i = 0; i < 8; ++i) sum += many[static_cast<size_t>(i)].rmse_post;
  CHECK(cfreg::mean_rmse_post(many, cfreg::KernelFamily::Laplacian) == doctest::Approx(sum / 8));
  const auto again = cfreg::run_bench(base, grid);
  for (size_t i = 0; i < many.size(); ++i) CHECK(again[i].rmse_post == many[i].rmse_post);
}
