#include <doctest.h>

#include <algorithm>
#include <set>

#include "cfreg/clustering.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

using cfreg::PointSet;
using Index = Eigen::Index;

namespace {

void check_invariants(const cfreg::KMeansResult& r, Index points, Index k) {
  REQUIRE(r.assignment.size() == static_cast<size_t>(points));
  std::vector<Index> sizes(static_cast<size_t>(k), 0);
  for (const Index a : r.assignment) {
    REQUIRE(a >= 0);
    REQUIRE(a < k);
    ++sizes[static_cast<size_t>(a)];
  }
  Index total = 0;
  for (const Index s : sizes) total += s;
  CHECK(total == points);
  CHECK(r.max_cluster_size == *std::max_element(sizes.begin(), sizes.end()));
  CHECK(r.quantization_error >= 0.0);
}

}  // namespace

TEST_CASE("k equal to point count") {
  const Eigen::MatrixXd pts = oracle::random_matrix(12, 2, 1);
  for (const auto& r : {cfreg::kmeans_elkan(PointSet(pts), 12, 0), cfreg::kmeans_lloyd_reference(PointSet(pts), 12, 0)}) {
    check_invariants(r, 12, 12);
    CHECK(r.quantization_error == 0.0);
    CHECK(r.max_cluster_size == 1);
    CHECK(std::set<Index>(r.assignment.begin(), r.assignment.end()).size() == 12);
  }
}

TEST_CASE("single cluster sits at the mean") {
  const Eigen::MatrixXd pts = oracle::random_matrix(40, 3, 2);
  const Eigen::RowVectorXd mean = pts.colwise().mean();
  double variance_sum = 0.0;
  for (Index i = 0; i < 40; ++i) variance_sum += (pts.row(i) - mean).squaredNorm();
  for (const auto& r : {cfreg::kmeans_elkan(PointSet(pts), 1, 3), cfreg::kmeans_lloyd_reference(PointSet(pts), 1, 3)}) {
    CHECK((r.centroids.row(0) - mean).norm() < 1e-12);
    CHECK(oracle::rel_diff(r.quantization_error, variance_sum) < 1e-12);
    CHECK(r.max_cluster_size == 40);
  }
}

TEST_CASE("elkan matches a brute-force Lloyd oracle") {
  const Eigen::MatrixXd pts = oracle::random_matrix(200, 3, 0);
  const auto elkan = cfreg::kmeans_elkan(PointSet(pts), 20, 0);
  const auto ref = oracle::lloyd(pts, cfreg::kmeans_plus_plus(pts, 20, 0), 100);
  CHECK(elkan.assignment == ref.assignment);
  CHECK(oracle::rel_diff(elkan.quantization_error, ref.q) < 1e-10);
  CHECK((elkan.centroids - ref.centroids).cwiseAbs().maxCoeff() < 1e-10);
  check_invariants(elkan, 200, 20);
}

TEST_CASE("elkan and lloyd agree and elkan saves distance evaluations") {
  int cheaper = 0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Index p = 50 + static_cast<Index>(seed) * 37;
    const Index k = 2 + static_cast<Index>(seed) * 3;
    const Eigen::MatrixXd pts = oracle::random_matrix(p, 2 + static_cast<Index>(seed % 2), 40 + seed);
    const auto e = cfreg::kmeans_elkan(PointSet(pts), k, seed);
    const auto l = cfreg::kmeans_lloyd_reference(PointSet(pts), k, seed);
    CHECK(e.assignment == l.assignment);
    CHECK((e.centroids - l.centroids).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(e.iterations == l.iterations);
    CHECK(e.converged == l.converged);
    if (e.distance_evaluations < l.distance_evaluations) ++cheaper;
  }
  CHECK(cheaper >= 11);
}

TEST_CASE("lloyd quantization error never increases") {
  const Eigen::MatrixXd pts = oracle::random_matrix(50, 2, 77);
  const auto r = cfreg::kmeans_lloyd_reference(PointSet(pts), 5, 1);
  REQUIRE(r.error_trace.size() >= 2);
  for (size_t i = 1; i < r.error_trace.size(); ++i) CHECK(r.error_trace[i] <= r.error_trace[i - 1] * (1 + 1e-12));
}

TEST_CASE("fixed point of Lloyd's iteration") {
  const Eigen::MatrixXd pts = oracle::random_matrix(150, 2, 9);
  const auto r = cfreg::kmeans_elkan(PointSet(pts), 8, 4);
  REQUIRE(r.converged);
  for (Index i = 0; i < 150; ++i) CHECK(oracle::nearest(pts, i, r.centroids) == r.assignment[static_cast<size_t>(i)]);
  for (Index c = 0; c < 8; ++c) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(2);
    int count = 0;
    for (Index i = 0; i < 150; ++i) {
      if (r.assignment[static_cast<size_t>(i)] != c) continue;
      sum += pts.row(i);
      ++count;
    }
    REQUIRE(count > 0);
    CHECK((sum / count - r.centroids.row(c)).norm() < 1e-12);
  }
}

TEST_CASE("duplicate points and ties stay deterministic") {
  Eigen::MatrixXd pts(6, 2);
  pts << 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2;
  const auto e = cfreg::kmeans_elkan(PointSet(pts), 4, 5);
  const auto l = cfreg::kmeans_lloyd_reference(PointSet(pts), 4, 5);
  CHECK(e.assignment == l.assignment);
  check_invariants(e, 6, 4);
  const auto again = cfreg::kmeans_elkan(PointSet(pts), 4, 5);
  CHECK(again.assignment == e.assignment);
  CHECK(again.centroids == e.centroids);
}

TEST_CASE("seeding is deterministic and seed dependent") {
  const Eigen::MatrixXd pts = oracle::random_matrix(100, 3, 12);
  CHECK(cfreg::kmeans_plus_plus(pts, 10, 3) == cfreg::kmeans_plus_plus(pts, 10, 3));
  CHECK(cfreg::kmeans_plus_plus(pts, 10, 3) != cfreg::kmeans_plus_plus(pts, 10, 4));
  const Eigen::MatrixXd seeds = cfreg::kmeans_plus_plus(pts, 10, 3);
  for (Index c = 0; c < 10; ++c) {
    bool found = false;
    for (Index i = 0; i < 100 && !found; ++i) found = pts.row(i) == seeds.row(c);
    CHECK(found);
  }
}

TEST_CASE("max_iters caps the run") {
  const Eigen::MatrixXd pts = oracle::random_matrix(300, 2, 13);
  const auto e = cfreg::kmeans_elkan(PointSet(pts), 15, 0, 1);
  const auto l = cfreg::kmeans_lloyd_reference(PointSet(pts), 15, 0, 1);
  CHECK(e.iterations == 1);
  CHECK_FALSE(e.converged);
  CHECK(e.assignment == l.assignment);
  CHECK((e.centroids - l.centroids).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("invalid k") {
  const PointSet pts(oracle::random_matrix(5, 2, 0));
  CHECK(kind_of([&] { (void)cfreg::kmeans_elkan(pts, 0, 0); }) == cfreg::ErrorKind::InvalidK);
  CHECK(kind_of([&] { (void)cfreg::kmeans_elkan(pts, 6, 0); }) == cfreg::ErrorKind::InvalidK);
  CHECK(kind_of([&] { (void)cfreg::kmeans_lloyd_reference(pts, 6, 0); }) == cfreg::ErrorKind::InvalidK);
}
