#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "canon/distance_field.hpp"

using namespace canon;

namespace {

// brute-force oracle, kept independent of the kd-tree path
template <int D>
double brute_nearest(const Points<D>& cloud, const Eigen::Matrix<double, 1, D>& q) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < cloud.rows(); ++j)
    best = std::min(best, (cloud.row(j) - q).squaredNorm());
  return std::sqrt(best);
}

Points<3> random_cloud(int n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Points<3> pts(n, 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    pts.row(i) << scale * normal(rng), scale * normal(rng), scale * normal(rng);
  return pts;
}

}  // namespace

TEST_CASE("sampling points are deterministic and inside the ball", "[distance_field]") {
  SamplingSet<3> a = generate_sampling_points<3>(8192, 7);
  SamplingSet<3> b = generate_sampling_points<3>(8192, 7);
  CHECK(a.points == b.points);
  CHECK(a.id == b.id);
  CHECK(a.points.rowwise().norm().maxCoeff() <= 1.0);
  SamplingSet<3> c = generate_sampling_points<3>(8192, 8);
  CHECK(a.points != c.points);
  CHECK_THROWS_AS(generate_sampling_points<3>(4, 1), std::invalid_argument);
}

TEST_CASE("sampling is uniform in the ball: mean norm oracle", "[distance_field]") {
  // E||x|| = 3/4 in the 3-ball and 2/3 in the disk
  SamplingSet<3> s3 = generate_sampling_points<3>(100000, 3);
  CHECK(s3.points.rowwise().norm().mean() == Catch::Approx(0.75).margin(0.01));
  SamplingSet<2> s2 = generate_sampling_points<2>(100000, 4);
  CHECK(s2.points.rowwise().norm().mean() == Catch::Approx(2.0 / 3.0).margin(0.01));
}

TEST_CASE("nn index answers single-point and self queries", "[distance_field]") {
  Points<3> one(1, 3);
  one << 0.25, -1.5, 2.0;
  NnIndex<3> idx(one);
  Eigen::RowVector3d q(0.25, -1.5, 0.0);
  CHECK(idx.nearest_distance(q) == Catch::Approx(2.0).epsilon(1e-15));
  CHECK(idx.nearest_distance(one.row(0)) == 0.0);
}

TEST_CASE("nn index equals the brute-force oracle", "[distance_field]") {
  Points<3> cloud = random_cloud(1000, 21);
  NnIndex<3> idx(cloud);
  std::mt19937_64 rng(22);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    Eigen::RowVector3d q(normal(rng), normal(rng), normal(rng));
    double got = idx.nearest_distance(q);
    double want = brute_nearest<3>(cloud, q);
    REQUIRE(std::abs(got - want) <= 1e-12 * std::max(1.0, want));
  }
}

TEST_CASE("nn index rejects bad input", "[distance_field]") {
  CHECK_THROWS_AS(NnIndex<3>(Points<3>(0, 3)), std::invalid_argument);
  Points<3> bad(1, 3);
  bad << 0.0, std::numeric_limits<double>::quiet_NaN(), 0.0;
  CHECK_THROWS_AS(NnIndex<3>(bad), std::invalid_argument);
}

TEST_CASE("distance field documented examples", "[distance_field]") {
  Points<3> origin(1, 3);
  origin.setZero();
  SamplingSet<3> s = make_sampling_set<3>([] {
    Points<3> x(1, 3);
    x << 0.5, 0, 0;
    return x;
  }());
  DistanceField f = compute_distance_field<3>(origin, s);
  CHECK(f.phi[0] == Catch::Approx(0.5).epsilon(1e-15));

  Points<3> pair(2, 3);
  pair << 1, 0, 0, -1, 0, 0;
  SamplingSet<3> o = make_sampling_set<3>(Points<3>::Zero(1, 3).eval());
  CHECK(compute_distance_field<3>(pair, o).phi[0] == Catch::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("distance field equals the O(nm) double loop", "[distance_field]") {
  for (int trial = 0; trial < 3; ++trial) {
    Points<3> cloud = random_cloud(700 + 100 * trial, 31 + static_cast<std::uint64_t>(trial));
    SamplingSet<3> sampling = generate_sampling_points<3>(900, 77 + static_cast<std::uint64_t>(trial));
    DistanceField field = compute_distance_field<3>(cloud, sampling);
    for (Eigen::Index i = 0; i < sampling.points.rows(); ++i) {
      double want = brute_nearest<3>(cloud, sampling.points.row(i));
      REQUIRE(std::abs(field.phi[i] - want) <= 1e-12 * std::max(1.0, want));
    }
  }
}

TEST_CASE("distance field is bitwise invariant to cloud permutation", "[distance_field]") {
  Points<3> cloud = random_cloud(512, 5);
  SamplingSet<3> sampling = generate_sampling_points<3>(1024, 6);
  DistanceField base = compute_distance_field<3>(cloud, sampling);
  std::mt19937_64 rng(9);
  for (int t = 0; t < 3; ++t) {
    std::vector<int> perm(static_cast<std::size_t>(cloud.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Points<3> shuffled(cloud.rows(), 3);
    for (Eigen::Index i = 0; i < cloud.rows(); ++i)
      shuffled.row(i) = cloud.row(perm[static_cast<std::size_t>(i)]);
    DistanceField f = compute_distance_field<3>(shuffled, sampling);
    REQUIRE(f.phi == base.phi);  // bitwise
  }
}

TEST_CASE("distance field is covariant to scale and rotation", "[distance_field]") {
  Points<3> cloud = random_cloud(400, 13, 0.4);
  SamplingSet<3> sampling = generate_sampling_points<3>(512, 14);
  DistanceField base = compute_distance_field<3>(cloud, sampling);

  for (double s : {0.25, 3.0}) {
    SamplingSet<3> ss = make_sampling_set<3>((sampling.points * s).eval());
    DistanceField f = compute_distance_field<3>((cloud * s).eval(), ss);
    double dev = (f.phi - s * base.phi).cwiseAbs().maxCoeff() / (s * base.phi.maxCoeff());
    CHECK(dev <= 1e-12);
  }

  // rotation: a fixed orthonormal frame
  Eigen::Matrix3d r;
  r = Eigen::AngleAxisd(0.83, Eigen::Vector3d(1, 2, -0.5).normalized());
  SamplingSet<3> rs = make_sampling_set<3>((sampling.points * r.transpose()).eval());
  DistanceField f = compute_distance_field<3>((cloud * r.transpose()).eval(), rs);
  double dev = (f.phi - base.phi).cwiseAbs().maxCoeff() / base.phi.maxCoeff();
  CHECK(dev <= 1e-10);
}

TEST_CASE("distance field works in 2D", "[distance_field]") {
  Points<2> cloud(3, 2);
  cloud << 0, 0, 1, 0, 0, 1;
  Points<2> q(1, 2);
  q << 2, 0;
  DistanceField f = compute_distance_field<2>(cloud, make_sampling_set<2>(q));
  CHECK(f.phi[0] == Catch::Approx(1.0).epsilon(1e-15));
}
