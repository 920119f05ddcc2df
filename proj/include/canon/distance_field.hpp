// Spatial sampling inside the unit ball and exact nearest-neighbor distance
// fields (the function phi mapping a point to its distance to the shape).
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "canon/util.hpp"

namespace canon {

template <int D>
using Points = Eigen::Matrix<double, Eigen::Dynamic, D>;

template <int D>
struct SamplingSet {
  Points<D> points;        // rows inside the closed unit ball
  std::uint64_t seed = 0;  // 0 when constructed from explicit points
  std::string id;          // content hash, binds downstream artifacts
};

template <int D>
SamplingSet<D> make_sampling_set(Points<D> pts, std::uint64_t seed = 0) {
  SamplingSet<D> s;
  s.points = std::move(pts);
  s.seed = seed;
  s.id = matrix_id(s.points);
  return s;
}

// Uniform samples in the unit ball via rejection from the enclosing cube.
template <int D = 3>
SamplingSet<D> generate_sampling_points(int m, std::uint64_t seed) {
  if (m < 8) throw std::invalid_argument("generate_sampling_points: need m >= 8");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cube(-1.0, 1.0);
  Points<D> pts(m, D);
  Eigen::Matrix<double, 1, D> x;
  for (int i = 0; i < m;) {
    for (int c = 0; c < D; ++c) x[c] = cube(rng);
    if (x.squaredNorm() <= 1.0) pts.row(i++) = x;
  }
  return make_sampling_set<D>(std::move(pts), seed);
}

// Exact nearest-neighbor index (kd-tree, median split). Queries return the
// same value as a brute-force scan: the far branch is pruned only when the
// splitting-plane distance exceeds the current best by a safety factor, so
// rounding in the plane test can never discard the true minimum. That keeps
// the reported distance independent of the point order the tree was built
// from.
template <int D>
class NnIndex {
 public:
  explicit NnIndex(Points<D> pts) : pts_(std::move(pts)) {
    if (pts_.rows() == 0) throw std::invalid_argument("NnIndex: empty cloud");
    if (!pts_.allFinite()) throw std::invalid_argument("NnIndex: non-finite coordinates");
    order_.resize(static_cast<std::size_t>(pts_.rows()));
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * order_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<int>(order_.size()));
  }

  double nearest_squared(const Eigen::Matrix<double, 1, D>& q) const {
    double best = std::numeric_limits<double>::infinity();
    search(root_, q, best);
    return best;
  }

  double nearest_distance(const Eigen::Matrix<double, 1, D>& q) const {
    return std::sqrt(nearest_squared(q));
  }

  Eigen::Index size() const { return pts_.rows(); }
  const Points<D>& points() const { return pts_; }

 private:
  static constexpr int kLeafSize = 16;
  static constexpr double kPruneSlack = 1.0 + 1e-9;

  struct Node {
    int begin = 0, end = 0;    // leaf range into order_
    int axis = -1;             // -1 marks a leaf
    double split = 0;
    int left = -1, right = -1;
  };

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    // split on the widest axis at the median
    Eigen::Matrix<double, 1, D> lo, hi;
    lo.setConstant(std::numeric_limits<double>::infinity());
    hi.setConstant(-std::numeric_limits<double>::infinity());
    for (int i = begin; i < end; ++i) {
      lo = lo.cwiseMin(pts_.row(order_[static_cast<std::size_t>(i)]));
      hi = hi.cwiseMax(pts_.row(order_[static_cast<std::size_t>(i)]));
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return pts_(a, axis) < pts_(b, axis); });
    node.axis = axis;
    node.split = pts_(order_[static_cast<std::size_t>(mid)], axis);
    nodes_.push_back(node);
    int self = static_cast<int>(nodes_.size()) - 1;
    int left = build(begin, mid);
    int right = build(mid, end);
    nodes_[static_cast<std::size_t>(self)].left = left;
    nodes_[static_cast<std::size_t>(self)].right = right;
    return self;
  }

  void search(int ni, const Eigen::Matrix<double, 1, D>& q, double& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(ni)];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        double d2 = (pts_.row(order_[static_cast<std::size_t>(i)]) - q).squaredNorm();
        if (d2 < best) best = d2;
      }
      return;
    }
    double diff = q[node.axis] - node.split;
    int near = diff < 0 ? node.left : node.right;
    int far = diff < 0 ? node.right : node.left;
    search(near, q, best);
    if (diff * diff <= best * kPruneSlack) search(far, q, best);
  }

  Points<D> pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

template <int D = 3>
NnIndex<D> build_nn_index(const Points<D>& cloud) {
  return NnIndex<D>(cloud);
}

struct DistanceField {
  Eigen::VectorXd phi;      // nonnegative distances, one per sampling row
  std::string sampling_id;  // identity of the SamplingSet used
  std::string cloud_id;     // identity of the point cloud used
};

template <int D>
DistanceField compute_distance_field(const NnIndex<D>& index, const SamplingSet<D>& sampling) {
  DistanceField field;
  field.phi.resize(sampling.points.rows());
  for (Eigen::Index i = 0; i < sampling.points.rows(); ++i)
    field.phi[i] = index.nearest_distance(sampling.points.row(i));
  field.sampling_id = sampling.id;
  field.cloud_id = matrix_id(index.points());
  return field;
}

template <int D>
DistanceField compute_distance_field(const Points<D>& cloud, const SamplingSet<D>& sampling) {
  NnIndex<D> index(cloud);
  return compute_distance_field(index, sampling);
}

}  // namespace canon
