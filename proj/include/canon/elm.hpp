// Per-instance embedding: a fixed random two-layer network (extreme learning
// machine) whose output weights beta are solved in closed form by a ridge
// system. The ridge constant Var(xbar) and the bias column sigma(xbar) make
// the solved beta invariant to uniform scaling of the instance.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "canon/canonical.hpp"
#include "canon/util.hpp"

namespace canon {

enum class Activation { kRelu, kLeakyRelu };

inline double activation_slope_negative(Activation act) {
  return act == Activation::kLeakyRelu ? 0.01 : 0.0;
}

template <int D>
struct ElmBasis {
  Eigen::MatrixXd w;  // k x (D+2) random weights
  int k = 0;
  std::uint64_t seed = 0;
  std::string basis_id;  // content hash of w
};

template <int D>
ElmBasis<D> elm_basis_from_weights(Eigen::MatrixXd w, std::uint64_t seed = 0) {
  if (w.rows() < 1 || w.cols() != D + 2)
    throw std::invalid_argument("elm_basis_from_weights: expected a k x (D+2) matrix");
  ElmBasis<D> basis;
  basis.k = static_cast<int>(w.rows());
  basis.seed = seed;
  basis.basis_id = matrix_id(w);
  basis.w = std::move(w);
  return basis;
}

// Shared random basis: i.i.d. standard normal entries, then the D+2 columns
// are orthonormalized (thin QR, signs fixed by the R diagonal). Identical for
// every instance of a run.
template <int D = 3>
ElmBasis<D> make_shared_basis(int k, std::uint64_t seed) {
  constexpr int cols = D + 2;
  if (k < cols) throw std::invalid_argument("make_shared_basis: need k >= " + std::to_string(cols));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(k, cols);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, cols);
  Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (int j = 0; j < cols; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return elm_basis_from_weights<D>(std::move(q), seed);
}

template <int D>
struct AugmentedInput {
  Eigen::Matrix<double, Eigen::Dynamic, D + 2> xtilde;  // [xbar | sigma * 1]
  double sigma = 0;
  double variance = 0;  // population variance over all (D+1)*m elements of xbar
};

template <int D>
AugmentedInput<D> augment_input(const CanonicalInput<D>& ci) {
  const Eigen::Index m = ci.xbar.rows();
  if (m < 2) throw std::invalid_argument("augment_input: need at least 2 rows");
  if (!ci.xbar.allFinite()) throw std::invalid_argument("augment_input: non-finite input");
  const double mean = ci.xbar.mean();
  const double variance = (ci.xbar.array() - mean).square().sum() /
                          static_cast<double>(ci.xbar.size());
  // all-equal input gives variance at rounding level of the squared magnitude
  const double mean_square = ci.xbar.squaredNorm() / static_cast<double>(ci.xbar.size());
  if (variance <= 1e-24 * mean_square)
    throw std::invalid_argument("augment_input: zero-variance canonical input (degenerate shape)");
  AugmentedInput<D> aug;
  aug.variance = variance;
  aug.sigma = std::sqrt(variance);
  aug.xtilde.resize(m, D + 2);
  aug.xtilde.template leftCols<D + 1>() = ci.xbar;
  aug.xtilde.col(D + 1).setConstant(aug.sigma);
  return aug;
}

struct ShapeFeature {
  Eigen::VectorXd beta;
  std::string basis_id;
  std::string label;        // "-" when absent
  std::string instance_id;
};

template <int D>
Eigen::MatrixXd elm_hidden(const AugmentedInput<D>& aug, const ElmBasis<D>& basis,
                           Activation act = Activation::kRelu) {
  Eigen::MatrixXd h = aug.xtilde * basis.w.transpose();
  const double slope = activation_slope_negative(act);
  h = h.array().max(slope * h.array());
  return h;
}

// beta = (Var(xbar) * I + H^T H)^{-1} H^T phi via Cholesky; the shift keeps
// the system positive definite for any H.
template <int D>
ShapeFeature embed(const AugmentedInput<D>& aug, const DistanceField& field,
                   const ElmBasis<D>& basis, Activation act = Activation::kRelu) {
  if (field.phi.size() != aug.xtilde.rows())
    throw std::invalid_argument("embed: row count mismatch between field and input");
  Eigen::MatrixXd h = elm_hidden(aug, basis, act);
  if (!h.allFinite()) throw std::runtime_error("embed: non-finite hidden activations");

  Eigen::MatrixXd gram = h.transpose() * h;
  gram.diagonal().array() += aug.variance;
  Eigen::VectorXd rhs = h.transpose() * field.phi;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw std::runtime_error("embed: ridge system solve failed");
  Eigen::VectorXd beta = llt.solve(rhs);

  const double rhs_norm = rhs.norm();
  if (rhs_norm > 0.0 && (gram * beta - rhs).norm() > 1e-8 * rhs_norm)
    throw std::runtime_error("embed: ridge residual check failed");

  ShapeFeature feat;
  feat.beta = std::move(beta);
  feat.basis_id = basis.basis_id;
  feat.label = "-";
  return feat;
}

// Network output H * beta on the given inputs; used to report how well the
// solved weights reproduce the field.
template <int D>
Eigen::VectorXd reconstruct(const AugmentedInput<D>& aug, const ElmBasis<D>& basis,
                            const ShapeFeature& feat, Activation act = Activation::kRelu) {
  if (feat.basis_id != basis.basis_id)
    throw std::invalid_argument("reconstruct: feature was embedded with a different basis");
  return elm_hidden(aug, basis, act) * feat.beta;
}

// ---- feature file (line-oriented text) ----

struct FeatureSet {
  std::string basis_id;
  int k = 0;
  std::vector<ShapeFeature> features;
};

inline void write_features(std::ostream& out, const FeatureSet& fs) {
  out << "basis_id=" << fs.basis_id << '\n';
  out << "k=" << fs.k << '\n';
  out << "count=" << fs.features.size() << '\n';
  for (const auto& f : fs.features) {
    out << f.instance_id << ' ' << (f.label.empty() ? "-" : f.label);
    for (Eigen::Index i = 0; i < f.beta.size(); ++i) out << ' ' << format_double(f.beta[i]);
    out << '\n';
  }
}

inline void write_features_file(const std::string& path, const FeatureSet& fs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write feature file: " + path);
  write_features(out, fs);
}

inline FeatureSet read_features(std::istream& in) {
  FeatureSet fs;
  std::string line;
  auto header = [&](const std::string& key) {
    if (!std::getline(in, line)) throw std::runtime_error("feature file: truncated header");
    if (line.rfind(key + "=", 0) != 0)
      throw std::runtime_error("feature file: expected '" + key + "=' header, got: " + line);
    return line.substr(key.size() + 1);
  };
  fs.basis_id = header("basis_id");
  fs.k = std::stoi(header("k"));
  const long count = std::stol(header("count"));
  for (long r = 0; r < count; ++r) {
    if (!std::getline(in, line)) throw std::runtime_error("feature file: truncated body");
    std::istringstream ls(line);
    ShapeFeature f;
    if (!(ls >> f.instance_id >> f.label))
      throw std::runtime_error("feature file: malformed record " + std::to_string(r));
    f.beta.resize(fs.k);
    for (int i = 0; i < fs.k; ++i)
      if (!(ls >> f.beta[i]))
        throw std::runtime_error("feature file: record " + std::to_string(r) + " has fewer than k values");
    f.basis_id = fs.basis_id;
    fs.features.push_back(std::move(f));
  }
  return fs;
}

inline FeatureSet read_features_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feature file: " + path);
  return read_features(in);
}

}  // namespace canon
