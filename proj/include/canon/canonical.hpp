// Canonical projection: assemble M = [X phi], take its thin SVD, fix the sign
// ambiguity against the distance column, and map the sampling coordinates into
// the (D+1)-dimensional canonical frame.
#pragma once

#include <Eigen/Dense>

#include <ostream>
#include <stdexcept>
#include <string>

#include "canon/distance_field.hpp"
#include "canon/util.hpp"

namespace canon {

template <int D>
struct DataMatrix {
  Eigen::Matrix<double, Eigen::Dynamic, D + 1> m;  // columns 0..D-1 = X, column D = phi
  std::string sampling_id;
};

template <int D>
DataMatrix<D> assemble_data_matrix(const SamplingSet<D>& sampling, const DistanceField& field) {
  if (field.sampling_id != sampling.id)
    throw std::invalid_argument("assemble_data_matrix: field was computed on a different sampling set");
  if (field.phi.size() != sampling.points.rows())
    throw std::invalid_argument("assemble_data_matrix: row count mismatch");
  DataMatrix<D> dm;
  dm.m.resize(sampling.points.rows(), D + 1);
  dm.m.template leftCols<D>() = sampling.points;
  dm.m.col(D) = field.phi;
  dm.sampling_id = sampling.id;
  return dm;
}

template <int D>
struct CanonicalFrame {
  Eigen::Matrix<double, D + 1, D + 1> vbar;          // sign-fixed right singular vectors
  Eigen::Matrix<double, D + 1, 1> singular_values;   // nonincreasing
  Eigen::Matrix<double, D + 1, 1> sign_vector;       // entries in {+1, -1}
  bool gap_warning = false;                           // near-equal adjacent singular values
  std::string sampling_id;
};

// Thin SVD M = U S V^T with the per-pair sign fixed so that U^T phi >= 0
// (zero components count as +1). The sign c_i flips the i-th singular pair,
// so vbar = V * diag(c) and M * vbar = U * diag(c) * S, which is independent
// of any rotation applied jointly to the shape and the sampling points.
template <int D>
CanonicalFrame<D> canonical_projection(const DataMatrix<D>& dm) {
  if (!dm.m.allFinite()) throw std::invalid_argument("canonical_projection: non-finite input");
  if (dm.m.rows() < D + 1) throw std::invalid_argument("canonical_projection: too few rows");

  using Mat = Eigen::Matrix<double, Eigen::Dynamic, D + 1>;
  Eigen::JacobiSVD<Mat> svd(dm.m, Eigen::ComputeThinU | Eigen::ComputeThinV);

  CanonicalFrame<D> frame;
  frame.singular_values = svd.singularValues();
  frame.sampling_id = dm.sampling_id;

  const Eigen::VectorXd phi = dm.m.col(D);
  Eigen::Matrix<double, D + 1, 1> proj = svd.matrixU().transpose() * phi;
  for (int i = 0; i <= D; ++i) frame.sign_vector[i] = proj[i] < 0.0 ? -1.0 : 1.0;
  frame.vbar = svd.matrixV() * frame.sign_vector.asDiagonal();

  const double s0 = frame.singular_values[0];
  if (s0 <= 0.0) {
    frame.gap_warning = true;
  } else {
    for (int i = 0; i < D; ++i)
      if ((frame.singular_values[i] - frame.singular_values[i + 1]) / s0 < 1e-3)
        frame.gap_warning = true;
  }

  // SVD sanity: M must reassemble from the sign-fixed factors.
  Mat rec = svd.matrixU() *
            (frame.sign_vector.cwiseProduct(frame.singular_values)).asDiagonal() *
            frame.vbar.transpose();
  double ref = dm.m.norm();
  if ((dm.m - rec).norm() > 1e-8 * (ref > 0 ? ref : 1.0))
    throw std::runtime_error("canonical_projection: SVD reconstruction check failed");
  return frame;
}

template <int D>
struct CanonicalInput {
  Eigen::Matrix<double, Eigen::Dynamic, D + 1> xbar;  // X mapped into the canonical frame
  std::string sampling_id;
};

// The ELM input keeps only the spatial contribution: xbar = X * vbar[0:D, :].
// The distance column's contribution is dropped, since phi is the regression
// target (keeping it would admit a trivial solution).
template <int D>
CanonicalInput<D> canonical_input(const SamplingSet<D>& sampling, const CanonicalFrame<D>& frame) {
  if (frame.sampling_id != sampling.id)
    throw std::invalid_argument("canonical_input: frame was built from a different sampling set");
  CanonicalInput<D> ci;
  ci.xbar = sampling.points * frame.vbar.template topRows<D>();
  ci.sampling_id = sampling.id;
  return ci;
}

// Maps surface points into the canonical frame as the zero level set:
// [cloud | 0] * vbar. Export-only view used for alignment inspection.
template <int D>
Eigen::Matrix<double, Eigen::Dynamic, D + 1> canonicalize_surface(const Points<D>& cloud,
                                                                  const CanonicalFrame<D>& frame) {
  return cloud * frame.vbar.template topRows<D>();
}

template <typename Derived>
void write_matrix_csv(std::ostream& out, const Eigen::MatrixBase<Derived>& m,
                      const std::string& header = "") {
  if (!header.empty()) out << header << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace canon
