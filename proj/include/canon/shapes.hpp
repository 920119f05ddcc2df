// Procedural test geometry: primitive meshes, the bundled experiment shapes,
// the synthetic four-class dataset generator, and the 2D demo contour.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "canon/geometry.hpp"

namespace canon {

inline Mesh make_uv_sphere(int rings = 24, int segs = 48) {
  Mesh m;
  m.vertices.emplace_back(0.0, 0.0, 1.0);
  for (int i = 1; i < rings; ++i) {
    double th = std::numbers::pi * i / rings;
    for (int j = 0; j < segs; ++j) {
      double ph = 2.0 * std::numbers::pi * j / segs;
      m.vertices.emplace_back(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                              std::cos(th));
    }
  }
  m.vertices.emplace_back(0.0, 0.0, -1.0);
  for (int j = 0; j < segs; ++j) m.faces.push_back({0, 1 + j, 1 + (j + 1) % segs});
  for (int i = 0; i + 2 < rings; ++i) {
    int a = 1 + i * segs;
    int b = a + segs;
    for (int j = 0; j < segs; ++j) {
      int j2 = (j + 1) % segs;
      m.faces.push_back({a + j, b + j, b + j2});
      m.faces.push_back({a + j, b + j2, a + j2});
    }
  }
  int last = static_cast<int>(m.vertices.size()) - 1;
  int a = 1 + (rings - 2) * segs;
  for (int j = 0; j < segs; ++j) m.faces.push_back({last, a + (j + 1) % segs, a + j});
  return m;
}

inline Mesh make_box(double hx, double hy, double hz) {
  Mesh m;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) m.vertices.emplace_back(sx * hx, sy * hy, sz * hz);
  const int quads[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1},
                           {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
  for (const auto& q : quads) {
    m.faces.push_back({q[0], q[1], q[2]});
    m.faces.push_back({q[0], q[2], q[3]});
  }
  return m;
}

inline Mesh make_cylinder(double radius, double half_height, int segs = 64) {
  Mesh m;
  for (double z : {-half_height, half_height})
    for (int j = 0; j < segs; ++j) {
      double ph = 2.0 * std::numbers::pi * j / segs;
      m.vertices.emplace_back(radius * std::cos(ph), radius * std::sin(ph), z);
    }
  m.vertices.emplace_back(0.0, 0.0, -half_height);
  m.vertices.emplace_back(0.0, 0.0, half_height);
  int cb = 2 * segs, ct = 2 * segs + 1;
  for (int j = 0; j < segs; ++j) {
    int j2 = (j + 1) % segs;
    m.faces.push_back({j, segs + j, segs + j2});
    m.faces.push_back({j, segs + j2, j2});
    m.faces.push_back({cb, j2, j});
    m.faces.push_back({ct, segs + j, segs + j2});
  }
  return m;
}

inline Mesh merge_meshes(const std::vector<Mesh>& parts) {
  Mesh out;
  for (const auto& p : parts) {
    int off = static_cast<int>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), p.vertices.begin(), p.vertices.end());
    for (const auto& f : p.faces) out.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
  }
  return out;
}

inline Mesh transform_mesh(Mesh m, const Eigen::Matrix3d& linear,
                           const Eigen::Vector3d& offset = Eigen::Vector3d::Zero()) {
  for (auto& v : m.vertices) v = linear * v + offset;
  return m;
}

inline Mesh scale_mesh(Mesh m, const Eigen::Vector3d& s) {
  return transform_mesh(std::move(m), s.asDiagonal().toDenseMatrix());
}

// Haar-ish random rotation via QR of a Gaussian matrix, det fixed to +1.
inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix3d g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
  Eigen::Matrix3d q = qr.householderQ();
  Eigen::Matrix3d r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 3; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

// Axis-stability probe: hemispherical shell stretched along z so the
// area-weighted surface covariance has three near-equal eigenvalues. PCA on
// surface points then has no preferred axis, while the distance field keeps a
// strong z asymmetry (open rim vs. closed cap).
inline Mesh make_stability_probe(int rings = 40, int segs = 80) {
  const double stretch = 2.1617;
  Mesh m;
  m.vertices.emplace_back(0.0, 0.0, stretch);
  for (int i = 1; i <= rings; ++i) {
    double th = 0.5 * std::numbers::pi * i / rings;
    for (int j = 0; j < segs; ++j) {
      double ph = 2.0 * std::numbers::pi * j / segs;
      m.vertices.emplace_back(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                              stretch * std::cos(th));
    }
  }
  for (int j = 0; j < segs; ++j) m.faces.push_back({0, 1 + j, 1 + (j + 1) % segs});
  for (int i = 0; i + 1 < rings; ++i) {
    int a = 1 + i * segs;
    int b = a + segs;
    for (int j = 0; j < segs; ++j) {
      int j2 = (j + 1) % segs;
      m.faces.push_back({a + j, b + j, b + j2});
      m.faces.push_back({a + j, b + j2, a + j2});
    }
  }
  return m;
}

// Bundled asymmetric shape for the invariance experiments: a scalene ellipsoid
// with an off-center bump. Its data-matrix spectrum has well-separated
// singular values, so the canonical frame is unambiguous.
inline Mesh make_asymmetric_blob() {
  Mesh ell = scale_mesh(make_uv_sphere(), {1.0, 0.62, 0.38});
  Mesh bump = transform_mesh(make_uv_sphere(), Eigen::Matrix3d::Identity() * 0.33,
                             {0.55, 0.28, 0.22});
  return merge_meshes({ell, bump});
}

enum class SyntheticClass { kEllipsoid = 0, kBox = 1, kCylinder = 2, kDumbbell = 3 };

inline const std::vector<std::string>& synthetic_class_names() {
  static const std::vector<std::string> names = {"ellipsoid", "box", "cylinder", "dumbbell"};
  return names;
}

// One random instance of a synthetic class, already posed (random rotation,
// random scale in [0.5, 2]). Parameter ranges keep the four classes distinct
// in gross form: cigar / near-cube / flat puck / two lobes.
inline Mesh make_synthetic_instance(SyntheticClass cls, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  Mesh m;
  switch (cls) {
    case SyntheticClass::kEllipsoid: {
      double b = uni(0.35, 0.50);
      double c = b * uni(0.85, 1.0);
      m = scale_mesh(make_uv_sphere(), {1.0, b, c});
      break;
    }
    case SyntheticClass::kBox: {
      double b = uni(0.80, 1.0);
      double c = uni(0.60, 0.90);
      m = make_box(1.0, b, c);
      break;
    }
    case SyntheticClass::kCylinder: {
      m = make_cylinder(1.0, uni(0.25, 0.45));
      break;
    }
    case SyntheticClass::kDumbbell: {
      double r1 = uni(0.32, 0.45);
      double r2 = r1 * uni(0.6, 1.0);
      double d = (r1 + r2) * uni(1.2, 1.7);
      Mesh s1 = transform_mesh(make_uv_sphere(), Eigen::Matrix3d::Identity() * r1,
                               {0.0, 0.0, d / 2});
      Mesh s2 = transform_mesh(make_uv_sphere(), Eigen::Matrix3d::Identity() * r2,
                               {0.0, 0.0, -d / 2});
      m = merge_meshes({s1, s2});
      break;
    }
    default:
      throw std::invalid_argument("unknown synthetic class");
  }
  double s = uni(0.5, 2.0);
  return transform_mesh(std::move(m), s * random_rotation(rng));
}

// Closed 2D contour for the reconstruction demo: a star-like blob with detail
// at several angular frequencies.
inline Eigen::Matrix<double, Eigen::Dynamic, 2> make_contour2d(int n = 1024) {
  Eigen::Matrix<double, Eigen::Dynamic, 2> pts(n, 2);
  for (int i = 0; i < n; ++i) {
    double th = 2.0 * std::numbers::pi * i / n;
    double r = 0.55 + 0.22 * std::cos(3 * th + 0.7) + 0.10 * std::sin(7 * th) +
               0.06 * std::cos(11 * th + 2.1);
    pts(i, 0) = r * std::cos(th);
    pts(i, 1) = r * std::sin(th);
  }
  return pts;
}

// Resample a closed polyline uniformly by arc length (for distance queries).
inline Eigen::Matrix<double, Eigen::Dynamic, 2> resample_contour(
    const Eigen::Matrix<double, Eigen::Dynamic, 2>& poly, int n) {
  const Eigen::Index k = poly.rows();
  if (k < 2) throw std::invalid_argument("resample_contour: need at least 2 vertices");
  std::vector<double> cum(static_cast<std::size_t>(k) + 1, 0.0);
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::RowVector2d a = poly.row(i), b = poly.row((i + 1) % k);
    cum[static_cast<std::size_t>(i) + 1] =
        cum[static_cast<std::size_t>(i)] + (b - a).norm();
  }
  double total = cum.back();
  Eigen::Matrix<double, Eigen::Dynamic, 2> out(n, 2);
  std::size_t seg = 0;
  for (int i = 0; i < n; ++i) {
    double t = total * i / n;
    while (seg + 1 < cum.size() - 1 && cum[seg + 1] <= t) ++seg;
    double len = cum[seg + 1] - cum[seg];
    double u = len > 0 ? (t - cum[seg]) / len : 0.0;
    Eigen::RowVector2d a = poly.row(static_cast<Eigen::Index>(seg));
    Eigen::RowVector2d b = poly.row(static_cast<Eigen::Index>((seg + 1) % static_cast<std::size_t>(k)));
    out.row(i) = a + u * (b - a);
  }
  return out;
}

}  // namespace canon
