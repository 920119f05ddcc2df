// Mesh loading (OFF), area-uniform surface sampling, and cloud normalization.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
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

#include "canon/util.hpp"

namespace canon {

struct Mesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;
};

struct Provenance {
  std::string source;       // file path or generator tag
  std::uint64_t seed = 0;   // surface sampling seed
  int n = 0;                // requested sample count
};

struct PointCloud {
  Eigen::Matrix<double, Eigen::Dynamic, 3> points;
  Provenance provenance;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

// Whitespace token reader that tracks line numbers for error reporting.
// Lines starting with '#' are comments.
class LineTokenizer {
 public:
  explicit LineTokenizer(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    for (;;) {
      if (pos_ >= line_.size()) {
        if (!std::getline(in_, line_)) return false;
        ++line_no_;
        pos_ = 0;
        continue;
      }
      while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
      if (pos_ >= line_.size()) continue;
      if (line_[pos_] == '#') {  // comment to end of line
        pos_ = line_.size();
        continue;
      }
      std::size_t start = pos_;
      while (pos_ < line_.size() && !std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
      tok = line_.substr(start, pos_ - start);
      return true;
    }
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t pos_ = 0;
  int line_no_ = 0;
};

inline long parse_int(const std::string& tok, const LineTokenizer& tz, const char* what) {
  try {
    std::size_t used = 0;
    long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("expected integer for ") + what + ", got '" + tok + "'", tz.line());
  }
}

inline double parse_real(const std::string& tok, const LineTokenizer& tz, const char* what) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("expected number for ") + what + ", got '" + tok + "'", tz.line());
  }
}

}  // namespace detail

// Parses ASCII OFF. Tolerates the ModelNet malformation where the counts share
// the header line ("OFF3 1 0"). Polygons with more than three vertices are
// fan-triangulated.
inline Mesh load_off(std::istream& in) {
  detail::LineTokenizer tz(in);
  std::string tok;
  if (!tz.next(tok)) throw ParseError("empty stream, expected OFF header", 1);

  long nv = -1, nf = -1;
  if (tok == "OFF") {
    if (!tz.next(tok)) throw ParseError("truncated stream after OFF header", tz.line());
    nv = detail::parse_int(tok, tz, "vertex count");
  } else if (tok.rfind("OFF", 0) == 0) {
    nv = detail::parse_int(tok.substr(3), tz, "vertex count");
  } else {
    throw ParseError("missing OFF header, got '" + tok + "'", tz.line());
  }
  if (!tz.next(tok)) throw ParseError("truncated stream, expected face count", tz.line());
  nf = detail::parse_int(tok, tz, "face count");
  if (!tz.next(tok)) throw ParseError("truncated stream, expected edge count", tz.line());
  detail::parse_int(tok, tz, "edge count");  // ignored
  if (nv < 0 || nf < 0) throw ParseError("negative element count", tz.line());

  Mesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    Eigen::Vector3d v;
    for (int c = 0; c < 3; ++c) {
      if (!tz.next(tok)) throw ParseError("truncated stream in vertex list", tz.line());
      v[c] = detail::parse_real(tok, tz, "vertex coordinate");
    }
    mesh.vertices.push_back(v);
  }

  for (long i = 0; i < nf; ++i) {
    if (!tz.next(tok)) throw ParseError("truncated stream in face list", tz.line());
    long cnt = detail::parse_int(tok, tz, "face vertex count");
    if (cnt < 3) throw ParseError("face with fewer than 3 vertices", tz.line());
    std::vector<int> idx(static_cast<std::size_t>(cnt));
    for (long c = 0; c < cnt; ++c) {
      if (!tz.next(tok)) throw ParseError("truncated stream in face list", tz.line());
      long v = detail::parse_int(tok, tz, "face index");
      if (v < 0 || v >= nv)
        throw ParseError("face index " + std::to_string(v) + " out of range [0, " +
                             std::to_string(nv) + ")",
                         tz.line());
      idx[static_cast<std::size_t>(c)] = static_cast<int>(v);
    }
    for (std::size_t c = 1; c + 1 < idx.size(); ++c)
      mesh.faces.push_back({idx[0], idx[c], idx[c + 1]});
  }
  return mesh;
}

inline Mesh load_off_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open OFF file: " + path);
  return load_off(in);
}

inline void write_off(std::ostream& out, const Mesh& mesh) {
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
  for (const auto& v : mesh.vertices)
    out << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z())
        << '\n';
  for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

inline double face_area(const Mesh& mesh, const std::array<int, 3>& f) {
  const Eigen::Vector3d& a = mesh.vertices[static_cast<std::size_t>(f[0])];
  const Eigen::Vector3d& b = mesh.vertices[static_cast<std::size_t>(f[1])];
  const Eigen::Vector3d& c = mesh.vertices[static_cast<std::size_t>(f[2])];
  return 0.5 * (b - a).cross(c - a).norm();
}

inline double surface_area(const Mesh& mesh) {
  double total = 0;
  for (const auto& f : mesh.faces) total += face_area(mesh, f);
  return total;
}

// Area-uniform sampling: triangle picked with probability proportional to its
// area, then a uniform barycentric point inside it. Deterministic per seed.
inline PointCloud sample_surface(const Mesh& mesh, int n, std::uint64_t seed,
                                 const std::string& source = "") {
  if (n < 4) throw std::invalid_argument("sample_surface: need n >= 4");
  if (mesh.faces.empty()) throw std::invalid_argument("sample_surface: mesh has no faces");

  std::vector<double> cum(mesh.faces.size());
  double total = 0;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    total += face_area(mesh, mesh.faces[i]);
    cum[i] = total;
  }
  if (!(total > 0)) throw std::invalid_argument("sample_surface: mesh has zero surface area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointCloud cloud;
  cloud.points.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    double r = unit(rng) * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), r);
    std::size_t fi = std::min(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
    const auto& f = mesh.faces[fi];
    double u = unit(rng), v = unit(rng);
    if (u + v > 1.0) {  // fold into the triangle
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Eigen::Vector3d& a = mesh.vertices[static_cast<std::size_t>(f[0])];
    const Eigen::Vector3d& b = mesh.vertices[static_cast<std::size_t>(f[1])];
    const Eigen::Vector3d& c = mesh.vertices[static_cast<std::size_t>(f[2])];
    cloud.points.row(i) = (a + u * (b - a) + v * (c - a)).transpose();
  }
  cloud.provenance = {source, seed, n};
  return cloud;
}

// Zero-mean, unit max radius. Centering runs twice so the residual centroid is
// at rounding level even for large n. An all-coincident cloud maps to zeros.
template <int D>
Eigen::Matrix<double, Eigen::Dynamic, D> normalize_points(
    Eigen::Matrix<double, Eigen::Dynamic, D> pts) {
  if (pts.rows() < 1) throw std::invalid_argument("normalize: empty cloud");
  if (!pts.allFinite()) throw std::invalid_argument("normalize: non-finite coordinates");
  pts.rowwise() -= pts.colwise().mean().eval();
  pts.rowwise() -= pts.colwise().mean().eval();
  double r = pts.rowwise().norm().maxCoeff();
  if (r == 0.0) return pts;
  pts /= r;
  return pts;
}

inline PointCloud normalize(const PointCloud& cloud) {
  PointCloud out;
  out.points = normalize_points<3>(cloud.points);
  out.provenance = cloud.provenance;
  return out;
}

// XYZ text format: one "x y z" per line.
inline PointCloud load_xyz(std::istream& in, const std::string& source = "") {
  std::vector<Eigen::Vector3d> pts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ls(t);
    Eigen::Vector3d p;
    if (!(ls >> p.x() >> p.y() >> p.z()))
      throw ParseError("expected three coordinates", line_no);
    pts.push_back(p);
  }
  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i)
    cloud.points.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  cloud.provenance = {source, 0, static_cast<int>(pts.size())};
  return cloud;
}

inline void save_xyz(std::ostream& out, const PointCloud& cloud) {
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i)
    out << format_double(cloud.points(i, 0)) << ' ' << format_double(cloud.points(i, 1)) << ' '
        << format_double(cloud.points(i, 2)) << '\n';
}

}  // namespace canon
