// Small shared utilities: content hashing, seed derivation, csv/number formatting.
#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace canon {

inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  return fnv1a64(s.data(), s.size(), h);
}

// Stateless seed derivation so that parallel workers agree with serial runs.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = fnv1a64(&base, sizeof(base));
  return fnv1a64(tag, h);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
  std::uint64_t h = derive_seed(base, tag);
  return fnv1a64(&index, sizeof(index), h);
}

inline std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

// Content id of a matrix: hash over the raw coefficient bytes.
template <typename Derived>
std::string matrix_id(const Eigen::MatrixBase<Derived>& m) {
  Eigen::MatrixXd dense = m.template cast<double>();
  std::uint64_t h = fnv1a64(dense.data(), sizeof(double) * dense.size());
  const auto rows = static_cast<std::uint64_t>(dense.rows());
  h = fnv1a64(&rows, sizeof(rows), h);
  return to_hex(h);
}

// Shortest decimal that round-trips a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return "";
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace canon
