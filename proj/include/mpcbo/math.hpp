#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace mpcbo {

inline constexpr double kPi = 3.14159265358979323846;

/// Standard normal density.
inline double norm_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
}

/// Standard normal CDF via erfc, stable in both tails.
inline double norm_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

/// Numerically safe softplus: log(1 + e^x).
inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

/// Inverse of softplus, defined for y > 0.
inline double inv_softplus(double y) {
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

/// FNV-1a over arbitrary bytes; used for stable stream naming and theta hashes.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

}  // namespace mpcbo
