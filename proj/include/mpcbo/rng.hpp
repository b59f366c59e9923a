#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Core>

namespace mpcbo {

/// Counter-based pseudo-random generator: a Weyl sequence fed through the
/// SplitMix64 finalizer. Streams are derived by name so that independent
/// experiment cells never share state, and reruns are bit-identical.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : counter_(seed) {}

  /// Derive an independent stream from a master seed and a stream name.
  static Rng derive(std::uint64_t master, std::string_view name);
  static Rng derive(std::uint64_t master, std::string_view name, std::uint64_t index);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double u01();

  /// Uniform in (0, 1), never returning an exact endpoint.
  double u01_open();

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  /// Standard normal via Box-Muller; the spare draw is cached.
  double normal();

  Eigen::VectorXd uniform_vector(int n, double lo, double hi);
  Eigen::VectorXd normal_vector(int n);

 private:
  std::uint64_t counter_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mpcbo
