#include "mpcbo/rng.hpp"

#include <cmath>

#include "mpcbo/math.hpp"

namespace mpcbo {

namespace {

constexpr std::uint64_t kWeylIncrement = 0x9e3779b97f4a7c15ull;

std::uint64_t splitmix64_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

Rng Rng::derive(std::uint64_t master, std::string_view name) {
  std::uint64_t h = fnv1a(name);
  h = fnv1a(&master, sizeof(master), h);
  return Rng(splitmix64_finalize(h));
}

Rng Rng::derive(std::uint64_t master, std::string_view name, std::uint64_t index) {
  std::uint64_t h = fnv1a(name);
  h = fnv1a(&master, sizeof(master), h);
  h = fnv1a(&index, sizeof(index), h);
  return Rng(splitmix64_finalize(h));
}

std::uint64_t Rng::next_u64() {
  counter_ += kWeylIncrement;
  return splitmix64_finalize(counter_);
}

double Rng::u01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::u01_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = u01_open();
  double u2 = u01_open();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * kPi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Eigen::VectorXd Rng::uniform_vector(int n, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
  return v;
}

Eigen::VectorXd Rng::normal_vector(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

}  // namespace mpcbo
