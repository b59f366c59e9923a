#include "mpcbo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mpcbo/math.hpp"

namespace mpcbo {

namespace {

void check_same_dim(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("kernel inputs have mismatched dimensions: " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  if (a.size() == 0) throw std::invalid_argument("kernel inputs are empty");
}

}  // namespace

KernelSpec KernelSpec::matern52(double sigma_f2, double ell) {
  KernelSpec spec;
  spec.variant = KernelVariant::Matern52;
  spec.signal_variance = sigma_f2;
  spec.lengthscale = ell;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::ibnn(int depth, double sigma_w2, double sigma_b2) {
  KernelSpec spec;
  spec.variant = KernelVariant::IBnn;
  spec.depth = depth;
  spec.weight_prior_var = sigma_w2;
  spec.bias_prior_var = sigma_b2;
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  if (variant == KernelVariant::Matern52) {
    if (!(signal_variance > 0.0))
      throw std::invalid_argument("Matern52: signal variance must be > 0");
    if (!(lengthscale > 0.0))
      throw std::invalid_argument("Matern52: lengthscale must be > 0");
  } else {
    if (depth < 1) throw std::invalid_argument("IBnn: depth must be >= 1");
    if (!(weight_prior_var > 0.0))
      throw std::invalid_argument("IBnn: weight prior variance must be > 0");
    if (!(bias_prior_var >= 0.0))
      throw std::invalid_argument("IBnn: bias prior variance must be >= 0");
  }
}

double matern52_from_r(double r, const KernelSpec& spec) {
  const double s = std::sqrt(5.0) * r / spec.lengthscale;
  return spec.signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

double matern52(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_prime,
                const KernelSpec& spec) {
  check_same_dim(theta, theta_prime);
  return matern52_from_r((theta - theta_prime).norm(), spec);
}

double relu_moment(const CovMatrixTriple& cov) {
  const double prod = cov.k_xx * cov.k_yy;
  // Limit of the closed form as either marginal variance vanishes.
  if (prod < 1e-300) return 0.0;
  const double scale = std::sqrt(prod);
  double rho = cov.k_xy / scale;
  rho = std::clamp(rho, -1.0, 1.0);
  const double psi = std::acos(rho);
  return scale / (2.0 * kPi) * (std::sin(psi) + (kPi - psi) * std::cos(psi));
}

CovMatrixTriple ibnn_input_layer(const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& theta_prime,
                                 const KernelSpec& spec) {
  check_same_dim(theta, theta_prime);
  return ibnn_input_layer_from_dots(theta.dot(theta), theta.dot(theta_prime),
                                    theta_prime.dot(theta_prime),
                                    static_cast<int>(theta.size()), spec);
}

CovMatrixTriple ibnn_input_layer_from_dots(double dot_xx, double dot_xy,
                                           double dot_yy, int dim,
                                           const KernelSpec& spec) {
  if (dim < 1) throw std::invalid_argument("IBnn: input dimension must be >= 1");
  const double w = spec.weight_prior_var / static_cast<double>(dim);
  const double b = spec.bias_prior_var;
  return {b + w * dot_xx, b + w * dot_xy, b + w * dot_yy};
}

CovMatrixTriple ibnn_layer_step(const CovMatrixTriple& cov, const KernelSpec& spec) {
  const double b = spec.bias_prior_var;
  const double w = spec.weight_prior_var;
  CovMatrixTriple next;
  // Diagonal entries use the rho = 1 form E[relu(z)^2] = k/2 directly.
  next.k_xx = b + w * 0.5 * cov.k_xx;
  next.k_yy = b + w * 0.5 * cov.k_yy;
  next.k_xy = b + w * relu_moment(cov);
  return next;
}

double ibnn_kernel(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_prime,
                   const KernelSpec& spec) {
  check_same_dim(theta, theta_prime);
  return ibnn_from_dots(theta.dot(theta), theta.dot(theta_prime),
                        theta_prime.dot(theta_prime),
                        static_cast<int>(theta.size()), spec);
}

double ibnn_from_dots(double dot_xx, double dot_xy, double dot_yy, int dim,
                      const KernelSpec& spec) {
  spec.validate();
  CovMatrixTriple cov = ibnn_input_layer_from_dots(dot_xx, dot_xy, dot_yy, dim, spec);
  for (int layer = 0; layer < spec.depth; ++layer)
    cov = ibnn_layer_step(cov, spec);
  return cov.k_xy;
}

double kernel_value(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_prime,
                    const KernelSpec& spec) {
  return spec.variant == KernelVariant::Matern52
             ? matern52(theta, theta_prime, spec)
             : ibnn_kernel(theta, theta_prime, spec);
}

}  // namespace mpcbo
