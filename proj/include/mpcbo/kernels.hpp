#pragma once

#include <Eigen/Core>

namespace mpcbo {

enum class KernelVariant { Matern52, IBnn };

/// Configuration for the two covariance functions used by the GP surrogates.
///
/// Matern52 takes a signal variance and an isotropic lengthscale. IBnn is the
/// infinite-width network kernel: depth counts the activation layers applied
/// on top of the linear input layer, and the two prior variances scale the
/// weight and bias contributions at every layer.
struct KernelSpec {
  KernelVariant variant = KernelVariant::Matern52;

  double signal_variance = 1.0;  // sigma_f^2, Matern only
  double lengthscale = 1.0;      // ell, Matern only

  int depth = 3;                 // L >= 1, IBnn only
  double weight_prior_var = 1.0; // sigma_w^2
  double bias_prior_var = 0.1;   // sigma_b^2 >= 0

  static KernelSpec matern52(double sigma_f2, double ell);
  static KernelSpec ibnn(int depth, double sigma_w2, double sigma_b2);

  /// Throws std::invalid_argument when an invariant is violated
  /// (non-positive variances, depth < 1, sigma_b^2 < 0).
  void validate() const;
};

/// The three covariances carried through the I-BNN layer recursion:
/// k(x,x), k(x,y), k(y,y) for one input pair.
struct CovMatrixTriple {
  double k_xx = 0.0;
  double k_xy = 0.0;
  double k_yy = 0.0;
};

/// Matern 5/2 from the Euclidean distance r between inputs.
double matern52_from_r(double r, const KernelSpec& spec);

double matern52(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_prime,
                const KernelSpec& spec);

/// E[relu(z1) relu(z2)] for (z1, z2) zero-mean bivariate Gaussian with
/// covariance [[k_xx, k_xy], [k_xy, k_yy]]. Closed form; the correlation is
/// clamped to [-1, 1] before the arccos. Degenerate (near-zero) marginal
/// variances yield 0, the limit of the closed form.
double relu_moment(const CovMatrixTriple& cov);

/// Covariance triple induced by the linear input layer,
/// K0(a, b) = sigma_b^2 + sigma_w^2 / n_theta * a.dot(b).
CovMatrixTriple ibnn_input_layer(const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& theta_prime,
                                 const KernelSpec& spec);

/// Same thing from precomputed inner products (dot_xx = theta.dot(theta), ...).
CovMatrixTriple ibnn_input_layer_from_dots(double dot_xx, double dot_xy,
                                           double dot_yy, int dim,
                                           const KernelSpec& spec);

/// One hidden-layer update: K_ab' = sigma_b^2 + sigma_w^2 * E[relu relu].
CovMatrixTriple ibnn_layer_step(const CovMatrixTriple& cov, const KernelSpec& spec);

/// Full kernel: input layer followed by `depth` layer steps.
double ibnn_kernel(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_prime,
                   const KernelSpec& spec);

double ibnn_from_dots(double dot_xx, double dot_xy, double dot_yy, int dim,
                      const KernelSpec& spec);

/// Dispatch on spec.variant.
double kernel_value(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_prime,
                    const KernelSpec& spec);

}  // namespace mpcbo
