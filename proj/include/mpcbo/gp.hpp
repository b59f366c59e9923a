#pragma once

#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mpcbo/dataset.hpp"
#include "mpcbo/kernels.hpp"

namespace mpcbo {

/// Knobs for the marginal-likelihood hyperparameter search: multi-start over a
/// log-uniform grid followed by coordinate-wise golden-section refinement.
struct GpFitOptions {
  int n_starts = 16;
  int refine_iters = 50;   // line searches per start, cycling coordinates
  int golden_steps = 6;    // bracket shrinks per line search
  double noise_floor = 1e-8;
};

/// Exact GP regression with a cached Cholesky factor of K_y = K + sigma^2 I.
///
/// fit() standardizes the observations internally (zero mean, unit variance)
/// and selects hyperparameters by maximizing the log marginal likelihood;
/// predictions are reported back in the original cost units. make() skips the
/// search and uses the spec as given, which is what the oracle tests compare
/// against.
class GpModel {
 public:
  /// Hyperparameter search over (kernel params, noise). Throws on an empty
  /// dataset or if the Cholesky fails at maximum jitter.
  static GpModel fit(const Dataset& data, const KernelSpec& search_template,
                     const GpFitOptions& options = {});

  /// Fixed hyperparameters, noise taken from data.noise_variance.
  static GpModel make(const Dataset& data, const KernelSpec& spec,
                      bool standardize = false);

  /// Zero-observation model: predict returns the prior.
  static GpModel prior(const KernelSpec& spec, double prior_mean = 0.0);

  PosteriorPrediction predict(const Eigen::VectorXd& theta_star) const;

  /// Log marginal likelihood of the (internally standardized) data.
  double log_marginal_likelihood() const;

  const KernelSpec& spec() const { return spec_; }
  double noise_variance() const { return noise_variance_; }
  double jitter_used() const { return jitter_used_; }
  double prior_mean() const { return y_shift_ + y_scale_ * prior_mean_internal_; }
  int data_size() const { return static_cast<int>(y_internal_.size()); }

 private:
  GpModel() = default;

  static GpModel build(const Dataset& data, const KernelSpec& spec,
                       double noise_variance, bool standardize);

  KernelSpec spec_;
  Eigen::MatrixXd train_params_;
  Eigen::VectorXd y_internal_;       // standardized (or raw) observations
  double prior_mean_internal_ = 0.0; // m0 in internal units
  double y_shift_ = 0.0;             // raw = shift + scale * internal
  double y_scale_ = 1.0;
  double noise_variance_ = 0.0;      // in internal units
  double jitter_used_ = 0.0;

  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;            // K_y^{-1} (y - m0)
  double log_det_half_ = 0.0;        // sum log diag chol
};

}  // namespace mpcbo
