#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "mpcbo/dataset.hpp"

namespace mpcbo {

struct HmcOptions {
  double step_size = 0.02;    // initial leapfrog step, adapted during burn-in
  int n_leapfrog = 20;
  int n_burnin = 500;
  double target_accept = 0.8;
  int thinning = 5;

  void validate() const;
};

/// Finite-width BNN surrogate configuration: tanh network, independent
/// zero-mean Gaussian prior of variance nu over every weight and bias, and a
/// Gaussian likelihood with fixed noise sigma^2.
struct BnnConfig {
  std::vector<int> hidden_sizes{64, 64};
  double prior_variance = 1.0;    // nu
  double likelihood_noise = 1e-2; // sigma^2
  int n_samples = 200;            // S >= 2
  HmcOptions hmc;
  double likelihood_weight = 1.0; // 0 switches to prior-only sampling

  void validate() const;
};

/// Shape and forward/backward passes of the surrogate network over a flat
/// weight vector laid out as [vec(W1), b1, vec(W2), b2, ...].
class BnnNetwork {
 public:
  BnnNetwork(int input_dim, std::vector<int> hidden_sizes);

  int n_params() const { return n_params_; }
  int input_dim() const { return input_dim_; }

  double forward(const Eigen::VectorXd& weights, const Eigen::VectorXd& x) const;

  /// Outputs for every row of xs.
  Eigen::VectorXd forward_batch(const Eigen::VectorXd& weights,
                                const Eigen::MatrixXd& xs) const;

  /// Gradient wrt weights of sum_i coeff[i] * output(xs.row(i)).
  Eigen::VectorXd weight_grad(const Eigen::VectorXd& weights,
                              const Eigen::MatrixXd& xs,
                              const Eigen::VectorXd& coeff) const;

 private:
  int input_dim_;
  std::vector<int> hidden_sizes_;
  std::vector<std::pair<int, int>> shapes_;  // (rows, cols) per layer
  int n_params_;
};

double bnn_log_likelihood(const Eigen::VectorXd& weights, const Dataset& data,
                          const BnnConfig& cfg, const BnnNetwork& net);
double bnn_log_prior(const Eigen::VectorXd& weights, const BnnConfig& cfg);

/// log p(y | Theta, W) + log p(W), additive constants included.
double log_posterior_unnorm(const Eigen::VectorXd& weights, const Dataset& data,
                            const BnnConfig& cfg);
Eigen::VectorXd log_posterior_grad(const Eigen::VectorXd& weights,
                                   const Dataset& data, const BnnConfig& cfg);

struct PhaseState {
  Eigen::VectorXd position;
  Eigen::VectorXd momentum;
};

/// Leapfrog integration of H = U(q) + |p|^2/2 given grad U; symplectic and
/// time-reversible.
PhaseState leapfrog_integrate(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_potential,
    PhaseState state, double step_size, int n_steps);

struct HmcResult {
  std::vector<Eigen::VectorXd> samples;  // S post-burn-in, thinned
  double acceptance_rate = 0.0;          // sampling phase
  double step_size = 0.0;                // after adaptation
  bool low_acceptance_warning = false;   // rate < 0.1 despite adaptation
};

/// HMC over the unnormalized posterior; bit-identical for a fixed seed.
/// An optional initial weight vector warm-starts the chain.
HmcResult sample_posterior(const Dataset& data, const BnnConfig& cfg,
                           std::uint64_t seed,
                           const Eigen::VectorXd* initial_weights = nullptr);

/// Monte-Carlo predictive moments: sample mean and (S-1)-denominator sample
/// variance of the network outputs (epistemic only).
PosteriorPrediction bnn_predict(const BnnNetwork& net,
                                const std::vector<Eigen::VectorXd>& samples,
                                const Eigen::VectorXd& theta_star);

}  // namespace mpcbo
