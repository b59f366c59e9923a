#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mpcbo/dataset.hpp"
#include "mpcbo/rng.hpp"

namespace mpcbo {

/// Behavioral contract every surrogate back-end fulfills: refit on the full
/// dataset, then serve predictive moments at arbitrary points of the
/// normalized search box.
///
/// A back-end may regress a monotone transform of the observations (costs
/// spanning orders of magnitude model poorly raw); transform_observation
/// declares that space, and predict() reports moments in it. The acquisition
/// compares incumbents through the same map, so the minimizer is unaffected.
class SurrogateInterface {
 public:
  virtual ~SurrogateInterface() = default;
  virtual void refit(const Dataset& data) = 0;
  virtual PosteriorPrediction predict(const Eigen::VectorXd& theta) const = 0;
  virtual double transform_observation(double y) const { return y; }
  virtual std::string_view name() const = 0;
};

/// Loop parameters. The search box is [0,1]^dim in normalized coordinates;
/// mapping to physical parameter ranges is the objective's business.
struct BoConfig {
  int dim = 0;
  int n_init = 10;
  int n_iter = 100;
  int n_candidates = 2048;
  int local_perturb_count = 256;
  double perturb_scale = 0.05;
  std::uint64_t seed = 0;       // proposal / evaluation stream
  std::uint64_t init_seed = 0;  // initial design stream, shared across surrogates

  void validate() const;
};

struct BoStep {
  int iteration = 0;
  Eigen::VectorXd theta;
  double observed = 0.0;
  double best = 0.0;  // best observed so far, non-increasing
};

struct BoTrace {
  std::vector<BoStep> steps;

  double best_cost() const;
  /// CSV dump `iter,theta_hash,observed_cost,best_cost`.
  void write_csv(std::ostream& out) const;
};

/// log of the Expected Improvement under minimization,
/// EI = sigma * (z Phi(z) + phi(z)) with z = (best_y - mean) / sigma.
/// Exact for moderate z; switches to an asymptotic expansion deep in the
/// no-improvement tail where the direct form would underflow. sigma = 0
/// degenerates to log(best_y - mean) or -inf when nothing is gained.
double log_expected_improvement(const PosteriorPrediction& pred, double best_y);

/// Acquisition maximization over a sampled candidate set: uniform draws over
/// the box plus Gaussian perturbations of the incumbent. Ties break toward
/// the lowest candidate index.
Eigen::VectorXd propose(const SurrogateInterface& surrogate, const Dataset& data,
                        const BoConfig& cfg, Rng& rng);

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Full BO loop: initial design, then propose / evaluate / refit cycles.
BoTrace run(const Objective& objective, SurrogateInterface& surrogate,
            const BoConfig& cfg);

/// Uniform random baseline with the identical trace format and seeding.
BoTrace random_search(const Objective& objective, const BoConfig& cfg);

}  // namespace mpcbo
