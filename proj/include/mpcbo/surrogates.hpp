#pragma once

#include <optional>
#include <string>

#include "mpcbo/bnn.hpp"
#include "mpcbo/bo.hpp"
#include "mpcbo/gp.hpp"

namespace mpcbo {

/// GP regression behind the surrogate contract; covers both the Matern and
/// the infinite-width-network kernel, differing only in the spec template.
/// With log_observations the GP regresses log costs, which tames the
/// orders-of-magnitude spread of closed-loop costs.
class GpSurrogate final : public SurrogateInterface {
 public:
  GpSurrogate(KernelSpec search_template, std::string name,
              GpFitOptions options = {}, bool log_observations = false);

  void refit(const Dataset& data) override;
  PosteriorPrediction predict(const Eigen::VectorXd& theta) const override;
  double transform_observation(double y) const override;
  std::string_view name() const override { return name_; }

  const GpModel& model() const;

 private:
  KernelSpec template_;
  GpFitOptions options_;
  std::string name_;
  bool log_observations_;
  std::optional<GpModel> model_;
};

/// Finite-width BNN behind the surrogate contract. Observations are
/// standardized before inference and predictions mapped back; each refit runs
/// a fresh HMC chain warm-started from the previous one, with the full
/// burn-in only on the first fit.
class BnnSurrogate final : public SurrogateInterface {
 public:
  BnnSurrogate(BnnConfig cfg, std::uint64_t seed, int refit_burnin = -1,
               bool log_observations = false);

  void refit(const Dataset& data) override;
  PosteriorPrediction predict(const Eigen::VectorXd& theta) const override;
  double transform_observation(double y) const override;
  std::string_view name() const override { return "bnn"; }

  double last_acceptance_rate() const { return acceptance_rate_; }
  bool low_acceptance_warning() const { return low_acceptance_; }

 private:
  BnnConfig cfg_;
  std::uint64_t seed_;
  int refit_burnin_;
  bool log_observations_;
  int refit_count_ = 0;

  std::optional<BnnNetwork> net_;
  std::vector<Eigen::VectorXd> samples_;
  Eigen::VectorXd last_weights_;
  double y_shift_ = 0.0;
  double y_scale_ = 1.0;
  double acceptance_rate_ = 0.0;
  bool low_acceptance_ = false;
};

}  // namespace mpcbo
