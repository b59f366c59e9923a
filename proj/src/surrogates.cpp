#include "mpcbo/surrogates.hpp"

#include <cmath>
#include <stdexcept>

namespace mpcbo {

namespace {

// Costs are nonnegative by construction; the floor guards log(0).
double safe_log(double y) { return std::log(std::max(y, 1e-12)); }

}  // namespace

GpSurrogate::GpSurrogate(KernelSpec search_template, std::string name,
                         GpFitOptions options, bool log_observations)
    : template_(search_template),
      options_(options),
      name_(std::move(name)),
      log_observations_(log_observations) {
  template_.validate();
}

double GpSurrogate::transform_observation(double y) const {
  return log_observations_ ? safe_log(y) : y;
}

void GpSurrogate::refit(const Dataset& data) {
  if (!log_observations_) {
    model_ = GpModel::fit(data, template_, options_);
    return;
  }
  Dataset transformed = data;
  transformed.y = data.y.unaryExpr([](double y) { return safe_log(y); });
  model_ = GpModel::fit(transformed, template_, options_);
}

PosteriorPrediction GpSurrogate::predict(const Eigen::VectorXd& theta) const {
  if (!model_) throw std::logic_error("GpSurrogate: predict before refit");
  return model_->predict(theta);
}

const GpModel& GpSurrogate::model() const {
  if (!model_) throw std::logic_error("GpSurrogate: no fitted model");
  return *model_;
}

BnnSurrogate::BnnSurrogate(BnnConfig cfg, std::uint64_t seed, int refit_burnin,
                           bool log_observations)
    : cfg_(std::move(cfg)),
      seed_(seed),
      refit_burnin_(refit_burnin),
      log_observations_(log_observations) {
  cfg_.validate();
  if (refit_burnin_ < 0)
    refit_burnin_ = std::max(50, cfg_.hmc.n_burnin / 4);
}

double BnnSurrogate::transform_observation(double y) const {
  return log_observations_ ? safe_log(y) : y;
}

void BnnSurrogate::refit(const Dataset& data) {
  data.validate();
  if (data.size() < 1) throw std::invalid_argument("BnnSurrogate: empty dataset");

  Eigen::VectorXd y = log_observations_
                          ? data.y.unaryExpr([](double v) { return safe_log(v); })
                          : data.y;
  const int n = data.size();
  y_shift_ = y.mean();
  double var = n > 1 ? (y.array() - y_shift_).square().sum() / (n - 1) : 0.0;
  y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;

  Dataset standardized = data;
  standardized.y = (y.array() - y_shift_) / y_scale_;

  BnnConfig run_cfg = cfg_;
  const bool warm = refit_count_ > 0 && last_weights_.size() > 0;
  if (warm) run_cfg.hmc.n_burnin = refit_burnin_;

  HmcResult result =
      sample_posterior(standardized, run_cfg,
                       Rng::derive(seed_, "bnn-refit", refit_count_).next_u64(),
                       warm ? &last_weights_ : nullptr);
  samples_ = std::move(result.samples);
  acceptance_rate_ = result.acceptance_rate;
  low_acceptance_ = result.low_acceptance_warning;
  if (!samples_.empty()) last_weights_ = samples_.back();
  net_.emplace(data.dim(), cfg_.hidden_sizes);
  ++refit_count_;
}

PosteriorPrediction BnnSurrogate::predict(const Eigen::VectorXd& theta) const {
  if (!net_) throw std::logic_error("BnnSurrogate: predict before refit");
  PosteriorPrediction pred = bnn_predict(*net_, samples_, theta);
  return {y_shift_ + y_scale_ * pred.mean, y_scale_ * y_scale_ * pred.variance};
}

}  // namespace mpcbo
