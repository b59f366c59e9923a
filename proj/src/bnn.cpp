#include "mpcbo/bnn.hpp"

#include <cmath>
#include <stdexcept>

#include "mpcbo/math.hpp"
#include "mpcbo/rng.hpp"

namespace mpcbo {

void HmcOptions::validate() const {
  if (!(step_size > 0.0)) throw std::invalid_argument("HMC: step_size must be > 0");
  if (n_leapfrog < 1) throw std::invalid_argument("HMC: n_leapfrog must be >= 1");
  if (n_burnin < 0) throw std::invalid_argument("HMC: n_burnin must be >= 0");
  if (thinning < 1) throw std::invalid_argument("HMC: thinning must be >= 1");
}

void BnnConfig::validate() const {
  if (n_samples < 2) throw std::invalid_argument("BnnConfig: need n_samples >= 2");
  if (!(prior_variance > 0.0))
    throw std::invalid_argument("BnnConfig: prior variance must be > 0");
  if (!(likelihood_noise > 0.0))
    throw std::invalid_argument("BnnConfig: likelihood noise must be > 0");
  hmc.validate();
}

BnnNetwork::BnnNetwork(int input_dim, std::vector<int> hidden_sizes)
    : input_dim_(input_dim), hidden_sizes_(std::move(hidden_sizes)) {
  if (input_dim < 1) throw std::invalid_argument("BnnNetwork: input_dim must be >= 1");
  int in = input_dim_;
  for (int width : hidden_sizes_) {
    if (width < 1) throw std::invalid_argument("BnnNetwork: hidden width must be >= 1");
    shapes_.emplace_back(width, in);
    in = width;
  }
  shapes_.emplace_back(1, in);
  n_params_ = 0;
  for (auto [rows, cols] : shapes_) n_params_ += rows * cols + rows;
}

namespace {

// Weight matrix and bias of layer `idx` viewed inside the flat vector.
struct LayerView {
  Eigen::Map<const Eigen::MatrixXd> w;
  Eigen::Map<const Eigen::VectorXd> b;
};

LayerView layer_view(const Eigen::VectorXd& weights, int offset, int rows, int cols) {
  return {Eigen::Map<const Eigen::MatrixXd>(weights.data() + offset, rows, cols),
          Eigen::Map<const Eigen::VectorXd>(weights.data() + offset + rows * cols,
                                            rows)};
}

}  // namespace

double BnnNetwork::forward(const Eigen::VectorXd& weights,
                           const Eigen::VectorXd& x) const {
  return forward_batch(weights, x.transpose())[0];
}

Eigen::VectorXd BnnNetwork::forward_batch(const Eigen::VectorXd& weights,
                                          const Eigen::MatrixXd& xs) const {
  if (weights.size() != n_params_)
    throw std::invalid_argument("BnnNetwork: weight vector has wrong length");
  Eigen::MatrixXd h = xs;
  int offset = 0;
  for (std::size_t i = 0; i + 1 < shapes_.size(); ++i) {
    auto [rows, cols] = shapes_[i];
    LayerView layer = layer_view(weights, offset, rows, cols);
    offset += rows * cols + rows;
    h = ((h * layer.w.transpose()).rowwise() + layer.b.transpose())
            .array()
            .tanh()
            .matrix();
  }
  auto [rows, cols] = shapes_.back();
  LayerView out = layer_view(weights, offset, rows, cols);
  return (h * out.w.transpose()).col(0).array() + out.b[0];
}

Eigen::VectorXd BnnNetwork::weight_grad(const Eigen::VectorXd& weights,
                                        const Eigen::MatrixXd& xs,
                                        const Eigen::VectorXd& coeff) const {
  std::vector<Eigen::MatrixXd> activations;  // a_0 = xs, then post-tanh layers
  activations.reserve(shapes_.size());
  activations.push_back(xs);

  std::vector<int> offsets(shapes_.size());
  int offset = 0;
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    offsets[i] = offset;
    auto [rows, cols] = shapes_[i];
    offset += rows * cols + rows;
    if (i + 1 < shapes_.size()) {
      LayerView layer = layer_view(weights, offsets[i], rows, cols);
      activations.push_back(((activations.back() * layer.w.transpose()).rowwise() +
                             layer.b.transpose())
                                .array()
                                .tanh()
                                .matrix());
    }
  }

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_params_);
  // Output layer is affine: delta is just coeff.
  Eigen::MatrixXd delta = coeff;
  for (std::size_t i = shapes_.size(); i-- > 0;) {
    auto [rows, cols] = shapes_[i];
    LayerView layer = layer_view(weights, offsets[i], rows, cols);
    Eigen::Map<Eigen::MatrixXd>(grad.data() + offsets[i], rows, cols).noalias() =
        delta.transpose() * activations[i];
    Eigen::Map<Eigen::VectorXd>(grad.data() + offsets[i] + rows * cols, rows) =
        delta.colwise().sum().transpose();
    if (i > 0) {
      Eigen::MatrixXd propagated = delta * layer.w;
      delta = (propagated.array() * (1.0 - activations[i].array().square())).matrix();
    }
  }
  return grad;
}

double bnn_log_likelihood(const Eigen::VectorXd& weights, const Dataset& data,
                          const BnnConfig& cfg, const BnnNetwork& net) {
  if (data.size() == 0 || cfg.likelihood_weight == 0.0) return 0.0;
  const double sigma2 = cfg.likelihood_noise;
  Eigen::VectorXd pred = net.forward_batch(weights, data.params);
  double sq = (data.y - pred).squaredNorm();
  double ll = -0.5 * data.size() * std::log(2.0 * kPi * sigma2) - 0.5 * sq / sigma2;
  return cfg.likelihood_weight * ll;
}

double bnn_log_prior(const Eigen::VectorXd& weights, const BnnConfig& cfg) {
  const double nu = cfg.prior_variance;
  return -0.5 * weights.size() * std::log(2.0 * kPi * nu) -
         0.5 * weights.squaredNorm() / nu;
}

double log_posterior_unnorm(const Eigen::VectorXd& weights, const Dataset& data,
                            const BnnConfig& cfg) {
  if (!weights.allFinite())
    throw std::invalid_argument("log_posterior_unnorm: non-finite weights");
  BnnNetwork net(data.dim() > 0 ? data.dim() : 1, cfg.hidden_sizes);
  return bnn_log_likelihood(weights, data, cfg, net) + bnn_log_prior(weights, cfg);
}

Eigen::VectorXd log_posterior_grad(const Eigen::VectorXd& weights,
                                   const Dataset& data, const BnnConfig& cfg) {
  BnnNetwork net(data.dim() > 0 ? data.dim() : 1, cfg.hidden_sizes);
  Eigen::VectorXd grad = -weights / cfg.prior_variance;
  if (data.size() > 0 && cfg.likelihood_weight != 0.0) {
    Eigen::VectorXd pred = net.forward_batch(weights, data.params);
    Eigen::VectorXd coeff =
        cfg.likelihood_weight * (data.y - pred) / cfg.likelihood_noise;
    grad += net.weight_grad(weights, data.params, coeff);
  }
  return grad;
}

PhaseState leapfrog_integrate(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_potential,
    PhaseState state, double step_size, int n_steps) {
  state.momentum -= 0.5 * step_size * grad_potential(state.position);
  for (int i = 0; i < n_steps; ++i) {
    state.position += step_size * state.momentum;
    double half = (i + 1 == n_steps) ? 0.5 : 1.0;
    state.momentum -= half * step_size * grad_potential(state.position);
  }
  return state;
}

HmcResult sample_posterior(const Dataset& data, const BnnConfig& cfg,
                           std::uint64_t seed,
                           const Eigen::VectorXd* initial_weights) {
  cfg.validate();
  data.validate();
  if (data.size() == 0 && cfg.likelihood_weight != 0.0)
    throw std::invalid_argument("sample_posterior: empty dataset");

  BnnNetwork net(data.dim() > 0 ? data.dim() : 1, cfg.hidden_sizes);
  const int dim = net.n_params();
  Rng rng = Rng::derive(seed, "hmc");

  auto grad_potential = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
    Eigen::VectorXd g = w / cfg.prior_variance;
    if (data.size() > 0 && cfg.likelihood_weight != 0.0) {
      Eigen::VectorXd pred = net.forward_batch(w, data.params);
      Eigen::VectorXd coeff =
          cfg.likelihood_weight * (data.y - pred) / cfg.likelihood_noise;
      g -= net.weight_grad(w, data.params, coeff);
    }
    return g;
  };
  auto potential = [&](const Eigen::VectorXd& q) {
    return -(bnn_log_likelihood(q, data, cfg, net) + bnn_log_prior(q, cfg));
  };

  Eigen::VectorXd q;
  if (initial_weights) {
    if (initial_weights->size() != dim)
      throw std::invalid_argument("sample_posterior: bad initial weight length");
    q = *initial_weights;
  } else {
    q = std::sqrt(cfg.prior_variance) * 0.1 * rng.normal_vector(dim);
  }

  // Dual averaging of the step size toward the target acceptance rate.
  double eps = cfg.hmc.step_size;
  const double mu = std::log(10.0 * eps);
  double log_eps_bar = std::log(eps);
  double h_bar = 0.0;
  constexpr double kGamma = 0.05, kT0 = 10.0, kKappa = 0.75;

  HmcResult result;
  result.samples.reserve(cfg.n_samples);
  int accepted_sampling = 0;
  int sampling_trajectories = 0;
  double current_u = potential(q);

  const int total = cfg.hmc.n_burnin + cfg.n_samples * cfg.hmc.thinning;
  for (int m = 1; m <= total; ++m) {
    PhaseState state{q, rng.normal_vector(dim)};
    const double h_old = current_u + 0.5 * state.momentum.squaredNorm();
    state = leapfrog_integrate(grad_potential, std::move(state), eps,
                               cfg.hmc.n_leapfrog);
    double u_new = potential(state.position);
    const double h_new = u_new + 0.5 * state.momentum.squaredNorm();
    double log_accept = h_old - h_new;
    double accept_prob =
        std::isfinite(log_accept) ? std::min(1.0, std::exp(log_accept)) : 0.0;

    if (rng.u01() < accept_prob) {
      q = std::move(state.position);
      current_u = u_new;
      if (m > cfg.hmc.n_burnin) ++accepted_sampling;
    }

    if (m <= cfg.hmc.n_burnin) {
      double frac = 1.0 / (m + kT0);
      h_bar = (1.0 - frac) * h_bar + frac * (cfg.hmc.target_accept - accept_prob);
      double log_eps = mu - std::sqrt(static_cast<double>(m)) / kGamma * h_bar;
      double eta = std::pow(static_cast<double>(m), -kKappa);
      log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
      eps = std::exp(log_eps);
      if (m == cfg.hmc.n_burnin) eps = std::exp(log_eps_bar);
    } else {
      ++sampling_trajectories;
      if ((m - cfg.hmc.n_burnin) % cfg.hmc.thinning == 0) result.samples.push_back(q);
    }
  }

  result.acceptance_rate =
      sampling_trajectories > 0
          ? static_cast<double>(accepted_sampling) / sampling_trajectories
          : 0.0;
  result.step_size = eps;
  result.low_acceptance_warning = result.acceptance_rate < 0.1;
  return result;
}

PosteriorPrediction bnn_predict(const BnnNetwork& net,
                                const std::vector<Eigen::VectorXd>& samples,
                                const Eigen::VectorXd& theta_star) {
  const int s = static_cast<int>(samples.size());
  if (s < 2) throw std::invalid_argument("bnn_predict: need at least 2 samples");
  Eigen::VectorXd outputs(s);
  for (int i = 0; i < s; ++i) outputs[i] = net.forward(samples[i], theta_star);
  double mean = outputs.mean();
  double variance = (outputs.array() - mean).square().sum() / (s - 1);
  return {mean, variance};
}

}  // namespace mpcbo
