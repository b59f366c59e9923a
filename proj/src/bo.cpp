#include "mpcbo/bo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "mpcbo/csv.hpp"
#include "mpcbo/math.hpp"

namespace mpcbo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Switch point below which z*Phi(z) + phi(z) is evaluated by its asymptotic
// expansion; the direct form underflows near z = -38.
constexpr double kAsymptoticZ = -37.0;

double log_h_asymptotic(double z) {
  // h(z) = phi(z)/z^2 * (1 - 3/z^2 + 15/z^4 - 105/z^6 + 945/z^8 - ...) for
  // z << 0; truncation error ~1e-12 relative at the switch point.
  const double t = 1.0 / (z * z);
  double series =
      t * (1.0 - t * (3.0 - t * (15.0 - t * (105.0 - 945.0 * t))));
  return -0.5 * z * z - 0.5 * std::log(2.0 * kPi) + std::log(series);
}

}  // namespace

double log_expected_improvement(const PosteriorPrediction& pred, double best_y) {
  if (!(pred.variance >= 0.0))
    throw std::invalid_argument("log_expected_improvement: negative variance");
  const double sigma = std::sqrt(pred.variance);
  const double improvement = best_y - pred.mean;
  if (sigma == 0.0) return improvement > 0.0 ? std::log(improvement) : kNegInf;

  const double z = improvement / sigma;
  if (z < kAsymptoticZ) return std::log(sigma) + log_h_asymptotic(z);
  const double h = z * norm_cdf(z) + norm_pdf(z);
  if (h <= 0.0) return std::log(sigma) + log_h_asymptotic(z);
  return std::log(sigma) + std::log(h);
}

void BoConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("BoConfig: dim must be >= 1");
  if (n_init < 1) throw std::invalid_argument("BoConfig: n_init must be >= 1");
  if (n_iter < 0) throw std::invalid_argument("BoConfig: n_iter must be >= 0");
  if (n_candidates < 1) throw std::invalid_argument("BoConfig: n_candidates must be >= 1");
  if (local_perturb_count < 0)
    throw std::invalid_argument("BoConfig: local_perturb_count must be >= 0");
}

double BoTrace::best_cost() const {
  if (steps.empty()) throw std::logic_error("BoTrace: empty trace");
  return steps.back().best;
}

void BoTrace::write_csv(std::ostream& out) const {
  out << "iter,theta_hash,observed_cost,best_cost\n";
  for (const BoStep& step : steps) {
    std::uint64_t hash =
        fnv1a(step.theta.data(), step.theta.size() * sizeof(double));
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(hash));
    out << step.iteration << ',' << hex << ',' << csv_double(step.observed) << ','
        << csv_double(step.best) << '\n';
  }
}

Eigen::VectorXd propose(const SurrogateInterface& surrogate, const Dataset& data,
                        const BoConfig& cfg, Rng& rng) {
  if (data.size() < 1) throw std::invalid_argument("propose: empty dataset");

  int best_idx = 0;
  data.y.minCoeff(&best_idx);
  // Incumbent value in the surrogate's observation space.
  const double best_y = surrogate.transform_observation(data.y[best_idx]);
  const Eigen::VectorXd incumbent = data.params.row(best_idx).transpose();

  Eigen::VectorXd best_candidate;
  double best_acq = kNegInf;
  bool have_candidate = false;
  const int total = cfg.n_candidates + cfg.local_perturb_count;
  for (int c = 0; c < total; ++c) {
    Eigen::VectorXd candidate;
    if (c < cfg.n_candidates) {
      candidate = rng.uniform_vector(cfg.dim, 0.0, 1.0);
    } else {
      candidate = incumbent + cfg.perturb_scale * rng.normal_vector(cfg.dim);
      candidate = candidate.cwiseMax(0.0).cwiseMin(1.0);
    }
    double acq = log_expected_improvement(surrogate.predict(candidate), best_y);
    // Strict inequality keeps the lowest index on ties.
    if (!have_candidate || acq > best_acq) {
      best_acq = acq;
      best_candidate = std::move(candidate);
      have_candidate = true;
    }
  }
  return best_candidate;
}

namespace {

void record_step(BoTrace& trace, Dataset& data, int iteration,
                 const Eigen::VectorXd& theta, double observed) {
  // Continuous draws collide with probability zero; a duplicate means a bug.
  for (int i = 0; i < data.size(); ++i)
    if (data.params.row(i).transpose() == theta)
      throw std::logic_error("BO: duplicate parameter vector evaluated");
  data.append(theta, observed);
  double best = trace.steps.empty() ? observed
                                    : std::min(trace.steps.back().best, observed);
  trace.steps.push_back({iteration, theta, observed, best});
}

}  // namespace

BoTrace run(const Objective& objective, SurrogateInterface& surrogate,
            const BoConfig& cfg) {
  cfg.validate();
  if (!objective) throw std::invalid_argument("run: objective not callable");

  Rng init_rng = Rng::derive(cfg.init_seed, "bo-init");
  Rng rng = Rng::derive(cfg.seed, "bo-propose");

  BoTrace trace;
  Dataset data;
  data.params.resize(0, cfg.dim);
  for (int i = 0; i < cfg.n_init; ++i) {
    Eigen::VectorXd theta = init_rng.uniform_vector(cfg.dim, 0.0, 1.0);
    record_step(trace, data, i, theta, objective(theta));
  }
  for (int i = 0; i < cfg.n_iter; ++i) {
    surrogate.refit(data);
    Eigen::VectorXd theta = propose(surrogate, data, cfg, rng);
    record_step(trace, data, cfg.n_init + i, theta, objective(theta));
  }
  return trace;
}

BoTrace random_search(const Objective& objective, const BoConfig& cfg) {
  cfg.validate();
  if (!objective) throw std::invalid_argument("random_search: objective not callable");

  Rng init_rng = Rng::derive(cfg.init_seed, "bo-init");
  Rng rng = Rng::derive(cfg.seed, "bo-propose");

  BoTrace trace;
  Dataset data;
  data.params.resize(0, cfg.dim);
  const int total = cfg.n_init + cfg.n_iter;
  for (int i = 0; i < total; ++i) {
    // The first n_init draws reuse the shared initial-design stream so that
    // every surrogate, including this baseline, starts from identical data.
    Eigen::VectorXd theta = i < cfg.n_init
                                ? init_rng.uniform_vector(cfg.dim, 0.0, 1.0)
                                : rng.uniform_vector(cfg.dim, 0.0, 1.0);
    record_step(trace, data, i, theta, objective(theta));
  }
  return trace;
}

}  // namespace mpcbo
