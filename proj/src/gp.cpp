#include "mpcbo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mpcbo/math.hpp"

namespace mpcbo {

namespace {

// Pairwise statistics that stay fixed while hyperparameters vary.
struct PairStats {
  Eigen::MatrixXd dist;  // Euclidean distances, Matern
  Eigen::MatrixXd dots;  // inner products incl. diagonal, IBnn
  int dim = 0;
};

PairStats build_pair_stats(const Eigen::MatrixXd& params, KernelVariant variant) {
  PairStats stats;
  stats.dim = static_cast<int>(params.cols());
  const int n = static_cast<int>(params.rows());
  if (variant == KernelVariant::Matern52) {
    stats.dist.resize(n, n);
    for (int i = 0; i < n; ++i) {
      stats.dist(i, i) = 0.0;
      for (int j = i + 1; j < n; ++j) {
        double r = (params.row(i) - params.row(j)).norm();
        stats.dist(i, j) = r;
        stats.dist(j, i) = r;
      }
    }
  } else {
    stats.dots.noalias() = params * params.transpose();
  }
  return stats;
}

Eigen::MatrixXd gram_from_stats(const PairStats& stats, const KernelSpec& spec) {
  const int n = static_cast<int>(
      spec.variant == KernelVariant::Matern52 ? stats.dist.rows() : stats.dots.rows());
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double k = spec.variant == KernelVariant::Matern52
                     ? matern52_from_r(stats.dist(i, j), spec)
                     : ibnn_from_dots(stats.dots(i, i), stats.dots(i, j),
                                      stats.dots(j, j), stats.dim, spec);
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }
  return gram;
}

// Jitter escalation ladder for a failing Cholesky.
constexpr double kJitterMin = 1e-10;
constexpr double kJitterMax = 1e-4;

bool cholesky_with_jitter(const Eigen::MatrixXd& k_y, Eigen::LLT<Eigen::MatrixXd>& llt,
                          double& jitter_used) {
  llt.compute(k_y);
  if (llt.info() == Eigen::Success) {
    jitter_used = 0.0;
    return true;
  }
  const int n = static_cast<int>(k_y.rows());
  for (double jitter = kJitterMin; jitter <= kJitterMax * 1.0001; jitter *= 10.0) {
    Eigen::MatrixXd k_jit = k_y + jitter * Eigen::MatrixXd::Identity(n, n);
    llt.compute(k_jit);
    if (llt.info() == Eigen::Success) {
      jitter_used = jitter;
      return true;
    }
  }
  return false;
}

double lml_from_factor(const Eigen::LLT<Eigen::MatrixXd>& llt,
                       const Eigen::VectorXd& resid, const Eigen::VectorXd& alpha) {
  const int n = static_cast<int>(resid.size());
  double log_det_half = llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * resid.dot(alpha) - log_det_half - 0.5 * n * std::log(2.0 * kPi);
}

// LML as a function of log-hyperparameters, with the pairwise stats cached.
// Coordinates: Matern (log sf2, log ell, log sigma2); IBnn (log sw2, log sb2,
// log sigma2).
class LmlObjective {
 public:
  LmlObjective(const PairStats& stats, const Eigen::VectorXd& resid,
               const KernelSpec& tmpl)
      : stats_(stats), resid_(resid), tmpl_(tmpl) {}

  KernelSpec spec_at(const Eigen::Vector3d& log_hp) const {
    KernelSpec spec = tmpl_;
    if (tmpl_.variant == KernelVariant::Matern52) {
      spec.signal_variance = std::exp(log_hp[0]);
      spec.lengthscale = std::exp(log_hp[1]);
    } else {
      spec.weight_prior_var = std::exp(log_hp[0]);
      spec.bias_prior_var = std::exp(log_hp[1]);
    }
    return spec;
  }

  double operator()(const Eigen::Vector3d& log_hp) const {
    const KernelSpec spec = spec_at(log_hp);
    const double sigma2 = std::exp(log_hp[2]);
    Eigen::MatrixXd k_y = gram_from_stats(stats_, spec);
    k_y.diagonal().array() += sigma2;
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
    if (!cholesky_with_jitter(k_y, llt, jitter))
      return -std::numeric_limits<double>::infinity();
    Eigen::VectorXd alpha = llt.solve(resid_);
    return lml_from_factor(llt, resid_, alpha);
  }

 private:
  const PairStats& stats_;
  const Eigen::VectorXd& resid_;
  KernelSpec tmpl_;
};

double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  for (int i = index; i > 0; i /= base) {
    f /= base;
    r += f * (i % base);
  }
  return r;
}

// Golden-section maximization of f over [lo, hi]; returns best x found.
template <typename F>
std::pair<double, double> golden_section_max(const F& f, double lo, double hi,
                                             int steps) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < steps; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

struct SearchBox {
  Eigen::Vector3d lo;  // log space
  Eigen::Vector3d hi;
};

SearchBox search_box_for(const PairStats& stats, const KernelSpec& tmpl,
                         double noise_floor) {
  SearchBox box;
  if (tmpl.variant == KernelVariant::Matern52) {
    // Lengthscale range tied to the observed distance scale.
    double med = 1.0;
    const int n = static_cast<int>(stats.dist.rows());
    if (n > 1) {
      std::vector<double> d;
      d.reserve(n * (n - 1) / 2);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) d.push_back(stats.dist(i, j));
      std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
      med = d[d.size() / 2];
      if (!(med > 0.0)) med = 1.0;
    }
    box.lo << std::log(1e-3), std::log(med / 64.0), std::log(noise_floor);
    box.hi << std::log(1e3), std::log(med * 64.0), std::log(1.0);
  } else {
    box.lo << std::log(1e-2), std::log(1e-8), std::log(noise_floor);
    box.hi << std::log(1e2), std::log(10.0), std::log(1.0);
  }
  return box;
}

}  // namespace

GpModel GpModel::build(const Dataset& data, const KernelSpec& spec,
                       double noise_variance, bool standardize) {
  data.validate();
  spec.validate();
  if (data.size() < 1) throw std::invalid_argument("GpModel: empty dataset");

  GpModel model;
  model.spec_ = spec;
  model.train_params_ = data.params;

  const int n = data.size();
  if (standardize) {
    model.y_shift_ = data.y.mean();
    double var = n > 1 ? (data.y.array() - model.y_shift_).square().sum() / (n - 1)
                       : 0.0;
    model.y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
    model.y_internal_ = (data.y.array() - model.y_shift_) / model.y_scale_;
    model.prior_mean_internal_ = 0.0;  // sample mean in standardized units
  } else {
    model.y_internal_ = data.y;
    model.prior_mean_internal_ = data.y.mean();
  }
  model.noise_variance_ = noise_variance;

  PairStats stats = build_pair_stats(model.train_params_, spec.variant);
  Eigen::MatrixXd k_y = gram_from_stats(stats, spec);
  k_y.diagonal().array() += noise_variance;
  if (!cholesky_with_jitter(k_y, model.llt_, model.jitter_used_))
    throw std::runtime_error("GpModel: Cholesky failed at maximum jitter");

  Eigen::VectorXd resid =
      model.y_internal_.array() - model.prior_mean_internal_;
  model.alpha_ = model.llt_.solve(resid);
  model.log_det_half_ = model.llt_.matrixLLT().diagonal().array().log().sum();
  return model;
}

GpModel GpModel::make(const Dataset& data, const KernelSpec& spec, bool standardize) {
  return build(data, spec, data.noise_variance, standardize);
}

GpModel GpModel::prior(const KernelSpec& spec, double prior_mean) {
  spec.validate();
  GpModel model;
  model.spec_ = spec;
  model.prior_mean_internal_ = prior_mean;
  return model;
}

GpModel GpModel::fit(const Dataset& data, const KernelSpec& search_template,
                     const GpFitOptions& options) {
  data.validate();
  if (data.size() < 1) throw std::invalid_argument("GpModel::fit: empty dataset");

  // Standardize once; the search operates on the standardized residuals.
  const int n = data.size();
  double shift = data.y.mean();
  double var = n > 1 ? (data.y.array() - shift).square().sum() / (n - 1) : 0.0;
  double scale = var > 0.0 ? std::sqrt(var) : 1.0;
  Eigen::VectorXd resid = (data.y.array() - shift) / scale;

  PairStats stats = build_pair_stats(data.params, search_template.variant);
  LmlObjective objective(stats, resid, search_template);
  SearchBox box = search_box_for(stats, search_template, options.noise_floor);

  Eigen::Vector3d best_hp = 0.5 * (box.lo + box.hi);
  double best_val = -std::numeric_limits<double>::infinity();

  static constexpr int kHaltonBases[3] = {2, 3, 5};
  for (int start = 0; start < options.n_starts; ++start) {
    Eigen::Vector3d hp;
    for (int c = 0; c < 3; ++c) {
      double t = halton(start + 1, kHaltonBases[c]);
      hp[c] = box.lo[c] + t * (box.hi[c] - box.lo[c]);
    }
    double val = objective(hp);

    // Coordinate-wise golden-section refinement with a shrinking window.
    for (int iter = 0; iter < options.refine_iters; ++iter) {
      const int c = iter % 3;
      double span = 0.25 * (box.hi[c] - box.lo[c]) *
                    std::pow(0.7, static_cast<double>(iter / 3));
      double lo = std::max(box.lo[c], hp[c] - span);
      double hi = std::min(box.hi[c], hp[c] + span);
      auto line = [&](double x) {
        Eigen::Vector3d probe = hp;
        probe[c] = x;
        return objective(probe);
      };
      auto [x_best, f_best] = golden_section_max(line, lo, hi, options.golden_steps);
      if (f_best > val) {
        hp[c] = x_best;
        val = f_best;
      }
    }
    if (val > best_val) {
      best_val = val;
      best_hp = hp;
    }
  }

  if (!std::isfinite(best_val))
    throw std::runtime_error("GpModel::fit: no feasible hyperparameters found");

  KernelSpec fitted = objective.spec_at(best_hp);
  double sigma2 = std::max(std::exp(best_hp[2]), options.noise_floor);
  return build(data, fitted, sigma2, /*standardize=*/true);
}

PosteriorPrediction GpModel::predict(const Eigen::VectorXd& theta_star) const {
  const int n = static_cast<int>(y_internal_.size());
  const double k_ss = kernel_value(theta_star, theta_star, spec_);
  if (n == 0) {
    // Zero-observation path: the prior.
    return {y_shift_ + y_scale_ * prior_mean_internal_, y_scale_ * y_scale_ * k_ss};
  }
  if (theta_star.size() != train_params_.cols())
    throw std::invalid_argument("GpModel::predict: dimension mismatch");

  Eigen::VectorXd k_star(n);
  for (int i = 0; i < n; ++i)
    k_star[i] = kernel_value(theta_star, train_params_.row(i).transpose(), spec_);

  double mean_internal = prior_mean_internal_ + k_star.dot(alpha_);
  Eigen::VectorXd v =
      llt_.matrixL().solve(k_star);
  double var_internal = k_ss - v.squaredNorm();
  if (var_internal < 0.0) var_internal = 0.0;

  return {y_shift_ + y_scale_ * mean_internal,
          y_scale_ * y_scale_ * var_internal};
}

double GpModel::log_marginal_likelihood() const {
  const int n = static_cast<int>(y_internal_.size());
  if (n == 0)
    throw std::logic_error("log_marginal_likelihood: model has no data");
  Eigen::VectorXd resid = y_internal_.array() - prior_mean_internal_;
  return -0.5 * resid.dot(alpha_) - log_det_half_ -
         0.5 * n * std::log(2.0 * kPi);
}

}  // namespace mpcbo
