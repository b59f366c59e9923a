#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace mpcbo {

/// Evaluated parameters and their observed closed-loop costs.
struct Dataset {
  Eigen::MatrixXd params;  // n_d x n_theta, one evaluated parameter vector per row
  Eigen::VectorXd y;       // n_d observed costs
  double noise_variance = 0.0;  // sigma^2 of the observation noise, >= 0

  int size() const { return static_cast<int>(y.size()); }
  int dim() const { return static_cast<int>(params.cols()); }

  void validate() const {
    if (params.rows() != y.size())
      throw std::invalid_argument("Dataset: params rows != y length");
    if (!(noise_variance >= 0.0))
      throw std::invalid_argument("Dataset: noise variance must be >= 0");
    if (!params.allFinite() || !y.allFinite())
      throw std::invalid_argument("Dataset: non-finite entries");
  }

  void append(const Eigen::VectorXd& theta, double cost) {
    if (params.rows() > 0 && theta.size() != params.cols())
      throw std::invalid_argument("Dataset: appended theta has wrong dimension");
    if (params.rows() == 0) params.resize(0, theta.size());
    params.conservativeResize(params.rows() + 1, Eigen::NoChange);
    params.row(params.rows() - 1) = theta.transpose();
    y.conservativeResize(y.size() + 1);
    y[y.size() - 1] = cost;
  }
};

/// Surrogate output at a single query point.
struct PosteriorPrediction {
  double mean = 0.0;      // cost units
  double variance = 0.0;  // cost^2 units, >= 0
};

}  // namespace mpcbo
