#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mpcbo {

/// Shape of the learnable cost: diagonal state/input weights plus a tanh
/// feedforward network on the state. The flat parameter count covers
/// q (n_x), r (n_u) and every weight matrix and bias vector in order.
struct ParamLayout {
  int n_x = 4;
  int n_u = 1;
  std::vector<int> hidden;  // cost-network hidden widths; empty -> no network

  int n_params() const;

  /// Per-layer (rows, cols) of the weight matrices, input n_x, scalar output.
  std::vector<std::pair<int, int>> layer_shapes() const;
};

/// Unpacked cost parameters. q_raw and r_raw store the search-space values;
/// the effective diagonal weights are obtained through a softplus map so that
/// Q stays positive semidefinite and R positive definite for any raw entries.
struct CostParams {
  Eigen::VectorXd q_raw;
  Eigen::VectorXd r_raw;
  std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> layers;  // (W_i, b_i)

  Eigen::VectorXd q() const;  // softplus(q_raw), >= 0
  Eigen::VectorXd r() const;  // 1e-3 + softplus(r_raw), > 0

  /// Quadratic-only params with the given effective weights and no network.
  static CostParams quadratic(const Eigen::VectorXd& q_eff,
                              const Eigen::VectorXd& r_eff);
};

CostParams unpack(const Eigen::VectorXd& theta, const ParamLayout& layout);
Eigen::VectorXd pack(const CostParams& params, const ParamLayout& layout);

/// Cost-network forward pass y_NN(x); 0 when the network is empty.
double nn_output(const CostParams& params, const Eigen::VectorXd& x);

/// d y_NN / dx via reverse-mode through the layers.
Eigen::VectorXd nn_input_grad(const CostParams& params, const Eigen::VectorXd& x);

/// l(x, u) = (x - x_d)' Q (x - x_d) + (u - u_d)' R (u - u_d)
///           + y_NN(x) - y_NN(x_d).
double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                  const CostParams& params, const Eigen::VectorXd& x_d,
                  const Eigen::VectorXd& u_d);

Eigen::VectorXd stage_cost_grad_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  const CostParams& params, const Eigen::VectorXd& x_d,
                                  const Eigen::VectorXd& u_d);

Eigen::VectorXd stage_cost_grad_u(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  const CostParams& params, const Eigen::VectorXd& x_d,
                                  const Eigen::VectorXd& u_d);

}  // namespace mpcbo
