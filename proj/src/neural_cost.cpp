#include "mpcbo/neural_cost.hpp"

#include <cmath>
#include <stdexcept>

#include "mpcbo/math.hpp"

namespace mpcbo {

std::vector<std::pair<int, int>> ParamLayout::layer_shapes() const {
  std::vector<std::pair<int, int>> shapes;
  if (hidden.empty()) return shapes;
  int in = n_x;
  for (int width : hidden) {
    shapes.emplace_back(width, in);
    in = width;
  }
  shapes.emplace_back(1, in);  // affine scalar output
  return shapes;
}

int ParamLayout::n_params() const {
  int count = n_x + n_u;
  for (auto [rows, cols] : layer_shapes()) count += rows * cols + rows;
  return count;
}

Eigen::VectorXd CostParams::q() const {
  return q_raw.unaryExpr([](double v) { return softplus(v); });
}

Eigen::VectorXd CostParams::r() const {
  return r_raw.unaryExpr([](double v) { return 1e-3 + softplus(v); });
}

CostParams CostParams::quadratic(const Eigen::VectorXd& q_eff,
                                 const Eigen::VectorXd& r_eff) {
  CostParams params;
  params.q_raw = q_eff.unaryExpr([](double v) { return inv_softplus(v); });
  params.r_raw = r_eff.unaryExpr([](double v) {
    if (!(v > 1e-3))
      throw std::invalid_argument("CostParams::quadratic: r must exceed the 1e-3 floor");
    return inv_softplus(v - 1e-3);
  });
  return params;
}

CostParams unpack(const Eigen::VectorXd& theta, const ParamLayout& layout) {
  if (theta.size() != layout.n_params())
    throw std::invalid_argument("unpack: theta has length " +
                                std::to_string(theta.size()) + ", layout needs " +
                                std::to_string(layout.n_params()));
  CostParams params;
  int offset = 0;
  params.q_raw = theta.segment(offset, layout.n_x);
  offset += layout.n_x;
  params.r_raw = theta.segment(offset, layout.n_u);
  offset += layout.n_u;
  for (auto [rows, cols] : layout.layer_shapes()) {
    Eigen::MatrixXd w =
        Eigen::Map<const Eigen::MatrixXd>(theta.data() + offset, rows, cols);
    offset += rows * cols;
    Eigen::VectorXd b = theta.segment(offset, rows);
    offset += rows;
    params.layers.emplace_back(std::move(w), std::move(b));
  }
  return params;
}

Eigen::VectorXd pack(const CostParams& params, const ParamLayout& layout) {
  Eigen::VectorXd theta(layout.n_params());
  int offset = 0;
  theta.segment(offset, layout.n_x) = params.q_raw;
  offset += layout.n_x;
  theta.segment(offset, layout.n_u) = params.r_raw;
  offset += layout.n_u;
  for (const auto& [w, b] : params.layers) {
    Eigen::Map<Eigen::MatrixXd>(theta.data() + offset, w.rows(), w.cols()) = w;
    offset += static_cast<int>(w.size());
    theta.segment(offset, b.size()) = b;
    offset += static_cast<int>(b.size());
  }
  if (offset != layout.n_params())
    throw std::invalid_argument("pack: params do not match layout");
  return theta;
}

double nn_output(const CostParams& params, const Eigen::VectorXd& x) {
  if (params.layers.empty()) return 0.0;
  Eigen::VectorXd h = x;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t i = 0; i < last; ++i) {
    const auto& [w, b] = params.layers[i];
    h = ((w * h + b).array().tanh()).matrix();
  }
  const auto& [w_out, b_out] = params.layers[last];
  return (w_out * h + b_out)[0];
}

Eigen::VectorXd nn_input_grad(const CostParams& params, const Eigen::VectorXd& x) {
  if (params.layers.empty()) return Eigen::VectorXd::Zero(x.size());
  const std::size_t last = params.layers.size() - 1;
  std::vector<Eigen::VectorXd> activations;  // post-tanh hidden states
  Eigen::VectorXd h = x;
  for (std::size_t i = 0; i < last; ++i) {
    const auto& [w, b] = params.layers[i];
    h = ((w * h + b).array().tanh()).matrix();
    activations.push_back(h);
  }
  // Backward sweep: delta starts as the output-layer weight row.
  Eigen::VectorXd delta = params.layers[last].first.row(0).transpose();
  for (std::size_t i = last; i-- > 0;) {
    const Eigen::VectorXd& act = activations[i];
    Eigen::VectorXd gated =
        (delta.array() * (1.0 - act.array().square())).matrix();
    delta = params.layers[i].first.transpose() * gated;
  }
  return delta;
}

double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                  const CostParams& params, const Eigen::VectorXd& x_d,
                  const Eigen::VectorXd& u_d) {
  const Eigen::VectorXd dx = x - x_d;
  const Eigen::VectorXd du = u - u_d;
  double quad = dx.dot(params.q().cwiseProduct(dx)) + du.dot(params.r().cwiseProduct(du));
  if (params.layers.empty()) return quad;
  return quad + nn_output(params, x) - nn_output(params, x_d);
}

Eigen::VectorXd stage_cost_grad_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  const CostParams& params, const Eigen::VectorXd& x_d,
                                  const Eigen::VectorXd& u_d) {
  (void)u;
  (void)u_d;
  Eigen::VectorXd grad = 2.0 * params.q().cwiseProduct(x - x_d);
  if (!params.layers.empty()) grad += nn_input_grad(params, x);
  return grad;
}

Eigen::VectorXd stage_cost_grad_u(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  const CostParams& params, const Eigen::VectorXd& x_d,
                                  const Eigen::VectorXd& u_d) {
  (void)x;
  (void)x_d;
  return 2.0 * params.r().cwiseProduct(u - u_d);
}

}  // namespace mpcbo
