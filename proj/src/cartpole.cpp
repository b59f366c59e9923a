#include "mpcbo/cartpole.hpp"

#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace mpcbo {

LinearModel cartpole_linear_model(const CartpoleParams& physical) {
  if (!(physical.cart_mass > 0.0) || !(physical.pole_mass > 0.0) ||
      !(physical.pole_length > 0.0) || !(physical.dt > 0.0))
    throw std::invalid_argument("cartpole_linear_model: masses, length, dt must be > 0");

  const double g = physical.gravity;
  const double l = physical.pole_length;

  // xdd_c = u, phidd = (g/l) phi + (1/l) u about the upright equilibrium.
  Eigen::Matrix4d a_cont = Eigen::Matrix4d::Zero();
  a_cont(0, 1) = 1.0;
  a_cont(2, 3) = 1.0;
  a_cont(3, 2) = g / l;
  Eigen::Vector4d b_cont(0.0, 1.0, 0.0, 1.0 / l);

  // Exact zero-order-hold discretization via the augmented exponential.
  Eigen::Matrix<double, 5, 5> aug = Eigen::Matrix<double, 5, 5>::Zero();
  aug.topLeftCorner<4, 4>() = a_cont;
  aug.topRightCorner<4, 1>() = b_cont;
  Eigen::Matrix<double, 5, 5> exp_aug = (aug * physical.dt).exp();

  LinearModel model;
  model.A = exp_aug.topLeftCorner<4, 4>();
  model.B = exp_aug.topRightCorner<4, 1>();
  model.dt = physical.dt;
  return model;
}

}  // namespace mpcbo
