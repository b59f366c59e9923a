#pragma once

#include <Eigen/Core>

namespace mpcbo {

/// Physical constants of the cart-pole benchmark. With the cart acceleration
/// as the input, only pole length, gravity and the sample time enter the
/// linear model; the masses are kept for a future nonlinear plant.
struct CartpoleParams {
  double cart_mass = 1.0;    // kg
  double pole_mass = 0.1;    // kg
  double pole_length = 0.5;  // m
  double gravity = 9.81;     // m/s^2
  double dt = 0.05;          // s
};

/// Discrete-time linear plant x_{k+1} = A x_k + B u_k.
struct LinearModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  double dt = 0.0;

  int n_x() const { return static_cast<int>(A.rows()); }
  int n_u() const { return static_cast<int>(B.cols()); }
};

/// Linearization of the cart-pole about the upright equilibrium with state
/// (cart position, cart velocity, pole angle, pole angular rate) and the cart
/// acceleration as input, discretized exactly through the matrix exponential
/// of the augmented continuous-time system.
LinearModel cartpole_linear_model(const CartpoleParams& physical);

}  // namespace mpcbo
