#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "mpcbo/cartpole.hpp"
#include "mpcbo/mpc.hpp"
#include "mpcbo/rng.hpp"

using namespace mpcbo;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nonlinear cart-pole with acceleration input, matching the convention in
// which the linear model is written: phi_dd = (g sin(phi) + u cos(phi)) / l.
Eigen::Vector4d nonlinear_rhs(const Eigen::Vector4d& x, double u,
                              const CartpoleParams& p) {
  Eigen::Vector4d dx;
  dx[0] = x[1];
  dx[1] = u;
  dx[2] = x[3];
  dx[3] = (p.gravity * std::sin(x[2]) + u * std::cos(x[2])) / p.pole_length;
  return dx;
}

Eigen::Vector4d rk4_flow(const Eigen::Vector4d& x0, double u,
                         const CartpoleParams& p, double dt, int substeps) {
  Eigen::Vector4d x = x0;
  double h = dt / substeps;
  for (int s = 0; s < substeps; ++s) {
    Eigen::Vector4d k1 = nonlinear_rhs(x, u, p);
    Eigen::Vector4d k2 = nonlinear_rhs(x + 0.5 * h * k1, u, p);
    Eigen::Vector4d k3 = nonlinear_rhs(x + 0.5 * h * k2, u, p);
    Eigen::Vector4d k4 = nonlinear_rhs(x + h * k3, u, p);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

LinearModel scalar_toy_model() {
  LinearModel model;
  model.A = Eigen::MatrixXd::Constant(1, 1, 1.0);
  model.B = Eigen::MatrixXd::Constant(1, 1, 1.0);
  model.dt = 1.0;
  return model;
}

OcpConfig scalar_toy_config(int horizon) {
  OcpConfig cfg;
  cfg.horizon = horizon;
  cfg.u_min = Eigen::VectorXd::Constant(1, -1e9);
  cfg.u_max = Eigen::VectorXd::Constant(1, 1e9);
  cfg.x_min = Eigen::VectorXd::Constant(1, -kInf);
  cfg.x_max = Eigen::VectorXd::Constant(1, kInf);
  cfg.x_target = Eigen::VectorXd::Zero(1);
  cfg.u_target = Eigen::VectorXd::Zero(1);
  return cfg;
}

// Finite-horizon LQR via the backward Riccati recursion for the scalar toy
// system (A = B = 1) with terminal weight terminal_scale * q.
std::vector<double> riccati_inputs(double x0, double q, double r, int horizon,
                                   double terminal_scale) {
  std::vector<double> p(horizon + 1);
  p[horizon] = terminal_scale * q;
  for (int k = horizon - 1; k >= 0; --k)
    p[k] = q + p[k + 1] - p[k + 1] * p[k + 1] / (r + p[k + 1]);
  std::vector<double> inputs(horizon);
  double x = x0;
  for (int k = 0; k < horizon; ++k) {
    double gain = p[k + 1] / (r + p[k + 1]);
    inputs[k] = -gain * x;
    x += inputs[k];
  }
  return inputs;
}

}  // namespace

TEST_CASE("upright equilibrium is a fixed point of the discrete model") {
  LinearModel model = cartpole_linear_model(CartpoleParams{});
  Eigen::Vector4d rest(1.3, 0.0, 0.0, 0.0);  // cart parked anywhere
  Eigen::Vector4d next = model.A * rest;
  CHECK((next - rest).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("discrete model matches a finite-difference nonlinear linearization") {
  CartpoleParams p;
  LinearModel model = cartpole_linear_model(p);
  const double eps = 1e-6;

  Eigen::Matrix4d a_fd;
  for (int j = 0; j < 4; ++j) {
    Eigen::Vector4d hi = Eigen::Vector4d::Zero(), lo = Eigen::Vector4d::Zero();
    hi[j] += eps;
    lo[j] -= eps;
    a_fd.col(j) =
        (rk4_flow(hi, 0.0, p, p.dt, 100) - rk4_flow(lo, 0.0, p, p.dt, 100)) /
        (2.0 * eps);
  }
  CHECK((a_fd - model.A).lpNorm<Eigen::Infinity>() <= 1e-6);

  Eigen::Vector4d b_fd =
      (rk4_flow(Eigen::Vector4d::Zero(), eps, p, p.dt, 100) -
       rk4_flow(Eigen::Vector4d::Zero(), -eps, p, p.dt, 100)) /
      (2.0 * eps);
  CHECK((b_fd - model.B).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("dt -> 0 gives A -> I and B -> 0") {
  CartpoleParams p;
  p.dt = 1e-8;
  LinearModel model = cartpole_linear_model(p);
  CHECK((model.A - Eigen::Matrix4d::Identity()).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(model.B.lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("solve from the target returns the target input sequence") {
  LinearModel model = cartpole_linear_model(CartpoleParams{});
  OcpConfig cfg = OcpConfig::cartpole_default();
  CostParams params = CostParams::quadratic(Eigen::VectorXd::Ones(4),
                                            Eigen::VectorXd::Constant(1, 0.1));
  OcpSolution sol = solve_ocp(Eigen::VectorXd::Zero(4), params, model, cfg);
  CHECK_FALSE(sol.failed);
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sol.inputs.lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("unconstrained quadratic solve matches the Riccati oracle") {
  LinearModel model = scalar_toy_model();
  CostParams params = CostParams::quadratic(Eigen::VectorXd::Ones(1),
                                            Eigen::VectorXd::Constant(1, 0.1));
  for (int horizon : {2, 5}) {
    OcpConfig cfg = scalar_toy_config(horizon);
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 1.0);
    OcpSolution sol = solve_ocp(x0, params, model, cfg);
    REQUIRE_FALSE(sol.failed);
    std::vector<double> oracle =
        riccati_inputs(1.0, 1.0, 0.1, horizon, cfg.terminal_scale);
    for (int k = 0; k < horizon; ++k)
      CHECK(sol.inputs(k, 0) == doctest::Approx(oracle[k]).epsilon(1e-6));
  }
}

TEST_CASE("solve never worsens the warm start objective") {
  Rng rng(13);
  LinearModel model = cartpole_linear_model(CartpoleParams{});
  OcpConfig cfg = OcpConfig::cartpole_default();
  ParamLayout layout;
  layout.n_x = 4;
  layout.n_u = 1;
  layout.hidden = {5, 5};
  for (int rep = 0; rep < 5; ++rep) {
    CostParams params =
        unpack(rng.uniform_vector(layout.n_params(), -1.0, 1.0), layout);
    Eigen::VectorXd x0 = rng.uniform_vector(4, -0.3, 0.3);
    Eigen::MatrixXd warm(cfg.horizon, 1);
    for (int i = 0; i < cfg.horizon; ++i) warm(i, 0) = rng.uniform(-5.0, 5.0);

    OcpSolution warm_eval = solve_ocp(x0, params, model, cfg, &warm);
    // Re-evaluate the warm start itself by running zero iterations.
    OcpConfig no_iters = cfg;
    no_iters.solver.max_iters = 0;
    OcpSolution baseline = solve_ocp(x0, params, model, no_iters, &warm);
    CHECK(warm_eval.objective <= baseline.objective + 1e-12);
  }
}

TEST_CASE("receding horizon keeps every input inside the box") {
  LinearModel model = cartpole_linear_model(CartpoleParams{});
  OcpConfig cfg = OcpConfig::cartpole_default();
  EvalWeights weights = EvalWeights::cartpole_default();
  ParamLayout layout;
  layout.n_x = 4;
  layout.n_u = 1;
  layout.hidden = {5, 5};
  Rng rng(19);
  Eigen::VectorXd theta = rng.uniform_vector(layout.n_params(), -1.0, 1.0);
  Eigen::VectorXd x_init(4);
  x_init << 0.5, 0.0, 0.2, 0.0;

  RolloutResult result = rollout(theta, layout, model, cfg, weights, x_init, 40);
  for (int k = 0; k < result.inputs.rows(); ++k) {
    CHECK(result.inputs(k, 0) <= cfg.u_max[0]);
    CHECK(result.inputs(k, 0) >= cfg.u_min[0]);
  }
}

TEST_CASE("rollout from the target stays at the target with zero cost") {
  LinearModel model = cartpole_linear_model(CartpoleParams{});
  OcpConfig cfg = OcpConfig::cartpole_default();
  EvalWeights weights = EvalWeights::cartpole_default();
  ParamLayout layout;
  layout.n_x = 4;
  layout.n_u = 1;
  CostParams params = CostParams::quadratic(Eigen::VectorXd::Ones(4),
                                            Eigen::VectorXd::Constant(1, 0.1));
  Eigen::VectorXd theta = pack(params, layout);

  RolloutResult result =
      rollout(theta, layout, model, cfg, weights, Eigen::VectorXd::Zero(4), 80);
  CHECK_FALSE(result.failed);
  CHECK(result.cost == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(result.states.lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("rollout is deterministic") {
  LinearModel model = cartpole_linear_model(CartpoleParams{});
  OcpConfig cfg = OcpConfig::cartpole_default();
  EvalWeights weights = EvalWeights::cartpole_default();
  ParamLayout layout;
  layout.n_x = 4;
  layout.n_u = 1;
  layout.hidden = {5, 5};
  Rng rng(29);
  Eigen::VectorXd theta = rng.uniform_vector(layout.n_params(), -1.0, 1.0);
  Eigen::VectorXd x_init(4);
  x_init << 0.5, 0.0, 0.2, 0.0;

  RolloutResult a = rollout(theta, layout, model, cfg, weights, x_init, 30);
  RolloutResult b = rollout(theta, layout, model, cfg, weights, x_init, 30);
  CHECK(a.cost == b.cost);
  CHECK((a.states - b.states).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.inputs - b.inputs).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("hand-tuned quadratic cost stabilizes the cart-pole") {
  LinearModel model = cartpole_linear_model(CartpoleParams{});
  OcpConfig cfg = OcpConfig::cartpole_default();
  EvalWeights weights = EvalWeights::cartpole_default();
  ParamLayout layout;
  layout.n_x = 4;
  layout.n_u = 1;
  CostParams params = CostParams::quadratic(Eigen::VectorXd::Ones(4),
                                            Eigen::VectorXd::Constant(1, 0.1));
  Eigen::VectorXd x_init(4);
  x_init << 0.5, 0.0, 0.2, 0.0;

  RolloutResult result =
      rollout(pack(params, layout), layout, model, cfg, weights, x_init, 80);
  REQUIRE_FALSE(result.failed);
  CHECK(std::abs(result.states(80, 0)) < 0.05);  // cart position
  CHECK(std::abs(result.states(80, 2)) < 0.05);  // pole angle
}

TEST_CASE("scaling q and r together leaves the minimizer unchanged") {
  LinearModel model = cartpole_linear_model(CartpoleParams{});
  OcpConfig cfg = OcpConfig::cartpole_default();
  Eigen::VectorXd x0(4);
  x0 << 0.3, 0.0, 0.1, 0.0;

  CostParams base = CostParams::quadratic(Eigen::VectorXd::Ones(4),
                                          Eigen::VectorXd::Constant(1, 0.1));
  CostParams scaled = CostParams::quadratic(Eigen::VectorXd::Constant(4, 3.0),
                                            Eigen::VectorXd::Constant(1, 0.3));
  OcpSolution a = solve_ocp(x0, base, model, cfg);
  OcpSolution b = solve_ocp(x0, scaled, model, cfg);
  CHECK((a.inputs - b.inputs).lpNorm<Eigen::Infinity>() <= 1e-5);
}

TEST_CASE("closed-loop cost basics") {
  EvalWeights weights = EvalWeights::cartpole_default();

  SUBCASE("trajectory at the target costs nothing") {
    Eigen::MatrixXd states = Eigen::MatrixXd::Zero(81, 4);
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(80, 1);
    CHECK(closed_loop_cost(states, inputs, weights) == 0.0);
  }

  SUBCASE("unit cart deviation at k=0 contributes exactly 1") {
    Eigen::MatrixXd states = Eigen::MatrixXd::Zero(81, 4);
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(80, 1);
    states(0, 0) = 1.0;
    CHECK(closed_loop_cost(states, inputs, weights) == doctest::Approx(1.0));
  }

  SUBCASE("unit cart deviation at k=75 lands in the tail: 1 + 100") {
    Eigen::MatrixXd states = Eigen::MatrixXd::Zero(81, 4);
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(80, 1);
    states(75, 0) = 1.0;
    CHECK(closed_loop_cost(states, inputs, weights) == doctest::Approx(101.0));
  }
}

TEST_CASE("closed-loop cost matches a hand-summed synthetic trajectory") {
  // Three steps, tail starting at k=2, hand-chosen weights.
  EvalWeights weights;
  weights.state_weight = Eigen::VectorXd(2);
  weights.state_weight << 1.0, 0.5;
  weights.input_weight = Eigen::VectorXd::Constant(1, 2.0);
  weights.tail_weight = Eigen::VectorXd(2);
  weights.tail_weight << 10.0, 20.0;
  weights.tail_start = 2;
  weights.x_target = Eigen::VectorXd::Zero(2);
  weights.u_target = Eigen::VectorXd::Zero(1);

  Eigen::MatrixXd states(4, 2);
  states << 1.0, -1.0, 0.5, 0.25, -0.125, 2.0, 0.0, 1.0;
  Eigen::MatrixXd inputs(3, 1);
  inputs << 1.0, -2.0, 0.5;

  // State and input sums over k = 0..3, then the tail over k = 2..3,
  // accumulated in the same order as the formula reads.
  double oracle = 0.0;
  oracle += (1.0 * 1.0 * 1.0 + 0.5 * (-1.0) * (-1.0)) + 2.0 * 1.0 * 1.0;
  oracle += (1.0 * 0.5 * 0.5 + 0.5 * 0.25 * 0.25) + 2.0 * (-2.0) * (-2.0);
  oracle += (1.0 * (-0.125) * (-0.125) + 0.5 * 2.0 * 2.0) + 2.0 * 0.5 * 0.5;
  oracle += (1.0 * 0.0 * 0.0 + 0.5 * 1.0 * 1.0);
  oracle += 10.0 * (-0.125) * (-0.125) + 20.0 * 2.0 * 2.0;
  oracle += 10.0 * 0.0 * 0.0 + 20.0 * 1.0 * 1.0;

  CHECK(closed_loop_cost(states, inputs, weights) == oracle);
}

TEST_CASE("stored trajectories re-evaluate to the same cost") {
  LinearModel model = cartpole_linear_model(CartpoleParams{});
  OcpConfig cfg = OcpConfig::cartpole_default();
  EvalWeights weights = EvalWeights::cartpole_default();
  ParamLayout layout;
  layout.n_x = 4;
  layout.n_u = 1;
  layout.hidden = {5, 5};
  Rng rng(43);
  Eigen::VectorXd theta = rng.uniform_vector(layout.n_params(), -1.0, 1.0);
  Eigen::VectorXd x_init(4);
  x_init << 0.5, 0.0, 0.2, 0.0;

  RolloutResult result = rollout(theta, layout, model, cfg, weights, x_init, 80);
  if (!result.failed)
    CHECK(closed_loop_cost(result.states, result.inputs, weights) == result.cost);
}

TEST_CASE("failed solves cap the rollout cost") {
  // An absurd state penalty with an infeasible start drives the objective
  // beyond double range, which must surface as a capped failure, not nan.
  LinearModel model = cartpole_linear_model(CartpoleParams{});
  OcpConfig cfg = OcpConfig::cartpole_default();
  cfg.state_penalty = 1e308;
  EvalWeights weights = EvalWeights::cartpole_default();
  ParamLayout layout;
  layout.n_x = 4;
  layout.n_u = 1;
  CostParams params = CostParams::quadratic(Eigen::VectorXd::Ones(4),
                                            Eigen::VectorXd::Constant(1, 0.1));
  Eigen::VectorXd x_bad(4);
  x_bad << 1e160, 0.0, 0.0, 0.0;
  RolloutResult result =
      rollout(pack(params, layout), layout, model, cfg, weights, x_bad, 5);
  CHECK(result.failed);
  CHECK(result.cost == kRolloutFailureCost);
}
