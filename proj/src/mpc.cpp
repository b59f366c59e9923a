#include "mpcbo/mpc.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "mpcbo/csv.hpp"

namespace mpcbo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd clamp_inputs(const Eigen::MatrixXd& u, const OcpConfig& cfg) {
  Eigen::MatrixXd out = u;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j)
      out(i, j) = std::min(cfg.u_max[j], std::max(cfg.u_min[j], out(i, j)));
  return out;
}

double box_penalty(const Eigen::VectorXd& x, const OcpConfig& cfg) {
  double pen = 0.0;
  for (int j = 0; j < x.size(); ++j) {
    double over = std::max(0.0, x[j] - cfg.x_max[j]);
    double under = std::max(0.0, cfg.x_min[j] - x[j]);
    pen += over * over + under * under;
  }
  return cfg.state_penalty * pen;
}

Eigen::VectorXd box_penalty_grad(const Eigen::VectorXd& x, const OcpConfig& cfg) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
  for (int j = 0; j < x.size(); ++j) {
    double over = std::max(0.0, x[j] - cfg.x_max[j]);
    double under = std::max(0.0, cfg.x_min[j] - x[j]);
    grad[j] = 2.0 * cfg.state_penalty * (over - under);
  }
  return grad;
}

// Forward simulation of the input sequence; returns the OCP objective. The
// terminal weight vector is terminal_scale * q, precomputed by the caller.
double ocp_objective(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& x0,
                     const CostParams& params, const LinearModel& model,
                     const OcpConfig& cfg, const Eigen::VectorXd& terminal,
                     Eigen::MatrixXd* states_out = nullptr) {
  const int n = cfg.horizon;
  Eigen::MatrixXd states(n + 1, model.n_x());
  states.row(0) = x0.transpose();
  double objective = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = states.row(i).transpose();
    Eigen::VectorXd u = inputs.row(i).transpose();
    objective += stage_cost(x, u, params, cfg.x_target, cfg.u_target);
    Eigen::VectorXd x_next = model.A * x + model.B * u;
    states.row(i + 1) = x_next.transpose();
    objective += box_penalty(x_next, cfg);
  }
  Eigen::VectorXd dx_n = states.row(n).transpose() - cfg.x_target;
  objective += dx_n.dot(terminal.cwiseProduct(dx_n));
  if (states_out) *states_out = std::move(states);
  return objective;
}

// Adjoint sweep for d objective / d inputs.
Eigen::MatrixXd ocp_gradient(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& states,
                             const CostParams& params, const LinearModel& model,
                             const OcpConfig& cfg, const Eigen::VectorXd& terminal) {
  const int n = cfg.horizon;
  Eigen::MatrixXd grad(n, model.n_u());
  Eigen::VectorXd x_n = states.row(n).transpose();
  Eigen::VectorXd lambda =
      2.0 * terminal.cwiseProduct(x_n - cfg.x_target) + box_penalty_grad(x_n, cfg);
  for (int i = n - 1; i >= 0; --i) {
    Eigen::VectorXd x = states.row(i).transpose();
    Eigen::VectorXd u = inputs.row(i).transpose();
    grad.row(i) =
        (stage_cost_grad_u(x, u, params, cfg.x_target, cfg.u_target) +
         model.B.transpose() * lambda)
            .transpose();
    if (i > 0) {
      lambda = stage_cost_grad_x(x, u, params, cfg.x_target, cfg.u_target) +
               box_penalty_grad(x, cfg) + model.A.transpose() * lambda;
    }
  }
  return grad;
}

}  // namespace

OcpConfig OcpConfig::cartpole_default() {
  OcpConfig cfg;
  cfg.horizon = 10;
  cfg.u_min = Eigen::VectorXd::Constant(1, -10.0);
  cfg.u_max = Eigen::VectorXd::Constant(1, 10.0);
  cfg.x_min = Eigen::VectorXd(4);
  cfg.x_max = Eigen::VectorXd(4);
  cfg.x_min << -2.0, -kInf, -0.6, -kInf;
  cfg.x_max << 2.0, kInf, 0.6, kInf;
  cfg.state_penalty = 1e3;
  cfg.x_target = Eigen::VectorXd::Zero(4);
  cfg.u_target = Eigen::VectorXd::Zero(1);
  return cfg;
}

OcpSolution solve_ocp(const Eigen::VectorXd& x0, const CostParams& params,
                      const LinearModel& model, const OcpConfig& cfg,
                      const Eigen::MatrixXd* warm_start) {
  if (cfg.horizon < 1) throw std::invalid_argument("solve_ocp: horizon must be >= 1");
  if (!x0.allFinite()) throw std::invalid_argument("solve_ocp: non-finite x0");

  const Eigen::VectorXd terminal = cfg.terminal_scale * params.q();

  OcpSolution sol;
  Eigen::MatrixXd u = warm_start
                          ? clamp_inputs(*warm_start, cfg)
                          : Eigen::MatrixXd::Zero(cfg.horizon, model.n_u());
  if (u.rows() != cfg.horizon || u.cols() != model.n_u())
    throw std::invalid_argument("solve_ocp: warm start has wrong shape");

  Eigen::MatrixXd states;
  double objective = ocp_objective(u, x0, params, model, cfg, terminal, &states);
  if (!std::isfinite(objective)) {
    sol.failed = true;
    sol.inputs = u;
    sol.states = states;
    sol.objective = objective;
    return sol;
  }

  double alpha = 1.0;
  Eigen::MatrixXd prev_u, prev_grad;
  int iter = 0;
  for (; iter < cfg.solver.max_iters; ++iter) {
    Eigen::MatrixXd grad = ocp_gradient(u, states, params, model, cfg, terminal);
    if (!grad.allFinite()) {
      sol.failed = true;
      break;
    }

    // Stationarity: the unit-step projected-gradient displacement.
    double residual = (clamp_inputs(u - grad, cfg) - u).lpNorm<Eigen::Infinity>();
    if (residual <= cfg.solver.step_tol) break;

    // Barzilai-Borwein trial step when curvature information exists, safe-
    // guarded by the Armijo backtracking below.
    double trial_alpha = std::min(alpha * 2.0, 1e6);
    if (prev_u.size() > 0) {
      double ss = (u - prev_u).squaredNorm();
      double sg = ((u - prev_u).array() * (grad - prev_grad).array()).sum();
      if (sg > 0.0 && ss > 0.0)
        trial_alpha = std::min(std::max(ss / sg, 1e-8), 1e6);
    }
    prev_u = u;
    prev_grad = grad;

    // Backtrack along the projection arc until sufficient decrease.
    bool accepted = false;
    Eigen::MatrixXd u_new;
    Eigen::MatrixXd states_new;
    double objective_new = 0.0;
    double step_norm = 0.0;
    while (trial_alpha > 1e-20) {
      u_new = clamp_inputs(u - trial_alpha * grad, cfg);
      Eigen::MatrixXd step = u_new - u;
      step_norm = step.lpNorm<Eigen::Infinity>();
      if (step_norm == 0.0) break;
      objective_new =
          ocp_objective(u_new, x0, params, model, cfg, terminal, &states_new);
      if (std::isfinite(objective_new) &&
          objective_new <=
              objective - cfg.solver.armijo_c / trial_alpha * step.squaredNorm()) {
        accepted = true;
        break;
      }
      trial_alpha *= cfg.solver.backtrack;
    }
    if (!accepted) break;

    u = std::move(u_new);
    states = std::move(states_new);
    objective = objective_new;
    alpha = trial_alpha;
    if (step_norm <= 1e-14) {
      ++iter;
      break;
    }
  }

  if (!std::isfinite(objective)) sol.failed = true;
  sol.inputs = std::move(u);
  sol.states = std::move(states);
  sol.objective = objective;
  sol.iterations = iter;
  return sol;
}

EvalWeights EvalWeights::cartpole_default() {
  EvalWeights w;
  w.state_weight = Eigen::VectorXd(4);
  w.state_weight << 1.0, 0.1, 0.1, 0.1;
  w.input_weight = Eigen::VectorXd::Constant(1, 1.0);
  w.tail_weight = Eigen::VectorXd(4);
  w.tail_weight << 100.0, 10.0, 10.0, 10.0;
  w.tail_start = 70;
  w.x_target = Eigen::VectorXd::Zero(4);
  w.u_target = Eigen::VectorXd::Zero(1);
  return w;
}

double closed_loop_cost(const Eigen::MatrixXd& states, const Eigen::MatrixXd& inputs,
                        const EvalWeights& weights) {
  const int m = static_cast<int>(inputs.rows());
  if (states.rows() != m + 1)
    throw std::invalid_argument("closed_loop_cost: need one more state than inputs");

  double total = 0.0;
  for (int k = 0; k <= m; ++k) {
    Eigen::VectorXd dx = states.row(k).transpose() - weights.x_target;
    total += dx.dot(weights.state_weight.cwiseProduct(dx));
    if (k < m) {
      Eigen::VectorXd du = inputs.row(k).transpose() - weights.u_target;
      total += du.dot(weights.input_weight.cwiseProduct(du));
    }
  }
  for (int k = weights.tail_start; k <= m; ++k) {
    Eigen::VectorXd dx = states.row(k).transpose() - weights.x_target;
    total += dx.dot(weights.tail_weight.cwiseProduct(dx));
  }
  return total;
}

std::vector<double> per_step_costs(const Eigen::MatrixXd& states,
                                   const Eigen::MatrixXd& inputs,
                                   const EvalWeights& weights) {
  const int m = static_cast<int>(inputs.rows());
  std::vector<double> costs(m + 1, 0.0);
  for (int k = 0; k <= m; ++k) {
    Eigen::VectorXd dx = states.row(k).transpose() - weights.x_target;
    costs[k] = dx.dot(weights.state_weight.cwiseProduct(dx));
    if (k < m) {
      Eigen::VectorXd du = inputs.row(k).transpose() - weights.u_target;
      costs[k] += du.dot(weights.input_weight.cwiseProduct(du));
    }
    if (k >= weights.tail_start)
      costs[k] += dx.dot(weights.tail_weight.cwiseProduct(dx));
  }
  return costs;
}

RolloutResult rollout(const Eigen::VectorXd& theta, const ParamLayout& layout,
                      const LinearModel& model, const OcpConfig& cfg,
                      const EvalWeights& weights, const Eigen::VectorXd& x_init,
                      int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("rollout: n_steps must be >= 1");
  const CostParams params = unpack(theta, layout);

  RolloutResult result;
  result.states.resize(n_steps + 1, model.n_x());
  result.inputs.resize(n_steps, model.n_u());
  result.states.row(0) = x_init.transpose();

  Eigen::MatrixXd warm = Eigen::MatrixXd::Zero(cfg.horizon, model.n_u());
  Eigen::VectorXd x = x_init;
  for (int k = 0; k < n_steps; ++k) {
    OcpSolution sol = solve_ocp(x, params, model, cfg, &warm);
    result.solver_iters_total += sol.iterations;
    if (sol.failed || !sol.inputs.allFinite()) {
      result.failed = true;
      result.cost = kRolloutFailureCost;
      return result;
    }
    Eigen::VectorXd u = sol.inputs.row(0).transpose();
    result.inputs.row(k) = u.transpose();
    x = model.A * x + model.B * u;
    result.states.row(k + 1) = x.transpose();

    // Shift one step, repeating the last input.
    warm.topRows(cfg.horizon - 1) = sol.inputs.bottomRows(cfg.horizon - 1);
    warm.row(cfg.horizon - 1) = sol.inputs.row(cfg.horizon - 1);
  }

  if (!result.states.allFinite()) {
    result.failed = true;
    result.cost = kRolloutFailureCost;
    return result;
  }
  result.cost = closed_loop_cost(result.states, result.inputs, weights);
  result.per_step = per_step_costs(result.states, result.inputs, weights);
  if (!std::isfinite(result.cost)) {
    result.failed = true;
    result.cost = kRolloutFailureCost;
  } else if (result.cost > kRolloutFailureCost) {
    // Diverged closed loop: the cap keeps observations bounded for the
    // surrogates and marks the rollout as a failed experiment.
    result.failed = true;
    result.cost = kRolloutFailureCost;
  }
  return result;
}

void write_trajectory_csv(const RolloutResult& result, std::ostream& out) {
  out << "k,x_c,x_c_dot,phi,phi_dot,u,stage_cost\n";
  const int m = static_cast<int>(result.inputs.rows());
  for (int k = 0; k <= m; ++k) {
    out << k;
    for (int j = 0; j < result.states.cols(); ++j)
      out << ',' << csv_double(result.states(k, j));
    out << ',';
    if (k < m) out << csv_double(result.inputs(k, 0));
    out << ',';
    if (k < static_cast<int>(result.per_step.size()))
      out << csv_double(result.per_step[k]);
    out << '\n';
  }
}

}  // namespace mpcbo
