#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "mpcbo/cartpole.hpp"
#include "mpcbo/neural_cost.hpp"

namespace mpcbo {

struct SolverConfig {
  int max_iters = 300;
  double step_tol = 1e-8;     // infinity norm of the accepted input step
  double armijo_c = 1e-4;
  double backtrack = 0.5;
};

/// Finite-horizon OCP setup: horizon, boxes, state-penalty weight, solver
/// budget and the regulation target.
///
/// The terminal cost is terminal_scale * dx' diag(q) dx with the learned
/// state weights q; the multiplier compensates for the short horizon (a bare
/// diag(q) terminal leaves the cart drifting) without flattening the tuning
/// landscape the way a full cost-to-go matrix would.
struct OcpConfig {
  int horizon = 10;  // N
  Eigen::VectorXd u_min, u_max;
  Eigen::VectorXd x_min, x_max;  // +-inf entries disable the bound
  double state_penalty = 1e3;    // mu_pen, quadratic penalty on box violations
  double terminal_scale = 15.0;
  SolverConfig solver;
  Eigen::VectorXd x_target, u_target;

  static OcpConfig cartpole_default();
};

struct OcpSolution {
  Eigen::MatrixXd inputs;  // N x n_u
  Eigen::MatrixXd states;  // (N+1) x n_x predicted under the model
  double objective = 0.0;
  int iterations = 0;
  bool failed = false;
};

/// Single-shooting projected-gradient solve of the N-step problem: states are
/// eliminated through the affine dynamics, inputs are projected onto the box
/// after every step, state-box violations enter as a quadratic penalty, and
/// steps are accepted under an Armijo condition along the projection arc.
/// The objective never increases across accepted iterations.
OcpSolution solve_ocp(const Eigen::VectorXd& x0, const CostParams& params,
                      const LinearModel& model, const OcpConfig& cfg,
                      const Eigen::MatrixXd* warm_start = nullptr);

/// Fixed evaluation weights for the closed-loop cost; distinct from the
/// learned MPC weights.
struct EvalWeights {
  Eigen::VectorXd state_weight;  // diagonal, every step
  Eigen::VectorXd input_weight;  // diagonal, every step with an input
  Eigen::VectorXd tail_weight;   // diagonal, steps tail_start..end
  int tail_start = 70;
  Eigen::VectorXd x_target, u_target;

  static EvalWeights cartpole_default();
};

/// G over a stored trajectory: state and input terms at every step plus the
/// extra tail penalty from tail_start on. Pure function of the trajectory.
double closed_loop_cost(const Eigen::MatrixXd& states, const Eigen::MatrixXd& inputs,
                        const EvalWeights& weights);

/// Per-step contributions (state + input + tail share of step k).
std::vector<double> per_step_costs(const Eigen::MatrixXd& states,
                                   const Eigen::MatrixXd& inputs,
                                   const EvalWeights& weights);

struct RolloutResult {
  Eigen::MatrixXd states;  // (M+1) x n_x
  Eigen::MatrixXd inputs;  // M x n_u
  double cost = 0.0;       // G, or the failure cap
  std::vector<double> per_step;
  bool failed = false;
  int solver_iters_total = 0;
};

/// Cap for rollouts whose OCP solve broke down or whose closed loop diverged;
/// sits above every cost a healthy rollout can produce.
inline constexpr double kRolloutFailureCost = 1e6;

/// Receding-horizon rollout: solve, apply the first input, shift the solution
/// one step as the next warm start. Deterministic for fixed inputs.
RolloutResult rollout(const Eigen::VectorXd& theta, const ParamLayout& layout,
                      const LinearModel& model, const OcpConfig& cfg,
                      const EvalWeights& weights, const Eigen::VectorXd& x_init,
                      int n_steps);

/// CSV dump `k,x_c,x_c_dot,phi,phi_dot,u,stage_cost`; the final row carries
/// the terminal state with an empty input field.
void write_trajectory_csv(const RolloutResult& result, std::ostream& out);

}  // namespace mpcbo
