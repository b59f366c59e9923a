#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpcbo/bnn.hpp"
#include "mpcbo/bo.hpp"
#include "mpcbo/cartpole.hpp"
#include "mpcbo/gp.hpp"
#include "mpcbo/mpc.hpp"
#include "mpcbo/neural_cost.hpp"

namespace mpcbo {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Raised for malformed or inconsistent configuration; the CLI maps it to
/// exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything one experiment needs: which surrogates, cost-network width,
/// seed count, loop/solver/plant settings and the search-box bounds for the
/// raw parameters.
struct ExperimentConfig {
  std::uint64_t master_seed = 2024;
  std::vector<std::string> surrogates{"random", "matern_gp", "bnn", "ibnn"};
  int hidden_width = 5;  // cost network: two hidden layers of this width
  int n_seeds = 21;

  BoConfig bo;                 // dim/seeds filled per cell
  CartpoleParams plant;
  OcpConfig ocp = OcpConfig::cartpole_default();
  EvalWeights eval_weights = EvalWeights::cartpole_default();
  int eval_horizon = 80;       // M
  Eigen::VectorXd x_init;

  double qr_bound = 3.0;       // raw q/r entries searched in [-b, b]
  double weight_bound = 1.0;   // network weights/biases searched in [-b, b]

  GpFitOptions gp_options;
  int ibnn_depth = 3;
  BnnConfig bnn;
  int bnn_max_dim = 600;       // finite-width BNN disabled above this n_theta

  std::string out_dir = "experiment_out";
  int workers = 0;             // 0: env MPCBO_WORKERS, then hardware

  ParamLayout layout() const;
  void validate() const;
};

/// Parse and schema-check a JSON config file; unknown keys are errors.
ExperimentConfig load_config(const std::string& path);

/// The effective configuration with all defaults filled in, as written to
/// config.json inside the output directory.
std::string config_to_json(const ExperimentConfig& config);

struct CellRecord {
  std::string surrogate;
  int seed_index = 0;
  std::string status;   // "ok", "skipped", "error"
  std::string message;  // skip reason or error text
  BoTrace trace;
  RolloutResult best_rollout;
  int best_iteration = -1;
  double wall_clock_s = 0.0;
  long solver_iters_total = 0;

  std::string cell_name() const;
};

struct ExperimentRecord {
  ExperimentConfig config;
  std::vector<CellRecord> cells;
  double wall_clock_s = 0.0;

  bool any_error() const;
  bool any_ok() const;
};

/// Run every (surrogate x seed) cell in a worker pool, persist traces,
/// trajectories and records under config.out_dir. Cell crashes are recorded
/// and the remaining cells proceed.
ExperimentRecord run_experiment(const ExperimentConfig& config);

struct AggregateRow {
  int iteration = 0;
  std::string surrogate;
  double mean_best = 0.0;
  double std_best = 0.0;  // sample std, n-1 denominator
  int n_seeds = 0;
};

/// Per-iteration mean and std of the best-so-far cost per surrogate, read
/// back from the stored record directory.
std::vector<AggregateRow> aggregate(const std::string& record_dir);

/// Persist the summary table as aggregate.csv in the record directory.
void write_aggregate_csv(const std::vector<AggregateRow>& table,
                         const std::string& record_dir);

/// Convergence plot (mean line, +-1 std band per surrogate) and a trajectory
/// plot of one designated run; both are views of the stored CSV data. Returns
/// the paths written, empty when there is nothing to plot.
std::vector<std::string> emit_plots(const std::string& record_dir);

}  // namespace mpcbo
