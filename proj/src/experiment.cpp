#include "mpcbo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>

#include <json.hpp>

#include "mpcbo/csv.hpp"
#include "mpcbo/surrogates.hpp"
#include "mpcbo/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mpcbo {

namespace {

const std::vector<std::string> kKnownSurrogates = {"random", "matern_gp", "bnn",
                                                   "ibnn"};

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<std::string_view> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (auto key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("config: unknown key '" + it.key() + "' in " + ctx);
  }
}

std::string surrogate_color(const std::string& name) {
  if (name == "random") return "#d62728";
  if (name == "matern_gp") return "#e0a800";
  if (name == "bnn") return "#9e9e9e";
  if (name == "ibnn") return "#2ca02c";
  return "#1f77b4";
}

}  // namespace

ParamLayout ExperimentConfig::layout() const {
  ParamLayout layout;
  layout.n_x = 4;
  layout.n_u = 1;
  layout.hidden = {hidden_width, hidden_width};
  return layout;
}

void ExperimentConfig::validate() const {
  if (surrogates.empty()) throw ConfigError("config: surrogates must be non-empty");
  for (const auto& s : surrogates) {
    bool known = false;
    for (const auto& k : kKnownSurrogates)
      if (s == k) known = true;
    if (!known) throw ConfigError("config: unknown surrogate '" + s + "'");
  }
  if (hidden_width < 1) throw ConfigError("config: hidden_width must be >= 1");
  if (n_seeds < 1) throw ConfigError("config: n_seeds must be >= 1");
  if (eval_horizon < 1) throw ConfigError("config: eval_horizon must be >= 1");
  if (x_init.size() != 4) throw ConfigError("config: x_init must have 4 entries");
  if (!(qr_bound > 0.0) || !(weight_bound > 0.0))
    throw ConfigError("config: search bounds must be > 0");
  try {
    BoConfig probe = bo;
    probe.dim = layout().n_params();
    probe.validate();
    bnn.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.x_init = Eigen::VectorXd(4);
  cfg.x_init << 0.5, 0.0, 0.2, 0.0;

  try {
    check_keys(root, "top level",
               {"master_seed", "surrogates", "hidden_width", "n_seeds", "bo",
                "plant", "ocp", "eval", "x_init", "bounds", "gp", "bnn", "ibnn",
                "out_dir", "workers"});
    cfg.master_seed = root.value("master_seed", cfg.master_seed);
    if (root.contains("surrogates"))
      cfg.surrogates = root["surrogates"].get<std::vector<std::string>>();
    cfg.hidden_width = root.value("hidden_width", cfg.hidden_width);
    cfg.n_seeds = root.value("n_seeds", cfg.n_seeds);
    cfg.out_dir = root.value("out_dir", cfg.out_dir);
    cfg.workers = root.value("workers", cfg.workers);

    if (root.contains("bo")) {
      const json& bo = root["bo"];
      check_keys(bo, "bo",
                 {"n_init", "n_iter", "n_candidates", "local_perturb_count",
                  "perturb_scale"});
      cfg.bo.n_init = bo.value("n_init", cfg.bo.n_init);
      cfg.bo.n_iter = bo.value("n_iter", cfg.bo.n_iter);
      cfg.bo.n_candidates = bo.value("n_candidates", cfg.bo.n_candidates);
      cfg.bo.local_perturb_count =
          bo.value("local_perturb_count", cfg.bo.local_perturb_count);
      cfg.bo.perturb_scale = bo.value("perturb_scale", cfg.bo.perturb_scale);
    }
    if (root.contains("plant")) {
      const json& plant = root["plant"];
      check_keys(plant, "plant",
                 {"cart_mass", "pole_mass", "pole_length", "gravity", "dt"});
      cfg.plant.cart_mass = plant.value("cart_mass", cfg.plant.cart_mass);
      cfg.plant.pole_mass = plant.value("pole_mass", cfg.plant.pole_mass);
      cfg.plant.pole_length = plant.value("pole_length", cfg.plant.pole_length);
      cfg.plant.gravity = plant.value("gravity", cfg.plant.gravity);
      cfg.plant.dt = plant.value("dt", cfg.plant.dt);
    }
    if (root.contains("ocp")) {
      const json& ocp = root["ocp"];
      check_keys(ocp, "ocp",
                 {"horizon", "u_limit", "x_c_limit", "phi_limit", "state_penalty",
                  "terminal_scale", "max_iters", "step_tol"});
      cfg.ocp.horizon = ocp.value("horizon", cfg.ocp.horizon);
      double u_limit = ocp.value("u_limit", cfg.ocp.u_max[0]);
      cfg.ocp.u_min = Eigen::VectorXd::Constant(1, -u_limit);
      cfg.ocp.u_max = Eigen::VectorXd::Constant(1, u_limit);
      double x_c_limit = ocp.value("x_c_limit", cfg.ocp.x_max[0]);
      double phi_limit = ocp.value("phi_limit", cfg.ocp.x_max[2]);
      cfg.ocp.x_min[0] = -x_c_limit;
      cfg.ocp.x_max[0] = x_c_limit;
      cfg.ocp.x_min[2] = -phi_limit;
      cfg.ocp.x_max[2] = phi_limit;
      cfg.ocp.state_penalty = ocp.value("state_penalty", cfg.ocp.state_penalty);
      cfg.ocp.terminal_scale = ocp.value("terminal_scale", cfg.ocp.terminal_scale);
      cfg.ocp.solver.max_iters = ocp.value("max_iters", cfg.ocp.solver.max_iters);
      cfg.ocp.solver.step_tol = ocp.value("step_tol", cfg.ocp.solver.step_tol);
    }
    if (root.contains("eval")) {
      const json& eval = root["eval"];
      check_keys(eval, "eval", {"horizon", "tail_start"});
      cfg.eval_horizon = eval.value("horizon", cfg.eval_horizon);
      cfg.eval_weights.tail_start =
          eval.value("tail_start", cfg.eval_weights.tail_start);
    }
    if (root.contains("x_init")) {
      auto v = root["x_init"].get<std::vector<double>>();
      if (v.size() != 4) throw ConfigError("config: x_init must have 4 entries");
      cfg.x_init = Eigen::Map<Eigen::VectorXd>(v.data(), 4);
    }
    if (root.contains("bounds")) {
      const json& bounds = root["bounds"];
      check_keys(bounds, "bounds", {"qr_raw", "weight"});
      cfg.qr_bound = bounds.value("qr_raw", cfg.qr_bound);
      cfg.weight_bound = bounds.value("weight", cfg.weight_bound);
    }
    if (root.contains("gp")) {
      const json& gp = root["gp"];
      check_keys(gp, "gp", {"n_starts", "refine_iters", "golden_steps"});
      cfg.gp_options.n_starts = gp.value("n_starts", cfg.gp_options.n_starts);
      cfg.gp_options.refine_iters =
          gp.value("refine_iters", cfg.gp_options.refine_iters);
      cfg.gp_options.golden_steps =
          gp.value("golden_steps", cfg.gp_options.golden_steps);
    }
    if (root.contains("bnn")) {
      const json& bnn = root["bnn"];
      check_keys(bnn, "bnn",
                 {"hidden_sizes", "prior_variance", "likelihood_noise", "n_samples",
                  "step_size", "n_leapfrog", "n_burnin", "target_accept", "thinning",
                  "max_dim"});
      if (bnn.contains("hidden_sizes"))
        cfg.bnn.hidden_sizes = bnn["hidden_sizes"].get<std::vector<int>>();
      cfg.bnn.prior_variance = bnn.value("prior_variance", cfg.bnn.prior_variance);
      cfg.bnn.likelihood_noise =
          bnn.value("likelihood_noise", cfg.bnn.likelihood_noise);
      cfg.bnn.n_samples = bnn.value("n_samples", cfg.bnn.n_samples);
      cfg.bnn.hmc.step_size = bnn.value("step_size", cfg.bnn.hmc.step_size);
      cfg.bnn.hmc.n_leapfrog = bnn.value("n_leapfrog", cfg.bnn.hmc.n_leapfrog);
      cfg.bnn.hmc.n_burnin = bnn.value("n_burnin", cfg.bnn.hmc.n_burnin);
      cfg.bnn.hmc.target_accept =
          bnn.value("target_accept", cfg.bnn.hmc.target_accept);
      cfg.bnn.hmc.thinning = bnn.value("thinning", cfg.bnn.hmc.thinning);
      cfg.bnn_max_dim = bnn.value("max_dim", cfg.bnn_max_dim);
    }
    if (root.contains("ibnn")) {
      const json& ibnn = root["ibnn"];
      check_keys(ibnn, "ibnn", {"depth"});
      cfg.ibnn_depth = ibnn.value("depth", cfg.ibnn_depth);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  cfg.validate();
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json root;
  root["master_seed"] = cfg.master_seed;
  root["surrogates"] = cfg.surrogates;
  root["hidden_width"] = cfg.hidden_width;
  root["n_seeds"] = cfg.n_seeds;
  root["out_dir"] = cfg.out_dir;
  root["workers"] = cfg.workers;
  root["bo"] = {{"n_init", cfg.bo.n_init},
                {"n_iter", cfg.bo.n_iter},
                {"n_candidates", cfg.bo.n_candidates},
                {"local_perturb_count", cfg.bo.local_perturb_count},
                {"perturb_scale", cfg.bo.perturb_scale}};
  root["plant"] = {{"cart_mass", cfg.plant.cart_mass},
                   {"pole_mass", cfg.plant.pole_mass},
                   {"pole_length", cfg.plant.pole_length},
                   {"gravity", cfg.plant.gravity},
                   {"dt", cfg.plant.dt}};
  root["ocp"] = {{"horizon", cfg.ocp.horizon},
                 {"u_limit", cfg.ocp.u_max[0]},
                 {"x_c_limit", cfg.ocp.x_max[0]},
                 {"phi_limit", cfg.ocp.x_max[2]},
                 {"state_penalty", cfg.ocp.state_penalty},
                 {"terminal_scale", cfg.ocp.terminal_scale},
                 {"max_iters", cfg.ocp.solver.max_iters},
                 {"step_tol", cfg.ocp.solver.step_tol}};
  root["eval"] = {{"horizon", cfg.eval_horizon},
                  {"tail_start", cfg.eval_weights.tail_start}};
  root["x_init"] = std::vector<double>(cfg.x_init.data(),
                                       cfg.x_init.data() + cfg.x_init.size());
  root["bounds"] = {{"qr_raw", cfg.qr_bound}, {"weight", cfg.weight_bound}};
  root["gp"] = {{"n_starts", cfg.gp_options.n_starts},
                {"refine_iters", cfg.gp_options.refine_iters},
                {"golden_steps", cfg.gp_options.golden_steps}};
  root["bnn"] = {{"hidden_sizes", cfg.bnn.hidden_sizes},
                 {"prior_variance", cfg.bnn.prior_variance},
                 {"likelihood_noise", cfg.bnn.likelihood_noise},
                 {"n_samples", cfg.bnn.n_samples},
                 {"step_size", cfg.bnn.hmc.step_size},
                 {"n_leapfrog", cfg.bnn.hmc.n_leapfrog},
                 {"n_burnin", cfg.bnn.hmc.n_burnin},
                 {"target_accept", cfg.bnn.hmc.target_accept},
                 {"thinning", cfg.bnn.hmc.thinning},
                 {"max_dim", cfg.bnn_max_dim}};
  root["ibnn"] = {{"depth", cfg.ibnn_depth}};
  root["library_version"] = kLibraryVersion;
  return root.dump(2) + "\n";
}

std::string CellRecord::cell_name() const {
  return surrogate + "_seed" + std::to_string(seed_index);
}

bool ExperimentRecord::any_error() const {
  for (const auto& cell : cells)
    if (cell.status == "error") return true;
  return false;
}

bool ExperimentRecord::any_ok() const {
  for (const auto& cell : cells)
    if (cell.status == "ok") return true;
  return false;
}

namespace {

Eigen::VectorXd normalized_to_raw(const Eigen::VectorXd& t,
                                  const ExperimentConfig& cfg,
                                  const ParamLayout& layout) {
  Eigen::VectorXd raw(t.size());
  const int n_qr = layout.n_x + layout.n_u;
  for (int i = 0; i < t.size(); ++i) {
    double bound = i < n_qr ? cfg.qr_bound : cfg.weight_bound;
    raw[i] = -bound + 2.0 * bound * t[i];
  }
  return raw;
}

struct CellOutput {
  CellRecord record;
  std::vector<RolloutResult> rollouts;  // one per evaluation, in trace order
};

CellOutput run_cell(const ExperimentConfig& cfg, const LinearModel& model,
                    const std::string& surrogate_name, int seed_index) {
  CellOutput out;
  out.record.surrogate = surrogate_name;
  out.record.seed_index = seed_index;

  const ParamLayout layout = cfg.layout();
  const int n_theta = layout.n_params();
  if (surrogate_name == "bnn" && n_theta > cfg.bnn_max_dim) {
    out.record.status = "skipped";
    out.record.message = "n_theta " + std::to_string(n_theta) +
                         " exceeds finite-width BNN limit " +
                         std::to_string(cfg.bnn_max_dim);
    return out;
  }

  BoConfig bo = cfg.bo;
  bo.dim = n_theta;
  bo.init_seed = Rng::derive(cfg.master_seed, "init", seed_index).next_u64();
  bo.seed =
      Rng::derive(cfg.master_seed, "cell:" + surrogate_name, seed_index).next_u64();

  Objective objective = [&](const Eigen::VectorXd& theta_norm) {
    RolloutResult rr =
        rollout(normalized_to_raw(theta_norm, cfg, layout), layout, model, cfg.ocp,
                cfg.eval_weights, cfg.x_init, cfg.eval_horizon);
    double cost = rr.cost;
    out.record.solver_iters_total += rr.solver_iters_total;
    out.rollouts.push_back(std::move(rr));
    return cost;
  };

  auto start = std::chrono::steady_clock::now();
  try {
    if (surrogate_name == "random") {
      out.record.trace = random_search(objective, bo);
    } else {
      std::unique_ptr<SurrogateInterface> surrogate;
      if (surrogate_name == "matern_gp") {
        surrogate = std::make_unique<GpSurrogate>(KernelSpec::matern52(1.0, 1.0),
                                                  "matern_gp", cfg.gp_options,
                                                  /*log_observations=*/true);
      } else if (surrogate_name == "ibnn") {
        surrogate = std::make_unique<GpSurrogate>(
            KernelSpec::ibnn(cfg.ibnn_depth, 1.0, 0.1), "ibnn", cfg.gp_options,
            /*log_observations=*/true);
      } else {
        surrogate = std::make_unique<BnnSurrogate>(
            cfg.bnn, Rng::derive(cfg.master_seed, "bnn-cell", seed_index).next_u64(),
            /*refit_burnin=*/-1, /*log_observations=*/true);
      }
      out.record.trace = run(objective, *surrogate, bo);
    }
    out.record.status = "ok";
  } catch (const std::exception& e) {
    out.record.status = "error";
    out.record.message = e.what();
  }
  out.record.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (out.record.status == "ok") {
    int best_iter = 0;
    for (std::size_t i = 1; i < out.record.trace.steps.size(); ++i)
      if (out.record.trace.steps[i].observed <
          out.record.trace.steps[best_iter].observed)
        best_iter = static_cast<int>(i);
    out.record.best_iteration = best_iter;
    out.record.best_rollout = out.rollouts[best_iter];
  }
  return out;
}

int worker_count(const ExperimentConfig& cfg, std::size_t n_cells) {
  int workers = 0;
  if (const char* env = std::getenv("MPCBO_WORKERS")) workers = std::atoi(env);
  if (workers <= 0) workers = cfg.workers;
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 0) workers = 1;
  return static_cast<int>(std::min<std::size_t>(workers, n_cells));
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

ExperimentRecord run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto start = std::chrono::steady_clock::now();

  const LinearModel model = cartpole_linear_model(cfg.plant);

  struct Task {
    std::string surrogate;
    int seed_index;
  };
  std::vector<Task> tasks;
  for (const auto& surrogate : cfg.surrogates)
    for (int seed = 0; seed < cfg.n_seeds; ++seed) tasks.push_back({surrogate, seed});

  std::vector<CellOutput> outputs(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      outputs[i] = run_cell(cfg, model, tasks[i].surrogate, tasks[i].seed_index);
    }
  };
  const int n_workers = worker_count(cfg, tasks.size());
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // Persistence, serialized in deterministic task order.
  fs::create_directories(fs::path(cfg.out_dir) / "traces");
  fs::create_directories(fs::path(cfg.out_dir) / "trajectories");
  write_file(fs::path(cfg.out_dir) / "config.json", config_to_json(cfg));

  // The designated run for trajectory plots: first ibnn cell if present,
  // otherwise the first ok cell.
  int plot_cell = -1;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& rec = outputs[i].record;
    if (rec.status != "ok") continue;
    if (plot_cell < 0) plot_cell = static_cast<int>(i);
    if (rec.surrogate == "ibnn") {
      plot_cell = static_cast<int>(i);
      break;
    }
  }

  std::ofstream records(fs::path(cfg.out_dir) / "records.jsonl",
                        std::ios::binary);
  ExperimentRecord record;
  record.config = cfg;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    CellOutput& out = outputs[i];
    const std::string name = out.record.cell_name();
    json line = {{"cell", name},
                 {"surrogate", out.record.surrogate},
                 {"seed_index", out.record.seed_index},
                 {"status", out.record.status},
                 {"library_version", kLibraryVersion}};
    if (!out.record.message.empty()) line["message"] = out.record.message;
    if (out.record.status == "ok") {
      const std::string trace_rel = "traces/" + name + ".csv";
      const std::string traj_rel = "trajectories/" + name + "_best.csv";
      {
        std::ofstream trace_out(fs::path(cfg.out_dir) / trace_rel, std::ios::binary);
        out.record.trace.write_csv(trace_out);
      }
      {
        std::ofstream traj_out(fs::path(cfg.out_dir) / traj_rel, std::ios::binary);
        write_trajectory_csv(out.record.best_rollout, traj_out);
      }
      line["trace_csv"] = trace_rel;
      line["best_trajectory_csv"] = traj_rel;
      line["n_evals"] = out.record.trace.steps.size();
      line["best_cost"] = out.record.trace.best_cost();
      line["best_iteration"] = out.record.best_iteration;
      line["solver_iters_total"] = out.record.solver_iters_total;
      if (static_cast<int>(i) == plot_cell) {
        fs::path run_dir = fs::path(cfg.out_dir) / "trajectories" / "plot_run";
        fs::create_directories(run_dir);
        for (std::size_t k = 0; k < out.rollouts.size(); ++k) {
          char fname[32];
          std::snprintf(fname, sizeof(fname), "iter_%04d.csv",
                        static_cast<int>(k));
          std::ofstream traj(run_dir / fname, std::ios::binary);
          write_trajectory_csv(out.rollouts[k], traj);
        }
        json meta = {{"cell", name},
                     {"n_evals", out.rollouts.size()},
                     {"best_iteration", out.record.best_iteration}};
        write_file(run_dir / "meta.json", meta.dump(2) + "\n");
      }
    }
    line["wall_clock_s"] = out.record.wall_clock_s;
    records << line.dump() << '\n';
    record.cells.push_back(std::move(out.record));
  }
  records.close();

  record.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

namespace {

struct StoredRecords {
  json config;
  std::vector<json> cells;
};

StoredRecords read_records(const std::string& record_dir) {
  StoredRecords stored;
  std::ifstream cfg_in(fs::path(record_dir) / "config.json");
  if (!cfg_in) throw std::runtime_error("no config.json in " + record_dir);
  stored.config = json::parse(cfg_in);
  std::ifstream rec_in(fs::path(record_dir) / "records.jsonl");
  if (!rec_in) throw std::runtime_error("no records.jsonl in " + record_dir);
  std::string line;
  while (std::getline(rec_in, line)) {
    if (line.empty()) continue;
    stored.cells.push_back(json::parse(line));
  }
  return stored;
}

std::vector<double> best_column(const std::string& record_dir,
                                const json& cell) {
  auto rows = read_csv((fs::path(record_dir) / cell["trace_csv"].get<std::string>())
                           .string());
  std::vector<double> best;
  for (std::size_t i = 1; i < rows.size(); ++i)
    best.push_back(std::stod(rows[i][3]));
  return best;
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::string& record_dir) {
  StoredRecords stored = read_records(record_dir);

  std::vector<std::string> order;
  for (const auto& cell : stored.cells) {
    std::string surrogate = cell["surrogate"];
    if (cell["status"] != "ok") continue;
    bool seen = false;
    for (const auto& s : order)
      if (s == surrogate) seen = true;
    if (!seen) order.push_back(surrogate);
  }

  std::vector<AggregateRow> table;
  for (const auto& surrogate : order) {
    std::vector<std::vector<double>> curves;
    for (const auto& cell : stored.cells)
      if (cell["status"] == "ok" && cell["surrogate"] == surrogate)
        curves.push_back(best_column(record_dir, cell));
    if (curves.size() < 2) continue;  // sample std needs >= 2 seeds
    const std::size_t len = curves.front().size();
    for (const auto& c : curves)
      if (c.size() != len)
        throw std::runtime_error("aggregate: traces of '" + surrogate +
                                 "' differ in length");
    for (std::size_t it = 0; it < len; ++it) {
      double mean = 0.0;
      for (const auto& c : curves) mean += c[it];
      mean /= static_cast<double>(curves.size());
      double ss = 0.0;
      for (const auto& c : curves) ss += (c[it] - mean) * (c[it] - mean);
      double std_dev = std::sqrt(ss / static_cast<double>(curves.size() - 1));
      table.push_back({static_cast<int>(it), surrogate, mean, std_dev,
                       static_cast<int>(curves.size())});
    }
  }
  if (table.empty())
    throw std::runtime_error("aggregate: no surrogate has >= 2 ok traces");
  return table;
}

void write_aggregate_csv(const std::vector<AggregateRow>& table,
                         const std::string& record_dir) {
  std::ofstream out(fs::path(record_dir) / "aggregate.csv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write aggregate.csv");
  out << "iter,surrogate,mean_best,std_best,n_seeds\n";
  for (const auto& row : table)
    out << row.iteration << ',' << row.surrogate << ',' << csv_double(row.mean_best)
        << ',' << csv_double(row.std_best) << ',' << row.n_seeds << '\n';
}

std::vector<std::string> emit_plots(const std::string& record_dir) {
  StoredRecords stored = read_records(record_dir);
  bool any_ok = false;
  for (const auto& cell : stored.cells)
    if (cell["status"] == "ok") any_ok = true;
  if (!any_ok) return {};

  std::vector<std::string> written;
  fs::path plot_dir = fs::path(record_dir) / "plots";
  fs::create_directories(plot_dir);

  // Convergence plot straight from the aggregate table.
  std::vector<AggregateRow> table = aggregate(record_dir);
  write_aggregate_csv(table, record_dir);
  written.push_back((fs::path(record_dir) / "aggregate.csv").string());

  SvgPlot conv;
  const int width = stored.config["hidden_width"];
  conv.title = "Best observed closed-loop cost, hidden width " +
               std::to_string(width);
  conv.x_label = "evaluation";
  conv.y_label = "best cost";
  conv.log_y = true;
  std::vector<std::string> order;
  for (const auto& row : table) {
    bool seen = false;
    for (const auto& s : order)
      if (s == row.surrogate) seen = true;
    if (!seen) order.push_back(row.surrogate);
  }
  for (const auto& surrogate : order) {
    SvgSeries line;
    SvgBand band;
    line.color = surrogate_color(surrogate);
    line.label = surrogate;
    line.width = 2.0;
    band.color = line.color;
    for (const auto& row : table) {
      if (row.surrogate != surrogate) continue;
      line.x.push_back(row.iteration);
      line.y.push_back(row.mean_best);
      band.x.push_back(row.iteration);
      band.y_lo.push_back(row.mean_best - row.std_best);
      band.y_hi.push_back(row.mean_best + row.std_best);
    }
    conv.bands.push_back(std::move(band));
    conv.series.push_back(std::move(line));
  }
  char conv_name[64];
  std::snprintf(conv_name, sizeof(conv_name), "convergence_h%d.svg", width);
  conv.save((plot_dir / conv_name).string());
  written.push_back((plot_dir / conv_name).string());

  // Trajectory plot of the designated run, when it was stored.
  fs::path run_dir = fs::path(record_dir) / "trajectories" / "plot_run";
  if (fs::exists(run_dir / "meta.json")) {
    std::ifstream meta_in(run_dir / "meta.json");
    json meta = json::parse(meta_in);
    const int n_evals = meta["n_evals"];
    const int best_iter = meta["best_iteration"];
    const int n_init = stored.config["bo"]["n_init"];

    struct Panel {
      const char* title;
      const char* file;
      int column;  // trajectory CSV column
    };
    const Panel panels[] = {{"Cart position", "trajectory_position.svg", 1},
                            {"Pole angle", "trajectory_angle.svg", 3},
                            {"Control input", "trajectory_input.svg", 5}};
    for (const Panel& panel : panels) {
      SvgPlot plot;
      plot.title = std::string(panel.title) + " (" +
                   meta["cell"].get<std::string>() + ")";
      plot.x_label = "step k";
      plot.y_label = panel.title;
      auto add_series = [&](int it, const std::string& color, double width) {
        char fname[32];
        std::snprintf(fname, sizeof(fname), "iter_%04d.csv", it);
        if (!fs::exists(run_dir / fname)) return;
        auto rows = read_csv((run_dir / fname).string());
        SvgSeries series;
        series.color = color;
        series.width = width;
        for (std::size_t r = 1; r < rows.size(); ++r) {
          if (rows[r][panel.column].empty()) continue;
          series.x.push_back(std::stod(rows[r][0]));
          series.y.push_back(std::stod(rows[r][panel.column]));
        }
        plot.series.push_back(std::move(series));
      };
      const int stride = std::max(1, (n_evals - n_init) / 8);
      for (int it = 0; it < n_evals; ++it) {
        if (it == best_iter) continue;
        const bool is_init = it < n_init;
        if (!is_init && (it - n_init) % stride != 0) continue;
        add_series(it, is_init ? "#2ca02c" : "#b0b0b0", 1.0);
      }
      add_series(best_iter, "#d62728", 2.5);  // drawn last, on top
      plot.save((plot_dir / panel.file).string());
      written.push_back((plot_dir / panel.file).string());
    }
  }
  return written;
}

}  // namespace mpcbo
