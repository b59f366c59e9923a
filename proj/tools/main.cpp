// Experiment runner CLI: run seeded BO sweeps over surrogate types, aggregate
// stored traces, and emit plot files.
//
// Exit codes: 0 success, 2 configuration error, 3 partial cell failure,
// 4 nothing to plot.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpcbo/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override,
            int seeds_override, const std::vector<std::string>& surrogates_override,
            int width_override) {
  mpcbo::ExperimentConfig cfg = mpcbo::load_config(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (seeds_override > 0) cfg.n_seeds = seeds_override;
  if (!surrogates_override.empty()) cfg.surrogates = surrogates_override;
  if (width_override > 0) cfg.hidden_width = width_override;
  cfg.validate();

  mpcbo::ExperimentRecord record = mpcbo::run_experiment(cfg);
  int ok = 0, skipped = 0, failed = 0;
  for (const auto& cell : record.cells) {
    if (cell.status == "ok") ++ok;
    if (cell.status == "skipped") ++skipped;
    if (cell.status == "error") {
      ++failed;
      std::fprintf(stderr, "cell %s failed: %s\n", cell.cell_name().c_str(),
                   cell.message.c_str());
    }
  }
  std::printf("cells: %d ok, %d skipped, %d failed (%.1f s) -> %s\n", ok, skipped,
              failed, record.wall_clock_s, cfg.out_dir.c_str());
  return record.any_error() ? 3 : 0;
}

int cmd_aggregate(const std::string& record_dir) {
  auto table = mpcbo::aggregate(record_dir);
  mpcbo::write_aggregate_csv(table, record_dir);
  std::printf("wrote %s/aggregate.csv (%zu rows)\n", record_dir.c_str(),
              table.size());
  return 0;
}

int cmd_plot(const std::string& record_dir) {
  auto files = mpcbo::emit_plots(record_dir);
  if (files.empty()) {
    std::fprintf(stderr, "nothing to plot in %s\n", record_dir.c_str());
    return 4;
  }
  for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop MPC cost learning via Bayesian optimization"};
  app.require_subcommand(1);

  std::string config_path, out_dir, record_dir;
  int seeds = 0, width = 0;
  std::vector<std::string> surrogates;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--seeds", seeds, "number of seeds override");
  run->add_option("--surrogates", surrogates, "surrogate subset override")
      ->delimiter(',');
  run->add_option("--width", width, "cost-network hidden width override");

  CLI::App* agg = app.add_subcommand("aggregate", "summarize a stored record");
  agg->add_option("--record", record_dir, "record directory")->required();

  CLI::App* plot = app.add_subcommand("plot", "emit plot files for a record");
  plot->add_option("--record", record_dir, "record directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, seeds, surrogates, width);
    if (agg->parsed()) return cmd_aggregate(record_dir);
    if (plot->parsed()) return cmd_plot(record_dir);
  } catch (const mpcbo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
