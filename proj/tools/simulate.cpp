// simulate: batch Monte-Carlo driver for the AP-selection / power-allocation
// experiments.
//
//   simulate --config exp.json [--out dir] [--jobs n] [--list-cells]
//
// Exit codes: 0 all runs succeeded, 1 bad config or unwritable output,
// 2 some runs failed (listed under "failures" in summary.json).

#include <fmt/format.h>

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "crn/experiment.hpp"
#include "json.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Joint AP selection and power allocation experiments"};
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  bool list_cells = false;
  app.add_option("--config", config_path, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--list-cells", list_cells, "Print the (N, W, K) cells and exit");
  CLI11_PARSE(app, argc, argv);

  crn::ExperimentConfig cfg;
  try {
    std::ifstream in(config_path);
    cfg = crn::ExperimentConfig::from_json(nlohmann::json::parse(in));
  } catch (const std::exception& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return 1;
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;

  if (list_cells) {
    for (const auto& cell : crn::experiment_cells(cfg))
      fmt::print("{}\tN={}\tW={}\tK={}\n", cell.name(), cell.n_cus, cell.n_aps,
                 cell.n_channels);
    return 0;
  }

  try {
    const auto report = crn::run_experiment(cfg, jobs);
    for (const auto& w : report.summary.at("metadata").at("warnings"))
      fmt::print(stderr, "simulate: warning: {}\n", w.get<std::string>());
    fmt::print(stderr, "simulate: {} runs, {} failed algorithm runs, output in {}\n",
               report.runs, report.failures, cfg.output_dir.string());
    std::cout << report.summary_csv;
    return report.failures ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return 1;
  }
}
