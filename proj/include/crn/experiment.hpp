#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crn/equilibria.hpp"
#include "crn/jaspa.hpp"
#include "json.hpp"

namespace crn {

enum class AlgorithmKind {
  kJaspa,
  kSeJaspa,
  kSiJaspa,
  kClosestAp,
  kExhaustive,
  kKConnectivity,
};

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::kJaspa;
  double cost_bits = 0.0;
  std::string label;  // as written in the config, e.g. "si_jaspa_cost(3)"

  // Accepts jaspa, se_jaspa, si_jaspa, jaspa_cost(c), si_jaspa_cost(c),
  // closest_ap, exhaustive, k_connectivity. Throws std::invalid_argument.
  static AlgorithmSpec parse(const std::string& text);

  // Label made safe for file names: "si_jaspa_cost(3)" -> "si_jaspa_cost3".
  std::string file_stem() const;
  bool iterative() const;
};

struct ExperimentConfig {
  std::vector<std::size_t> n_cus{4, 6, 8};
  std::vector<std::size_t> n_aps{1, 2, 3, 4};
  std::vector<std::size_t> n_channels{8, 16, 64};
  double area_side = 10.0;
  double budget_per_cu = 1.0;
  double noise_per_channel = 1e-2;

  std::vector<AlgorithmSpec> algorithms;
  std::size_t replications = 100;
  std::uint64_t base_seed = 1;
  std::filesystem::path output_dir = "out";

  std::size_t memory_len = 0;  // 0 selects max(10, N)
  bool allow_short_memory = false;
  InnerSolver inner_solver = InnerSolver::kSequential;
  double inner_tol = kDefaultInnerTol;
  double switch_margin = 1e-9;
  std::size_t max_outer = 0;  // 0 selects the per-algorithm default
  std::uint64_t enumeration_cap = 1'000'000;
  bool retain_profiles = false;
  bool record_beta = false;
  double jep_power_tol = 1e-5;
  double jep_rate_margin = 1e-6;
  std::size_t k_connectivity_max_iter = kDefaultAveragedMaxIter;

  // Throws std::invalid_argument on unknown keys, bad values or an empty
  // algorithm list.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

std::vector<std::string> validate_experiment(const ExperimentConfig& cfg);

struct Cell {
  std::size_t n_cus = 0;
  std::size_t n_aps = 0;
  std::size_t n_channels = 0;

  std::string name() const;  // "N4_W2_K8"
};

std::vector<Cell> experiment_cells(const ExperimentConfig& cfg);

// Snapshot seed of replication `rep` in `cell`: base_seed XOR a SplitMix64
// fold of (N, W, K, rep). Pure, so cells never share RNG state.
std::uint64_t derive_seed(std::uint64_t base_seed, const Cell& cell, std::size_t rep);

// Seed handed to one algorithm inside a run.
std::uint64_t algorithm_seed(std::uint64_t run_seed, const AlgorithmSpec& algo);

struct RunOutcome {
  std::string algorithm;
  bool ok = false;
  std::string error;
  double throughput_bits = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::optional<bool> is_jep;
  std::optional<double> tstar_ratio;
  bool capacity_violation = false;
};

struct ExperimentReport {
  nlohmann::json summary;
  std::string summary_csv;
  std::size_t runs = 0;
  std::size_t failures = 0;
};

// Runs every (cell, replication, algorithm), writes per-run files under
// cfg.output_dir and the summary/figure files, and returns the summary.
// `jobs` > 1 spreads runs over OpenMP threads (<= 0: all available); output
// does not depend on it.
// Throws std::runtime_error when the output directory is not writable.
ExperimentReport run_experiment(const ExperimentConfig& cfg, int jobs = 1);

struct NamedTrace {
  std::string name;
  const RunTrace* trace = nullptr;
};

// Per-iteration sum rate (bits) and potential (nats). A single trace gets
// plain columns iter, sum_rate, potential; several get "<name>:" prefixes.
// Beta columns (beta_cu<i>_ap<w>) are added when requested and recorded.
std::string emit_convergence_figure_data(std::span<const NamedTrace> traces,
                                         bool include_beta = false);

}  // namespace crn
