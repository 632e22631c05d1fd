#include "crn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <omp.h>
#include <set>
#include <stdexcept>

#include "crn/baselines.hpp"
#include "crn/netmodel.hpp"
#include "crn/radio.hpp"
#include "crn/rng.hpp"

namespace crn {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Algorithm menu

AlgorithmSpec AlgorithmSpec::parse(const std::string& text) {
  static const std::map<std::string, AlgorithmKind> plain = {
      {"jaspa", AlgorithmKind::kJaspa},
      {"se_jaspa", AlgorithmKind::kSeJaspa},
      {"si_jaspa", AlgorithmKind::kSiJaspa},
      {"closest_ap", AlgorithmKind::kClosestAp},
      {"exhaustive", AlgorithmKind::kExhaustive},
      {"k_connectivity", AlgorithmKind::kKConnectivity},
  };
  AlgorithmSpec spec;
  spec.label = text;
  if (auto it = plain.find(text); it != plain.end()) {
    spec.kind = it->second;
    return spec;
  }
  for (auto [prefix, kind] : {std::pair{"jaspa_cost(", AlgorithmKind::kJaspa},
                              std::pair{"si_jaspa_cost(", AlgorithmKind::kSiJaspa}}) {
    const std::string p = prefix;
    if (text.rfind(p, 0) == 0 && text.size() > p.size() + 1 && text.back() == ')') {
      const std::string number = text.substr(p.size(), text.size() - p.size() - 1);
      std::size_t used = 0;
      double cost = 0.0;
      try {
        cost = std::stod(number, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != number.size() || !(cost >= 0.0))
        throw std::invalid_argument("bad connection cost in algorithm '" + text + "'");
      spec.kind = kind;
      spec.cost_bits = cost;
      return spec;
    }
  }
  throw std::invalid_argument("unknown algorithm '" + text + "'");
}

std::string AlgorithmSpec::file_stem() const {
  std::string out;
  for (char c : label)
    if (c != '(' && c != ')') out += c;
  return out;
}

bool AlgorithmSpec::iterative() const {
  return kind == AlgorithmKind::kJaspa || kind == AlgorithmKind::kSeJaspa ||
         kind == AlgorithmKind::kSiJaspa;
}

// ---------------------------------------------------------------------------
// Config

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw std::invalid_argument(fmt::format("unknown key '{}' in {}", key, where));
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

const char* solver_name(InnerSolver s) {
  return s == InnerSolver::kSequential ? "s_iwf" : "a_iwf";
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  ExperimentConfig cfg;
  try {
    reject_unknown(doc,
                   {"scenario", "algorithms", "replications", "base_seed", "output_dir",
                    "solver"},
                   "config");
    if (doc.contains("scenario")) {
      const json& sc = doc.at("scenario");
      reject_unknown(sc,
                     {"n_cus", "n_aps", "n_channels", "area_side", "budget_per_cu",
                      "noise_per_channel"},
                     "scenario");
      read_opt(sc, "n_cus", cfg.n_cus);
      read_opt(sc, "n_aps", cfg.n_aps);
      read_opt(sc, "n_channels", cfg.n_channels);
      read_opt(sc, "area_side", cfg.area_side);
      read_opt(sc, "budget_per_cu", cfg.budget_per_cu);
      read_opt(sc, "noise_per_channel", cfg.noise_per_channel);
    }
    for (const auto& name : doc.at("algorithms").get<std::vector<std::string>>())
      cfg.algorithms.push_back(AlgorithmSpec::parse(name));
    read_opt(doc, "replications", cfg.replications);
    read_opt(doc, "base_seed", cfg.base_seed);
    if (doc.contains("output_dir")) cfg.output_dir = doc.at("output_dir").get<std::string>();
    if (doc.contains("solver")) {
      const json& so = doc.at("solver");
      reject_unknown(so,
                     {"memory_len", "allow_short_memory", "inner_solver", "inner_tol",
                      "switch_margin", "max_outer", "enumeration_cap", "retain_profiles",
                      "record_beta", "jep_power_tol", "jep_rate_margin",
                      "k_connectivity_max_iter"},
                     "solver");
      read_opt(so, "memory_len", cfg.memory_len);
      read_opt(so, "allow_short_memory", cfg.allow_short_memory);
      if (so.contains("inner_solver")) {
        const auto name = so.at("inner_solver").get<std::string>();
        if (name == "s_iwf")
          cfg.inner_solver = InnerSolver::kSequential;
        else if (name == "a_iwf")
          cfg.inner_solver = InnerSolver::kAveraged;
        else
          throw std::invalid_argument("inner_solver must be 's_iwf' or 'a_iwf'");
      }
      read_opt(so, "inner_tol", cfg.inner_tol);
      read_opt(so, "switch_margin", cfg.switch_margin);
      read_opt(so, "max_outer", cfg.max_outer);
      read_opt(so, "enumeration_cap", cfg.enumeration_cap);
      read_opt(so, "retain_profiles", cfg.retain_profiles);
      read_opt(so, "record_beta", cfg.record_beta);
      read_opt(so, "jep_power_tol", cfg.jep_power_tol);
      read_opt(so, "jep_rate_margin", cfg.jep_rate_margin);
      read_opt(so, "k_connectivity_max_iter", cfg.k_connectivity_max_iter);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed experiment config: ") + e.what());
  }
  if (auto issues = validate_experiment(cfg); !issues.empty())
    throw std::invalid_argument("invalid experiment config: " + issues.front());
  return cfg;
}

json ExperimentConfig::to_json() const {
  json algos = json::array();
  for (const auto& a : algorithms) algos.push_back(a.label);
  return {
      {"scenario",
       {{"n_cus", n_cus},
        {"n_aps", n_aps},
        {"n_channels", n_channels},
        {"area_side", area_side},
        {"budget_per_cu", budget_per_cu},
        {"noise_per_channel", noise_per_channel}}},
      {"algorithms", algos},
      {"replications", replications},
      {"base_seed", base_seed},
      {"solver",
       {{"memory_len", memory_len},
        {"allow_short_memory", allow_short_memory},
        {"inner_solver", solver_name(inner_solver)},
        {"inner_tol", inner_tol},
        {"switch_margin", switch_margin},
        {"max_outer", max_outer},
        {"enumeration_cap", enumeration_cap},
        {"retain_profiles", retain_profiles},
        {"record_beta", record_beta},
        {"jep_power_tol", jep_power_tol},
        {"jep_rate_margin", jep_rate_margin},
        {"k_connectivity_max_iter", k_connectivity_max_iter}}},
  };
}

std::vector<std::string> validate_experiment(const ExperimentConfig& cfg) {
  std::vector<std::string> issues;
  if (cfg.replications < 1) issues.emplace_back("replications must be >= 1");
  if (cfg.algorithms.empty()) issues.emplace_back("algorithm set must be non-empty");
  if (cfg.n_cus.empty() || cfg.n_aps.empty() || cfg.n_channels.empty())
    issues.emplace_back("scenario lists must be non-empty");
  if (!(cfg.inner_tol > 0.0)) issues.emplace_back("inner_tol must be > 0");
  for (const Cell& c : experiment_cells(cfg)) {
    NetworkParams p;
    p.n_cus = c.n_cus;
    p.n_aps = c.n_aps;
    p.n_channels = c.n_channels;
    p.area_side = cfg.area_side;
    p.budget_per_cu = cfg.budget_per_cu;
    p.noise_per_channel = cfg.noise_per_channel;
    for (auto& msg : validate_params(p)) issues.push_back(c.name() + ": " + msg);
  }
  if (cfg.memory_len > 0 && !cfg.allow_short_memory)
    for (std::size_t n : cfg.n_cus)
      if (cfg.memory_len < n)
        issues.push_back(fmt::format(
            "memory_len ({}) < n_cus ({}); set solver.allow_short_memory to override",
            cfg.memory_len, n));
  return issues;
}

std::string Cell::name() const { return fmt::format("N{}_W{}_K{}", n_cus, n_aps, n_channels); }

std::vector<Cell> experiment_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (std::size_t n : cfg.n_cus)
    for (std::size_t w : cfg.n_aps)
      for (std::size_t k : cfg.n_channels) cells.push_back({n, w, k});
  return cells;
}

std::uint64_t derive_seed(std::uint64_t base_seed, const Cell& cell, std::size_t rep) {
  return base_seed ^ mix_words({cell.n_cus, cell.n_aps, cell.n_channels, rep});
}

std::uint64_t algorithm_seed(std::uint64_t run_seed, const AlgorithmSpec& algo) {
  // FNV-1a of the label keeps the seed stable when the menu is reordered.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : algo.label) h = (h ^ c) * 0x100000001B3ULL;
  return mix_words({run_seed, h});
}

// ---------------------------------------------------------------------------
// Convergence figure data

std::string emit_convergence_figure_data(std::span<const NamedTrace> traces,
                                         bool include_beta) {
  const bool single = traces.size() == 1;
  auto col = [&](const NamedTrace& t, const std::string& what) {
    return single ? what : t.name + ":" + what;
  };

  std::string header = "iter";
  std::size_t length = 0;
  for (const NamedTrace& t : traces) {
    header += "," + col(t, "sum_rate") + "," + col(t, "potential");
    if (include_beta && !t.trace->rows.empty()) {
      const auto& beta = t.trace->rows.front().beta;
      for (std::size_t i = 0; i < beta.size(); ++i)
        for (std::size_t w = 0; w < beta[i].size(); ++w)
          header += "," + col(t, fmt::format("beta_cu{}_ap{}", i + 1, w + 1));
    }
    length = std::max(length, t.trace->rows.size());
  }

  std::string out = header + "\n";
  for (std::size_t r = 0; r < length; ++r) {
    out += std::to_string(r);
    for (const NamedTrace& t : traces) {
      const auto& rows = t.trace->rows;
      const bool has_beta = include_beta && !rows.empty() && !rows.front().beta.empty();
      std::size_t beta_cols = 0;
      if (has_beta)
        for (const auto& b : rows.front().beta) beta_cols += b.size();
      if (r < rows.size()) {
        out += fmt::format(",{:.12g},{:.12g}", rows[r].sum_rate * kNatsToBits,
                           rows[r].potential);
        if (has_beta)
          for (const auto& b : rows[r].beta)
            for (double v : b) out += fmt::format(",{:.12g}", v);
      } else {
        out += ",,";
        out += std::string(beta_cols, ',');
      }
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch driver

namespace {

constexpr double kCapacitySlackNats = 1e-6;

void write_atomically(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct WorkItem {
  Cell cell;
  std::size_t rep = 0;
};

struct WorkResult {
  std::vector<RunOutcome> outcomes;
  std::vector<std::pair<std::string, RunTrace>> traces;  // kept for rep 0 only
};

JaspaConfig make_jaspa_config(const ExperimentConfig& cfg, const Cell& cell,
                              const AlgorithmSpec& algo, std::uint64_t run_seed) {
  JaspaConfig jc;
  jc.memory_len = cfg.memory_len ? cfg.memory_len : std::max<std::size_t>(10, cell.n_cus);
  jc.allow_short_memory = cfg.allow_short_memory;
  jc.connection_cost_bits = algo.cost_bits;
  jc.inner_solver = cfg.inner_solver;
  jc.inner_tol = cfg.inner_tol;
  jc.switch_margin = cfg.switch_margin;
  jc.max_outer = cfg.max_outer;
  jc.seed = algorithm_seed(run_seed, algo);
  jc.record_beta = cfg.record_beta;
  jc.jep_power_tol = cfg.jep_power_tol;
  jc.jep_rate_margin = cfg.jep_rate_margin;
  return jc;
}

WorkResult run_item(const ExperimentConfig& cfg, const WorkItem& item) {
  WorkResult result;
  const std::uint64_t seed = derive_seed(cfg.base_seed, item.cell, item.rep);
  const fs::path dir =
      cfg.output_dir / "runs" / item.cell.name() / std::to_string(item.rep);

  NetworkParams params;
  params.n_cus = item.cell.n_cus;
  params.n_aps = item.cell.n_aps;
  params.n_channels = item.cell.n_channels;
  params.area_side = cfg.area_side;
  params.budget_per_cu = cfg.budget_per_cu;
  params.noise_per_channel = cfg.noise_per_channel;
  params.seed = seed;

  NetworkSnapshot snap;
  try {
    snap = generate_snapshot(params);
    write_atomically(dir / "snapshot.json", serialize_snapshot(snap));
  } catch (const std::exception& e) {
    for (const auto& algo : cfg.algorithms) {
      RunOutcome o;
      o.algorithm = algo.label;
      o.error = e.what();
      result.outcomes.push_back(o);
    }
    return result;
  }

  // T* first so every algorithm can be compared against it.
  std::optional<ExhaustiveResult> exhaustive;
  std::string exhaustive_error;
  const bool want_exhaustive =
      std::any_of(cfg.algorithms.begin(), cfg.algorithms.end(),
                  [](const AlgorithmSpec& a) { return a.kind == AlgorithmKind::kExhaustive; });
  if (want_exhaustive) {
    try {
      ExhaustiveOptions opts;
      opts.tol = cfg.inner_tol;
      opts.cap = cfg.enumeration_cap;
      opts.retain_profiles = cfg.retain_profiles;
      exhaustive = exhaustive_sep(snap, opts);
    } catch (const std::exception& e) {
      exhaustive_error = e.what();
    }
  }

  for (const AlgorithmSpec& algo : cfg.algorithms) {
    RunOutcome o;
    o.algorithm = algo.label;
    try {
      const fs::path trace_path = dir / (algo.file_stem() + ".trace.csv");
      AssociationProfile assoc;
      PowerProfile power;
      RunTrace trace;
      switch (algo.kind) {
        case AlgorithmKind::kJaspa:
        case AlgorithmKind::kSeJaspa:
        case AlgorithmKind::kSiJaspa: {
          const JaspaConfig jc = make_jaspa_config(cfg, item.cell, algo, seed);
          RunResult run = algo.kind == AlgorithmKind::kJaspa     ? jaspa_run(snap, jc)
                          : algo.kind == AlgorithmKind::kSeJaspa ? se_jaspa_run(snap, jc)
                                                                 : si_jaspa_run(snap, jc);
          o.iterations = run.iterations;
          o.converged = run.converged;
          if (run.jep) {
            o.is_jep = run.jep->is_jep;
            write_atomically(dir / (algo.file_stem() + ".jep.json"),
                             run.jep->to_json().dump(1));
          }
          o.throughput_bits = sum_rate(snap, run.assoc, run.power) * kNatsToBits;
          trace = std::move(run.trace);
          break;
        }
        case AlgorithmKind::kClosestAp: {
          assoc = closest_ap(snap);
          ProfileSolve solved = solve_powers(snap, assoc, cfg.inner_solver, cfg.inner_tol);
          o.converged = solved.converged;
          o.throughput_bits = sum_rate(snap, assoc, solved.power) * kNatsToBits;
          trace.rows.push_back({0, assoc, sum_rate(snap, assoc, solved.power),
                                system_potential(snap, solved.power, assoc), 0, {}});
          break;
        }
        case AlgorithmKind::kExhaustive: {
          if (!exhaustive) throw std::runtime_error(exhaustive_error);
          assoc = exhaustive->best_assoc;
          ProfileSolve solved = solve_powers(snap, assoc, InnerSolver::kSequential,
                                             cfg.inner_tol);
          o.converged = solved.converged;
          o.is_jep = verify_jep(snap, assoc, solved.power, cfg.jep_power_tol,
                                cfg.jep_rate_margin)
                         .is_jep;
          o.throughput_bits = exhaustive->best_throughput * kNatsToBits;
          trace.rows.push_back(
              {0, assoc, sum_rate(snap, assoc, solved.power), exhaustive->best_sep, 0, {}});
          if (cfg.retain_profiles)
            write_atomically(dir / "exhaustive.profiles.csv", exhaustive->profiles_csv());
          break;
        }
        case AlgorithmKind::kKConnectivity: {
          KConnectivity kc =
              k_connectivity(snap, cfg.inner_tol, cfg.k_connectivity_max_iter);
          o.iterations = kc.report.iterations;
          o.converged = kc.report.converged;
          o.throughput_bits = kc.throughput * kNatsToBits;
          TraceRow row;
          row.sum_rate = kc.throughput;
          row.potential = kc.report.potential_trace.back();
          trace.rows.push_back(std::move(row));
          break;
        }
      }
      write_atomically(trace_path, trace.to_csv());
      if (exhaustive && algo.kind != AlgorithmKind::kKConnectivity) {
        const double tstar_bits = exhaustive->best_throughput * kNatsToBits;
        o.tstar_ratio = o.throughput_bits / tstar_bits;
        o.capacity_violation =
            o.throughput_bits > tstar_bits + kCapacitySlackNats * kNatsToBits;
      }
      o.ok = true;
      if (item.rep == 0 && algo.iterative()) result.traces.emplace_back(algo.label, trace);
    } catch (const std::exception& e) {
      o.ok = false;
      o.error = e.what();
    }
    result.outcomes.push_back(std::move(o));
  }

  std::string table =
      "algorithm,ok,throughput_bits,iterations,converged,is_jep,tstar_ratio,error\n";
  for (const RunOutcome& o : result.outcomes) {
    std::string err = o.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    table += fmt::format("{},{},{:.12g},{},{},{},{},{}\n", o.algorithm, o.ok ? 1 : 0,
                         o.throughput_bits, o.iterations, o.converged ? 1 : 0,
                         o.is_jep ? std::to_string(*o.is_jep ? 1 : 0) : "",
                         o.tstar_ratio ? fmt::format("{:.12g}", *o.tstar_ratio) : "", err);
  }
  try {
    write_atomically(dir / "results.csv", table);
  } catch (const std::exception& e) {
    for (RunOutcome& o : result.outcomes) {
      o.ok = false;
      o.error = e.what();
    }
  }
  return result;
}

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::string num(double v) { return fmt::format("{:.12g}", v); }

void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path probe = dir / ".write-probe";
  std::ofstream out(probe);
  if (ec || !out) throw std::runtime_error("output directory not writable: " + dir.string());
  out.close();
  fs::remove(probe, ec);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, int jobs) {
  if (auto issues = validate_experiment(cfg); !issues.empty())
    throw std::invalid_argument("invalid experiment config: " + issues.front());
  ensure_writable(cfg.output_dir);

  const std::vector<Cell> cells = experiment_cells(cfg);
  std::vector<WorkItem> items;
  for (const Cell& c : cells)
    for (std::size_t r = 0; r < cfg.replications; ++r) items.push_back({c, r});

  std::vector<WorkResult> results(items.size());
  const auto count = static_cast<std::int64_t>(items.size());
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t idx = 0; idx < count; ++idx)
    results[static_cast<std::size_t>(idx)] = run_item(cfg, items[static_cast<std::size_t>(idx)]);

  ExperimentReport report;
  report.runs = items.size();

  std::string csv =
      "n_cus,n_aps,n_channels,algorithm,runs,failures,mean_throughput_bits,"
      "std_throughput_bits,mean_iterations,std_iterations,convergence_rate,jep_rate,"
      "mean_tstar_ratio,capacity_violations\n";
  json rows = json::array();
  json failures = json::array();
  std::string fig_tp = "n_cus,n_aps,n_channels";
  std::string fig_it = "n_cus,n_aps,n_channels";
  for (const auto& algo : cfg.algorithms) {
    fig_tp += "," + algo.label;
    fig_it += "," + algo.label;
  }
  fig_tp += "\n";
  fig_it += "\n";

  std::size_t offset = 0;
  for (const Cell& cell : cells) {
    std::string tp_line = fmt::format("{},{},{}", cell.n_cus, cell.n_aps, cell.n_channels);
    std::string it_line = tp_line;
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
      const auto& label = cfg.algorithms[a].label;
      std::vector<double> tput, iters, ratios;
      std::size_t fails = 0, converged = 0, jep_total = 0, jep_pass = 0, violations = 0;
      for (std::size_t r = 0; r < cfg.replications; ++r) {
        const RunOutcome& o = results[offset + r].outcomes[a];
        if (!o.ok) {
          ++fails;
          failures.push_back({{"cell", cell.name()},
                              {"replication", r},
                              {"algorithm", label},
                              {"error", o.error}});
          continue;
        }
        tput.push_back(o.throughput_bits);
        iters.push_back(static_cast<double>(o.iterations));
        converged += o.converged;
        if (o.is_jep) {
          ++jep_total;
          jep_pass += *o.is_jep;
        }
        if (o.tstar_ratio) ratios.push_back(*o.tstar_ratio);
        violations += o.capacity_violation;
      }
      report.failures += fails;
      const Stats t = stats(tput), it = stats(iters), ra = stats(ratios);
      const std::size_t ok = tput.size();
      const double conv_rate = ok ? static_cast<double>(converged) / ok : 0.0;
      std::optional<double> jep_rate;
      if (jep_total) jep_rate = static_cast<double>(jep_pass) / jep_total;
      std::optional<double> ratio;
      if (!ratios.empty()) ratio = ra.mean;

      csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", cell.n_cus,
                         cell.n_aps, cell.n_channels, label, cfg.replications, fails,
                         num(t.mean), num(t.stddev), num(it.mean), num(it.stddev),
                         num(conv_rate), jep_rate ? num(*jep_rate) : "",
                         ratio ? num(*ratio) : "", violations);
      json row = {{"n_cus", cell.n_cus},
                  {"n_aps", cell.n_aps},
                  {"n_channels", cell.n_channels},
                  {"algorithm", label},
                  {"runs", cfg.replications},
                  {"failures", fails},
                  {"mean_throughput_bits", t.mean},
                  {"std_throughput_bits", t.stddev},
                  {"mean_iterations", it.mean},
                  {"std_iterations", it.stddev},
                  {"convergence_rate", conv_rate},
                  {"capacity_violations", violations}};
      row["jep_rate"] = jep_rate ? json(*jep_rate) : json(nullptr);
      row["mean_tstar_ratio"] = ratio ? json(*ratio) : json(nullptr);
      rows.push_back(row);
      tp_line += "," + num(t.mean);
      it_line += "," + num(it.mean);
    }
    fig_tp += tp_line + "\n";
    fig_it += it_line + "\n";

    std::vector<NamedTrace> named;
    for (const auto& [name, trace] : results[offset].traces) named.push_back({name, &trace});
    if (!named.empty())
      write_atomically(cfg.output_dir / "convergence" / (cell.name() + ".csv"),
                       emit_convergence_figure_data(named, cfg.record_beta));
    offset += cfg.replications;
  }

  json meta = cfg.to_json();
  meta["rng"] = kRngName;
  meta["seed_derivation"] =
      "snapshot seed = base_seed XOR fold(N, W, K, replication); algorithm seed = "
      "fold(snapshot seed, FNV-1a(label)); fold = chained SplitMix64 finalizer";
  meta["units"] =
      "rates computed in nats (natural log); *_bits fields divide by ln 2; potentials in "
      "nats";
  meta["convergence"] = {
      {"jaspa", "association unchanged for M consecutive iterations and every belief "
                "vector elementary"},
      {"si_jaspa", "same detector as jaspa; powers then finished by the inner solver"},
      {"se_jaspa", "N consecutive turns without an AP switch and with power change below "
                   "inner_tol"},
      {"k_connectivity", "A-IWF residual below inner_tol"},
      {"iterations", "outer iterations executed (se_jaspa: single-CU turns)"}};
  meta["default_memory_len"] = "max(10, N) when memory_len is 0";
  json warnings = json::array();
  if (cfg.allow_short_memory && cfg.memory_len > 0)
    for (std::size_t n : cfg.n_cus)
      if (cfg.memory_len < n)
        warnings.push_back(fmt::format(
            "memory_len {} < N = {}: convergence of jaspa/si_jaspa is not guaranteed",
            cfg.memory_len, n));
  meta["warnings"] = warnings;

  report.summary = {{"metadata", meta}, {"rows", rows}, {"failures", failures}};
  report.summary_csv = csv;

  write_atomically(cfg.output_dir / "summary.csv", csv);
  write_atomically(cfg.output_dir / "summary.json", report.summary.dump(1));
  write_atomically(cfg.output_dir / "fig_throughput.csv", fig_tp);
  write_atomically(cfg.output_dir / "fig_iterations.csv", fig_it);
  return report;
}

}  // namespace crn
