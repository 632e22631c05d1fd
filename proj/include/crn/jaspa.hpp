#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crn/equilibria.hpp"
#include "crn/netmodel.hpp"
#include "crn/rng.hpp"
#include "crn/types.hpp"
#include "json.hpp"

namespace crn {

// Per-CU memory of the last M best replies and the induced probability
// vector over APs. While fewer than M replies have been seen, the window is
// padded with copies of the first reply.
class BeliefState {
 public:
  BeliefState(std::size_t num_aps, std::size_t memory_len);

  std::size_t num_aps() const { return num_aps_; }
  std::size_t memory_len() const { return memory_len_; }
  std::size_t replies_seen() const { return replies_seen_; }
  const std::deque<ApIndex>& memory() const { return memory_; }
  std::optional<ApIndex> first_reply() const { return first_reply_; }
  const std::vector<double>& beta() const { return beta_; }

  // The AP carrying probability one, if beta is elementary.
  std::optional<ApIndex> elementary_ap() const;
  bool elementary() const { return elementary_ap().has_value(); }

  friend BeliefState update_belief(BeliefState state, ApIndex best_reply, std::size_t t);

 private:
  void recompute_beta();

  std::size_t num_aps_;
  std::size_t memory_len_;
  std::size_t replies_seen_ = 0;
  std::deque<ApIndex> memory_;
  std::optional<ApIndex> first_reply_;
  std::vector<double> beta_;
  std::vector<std::size_t> counts_;
};

// Folds best reply b^{t+1} into the belief at outer iteration t. t = 0
// starts a fresh memory. Throws std::logic_error if t does not match the
// number of replies already seen.
BeliefState update_belief(BeliefState state, ApIndex best_reply, std::size_t t);

// One categorical draw from beta.
ApIndex sample_association(std::span<const double> beta, Rng& rng);

struct JaspaConfig {
  std::size_t memory_len = 10;
  double connection_cost_bits = 0.0;
  std::vector<double> per_cu_cost_bits;  // overrides the uniform cost if non-empty
  InnerSolver inner_solver = InnerSolver::kSequential;
  double inner_tol = kDefaultInnerTol;
  double switch_margin = 1e-9;  // nats
  std::size_t max_outer = 0;    // 0 selects the per-algorithm default
  std::uint64_t seed = 0;
  bool allow_short_memory = false;
  bool record_beta = false;
  double jep_power_tol = 1e-5;
  double jep_rate_margin = 1e-6;

  double cost_nats(CuIndex i) const;
};

inline constexpr std::size_t kDefaultMaxOuter = 500;

// Errors for an unusable config; M < N is an error unless allow_short_memory.
std::vector<std::string> validate_config(const JaspaConfig& cfg, std::size_t n_cus);

struct TraceRow {
  std::size_t iter = 0;
  AssociationProfile assoc;
  double sum_rate = 0.0;   // nats
  double potential = 0.0;  // nats
  std::size_t switches = 0;
  std::vector<std::vector<double>> beta;  // per CU, only when recorded
};

struct RunTrace {
  std::vector<TraceRow> rows;

  // Columns: iter, sum_rate_bits, potential_nats, switches, assoc.
  std::string to_csv() const;
};

// "1-2-2-1" style rendering with 1-based AP ids.
std::string format_assoc(const AssociationProfile& a);

struct JepReport {
  bool is_jep = false;
  double power_residual = 0.0;
  std::vector<double> best_deviation_gain;  // nats, per CU
  double power_tol = 0.0;
  double rate_margin = 0.0;

  nlohmann::json to_json() const;
};

struct BestReply {
  ApIndex ap = 0;
  double current_rate = 0.0;
  double best_rate = 0.0;  // estimated rate at `ap`
};

// Best-reply step of JASPA: the AP with the highest water-filled rate among those
// beating the current rate by more than cost + margin; ties broken
// uniformly with `rng`. Falls back to the current AP.
BestReply best_reply_association(const NetworkSnapshot& s, const AssociationProfile& a,
                                 const PowerProfile& p, CuIndex i, double cost_nats,
                                 double margin, Rng& rng);

JepReport verify_jep(const NetworkSnapshot& s, const AssociationProfile& a,
                     const PowerProfile& p, double power_tol, double rate_margin);

struct RunResult {
  AssociationProfile assoc;
  PowerProfile power;
  RunTrace trace;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t inner_failures = 0;  // inner solves that hit their cap
  std::optional<JepReport> jep;
};

// JASPA: NE power solve per association, best replies, belief update and
// sampling, until the association has been constant for M iterations and
// every belief is elementary.
RunResult jaspa_run(const NetworkSnapshot& s, const JaspaConfig& cfg);

// Sequential variant: one CU acts per iteration. Stops after N consecutive
// turns without a switch and with power changes below inner_tol.
RunResult se_jaspa_run(const NetworkSnapshot& s, const JaspaConfig& cfg);

// Simultaneous variant without intermediate equilibria. Uses the JASPA
// stopping rule; on convergence the powers are finished with the inner
// solver at the final association.
RunResult si_jaspa_run(const NetworkSnapshot& s, const JaspaConfig& cfg);

}  // namespace crn
