#include "crn/jaspa.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include "crn/radio.hpp"

namespace crn {

namespace {

constexpr double kTieTolerance = 1e-12;

}  // namespace

BeliefState::BeliefState(std::size_t num_aps, std::size_t memory_len)
    : num_aps_(num_aps), memory_len_(memory_len), beta_(num_aps, 0.0), counts_(num_aps, 0) {
  if (num_aps == 0) throw std::invalid_argument("BeliefState: need at least one AP");
  if (memory_len == 0) throw std::invalid_argument("BeliefState: memory length must be >= 1");
}

std::optional<ApIndex> BeliefState::elementary_ap() const {
  for (ApIndex w = 0; w < num_aps_; ++w)
    if (counts_[w] == memory_len_) return w;
  return std::nullopt;
}

void BeliefState::recompute_beta() {
  std::fill(counts_.begin(), counts_.end(), 0);
  for (ApIndex w : memory_) ++counts_[w];
  if (first_reply_) counts_[*first_reply_] += memory_len_ - memory_.size();
  for (ApIndex w = 0; w < num_aps_; ++w)
    beta_[w] = static_cast<double>(counts_[w]) / static_cast<double>(memory_len_);
}

BeliefState update_belief(BeliefState state, ApIndex best_reply, std::size_t t) {
  if (best_reply >= state.num_aps_)
    throw std::invalid_argument("update_belief: best reply out of range");
  if (t == 0) {
    state.memory_.clear();
    state.first_reply_ = best_reply;
    state.replies_seen_ = 0;
  } else if (t != state.replies_seen_) {
    throw std::logic_error(fmt::format("update_belief: iteration {} but {} replies seen", t,
                                       state.replies_seen_));
  }
  state.memory_.push_back(best_reply);
  if (state.memory_.size() > state.memory_len_) state.memory_.pop_front();
  ++state.replies_seen_;
  state.recompute_beta();
  return state;
}

ApIndex sample_association(std::span<const double> beta, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::optional<ApIndex> last_positive;
  for (ApIndex w = 0; w < beta.size(); ++w) {
    if (beta[w] <= 0.0) continue;
    cumulative += beta[w];
    last_positive = w;
    if (u < cumulative) return w;
  }
  if (!last_positive) throw std::invalid_argument("sample_association: beta has no mass");
  return *last_positive;
}

double JaspaConfig::cost_nats(CuIndex i) const {
  const double bits = per_cu_cost_bits.empty() ? connection_cost_bits : per_cu_cost_bits.at(i);
  return bits * std::numbers::ln2;
}

std::vector<std::string> validate_config(const JaspaConfig& cfg, std::size_t n_cus) {
  std::vector<std::string> issues;
  if (cfg.memory_len < 1) issues.emplace_back("memory_len must be >= 1");
  if (cfg.memory_len < n_cus && !cfg.allow_short_memory)
    issues.push_back(fmt::format(
        "memory_len ({}) < number of CUs ({}); set allow_short_memory to override",
        cfg.memory_len, n_cus));
  if (!cfg.per_cu_cost_bits.empty() && cfg.per_cu_cost_bits.size() != n_cus)
    issues.emplace_back("per_cu_cost_bits must have one entry per CU");
  auto check_cost = [&](double c) {
    if (!(c >= 0.0)) issues.emplace_back("connection costs must be >= 0");
  };
  check_cost(cfg.connection_cost_bits);
  for (double c : cfg.per_cu_cost_bits) check_cost(c);
  if (!(cfg.inner_tol > 0.0)) issues.emplace_back("inner_tol must be > 0");
  if (!(cfg.switch_margin >= 0.0)) issues.emplace_back("switch_margin must be >= 0");
  return issues;
}

std::string format_assoc(const AssociationProfile& a) {
  std::string out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(a[i] + 1);
  }
  return out;
}

std::string RunTrace::to_csv() const {
  std::string out = "iter,sum_rate_bits,potential_nats,switches,assoc\n";
  for (const TraceRow& r : rows)
    out += fmt::format("{},{:.12g},{:.12g},{},{}\n", r.iter, r.sum_rate * kNatsToBits,
                       r.potential, r.switches, format_assoc(r.assoc));
  return out;
}

nlohmann::json JepReport::to_json() const {
  return {{"is_jep", is_jep},
          {"power_residual", power_residual},
          {"best_deviation_gain_nats", best_deviation_gain},
          {"power_tol", power_tol},
          {"rate_margin", rate_margin}};
}

BestReply best_reply_association(const NetworkSnapshot& s, const AssociationProfile& a,
                                 const PowerProfile& p, CuIndex i, double cost_nats,
                                 double margin, Rng& rng) {
  BestReply out;
  out.ap = a[i];
  out.current_rate = current_rate(s, a, p, i);
  out.best_rate = out.current_rate;

  const double threshold = out.current_rate + cost_nats + margin;
  std::vector<ApIndex> best;
  double best_rate = -std::numeric_limits<double>::infinity();
  for (ApIndex w = 0; w < s.num_aps(); ++w) {
    if (w == a[i]) continue;
    const double r = estimated_best_rate(s, a, p, i, w).rate;
    if (!(r > threshold)) continue;
    if (r > best_rate + kTieTolerance) {
      best.assign(1, w);
      best_rate = r;
    } else if (r >= best_rate - kTieTolerance) {
      best.push_back(w);
      best_rate = std::max(best_rate, r);
    }
  }
  if (!best.empty()) {
    out.ap = best.size() == 1 ? best.front() : best[rng.below(best.size())];
    out.best_rate = estimated_best_rate(s, a, p, i, out.ap).rate;
  }
  return out;
}

JepReport verify_jep(const NetworkSnapshot& s, const AssociationProfile& a,
                     const PowerProfile& p, double power_tol, double rate_margin) {
  JepReport rep;
  rep.power_tol = power_tol;
  rep.rate_margin = rate_margin;
  for (ApIndex w = 0; w < s.num_aps(); ++w)
    rep.power_residual = std::max(rep.power_residual, ne_residual(s, a, p, w));

  bool stable = true;
  rep.best_deviation_gain.assign(a.size(), 0.0);
  for (CuIndex i = 0; i < a.size(); ++i) {
    const double now = current_rate(s, a, p, i);
    double gain = s.num_aps() > 1 ? -std::numeric_limits<double>::infinity() : 0.0;
    for (ApIndex w = 0; w < s.num_aps(); ++w) {
      if (w == a[i]) continue;
      gain = std::max(gain, estimated_best_rate(s, a, p, i, w).rate - now);
    }
    rep.best_deviation_gain[i] = gain;
    if (gain > rate_margin) stable = false;
  }
  rep.is_jep = rep.power_residual < power_tol && stable;
  return rep;
}

namespace {

struct CuStreams {
  std::vector<Rng> tie_break;

  CuStreams(std::uint64_t seed, std::size_t n) {
    for (CuIndex i = 0; i < n; ++i)
      tie_break.push_back(Rng::substream(seed, Stream::kTieBreak, i));
  }
};

AssociationProfile random_association(const NetworkSnapshot& s, std::uint64_t seed) {
  AssociationProfile a(s.num_cus());
  for (CuIndex i = 0; i < a.size(); ++i) {
    Rng r = Rng::substream(seed, Stream::kInitialAssociation, i);
    a[i] = static_cast<ApIndex>(r.below(s.num_aps()));
  }
  return a;
}

// Random point on the full-budget face of CU i's simplex at its AP.
PowerProfile random_powers(const NetworkSnapshot& s, const AssociationProfile& a,
                           std::uint64_t seed) {
  PowerProfile p(s.num_cus(), s.num_channels());
  for (CuIndex i = 0; i < a.size(); ++i) {
    Rng r = Rng::substream(seed, Stream::kInitialPower, i);
    const auto& chans = s.channels(a[i]);
    std::vector<double> e(chans.size());
    double total = 0.0;
    for (double& v : e) total += (v = r.exponential(1.0));
    for (std::size_t c = 0; c < chans.size(); ++c)
      p(i, chans[c]) = s.budget[i] * e[c] / total;
  }
  return p;
}

std::size_t count_switches(const AssociationProfile& before, const AssociationProfile& after) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < before.size(); ++i) n += before[i] != after[i];
  return n;
}

void check_config(const NetworkSnapshot& s, const JaspaConfig& cfg) {
  if (auto issues = validate_config(cfg, s.num_cus()); !issues.empty())
    throw std::invalid_argument("invalid JASPA config: " + issues.front());
}

TraceRow make_row(const NetworkSnapshot& s, std::size_t iter, const AssociationProfile& a,
                  const PowerProfile& p, std::size_t switches) {
  TraceRow row;
  row.iter = iter;
  row.assoc = a;
  row.sum_rate = sum_rate(s, a, p);
  row.potential = system_potential(s, p, a);
  row.switches = switches;
  return row;
}

void attach_beta(TraceRow& row, const std::vector<BeliefState>& beliefs) {
  for (const BeliefState& b : beliefs) row.beta.push_back(b.beta());
}

double max_cost_nats(const JaspaConfig& cfg, std::size_t n) {
  double c = 0.0;
  for (CuIndex i = 0; i < n; ++i) c = std::max(c, cfg.cost_nats(i));
  return c;
}

}  // namespace

RunResult jaspa_run(const NetworkSnapshot& s, const JaspaConfig& cfg) {
  check_config(s, cfg);
  const std::size_t n = s.num_cus();
  const std::size_t max_outer = cfg.max_outer ? cfg.max_outer : kDefaultMaxOuter;

  // NE powers depend only on the association (solver starts are fixed), so
  // revisited profiles reuse their solve.
  std::map<AssociationProfile, ProfileSolve> cache;
  RunResult res;
  auto solve = [&](const AssociationProfile& a) -> const ProfileSolve& {
    auto it = cache.find(a);
    if (it == cache.end()) {
      it = cache.emplace(a, solve_powers(s, a, cfg.inner_solver, cfg.inner_tol)).first;
      if (!it->second.converged) ++res.inner_failures;
    }
    return it->second;
  };

  CuStreams streams(cfg.seed, n);
  std::vector<BeliefState> beliefs(n, BeliefState(s.num_aps(), cfg.memory_len));
  AssociationProfile a = random_association(s, cfg.seed);
  AssociationProfile prev = a;
  std::size_t stable = 0;

  for (std::size_t t = 0; t < max_outer; ++t) {
    const PowerProfile& p = solve(a).power;
    TraceRow row = make_row(s, t, a, p, count_switches(prev, a));

    AssociationProfile next(n);
    for (CuIndex i = 0; i < n; ++i) {
      const BestReply br = best_reply_association(s, a, p, i, cfg.cost_nats(i),
                                                  cfg.switch_margin, streams.tie_break[i]);
      beliefs[i] = update_belief(std::move(beliefs[i]), br.ap, t);
      next[i] = sample_association(beliefs[i].beta(), streams.tie_break[i]);
    }
    if (cfg.record_beta) attach_beta(row, beliefs);
    res.trace.rows.push_back(std::move(row));

    stable = next == a ? stable + 1 : 0;
    prev = a;
    a = std::move(next);
    res.iterations = t + 1;
    if (stable >= cfg.memory_len &&
        std::all_of(beliefs.begin(), beliefs.end(),
                    [](const BeliefState& b) { return b.elementary(); })) {
      res.converged = true;
      break;
    }
  }

  res.assoc = a;
  res.power = solve(a).power;
  res.jep = verify_jep(s, res.assoc, res.power, cfg.jep_power_tol,
                       cfg.jep_rate_margin + max_cost_nats(cfg, n));
  return res;
}

RunResult se_jaspa_run(const NetworkSnapshot& s, const JaspaConfig& cfg) {
  check_config(s, cfg);
  const std::size_t n = s.num_cus();
  const std::size_t max_outer = cfg.max_outer ? cfg.max_outer : kDefaultMaxOuter * n;

  CuStreams streams(cfg.seed, n);
  AssociationProfile a = random_association(s, cfg.seed);
  PowerProfile p = random_powers(s, a, cfg.seed);

  RunResult res;
  res.trace.rows.push_back(make_row(s, 0, a, p, 0));
  std::size_t quiet = 0;

  for (std::size_t t = 0; t < max_outer; ++t) {
    const CuIndex i = (t + 1) % n;
    const ApIndex here = a[i];

    // Staying is scored like any other AP: water-fill against the others.
    std::vector<BestRate> offers;
    offers.reserve(s.num_aps());
    for (ApIndex w = 0; w < s.num_aps(); ++w)
      offers.push_back(estimated_best_rate(s, a, p, i, w));

    const double threshold = offers[here].rate + cfg.cost_nats(i) + cfg.switch_margin;
    std::vector<ApIndex> best;
    double best_rate = -std::numeric_limits<double>::infinity();
    for (ApIndex w = 0; w < s.num_aps(); ++w) {
      if (w == here || !(offers[w].rate > threshold)) continue;
      if (offers[w].rate > best_rate + kTieTolerance) {
        best.assign(1, w);
        best_rate = offers[w].rate;
      } else if (offers[w].rate >= best_rate - kTieTolerance) {
        best.push_back(w);
      }
    }
    ApIndex target = here;
    if (!best.empty())
      target = best.size() == 1 ? best.front() : best[streams.tie_break[i].below(best.size())];

    double change = std::numeric_limits<double>::infinity();
    if (target == here) {
      change = 0.0;
      const auto& chans = s.channels(here);
      for (std::size_t c = 0; c < chans.size(); ++c)
        change = std::max(change, std::abs(p(i, chans[c]) - offers[here].power[c]));
    }
    set_row(s, p, i, target, offers[target].power);
    const std::size_t switches = target != here;
    a[i] = target;

    res.trace.rows.push_back(make_row(s, t + 1, a, p, switches));
    res.iterations = t + 1;
    quiet = (switches == 0 && change < cfg.inner_tol) ? quiet + 1 : 0;
    if (quiet >= n) {
      res.converged = true;
      break;
    }
  }

  res.assoc = a;
  res.power = std::move(p);
  res.jep = verify_jep(s, res.assoc, res.power, cfg.jep_power_tol,
                       cfg.jep_rate_margin + max_cost_nats(cfg, n));
  return res;
}

RunResult si_jaspa_run(const NetworkSnapshot& s, const JaspaConfig& cfg) {
  check_config(s, cfg);
  const std::size_t n = s.num_cus();
  const std::size_t max_outer = cfg.max_outer ? cfg.max_outer : kDefaultMaxOuter;

  CuStreams streams(cfg.seed, n);
  std::vector<BeliefState> beliefs(n, BeliefState(s.num_aps(), cfg.memory_len));
  AssociationProfile a = random_association(s, cfg.seed);
  AssociationProfile prev = a;
  PowerProfile p = random_powers(s, a, cfg.seed);
  std::vector<std::size_t> stay(n, 1);
  std::size_t stable = 0;

  RunResult res;
  for (std::size_t t = 0; t < max_outer; ++t) {
    TraceRow row = make_row(s, t, a, p, count_switches(prev, a));

    AssociationProfile next(n);
    for (CuIndex i = 0; i < n; ++i) {
      const BestReply br = best_reply_association(s, a, p, i, cfg.cost_nats(i),
                                                  cfg.switch_margin, streams.tie_break[i]);
      beliefs[i] = update_belief(std::move(beliefs[i]), br.ap, t);
      next[i] = sample_association(beliefs[i].beta(), streams.tie_break[i]);
    }
    if (cfg.record_beta) attach_beta(row, beliefs);
    res.trace.rows.push_back(std::move(row));

    // Best-reply powers at the sampled AP against everyone's current powers.
    PowerProfile updated(n, s.num_channels());
    for (CuIndex i = 0; i < n; ++i) {
      const BestRate target = estimated_best_rate(s, a, p, i, next[i]);
      if (next[i] != a[i]) {
        stay[i] = 1;
        set_row(s, updated, i, next[i], target.power);
      } else {
        ++stay[i];
        const double alpha = 1.0 / static_cast<double>(stay[i] + 1);
        const auto current = power_on(s, p, i, a[i]);
        std::vector<double> blended(current.size());
        for (std::size_t c = 0; c < current.size(); ++c)
          blended[c] = (1.0 - alpha) * current[c] + alpha * target.power[c];
        set_row(s, updated, i, next[i], blended);
      }
    }

    stable = next == a ? stable + 1 : 0;
    prev = a;
    a = std::move(next);
    p = std::move(updated);
    res.iterations = t + 1;
    if (stable >= cfg.memory_len &&
        std::all_of(beliefs.begin(), beliefs.end(),
                    [](const BeliefState& b) { return b.elementary(); })) {
      res.converged = true;
      break;
    }
  }

  res.assoc = a;
  if (res.converged) {
    ProfileSolve finished = solve_powers(s, a, cfg.inner_solver, cfg.inner_tol, &p);
    if (!finished.converged) ++res.inner_failures;
    p = std::move(finished.power);
  }
  res.power = std::move(p);
  res.jep = verify_jep(s, res.assoc, res.power, cfg.jep_power_tol,
                       cfg.jep_rate_margin + max_cost_nats(cfg, n));
  return res;
}

}  // namespace crn
