#include "crn/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crn/radio.hpp"

namespace crn {

double potential_ap(const NetworkSnapshot& s, const PowerProfile& p,
                    const AssociationProfile& a, ApIndex w) {
  const auto cus = members(a, w);
  double total = 0.0;
  for (ChannelIndex k : s.channels(w)) {
    double received = s.noise[k];
    for (CuIndex i : cus) received += s.gain(i, k) * p(i, k);
    total += std::log(received);
  }
  return total;
}

double system_potential(const NetworkSnapshot& s, const PowerProfile& p,
                        const AssociationProfile& a) {
  double total = 0.0;
  for (ApIndex w = 0; w < s.num_aps(); ++w) total += potential_ap(s, p, a, w);
  return total;
}

double ne_residual(const NetworkSnapshot& s, const AssociationProfile& a,
                   const PowerProfile& p, ApIndex w) {
  double worst = 0.0;
  for (CuIndex i : members(a, w)) {
    const auto ipn = interference(s, a, p, i, w);
    const auto br = waterfill(gains_on(s, i, w), ipn, s.budget[i]);
    const auto& chans = s.channels(w);
    for (std::size_t c = 0; c < chans.size(); ++c)
      worst = std::max(worst, std::abs(p(i, chans[c]) - br.power[c]));
  }
  return worst;
}

PowerProfile uniform_powers(const NetworkSnapshot& s, const AssociationProfile& a) {
  PowerProfile p(s.num_cus(), s.num_channels());
  for (CuIndex i = 0; i < a.size(); ++i) {
    const auto& chans = s.channels(a[i]);
    const double share = s.budget[i] / static_cast<double>(chans.size());
    for (ChannelIndex k : chans) p(i, k) = share;
  }
  return p;
}

namespace {

// Local view of the subgame of one AP: members x channels(w) blocks.
class Subgame {
 public:
  Subgame(const NetworkSnapshot& s, const AssociationProfile& a, ApIndex w,
          const PowerProfile* init)
      : s_(s), cus_(members(a, w)), chans_(s.channels(w)) {
    const std::size_t m = cus_.size(), kc = chans_.size();
    gain_ = Matrix(m, kc);
    power_ = Matrix(m, kc);
    for (std::size_t r = 0; r < m; ++r) {
      const CuIndex i = cus_[r];
      for (std::size_t c = 0; c < kc; ++c) {
        gain_(r, c) = s.gain(i, chans_[c]);
        power_(r, c) = init ? (*init)(i, chans_[c])
                            : s.budget[i] / static_cast<double>(kc);
      }
    }
  }

  std::size_t size() const { return cus_.size(); }
  std::size_t width() const { return chans_.size(); }

  std::vector<double> ipn(std::size_t r) const {
    std::vector<double> out(chans_.size());
    for (std::size_t c = 0; c < chans_.size(); ++c) {
      double v = s_.noise[chans_[c]];
      for (std::size_t q = 0; q < cus_.size(); ++q)
        if (q != r) v += gain_(q, c) * power_(q, c);
      out[c] = v;
    }
    return out;
  }

  std::vector<double> best_reply(std::size_t r) const {
    return waterfill(gain_.row(r), ipn(r), s_.budget[cus_[r]]).power;
  }

  double potential() const {
    double total = 0.0;
    for (std::size_t c = 0; c < chans_.size(); ++c) {
      double received = s_.noise[chans_[c]];
      for (std::size_t q = 0; q < cus_.size(); ++q) received += gain_(q, c) * power_(q, c);
      total += std::log(received);
    }
    return total;
  }

  double residual() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < cus_.size(); ++r) {
      const auto br = best_reply(r);
      for (std::size_t c = 0; c < chans_.size(); ++c)
        worst = std::max(worst, std::abs(power_(r, c) - br[c]));
    }
    return worst;
  }

  Matrix& power() { return power_; }

  PowerProfile scatter() const {
    PowerProfile p(s_.num_cus(), s_.num_channels());
    for (std::size_t r = 0; r < cus_.size(); ++r)
      for (std::size_t c = 0; c < chans_.size(); ++c) p(cus_[r], chans_[c]) = power_(r, c);
    return p;
  }

 private:
  const NetworkSnapshot& s_;
  std::vector<CuIndex> cus_;
  const std::vector<ChannelIndex>& chans_;
  Matrix gain_;
  Matrix power_;
};

using Clock = std::chrono::steady_clock;

}  // namespace

SolveResult a_iwf(const NetworkSnapshot& s, const AssociationProfile& a, ApIndex w,
                  StepSchedule schedule, double tol, std::size_t max_iter,
                  const PowerProfile* init) {
  const auto start = Clock::now();
  Subgame game(s, a, w, init);
  if (game.size() == 0) throw std::invalid_argument("a_iwf: AP has no associated CUs");
  if (!schedule.valid()) throw std::invalid_argument("a_iwf: invalid step schedule");

  SolveReport report;
  report.potential_trace.push_back(game.potential());
  std::vector<std::vector<double>> replies(game.size());
  double residual = 0.0;
  for (std::size_t t = 0;; ++t) {
    residual = 0.0;
    for (std::size_t r = 0; r < game.size(); ++r) {
      replies[r] = game.best_reply(r);
      for (std::size_t c = 0; c < game.width(); ++c)
        residual = std::max(residual, std::abs(game.power()(r, c) - replies[r][c]));
    }
    if (residual < tol) {
      report.converged = true;
      break;
    }
    if (t >= max_iter) break;
    const double alpha = schedule.alpha(t);
    for (std::size_t r = 0; r < game.size(); ++r)
      for (std::size_t c = 0; c < game.width(); ++c)
        game.power()(r, c) = (1.0 - alpha) * game.power()(r, c) + alpha * replies[r][c];
    report.potential_trace.push_back(game.potential());
    report.iterations = t + 1;
  }
  report.final_residual = residual;
  report.wallclock = Clock::now() - start;
  return {game.scatter(), std::move(report)};
}

SolveResult s_iwf(const NetworkSnapshot& s, const AssociationProfile& a, ApIndex w,
                  double tol, std::size_t max_sweeps, const PowerProfile* init) {
  const auto start = Clock::now();
  Subgame game(s, a, w, init);
  if (game.size() == 0) throw std::invalid_argument("s_iwf: AP has no associated CUs");

  SolveReport report;
  report.potential_trace.push_back(game.potential());
  double residual = game.residual();
  while (residual >= tol && report.iterations < max_sweeps) {
    for (std::size_t r = 0; r < game.size(); ++r) {
      const auto br = game.best_reply(r);
      for (std::size_t c = 0; c < game.width(); ++c) game.power()(r, c) = br[c];
    }
    ++report.iterations;
    report.potential_trace.push_back(game.potential());
    residual = game.residual();
  }
  report.converged = residual < tol;
  report.final_residual = residual;
  report.wallclock = Clock::now() - start;
  return {game.scatter(), std::move(report)};
}

EquilibriumPotential equilibrium_potential(const NetworkSnapshot& s,
                                           const AssociationProfile& a, ApIndex w,
                                           double tol) {
  EquilibriumPotential out;
  if (members(a, w).empty()) {
    out.power = PowerProfile(s.num_cus(), s.num_channels());
    for (ChannelIndex k : s.channels(w)) out.value += std::log(s.noise[k]);
    out.report.converged = true;
    out.report.potential_trace.push_back(out.value);
    return out;
  }
  auto solved = s_iwf(s, a, w, tol);
  out.value = potential_ap(s, solved.power, a, w);
  out.power = std::move(solved.power);
  out.report = std::move(solved.report);
  return out;
}

double system_equilibrium_potential(const NetworkSnapshot& s, const AssociationProfile& a,
                                    double tol) {
  double total = 0.0;
  for (ApIndex w = 0; w < s.num_aps(); ++w)
    total += equilibrium_potential(s, a, w, tol).value;
  return total;
}

ProfileSolve solve_powers(const NetworkSnapshot& s, const AssociationProfile& a,
                          InnerSolver solver, double tol, const PowerProfile* init) {
  ProfileSolve out;
  out.power = PowerProfile(s.num_cus(), s.num_channels());
  for (ApIndex w = 0; w < s.num_aps(); ++w) {
    if (members(a, w).empty()) continue;
    SolveResult r = solver == InnerSolver::kSequential
                        ? s_iwf(s, a, w, tol, kDefaultSequentialMaxSweeps, init)
                        : a_iwf(s, a, w, {}, tol, kDefaultAveragedMaxIter, init);
    out.converged = out.converged && r.report.converged;
    out.max_residual = std::max(out.max_residual, r.report.final_residual);
    for (CuIndex i : members(a, w))
      for (ChannelIndex k : s.channels(w)) out.power(i, k) = r.power(i, k);
  }
  return out;
}

}  // namespace crn
