#include "crn/radio.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crn {

std::vector<CuIndex> members(const AssociationProfile& a, ApIndex w) {
  std::vector<CuIndex> out;
  for (CuIndex i = 0; i < a.size(); ++i)
    if (a[i] == w) out.push_back(i);
  return out;
}

std::vector<double> gains_on(const NetworkSnapshot& s, CuIndex i, ApIndex w) {
  const auto& chans = s.channels(w);
  std::vector<double> g(chans.size());
  for (std::size_t c = 0; c < chans.size(); ++c) g[c] = s.gain(i, chans[c]);
  return g;
}

std::vector<double> power_on(const NetworkSnapshot& s, const PowerProfile& p, CuIndex i,
                             ApIndex w) {
  const auto& chans = s.channels(w);
  std::vector<double> v(chans.size());
  for (std::size_t c = 0; c < chans.size(); ++c) v[c] = p(i, chans[c]);
  return v;
}

std::vector<double> interference(const NetworkSnapshot& s, const AssociationProfile& a,
                                 const PowerProfile& p, CuIndex i, ApIndex w) {
  const auto& chans = s.channels(w);
  std::vector<double> ipn(chans.size());
  for (std::size_t c = 0; c < chans.size(); ++c) ipn[c] = s.noise[chans[c]];
  for (CuIndex j = 0; j < a.size(); ++j) {
    if (j == i || a[j] != w) continue;
    for (std::size_t c = 0; c < chans.size(); ++c)
      ipn[c] += s.gain(j, chans[c]) * p(j, chans[c]);
  }
  return ipn;
}

double rate(std::span<const double> gains, std::span<const double> power,
            std::span<const double> ipn) {
  double r = 0.0;
  for (std::size_t c = 0; c < gains.size(); ++c)
    r += std::log1p(gains[c] * power[c] / ipn[c]);
  return r;
}

double rate(const NetworkSnapshot& s, CuIndex i, std::span<const double> power_on_w,
            std::span<const double> ipn, ApIndex w) {
  const auto g = gains_on(s, i, w);
  return rate(g, power_on_w, ipn);
}

WaterFill waterfill(std::span<const double> gains, std::span<const double> ipn,
                    double budget) {
  if (gains.empty()) throw std::invalid_argument("waterfill: no channels");
  if (gains.size() != ipn.size())
    throw std::invalid_argument("waterfill: gains and ipn differ in length");
  if (!(budget > 0.0)) throw std::invalid_argument("waterfill: budget must be > 0");

  const std::size_t n = gains.size();
  std::vector<double> floor(n);
  for (std::size_t c = 0; c < n; ++c) {
    if (!(gains[c] > 0.0) || !(ipn[c] > 0.0))
      throw std::invalid_argument("waterfill: gains and ipn must be > 0");
    floor[c] = ipn[c] / gains[c];
  }

  auto filled = [&](double level) {
    double total = 0.0;
    for (double f : floor) total += std::max(level - f, 0.0);
    return total;
  };

  double lo = *std::min_element(floor.begin(), floor.end());
  double hi = *std::max_element(floor.begin(), floor.end()) + budget;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (filled(mid) < budget)
      lo = mid;
    else
      hi = mid;
  }

  // Closed-form level on the bracketed active set, then settle the set.
  std::vector<char> active(n);
  for (std::size_t c = 0; c < n; ++c) active[c] = floor[c] < hi;
  double level = hi;
  for (int pass = 0; pass < 2 * static_cast<int>(n) + 2; ++pass) {
    double sum_floor = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < n; ++c)
      if (active[c]) {
        sum_floor += floor[c];
        ++count;
      }
    if (count == 0) {
      // Only reachable through rounding when all floors are equal.
      std::fill(active.begin(), active.end(), 1);
      continue;
    }
    level = (budget + sum_floor) / static_cast<double>(count);
    bool changed = false;
    for (std::size_t c = 0; c < n; ++c) {
      const bool want = floor[c] < level;
      if (want != static_cast<bool>(active[c])) {
        active[c] = want;
        changed = true;
      }
    }
    if (!changed) break;
  }

  WaterFill out;
  out.level = level;
  out.power.resize(n);
  for (std::size_t c = 0; c < n; ++c) out.power[c] = active[c] ? level - floor[c] : 0.0;
  return out;
}

BestRate estimated_best_rate(const NetworkSnapshot& s, const AssociationProfile& a,
                             const PowerProfile& p, CuIndex i, ApIndex w) {
  const auto ipn = interference(s, a, p, i, w);
  const auto g = gains_on(s, i, w);
  auto wf = waterfill(g, ipn, s.budget[i]);
  BestRate out;
  out.rate = rate(g, wf.power, ipn);
  out.power = std::move(wf.power);
  return out;
}

double current_rate(const NetworkSnapshot& s, const AssociationProfile& a,
                    const PowerProfile& p, CuIndex i) {
  const ApIndex w = a[i];
  const auto ipn = interference(s, a, p, i, w);
  const auto pw = power_on(s, p, i, w);
  return rate(s, i, pw, ipn, w);
}

double sum_rate(const NetworkSnapshot& s, const AssociationProfile& a,
                const PowerProfile& p) {
  double total = 0.0;
  for (CuIndex i = 0; i < a.size(); ++i) total += current_rate(s, a, p, i);
  return total;
}

void set_row(const NetworkSnapshot& s, PowerProfile& p, CuIndex i, ApIndex w,
             std::span<const double> v) {
  auto row = p.row(i);
  std::fill(row.begin(), row.end(), 0.0);
  const auto& chans = s.channels(w);
  for (std::size_t c = 0; c < chans.size(); ++c) row[chans[c]] = v[c];
}

}  // namespace crn
