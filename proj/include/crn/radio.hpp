#pragma once

#include <span>
#include <vector>

#include "crn/netmodel.hpp"
#include "crn/types.hpp"

namespace crn {

// Rates are in nats throughout the library; convert at the reporting edge.
inline constexpr double kNatsToBits = 1.4426950408889634;  // 1 / ln 2

// CUs associated with AP w, ascending.
std::vector<CuIndex> members(const AssociationProfile& a, ApIndex w);

// Gains of CU i restricted to the channels of AP w (in channels(w) order).
std::vector<double> gains_on(const NetworkSnapshot& s, CuIndex i, ApIndex w);

// Row i of p restricted to the channels of AP w.
std::vector<double> power_on(const NetworkSnapshot& s, const PowerProfile& p, CuIndex i,
                             ApIndex w);

// Interference-plus-noise n(k) + sum_{j != i, a(j) = w} g(j,k) p(j,k) for each
// channel of AP w. w need not be CU i's own AP.
std::vector<double> interference(const NetworkSnapshot& s, const AssociationProfile& a,
                                 const PowerProfile& p, CuIndex i, ApIndex w);

// sum_k log(1 + gain(k) power(k) / ipn(k)).
double rate(std::span<const double> gains, std::span<const double> power,
            std::span<const double> ipn);

double rate(const NetworkSnapshot& s, CuIndex i, std::span<const double> power_on_w,
            std::span<const double> ipn, ApIndex w);

struct WaterFill {
  std::vector<double> power;
  double level = 0.0;  // 1 / sigma
};

// Rate-maximizing split of `budget` over the channels: p(k) = [L - ipn/gain]^+
// with L chosen so that the powers sum to the budget. The level is bracketed
// by bisection and then fixed in closed form on the resulting active set.
// Throws std::invalid_argument for an empty channel set or nonpositive input.
WaterFill waterfill(std::span<const double> gains, std::span<const double> ipn,
                    double budget);

struct BestRate {
  double rate = 0.0;
  std::vector<double> power;  // over channels(w)
};

// What CU i could get at AP w by water-filling its whole budget against the
// interference other CUs currently put on w.
BestRate estimated_best_rate(const NetworkSnapshot& s, const AssociationProfile& a,
                             const PowerProfile& p, CuIndex i, ApIndex w);

// Rate of CU i at its own AP under the current profile.
double current_rate(const NetworkSnapshot& s, const AssociationProfile& a,
                    const PowerProfile& p, CuIndex i);

double sum_rate(const NetworkSnapshot& s, const AssociationProfile& a, const PowerProfile& p);

// Writes v (over channels(w)) into row i of p and zeroes the rest of the row.
void set_row(const NetworkSnapshot& s, PowerProfile& p, CuIndex i, ApIndex w,
             std::span<const double> v);

}  // namespace crn
