#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <vector>

#include "crn/netmodel.hpp"
#include "crn/types.hpp"

namespace crn {

// Stepsizes alpha_t = (t + offset)^(-exponent), t = 0, 1, ...
// With offset >= 2 and exponent in (1/2, 1] every alpha_t lies in (0, 1),
// alpha_t -> 0, sum alpha_t diverges and sum alpha_t^2 converges.
// exponent = 1 is the harmonic rule 1 / (t + offset); the default 0.55
// decays slowly enough for the averaged iterates to settle within the
// iteration cap.
struct StepSchedule {
  std::size_t offset = 2;
  double exponent = 0.55;

  static StepSchedule harmonic(std::size_t offset = 2) { return {offset, 1.0}; }

  double alpha(std::size_t t) const {
    return std::pow(static_cast<double>(t + offset), -exponent);
  }
  bool valid() const { return offset >= 2 && exponent > 0.5 && exponent <= 1.0; }
};

struct SolveReport {
  bool converged = false;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  std::vector<double> potential_trace;  // initial value, then one per iteration
  std::chrono::nanoseconds wallclock{0};
};

struct SolveResult {
  PowerProfile power;
  SolveReport report;
};

enum class InnerSolver { kAveraged, kSequential };

inline constexpr double kDefaultInnerTol = 1e-7;
inline constexpr std::size_t kDefaultAveragedMaxIter = 100000;
inline constexpr std::size_t kDefaultSequentialMaxSweeps = 1000;

// sum_{k in K_w} log(n(k) + sum_{i in N_w} g(i,k) p(i,k)).
double potential_ap(const NetworkSnapshot& s, const PowerProfile& p,
                    const AssociationProfile& a, ApIndex w);

double system_potential(const NetworkSnapshot& s, const PowerProfile& p,
                        const AssociationProfile& a);

// max_{i in N_w} || p_i - waterfill(ipn_i) ||_inf: zero exactly at a NE of
// the subgame of AP w.
double ne_residual(const NetworkSnapshot& s, const AssociationProfile& a,
                   const PowerProfile& p, ApIndex w);

// Every CU spreads its budget evenly over its AP's channels.
PowerProfile uniform_powers(const NetworkSnapshot& s, const AssociationProfile& a);

// Averaged iterative water-filling on the subgame of AP w. Only rows of CUs
// in N_w are touched; `init` (if given) supplies their starting powers.
SolveResult a_iwf(const NetworkSnapshot& s, const AssociationProfile& a, ApIndex w,
                  StepSchedule schedule = {}, double tol = kDefaultInnerTol,
                  std::size_t max_iter = kDefaultAveragedMaxIter,
                  const PowerProfile* init = nullptr);

// Sequential (round-robin) iterative water-filling; one iteration is a sweep
// over N_w in ascending CU order.
SolveResult s_iwf(const NetworkSnapshot& s, const AssociationProfile& a, ApIndex w,
                  double tol = kDefaultInnerTol,
                  std::size_t max_sweeps = kDefaultSequentialMaxSweeps,
                  const PowerProfile* init = nullptr);

struct EquilibriumPotential {
  double value = 0.0;
  PowerProfile power;
  SolveReport report;
};

// Maximum of the AP-w potential, reached by S-IWF. Empty N_w yields the
// noise-only potential without running a solver.
EquilibriumPotential equilibrium_potential(const NetworkSnapshot& s,
                                           const AssociationProfile& a, ApIndex w,
                                           double tol = kDefaultInnerTol);

double system_equilibrium_potential(const NetworkSnapshot& s, const AssociationProfile& a,
                                    double tol = kDefaultInnerTol);

struct ProfileSolve {
  PowerProfile power;
  bool converged = true;
  double max_residual = 0.0;
};

// NE powers for every AP under association a, merged into one profile.
ProfileSolve solve_powers(const NetworkSnapshot& s, const AssociationProfile& a,
                          InnerSolver solver, double tol = kDefaultInnerTol,
                          const PowerProfile* init = nullptr);

}  // namespace crn
