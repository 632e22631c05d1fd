#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "crn/equilibria.hpp"
#include "crn/netmodel.hpp"
#include "crn/types.hpp"

namespace crn {

// Each CU to its nearest AP by Euclidean distance, ties to the lowest index.
AssociationProfile closest_ap(const NetworkSnapshot& s);

struct ProfileRecord {
  AssociationProfile assoc;
  double sep = 0.0;         // nats
  double throughput = 0.0;  // nats, sum of per-AP MAC sum capacities
};

struct ExhaustiveResult {
  AssociationProfile best_assoc;
  double best_sep = 0.0;
  double best_throughput = 0.0;  // T* in nats
  std::uint64_t profiles = 0;
  std::vector<ProfileRecord> per_profile;  // only when retained

  // Columns: assoc, sep_nats, throughput_bits.
  std::string profiles_csv() const;
};

struct ExhaustiveOptions {
  double tol = kDefaultInnerTol;
  std::uint64_t cap = 1'000'000;
  bool retain_profiles = false;
};

class EnumerationCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Profile r <-> base-W digits of r, CU 0 most significant.
AssociationProfile profile_from_index(std::uint64_t index, std::size_t n_cus,
                                      std::size_t n_aps);

// Number of profiles W^N, or UINT64_MAX if that overflows.
std::uint64_t profile_count(std::size_t n_cus, std::size_t n_aps);

// Maximizes the system equilibrium potential over all W^N profiles. The
// per-AP equilibrium potential depends only on the member set, so it is
// tabulated once per (AP, subset) in parallel and profiles are scored in a
// parallel max-reduction (ties go to the lowest profile index).
ExhaustiveResult exhaustive_sep(const NetworkSnapshot& s, const ExhaustiveOptions& opts = {});

// Serial reference: solves every profile from scratch.
ExhaustiveResult exhaustive_sep_serial(const NetworkSnapshot& s,
                                       const ExhaustiveOptions& opts = {});

struct MaxThroughput {
  double t_star = 0.0;  // nats
  AssociationProfile assoc;
};

// T(a) = sum_w (EP_w(a) - sum_{k in K_w} log n(k)); returns its maximum.
MaxThroughput max_throughput(const NetworkSnapshot& s, double tol = kDefaultInnerTol,
                             std::uint64_t cap = 1'000'000);

struct KConnectivity {
  PowerProfile power;  // N x K, every CU may use every channel
  double throughput = 0.0;  // nats
  SolveReport report;
};

// Every CU water-fills its single budget over all K channels (one merged
// virtual AP); equilibrium by A-IWF.
KConnectivity k_connectivity(const NetworkSnapshot& s, double tol = kDefaultInnerTol,
                             std::size_t max_iter = kDefaultAveragedMaxIter);

// The snapshot with every channel assigned to a single virtual AP.
NetworkSnapshot merged_snapshot(const NetworkSnapshot& s);

}  // namespace crn
