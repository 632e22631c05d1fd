#include "crn/baselines.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <omp.h>

#include "crn/jaspa.hpp"
#include "crn/radio.hpp"

namespace crn {

AssociationProfile closest_ap(const NetworkSnapshot& s) {
  AssociationProfile a(s.num_cus(), 0);
  for (CuIndex i = 0; i < s.num_cus(); ++i) {
    double best = s.distance(i, 0);
    for (ApIndex w = 1; w < s.num_aps(); ++w) {
      const double d = s.distance(i, w);
      if (d < best) {
        best = d;
        a[i] = w;
      }
    }
  }
  return a;
}

std::string ExhaustiveResult::profiles_csv() const {
  std::string out = "assoc,sep_nats,throughput_bits\n";
  for (const ProfileRecord& r : per_profile)
    out += fmt::format("{},{:.12g},{:.12g}\n", format_assoc(r.assoc), r.sep,
                       r.throughput * kNatsToBits);
  return out;
}

AssociationProfile profile_from_index(std::uint64_t index, std::size_t n_cus,
                                      std::size_t n_aps) {
  AssociationProfile a(n_cus, 0);
  for (std::size_t i = n_cus; i-- > 0;) {
    a[i] = static_cast<ApIndex>(index % n_aps);
    index /= n_aps;
  }
  return a;
}

std::uint64_t profile_count(std::size_t n_cus, std::size_t n_aps) {
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < n_cus; ++i) {
    if (count > std::numeric_limits<std::uint64_t>::max() / n_aps)
      return std::numeric_limits<std::uint64_t>::max();
    count *= n_aps;
  }
  return count;
}

namespace {

double log_noise_total(const NetworkSnapshot& s) {
  double total = 0.0;
  for (ApIndex w = 0; w < s.num_aps(); ++w)
    for (ChannelIndex k : s.channels(w)) total += std::log(s.noise[k]);
  return total;
}

std::uint64_t checked_count(const NetworkSnapshot& s, const ExhaustiveOptions& opts) {
  const std::uint64_t count = profile_count(s.num_cus(), s.num_aps());
  if (count > opts.cap)
    throw EnumerationCapExceeded(fmt::format(
        "{}^{} association profiles exceed the enumeration cap of {}; use a sampling "
        "estimate instead",
        s.num_aps(), s.num_cus(), opts.cap));
  return count;
}

struct Best {
  double value = -std::numeric_limits<double>::infinity();
  std::uint64_t index = 0;

  void offer(double v, std::uint64_t r) {
    if (v > value || (v == value && r < index)) {
      value = v;
      index = r;
    }
  }
};

ExhaustiveResult finish(const NetworkSnapshot& s, const Best& best, std::uint64_t count,
                        double noise_total) {
  ExhaustiveResult out;
  out.profiles = count;
  out.best_assoc = profile_from_index(best.index, s.num_cus(), s.num_aps());
  out.best_sep = best.value;
  out.best_throughput = best.value - noise_total;
  return out;
}

}  // namespace

ExhaustiveResult exhaustive_sep_serial(const NetworkSnapshot& s,
                                       const ExhaustiveOptions& opts) {
  const std::uint64_t count = checked_count(s, opts);
  const double noise_total = log_noise_total(s);
  std::vector<ProfileRecord> records;
  Best best;
  for (std::uint64_t r = 0; r < count; ++r) {
    AssociationProfile a = profile_from_index(r, s.num_cus(), s.num_aps());
    const double sep = system_equilibrium_potential(s, a, opts.tol);
    best.offer(sep, r);
    if (opts.retain_profiles) records.push_back({std::move(a), sep, sep - noise_total});
  }
  ExhaustiveResult out = finish(s, best, count, noise_total);
  out.per_profile = std::move(records);
  return out;
}

ExhaustiveResult exhaustive_sep(const NetworkSnapshot& s, const ExhaustiveOptions& opts) {
  const std::uint64_t count = checked_count(s, opts);
  const std::size_t n = s.num_cus(), w_count = s.num_aps();
  if (w_count == 1) return exhaustive_sep_serial(s, opts);

  // count = W^N <= cap keeps 2^N * W bounded by W * cap.
  const std::uint64_t masks = std::uint64_t{1} << n;
  std::vector<double> table(w_count * masks);
  const auto cells = static_cast<std::int64_t>(table.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t cell = 0; cell < cells; ++cell) {
    const ApIndex w = static_cast<ApIndex>(static_cast<std::uint64_t>(cell) / masks);
    const std::uint64_t mask = static_cast<std::uint64_t>(cell) % masks;
    AssociationProfile a(n, (w + 1) % w_count);
    for (CuIndex i = 0; i < n; ++i)
      if (mask >> i & 1) a[i] = w;
    table[static_cast<std::size_t>(cell)] = equilibrium_potential(s, a, w, opts.tol).value;
  }

  const double noise_total = log_noise_total(s);
  std::vector<ProfileRecord> records(opts.retain_profiles ? count : 0);
  Best best;
  const auto total = static_cast<std::int64_t>(count);
#pragma omp parallel
  {
    Best local;
    std::vector<std::uint64_t> member_mask(w_count);
#pragma omp for schedule(static)
    for (std::int64_t r = 0; r < total; ++r) {
      const auto index = static_cast<std::uint64_t>(r);
      AssociationProfile a = profile_from_index(index, n, w_count);
      std::fill(member_mask.begin(), member_mask.end(), 0);
      for (CuIndex i = 0; i < n; ++i) member_mask[a[i]] |= std::uint64_t{1} << i;
      double sep = 0.0;
      for (ApIndex w = 0; w < w_count; ++w) sep += table[w * masks + member_mask[w]];
      local.offer(sep, index);
      if (opts.retain_profiles)
        records[static_cast<std::size_t>(r)] = {std::move(a), sep, sep - noise_total};
    }
#pragma omp critical(crn_exhaustive_merge)
    best.offer(local.value, local.index);
  }
  ExhaustiveResult out = finish(s, best, count, noise_total);
  out.per_profile = std::move(records);
  return out;
}

MaxThroughput max_throughput(const NetworkSnapshot& s, double tol, std::uint64_t cap) {
  ExhaustiveOptions opts;
  opts.tol = tol;
  opts.cap = cap;
  const ExhaustiveResult ex = exhaustive_sep(s, opts);
  return {ex.best_throughput, ex.best_assoc};
}

NetworkSnapshot merged_snapshot(const NetworkSnapshot& s) {
  NetworkSnapshot merged = s;
  merged.params.n_aps = 1;
  merged.ap_positions.assign(1, s.ap_positions.front());
  merged.ap_channels.assign(1, {});
  for (ChannelIndex k = 0; k < s.num_channels(); ++k) merged.ap_channels[0].push_back(k);
  return merged;
}

KConnectivity k_connectivity(const NetworkSnapshot& s, double tol, std::size_t max_iter) {
  const NetworkSnapshot merged = merged_snapshot(s);
  const AssociationProfile a(s.num_cus(), 0);
  SolveResult solved = a_iwf(merged, a, 0, {}, tol, max_iter);
  KConnectivity out;
  out.throughput = sum_rate(merged, a, solved.power);
  out.power = std::move(solved.power);
  out.report = std::move(solved.report);
  return out;
}

}  // namespace crn
