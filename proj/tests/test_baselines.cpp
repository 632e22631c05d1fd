#include <cmath>

#include "crn/baselines.hpp"
#include "crn/radio.hpp"
#include "crn/rng.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace crn;
using doctest::Approx;

namespace {

NetworkSnapshot random_snapshot(std::size_t n, std::size_t w, std::size_t k, std::uint64_t seed,
                                double noise = 1e-2) {
  NetworkParams p;
  p.n_cus = n;
  p.n_aps = w;
  p.n_channels = k;
  p.noise_per_channel = noise;
  p.seed = seed;
  return generate_snapshot(p);
}

}  // namespace

TEST_CASE("closest AP with ties to the lower index") {
  auto s = test::make_snapshot({{1, 1}, {1, 1}, {1, 1}}, {0, 1}, {1, 1});
  s.ap_positions = {{0, 0}, {4, 0}};
  s.cu_positions = {{1, 0}, {3.5, 1}, {2, 5}};
  CHECK(closest_ap(s) == AssociationProfile{0, 1, 0});
}

TEST_CASE("profile indexing") {
  CHECK(profile_from_index(5, 3, 2) == AssociationProfile{1, 0, 1});
  CHECK(profile_from_index(0, 4, 3) == AssociationProfile{0, 0, 0, 0});
  CHECK(profile_from_index(80, 4, 3) == AssociationProfile{2, 2, 2, 2});
  CHECK(profile_count(3, 2) == 8);
  CHECK(profile_count(8, 4) == 65536);
  CHECK(profile_count(200, 4) == UINT64_MAX);
}

TEST_CASE("parallel enumeration equals the serial reference exactly") {
  Rng rng(15);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = 2 + rng.below(4), w = 1 + rng.below(3);
    const auto s = random_snapshot(n, w, w * (1 + rng.below(3)), rng.next_u64());
    ExhaustiveOptions opts;
    opts.retain_profiles = true;
    const auto par = exhaustive_sep(s, opts);
    const auto ser = exhaustive_sep_serial(s, opts);
    CHECK(par.best_assoc == ser.best_assoc);
    CHECK(par.best_sep == ser.best_sep);
    CHECK(par.best_throughput == ser.best_throughput);
    CHECK(par.profiles == profile_count(n, w));
    REQUIRE(par.per_profile.size() == ser.per_profile.size());
    for (std::size_t r = 0; r < par.per_profile.size(); ++r) {
      CHECK(par.per_profile[r].assoc == ser.per_profile[r].assoc);
      CHECK(par.per_profile[r].sep == ser.per_profile[r].sep);
      CHECK(par.per_profile[r].sep <= par.best_sep);
    }
    CHECK(par.profiles_csv() == ser.profiles_csv());
  }
}

TEST_CASE("best SEP is invariant under relabelling CUs") {
  const auto s = random_snapshot(4, 2, 6, 3);
  auto t = s;
  for (ChannelIndex k = 0; k < s.num_channels(); ++k) {
    std::swap(t.gain(0, k), t.gain(2, k));
    std::swap(t.gain(1, k), t.gain(3, k));
  }
  const auto a = exhaustive_sep(s), b = exhaustive_sep(t);
  CHECK(std::abs(a.best_sep - b.best_sep) <= 1e-9);
  CHECK(b.best_assoc[0] == a.best_assoc[2]);
  CHECK(b.best_assoc[1] == a.best_assoc[3]);
}

TEST_CASE("best SEP matches a projected-gradient enumeration") {
  Rng rng(70);
  for (int trial = 0; trial < 3; ++trial) {
    const auto s = random_snapshot(3, 2, 4, rng.next_u64());
    double best = -1e300;
    for (std::uint64_t r = 0; r < profile_count(3, 2); ++r) {
      const auto a = profile_from_index(r, 3, 2);
      double sep = 0.0;
      for (ApIndex w = 0; w < 2; ++w) {
        std::vector<CuIndex> cus;
        for (CuIndex i = 0; i < 3; ++i)
          if (a[i] == w) cus.push_back(i);
        if (cus.empty()) {
          for (ChannelIndex k : s.channels(w)) sep += std::log(s.noise[k]);
          continue;
        }
        sep += oracle::projected_gradient_potential(test::subgame_of(s, cus, w)).value;
      }
      best = std::max(best, sep);
    }
    CHECK(std::abs(exhaustive_sep(s).best_sep - best) <= 1e-6);
  }
}

TEST_CASE("max throughput on one AP matches the sum-capacity grid") {
  Rng rng(19);
  for (int trial = 0; trial < 4; ++trial) {
    const auto s = random_snapshot(2, 1, 2, rng.next_u64());
    const auto mt = max_throughput(s);
    const double grid =
        oracle::grid_max_two_by_two(test::subgame_of(s, {0, 1}, 0), oracle::sum_capacity_objective);
    CHECK(std::abs(mt.t_star - grid) <= 1e-4);
    CHECK(mt.assoc == AssociationProfile{0, 0});
  }
}

TEST_CASE("max throughput bounds JASPA-style profiles") {
  const auto s = random_snapshot(4, 2, 8, 5);
  const auto mt = max_throughput(s);
  ExhaustiveOptions opts;
  opts.retain_profiles = true;
  for (const auto& rec : exhaustive_sep(s, opts).per_profile)
    CHECK(rec.throughput <= mt.t_star + 1e-12);
}

TEST_CASE("K-connectivity reaches an equilibrium on the merged network") {
  const auto s = random_snapshot(4, 3, 9, 21);
  const auto kc = k_connectivity(s);
  CHECK(kc.report.converged);
  const auto merged = merged_snapshot(s);
  CHECK(merged.num_aps() == 1);
  CHECK(merged.channels(0).size() == 9);
  const AssociationProfile a(4, 0);
  CHECK(ne_residual(merged, a, kc.power, 0) <= 1e-6);
  CHECK(kc.throughput == Approx(sum_rate(merged, a, kc.power)).epsilon(1e-12));
  for (CuIndex i = 0; i < 4; ++i) {
    double used = 0.0;
    for (ChannelIndex k = 0; k < 9; ++k) used += kc.power(i, k);
    CHECK(used == Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("enumeration refuses oversized searches") {
  const auto s = random_snapshot(8, 4, 8, 2);
  ExhaustiveOptions opts;
  opts.cap = 1000;
  CHECK_THROWS_AS(exhaustive_sep(s, opts), EnumerationCapExceeded);
  CHECK_THROWS_AS(exhaustive_sep_serial(s, opts), EnumerationCapExceeded);
}

TEST_CASE("baseline corner cases") {
  const auto one = random_snapshot(3, 1, 4, 1);
  CHECK(closest_ap(one) == AssociationProfile(3, 0));
  const auto ex = exhaustive_sep(one);
  CHECK(ex.profiles == 1);
  CHECK(ex.best_assoc == AssociationProfile(3, 0));

  auto s = test::make_snapshot({{1, 1}}, {0, 1}, {1, 1});
  s.ap_positions = {{1, 0}, {5, 0}};
  s.cu_positions = {{0, 0}};
  CHECK(closest_ap(s) == AssociationProfile{0});
}

TEST_CASE("symmetric network: both split profiles are optimal") {
  const auto s = test::make_snapshot({{1.0, 1.0, 1.0, 1.0}, {1.0, 1.0, 1.0, 1.0}}, {0, 0, 1, 1},
                                     {0.1, 0.1, 0.1, 0.1});
  ExhaustiveOptions opts;
  opts.retain_profiles = true;
  const auto ex = exhaustive_sep(s, opts);
  REQUIRE(ex.per_profile.size() == 4);
  // Profiles in index order: (1,1), (1,2), (2,1), (2,2).
  CHECK(std::abs(ex.per_profile[1].sep - ex.best_sep) <= 1e-12);
  CHECK(std::abs(ex.per_profile[2].sep - ex.best_sep) <= 1e-12);
  CHECK(ex.best_assoc == AssociationProfile{0, 1});
}

TEST_CASE("max throughput closed forms") {
  const auto lone = random_snapshot(1, 1, 5, 4);
  const auto g = gains_on(lone, 0, 0);
  const double cap = oracle::rate(g, oracle::waterfill_sorted(g, lone.noise, 1.0), lone.noise);
  CHECK(max_throughput(lone).t_star == Approx(cap).epsilon(1e-9));

  // One channel per AP: T_w = log(1 + sum g / n) for the best split.
  const auto s = random_snapshot(2, 2, 2, 8);
  double best = -1.0;
  for (std::uint64_t r = 0; r < 4; ++r) {
    const auto a = profile_from_index(r, 2, 2);
    double t = 0.0;
    for (ApIndex w = 0; w < 2; ++w) {
      const ChannelIndex k = s.channels(w)[0];
      double snr = 0.0;
      for (CuIndex i = 0; i < 2; ++i)
        if (a[i] == w) snr += s.gain(i, k) / s.noise[k];
      t += std::log1p(snr);
    }
    best = std::max(best, t);
  }
  CHECK(max_throughput(s).t_star == Approx(best).epsilon(1e-12));
}

TEST_CASE("K-connectivity corner cases") {
  // One AP: same game as the ordinary inner solve.
  const auto one = random_snapshot(3, 1, 4, 5);
  const AssociationProfile a(3, 0);
  const auto kc = k_connectivity(one);
  const auto inner = solve_powers(one, a, InnerSolver::kSequential);
  CHECK(kc.throughput == Approx(sum_rate(one, a, inner.power)).epsilon(1e-5));

  // Lone CU: more channels can only help.
  const auto lone = random_snapshot(1, 3, 9, 6);
  const double merged = k_connectivity(lone).throughput;
  for (ApIndex w = 0; w < 3; ++w) {
    const auto g = gains_on(lone, 0, w);
    std::vector<double> n;
    for (ChannelIndex k : lone.channels(w)) n.push_back(lone.noise[k]);
    CHECK(merged >= oracle::rate(g, oracle::waterfill_sorted(g, n, 1.0), n) - 1e-9);
  }

  const auto two = random_snapshot(2, 2, 6, 7);
  const auto res = k_connectivity(two);
  CHECK(ne_residual(merged_snapshot(two), {0, 0}, res.power, 0) < kDefaultInnerTol);
}

TEST_CASE("best SEP dominates the closest-AP profile") {
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = random_snapshot(4, 3, 9, rng.next_u64());
    CHECK(exhaustive_sep(s).best_sep >= system_equilibrium_potential(s, closest_ap(s)) - 1e-12);
  }
}
