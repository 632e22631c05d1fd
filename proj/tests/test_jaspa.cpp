#include <cmath>
#include <set>

#include "crn/jaspa.hpp"
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

JaspaConfig config_for(std::size_t n, std::uint64_t seed) {
  JaspaConfig cfg;
  cfg.memory_len = std::max<std::size_t>(10, n);
  cfg.seed = seed;
  return cfg;
}

// Profiles of a two-CU network that no CU wants to leave, found without
// the library solvers: NE powers by projected gradient on each AP, then
// each CU's best water-filled rate elsewhere versus its current rate.
std::set<AssociationProfile> enumerate_stable(const NetworkSnapshot& s, double margin) {
  std::set<AssociationProfile> out;
  const std::size_t w_count = s.num_aps();
  for (ApIndex w0 = 0; w0 < w_count; ++w0)
    for (ApIndex w1 = 0; w1 < w_count; ++w1) {
      const AssociationProfile a{w0, w1};
      // power[i] over channels(a[i])
      std::vector<std::vector<double>> power(2);
      for (ApIndex w = 0; w < w_count; ++w) {
        std::vector<CuIndex> cus;
        for (CuIndex i = 0; i < 2; ++i)
          if (a[i] == w) cus.push_back(i);
        if (cus.empty()) continue;
        const auto g = test::subgame_of(s, cus, w);
        const auto pg = oracle::projected_gradient_potential(g);
        for (std::size_t m = 0; m < cus.size(); ++m) power[cus[m]] = pg.power[m];
      }
      auto ipn_at = [&](CuIndex i, ApIndex w) {
        std::vector<double> ipn;
        const auto& chans = s.channels(w);
        for (std::size_t c = 0; c < chans.size(); ++c) {
          double v = s.noise[chans[c]];
          const CuIndex j = 1 - i;
          if (a[j] == w) v += s.gain(j, chans[c]) * power[j][c];
          ipn.push_back(v);
        }
        return ipn;
      };
      auto gains_at = [&](CuIndex i, ApIndex w) {
        std::vector<double> g;
        for (ChannelIndex k : s.channels(w)) g.push_back(s.gain(i, k));
        return g;
      };
      bool stable = true;
      for (CuIndex i = 0; i < 2; ++i) {
        const double now = oracle::rate(gains_at(i, a[i]), power[i], ipn_at(i, a[i]));
        for (ApIndex w = 0; w < w_count; ++w) {
          if (w == a[i]) continue;
          const auto g = gains_at(i, w);
          const auto ipn = ipn_at(i, w);
          const double alt = oracle::rate(g, oracle::waterfill_sorted(g, ipn, s.budget[i]), ipn);
          if (alt > now + margin) stable = false;
        }
      }
      if (stable) out.insert(a);
    }
  return out;
}

}  // namespace

TEST_CASE("belief window with warm-up padding") {
  BeliefState b(2, 3);
  b = update_belief(b, 1, 0);
  CHECK(b.beta() == std::vector<double>{0.0, 1.0});
  CHECK(b.elementary_ap() == ApIndex{1});
  b = update_belief(b, 0, 1);
  CHECK(b.beta()[0] == Approx(1.0 / 3));
  CHECK(b.beta()[1] == Approx(2.0 / 3));
  CHECK_FALSE(b.elementary());
  b = update_belief(b, 0, 2);
  CHECK(b.beta()[0] == Approx(2.0 / 3));
  b = update_belief(b, 0, 3);
  CHECK(b.beta() == std::vector<double>{1.0, 0.0});
  CHECK(b.elementary_ap() == ApIndex{0});
  CHECK(b.memory().size() == 3);

  CHECK_THROWS_AS(update_belief(b, 0, 7), std::logic_error);
  CHECK_THROWS_AS(update_belief(b, 5, 4), std::invalid_argument);
  // t = 0 starts over.
  b = update_belief(b, 1, 0);
  CHECK(b.replies_seen() == 1);
  CHECK(b.beta() == std::vector<double>{0.0, 1.0});
}

TEST_CASE("belief equals the empirical distribution of the last M replies") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t w = 1 + rng.below(4), m = 1 + rng.below(8);
    BeliefState b(w, m);
    std::vector<ApIndex> history;
    for (std::size_t t = 0; t < 30; ++t) {
      const ApIndex r = rng.below(w);
      history.push_back(r);
      b = update_belief(b, r, t);
      std::vector<double> expect(w, 0.0);
      for (std::size_t back = 0; back < m; ++back) {
        // Warm-up pads with the first reply.
        const ApIndex seen = back <= t ? history[t - back] : history[0];
        expect[seen] += 1.0 / m;
      }
      double sum = 0.0;
      for (ApIndex v = 0; v < w; ++v) {
        CHECK(b.beta()[v] == Approx(expect[v]).epsilon(1e-12));
        sum += b.beta()[v];
      }
      CHECK(sum == Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("sampling follows beta") {
  const std::vector<double> beta{0.2, 0.0, 0.5, 0.3};
  Rng rng(101);
  std::vector<int> hits(4, 0);
  constexpr int draws = 200000;
  for (int d = 0; d < draws; ++d) ++hits[sample_association(beta, rng)];
  CHECK(hits[1] == 0);
  for (int w : {0, 2, 3}) CHECK(hits[w] / double(draws) == Approx(beta[w]).epsilon(0.02));
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS(sample_association(zero, rng));
}

TEST_CASE("best reply moves to a clearly better AP unless the cost forbids it") {
  // CU alone; AP 0 has one poor channel, AP 1 one good channel.
  const auto s = test::make_snapshot({{0.01, 5.0}}, {0, 1}, {1.0, 1.0});
  const AssociationProfile a{0};
  PowerProfile p(1, 2);
  p(0, 0) = 1.0;
  Rng rng(1);
  const auto br = best_reply_association(s, a, p, 0, 0.0, 1e-9, rng);
  CHECK(br.ap == 1);
  CHECK(br.current_rate == Approx(std::log1p(0.01)));
  CHECK(br.best_rate == Approx(std::log1p(5.0)));

  const auto stay = best_reply_association(s, a, p, 0, 10.0, 1e-9, rng);
  CHECK(stay.ap == 0);
  CHECK(stay.best_rate == stay.current_rate);
}

TEST_CASE("best reply ties are split at random") {
  const auto s = test::make_snapshot({{0.01, 5.0, 5.0}}, {0, 1, 2}, {1.0, 1.0, 1.0});
  const AssociationProfile a{0};
  PowerProfile p(1, 3);
  p(0, 0) = 1.0;
  Rng rng(3);
  std::set<ApIndex> seen;
  for (int d = 0; d < 64; ++d) seen.insert(best_reply_association(s, a, p, 0, 0.0, 1e-9, rng).ap);
  CHECK(seen == std::set<ApIndex>{1, 2});
}

TEST_CASE("verify_jep") {
  const auto s = random_snapshot(3, 1, 4, 8);
  const AssociationProfile a{0, 0, 0};
  const auto ne = solve_powers(s, a, InnerSolver::kSequential);
  const auto ok = verify_jep(s, a, ne.power, 1e-5, 1e-6);
  CHECK(ok.is_jep);
  CHECK(ok.best_deviation_gain == std::vector<double>(3, 0.0));

  const auto bad = verify_jep(s, a, uniform_powers(s, a), 1e-5, 1e-6);
  CHECK(bad.power_residual > 1e-5);
  CHECK_FALSE(bad.is_jep);

  // Lonely CU stuck on a poor AP is not at a JEP.
  const auto t = test::make_snapshot({{0.01, 5.0}}, {0, 1}, {1.0, 1.0});
  PowerProfile q(1, 2);
  q(0, 0) = 1.0;
  const auto moved = verify_jep(t, {0}, q, 1e-5, 1e-6);
  CHECK_FALSE(moved.is_jep);
  CHECK(moved.best_deviation_gain[0] == Approx(std::log1p(5.0) - std::log1p(0.01)));
  CHECK(moved.to_json().at("is_jep") == false);
}

TEST_CASE("config validation") {
  JaspaConfig cfg;
  cfg.memory_len = 3;
  CHECK_FALSE(validate_config(cfg, 5).empty());
  cfg.allow_short_memory = true;
  CHECK(validate_config(cfg, 5).empty());
  cfg.inner_tol = 0.0;
  CHECK_FALSE(validate_config(cfg, 5).empty());

  const auto s = random_snapshot(5, 2, 4, 1);
  JaspaConfig short_memory;
  short_memory.memory_len = 2;
  CHECK_THROWS_AS(jaspa_run(s, short_memory), std::invalid_argument);

  cfg = {};
  cfg.per_cu_cost_bits = {1.0, 2.0};
  CHECK(cfg.cost_nats(1) == Approx(2.0 * std::log(2.0)));
}

TEST_CASE("trace formatting") {
  CHECK(format_assoc({0, 1, 1}) == "1-2-2");
  RunTrace tr;
  tr.rows.push_back({0, {0, 1}, std::log(2.0), 1.5, 0, {}});
  const auto csv = tr.to_csv();
  CHECK(csv.rfind("iter,sum_rate_bits,potential_nats,switches,assoc\n", 0) == 0);
  CHECK(csv.find("1-2") != std::string::npos);
}

TEST_CASE("JASPA converges to a JEP on small networks") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = random_snapshot(4, 2, 8, rng.next_u64());
    const auto res = jaspa_run(s, config_for(4, trial));
    CHECK(res.converged);
    REQUIRE(res.jep);
    CHECK(res.jep->is_jep);
    CHECK(res.iterations == res.trace.rows.size());
    CHECK(res.inner_failures == 0);
  }
}

TEST_CASE("JASPA lands on a profile the enumeration oracle calls stable") {
  Rng rng(808);
  for (int trial = 0; trial < 8; ++trial) {
    const auto s = random_snapshot(2, 2, 4, rng.next_u64());
    const auto stable = enumerate_stable(s, 1e-6);
    REQUIRE_FALSE(stable.empty());
    const auto res = jaspa_run(s, config_for(2, trial));
    REQUIRE(res.converged);
    CHECK(stable.count(res.assoc) == 1);
  }
}

TEST_CASE("sequential and simultaneous variants") {
  Rng rng(44);
  for (int trial = 0; trial < 8; ++trial) {
    const auto s = random_snapshot(4, 2, 8, rng.next_u64());
    const auto se = se_jaspa_run(s, config_for(4, trial));
    CHECK(se.converged);
    REQUIRE(se.jep);
    CHECK(se.jep->is_jep);
    // One CU acts per step.
    for (const auto& row : se.trace.rows) CHECK(row.switches <= 1);

    const auto si = si_jaspa_run(s, config_for(4, trial));
    CHECK(si.converged);
    REQUIRE(si.jep);
    CHECK(si.jep->is_jep);
  }
}

TEST_CASE("runs are reproducible and record beliefs on request") {
  const auto s = random_snapshot(5, 3, 9, 1234);
  auto cfg = config_for(5, 77);
  cfg.record_beta = true;
  const auto a = jaspa_run(s, cfg);
  const auto b = jaspa_run(s, cfg);
  CHECK(a.trace.to_csv() == b.trace.to_csv());
  CHECK(a.assoc == b.assoc);
  CHECK(a.power == b.power);
  REQUIRE_FALSE(a.trace.rows.empty());
  CHECK(a.trace.rows.front().beta.size() == 5);
  CHECK(a.trace.rows.front().beta.front().size() == 3);

  const auto si1 = si_jaspa_run(s, cfg);
  const auto si2 = si_jaspa_run(s, cfg);
  CHECK(si1.trace.to_csv() == si2.trace.to_csv());
}

TEST_CASE("connection cost makes switching rarer") {
  Rng rng(61);
  double free_switches = 0, costly_switches = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = random_snapshot(6, 3, 12, rng.next_u64());
    auto cfg = config_for(6, trial);
    for (const auto& r : jaspa_run(s, cfg).trace.rows) free_switches += r.switches;
    cfg.connection_cost_bits = 3.0;
    const auto costly = jaspa_run(s, cfg);
    for (const auto& r : costly.trace.rows) costly_switches += r.switches;
    REQUIRE(costly.jep);
    CHECK(costly.jep->is_jep);
  }
  CHECK(costly_switches <= free_switches);
}

TEST_CASE("belief and sampling small cases") {
  BeliefState b(3, 2);
  b = update_belief(b, 0, 0);
  CHECK(b.beta() == std::vector<double>{1.0, 0.0, 0.0});
  b = update_belief(b, 1, 1);
  CHECK(b.beta() == std::vector<double>{0.5, 0.5, 0.0});

  BeliefState c(4, 5);
  for (std::size_t t = 0; t < 5; ++t) c = update_belief(c, 2, t);
  CHECK(c.beta() == std::vector<double>{0.0, 0.0, 1.0, 0.0});

  Rng rng(17);
  const std::vector<double> e3{0.0, 0.0, 1.0};
  for (int d = 0; d < 100; ++d) CHECK(sample_association(e3, rng) == 2);

  const std::vector<double> half{0.5, 0.5};
  int first = 0;
  for (int d = 0; d < 10000; ++d) first += sample_association(half, rng) == 0;
  CHECK(first >= 4800);
  CHECK(first <= 5200);

  Rng r1(5), r2(5);
  for (int d = 0; d < 50; ++d) CHECK(sample_association(half, r1) == sample_association(half, r2));
}

TEST_CASE("best reply with one AP or an empty better AP") {
  const auto one = random_snapshot(3, 1, 4, 2);
  const AssociationProfile a{0, 0, 0};
  const auto p = uniform_powers(one, a);
  Rng rng(1);
  for (CuIndex i = 0; i < 3; ++i) CHECK(best_reply_association(one, a, p, i, 0, 1e-9, rng).ap == 0);

  // CU 0 shares AP 0 with a strong interferer; AP 1 is empty and clean.
  const auto s = test::make_snapshot({{1.0, 1.0}, {5.0, 5.0}}, {0, 1}, {0.1, 0.1});
  const AssociationProfile b{0, 0};
  PowerProfile q(2, 2);
  q(0, 0) = 1.0, q(1, 0) = 1.0;
  const double here = current_rate(s, b, q, 0);
  const double there = estimated_best_rate(s, b, q, 0, 1).rate;
  REQUIRE(there > here);
  CHECK(best_reply_association(s, b, q, 0, 0, 1e-9, rng).ap == 1);
  CHECK(best_reply_association(s, b, q, 0, 1e6, 1e-9, rng).ap == 0);
}

TEST_CASE("JASPA corner networks") {
  const auto one = random_snapshot(4, 1, 4, 3);
  const auto r = jaspa_run(one, config_for(4, 1));
  CHECK(r.converged);
  CHECK(r.assoc == AssociationProfile(4, 0));
  CHECK(r.iterations <= 10 + 1);

  // A single CU settles on the AP with the larger single-user capacity.
  Rng rng(90);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = random_snapshot(1, 2, 6, rng.next_u64());
    double cap[2];
    for (ApIndex w = 0; w < 2; ++w) {
      const auto g = gains_on(s, 0, w);
      std::vector<double> n;
      for (ChannelIndex k : s.channels(w)) n.push_back(s.noise[k]);
      cap[w] = oracle::rate(g, oracle::waterfill_sorted(g, n, 1.0), n);
    }
    const auto res = jaspa_run(s, config_for(1, trial));
    CHECK(res.converged);
    CHECK(res.assoc[0] == (cap[1] > cap[0] ? 1u : 0u));
  }
}

TEST_CASE("Se-JASPA moves one CU at a time and never lowers the potential") {
  Rng rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const auto s = random_snapshot(n, 1 + rng.below(3), 6, rng.next_u64());
    const auto res = se_jaspa_run(s, config_for(n, trial));
    const auto& rows = res.trace.rows;
    for (std::size_t t = 1; t < rows.size(); ++t)
      CHECK(rows[t].potential - rows[t - 1].potential >= -1e-9);
  }

  const auto s = random_snapshot(5, 2, 8, 13);
  for (std::size_t t = 1; t < 6; ++t) {
    auto cfg = config_for(5, 4);
    cfg.max_outer = t;
    const auto before = se_jaspa_run(s, cfg);
    cfg.max_outer = t + 1;
    const auto after = se_jaspa_run(s, cfg);
    const CuIndex acting = (t + 1) % 5;
    for (CuIndex i = 0; i < 5; ++i) {
      if (i == acting) continue;
      for (ChannelIndex k = 0; k < 8; ++k) CHECK(before.power(i, k) == after.power(i, k));
    }
  }
}

TEST_CASE("Si-JASPA reaches water-filling for a lone CU and JEPs for N=6, W=3") {
  const auto lone = random_snapshot(1, 1, 5, 8);
  const auto r = si_jaspa_run(lone, config_for(1, 0));
  CHECK(r.converged);
  const auto g = gains_on(lone, 0, 0);
  const auto wf = oracle::waterfill_sorted(g, lone.noise, 1.0);
  for (ChannelIndex k = 0; k < 5; ++k) CHECK(r.power(0, k) == Approx(wf[k]).epsilon(1e-6));

  Rng rng(606);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_snapshot(6, 3, 12, rng.next_u64());
    const auto res = si_jaspa_run(s, config_for(6, trial));
    if (!res.converged) continue;
    REQUIRE(res.jep);
    CHECK(res.jep->is_jep);
  }
}

TEST_CASE("verify_jep on a lone CU") {
  const auto s = test::make_snapshot({{0.3, 0.1, 2.0, 1.0}}, {0, 0, 1, 1}, {0.1, 0.1, 0.1, 0.1});
  const AssociationProfile a{1};
  const auto ne = solve_powers(s, a, InnerSolver::kSequential);
  CHECK(verify_jep(s, a, ne.power, 1e-5, 1e-6).is_jep);
  auto bumped = ne.power;
  bumped(0, 2) += 10 * 1e-5;
  bumped(0, 3) -= 10 * 1e-5;
  const auto rep = verify_jep(s, a, bumped, 1e-5, 1e-6);
  CHECK_FALSE(rep.is_jep);
  CHECK(rep.power_residual >= 1e-5);
}
