#pragma once

#include <algorithm>
#include <vector>

#include "crn/netmodel.hpp"
#include "oracles.hpp"

namespace crn::test {

// Hand-built snapshot: gain rows per CU, channel owners (0-based), noise.
inline NetworkSnapshot make_snapshot(const std::vector<std::vector<double>>& gain,
                                     const std::vector<ApIndex>& owner,
                                     const std::vector<double>& noise, double budget = 1.0) {
  NetworkSnapshot s;
  const std::size_t n = gain.size();
  const std::size_t k = noise.size();
  ApIndex w_count = 0;
  for (ApIndex w : owner) w_count = std::max(w_count, w + 1);
  s.params.n_cus = n;
  s.params.n_aps = w_count;
  s.params.n_channels = k;
  s.params.budget_per_cu = budget;
  s.ap_channels.assign(w_count, {});
  for (ChannelIndex c = 0; c < k; ++c) s.ap_channels[owner[c]].push_back(c);
  s.noise = noise;
  s.budget.assign(n, budget);
  s.gain = Matrix(n, k);
  for (CuIndex i = 0; i < n; ++i)
    for (ChannelIndex c = 0; c < k; ++c) s.gain(i, c) = gain[i][c];
  // Positions: APs on a line, CUs on top of nobody in particular.
  for (ApIndex w = 0; w < w_count; ++w) s.ap_positions.push_back({2.0 * w, 0.0});
  for (CuIndex i = 0; i < n; ++i) s.cu_positions.push_back({0.5 + i, 1.0});
  return s;
}

// The subgame of AP w for CUs `cus`, laid out for the oracles.
inline oracle::Subgame subgame_of(const NetworkSnapshot& s, const std::vector<CuIndex>& cus,
                                  ApIndex w) {
  oracle::Subgame g;
  for (ChannelIndex k : s.channels(w)) g.noise.push_back(s.noise[k]);
  for (CuIndex i : cus) {
    std::vector<double> row;
    for (ChannelIndex k : s.channels(w)) row.push_back(s.gain(i, k));
    g.gain.push_back(row);
    g.budget.push_back(s.budget[i]);
  }
  return g;
}

}  // namespace crn::test
