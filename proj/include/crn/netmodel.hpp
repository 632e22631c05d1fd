#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crn/types.hpp"
#include "json.hpp"

namespace crn {

inline constexpr std::string_view kSnapshotSchema = "snapshot-v1";

struct NetworkParams {
  std::size_t n_cus = 1;
  std::size_t n_aps = 1;
  std::size_t n_channels = 1;
  double area_side = 10.0;  // meters
  double budget_per_cu = 1.0;
  double noise_per_channel = 1e-3;
  std::uint64_t seed = 0;
};

// Returns one message per violated parameter invariant.
std::vector<std::string> validate_params(const NetworkParams& params);

// A static network: positions, the channel partition across APs, noise,
// budgets and the N x K channel power gains |h_{i,w}(k)|^2 (w = owner of k).
struct NetworkSnapshot {
  NetworkParams params;
  std::vector<Point> cu_positions;
  std::vector<Point> ap_positions;
  // ap_channels[w] lists the channels owned by AP w, ascending.
  std::vector<std::vector<ChannelIndex>> ap_channels;
  std::vector<double> noise;   // per channel
  Matrix gain;                 // N x K
  std::vector<double> budget;  // per CU

  std::size_t num_cus() const { return gain.rows(); }
  std::size_t num_aps() const { return ap_channels.size(); }
  std::size_t num_channels() const { return noise.size(); }

  const std::vector<ChannelIndex>& channels(ApIndex w) const { return ap_channels[w]; }

  // Owner AP of every channel. Only meaningful for a valid snapshot.
  std::vector<ApIndex> channel_owner() const;

  double distance(CuIndex i, ApIndex w) const;
};

// Channels 0..K-1 split into W contiguous blocks; the first K mod W APs get
// one extra channel.
std::vector<std::vector<ChannelIndex>> contiguous_partition(std::size_t n_channels,
                                                            std::size_t n_aps);

// Gain of (CU i, channel k) at the given CU-AP distance: exponential with
// mean 1 / d^2, drawn from the (seed, i * n_channels + k) substream.
double draw_gain(std::uint64_t seed, CuIndex i, ChannelIndex k, std::size_t n_channels,
                 double distance);

// Draws a random snapshot. Throws std::invalid_argument on invalid params.
NetworkSnapshot generate_snapshot(const NetworkParams& params);

// Empty result means the snapshot satisfies every invariant.
std::vector<std::string> validate_snapshot(const NetworkSnapshot& s);

nlohmann::json snapshot_to_json(const NetworkSnapshot& s);
// Throws std::invalid_argument when the document is malformed or the
// resulting snapshot fails validation.
NetworkSnapshot snapshot_from_json(const nlohmann::json& doc);

std::string serialize_snapshot(const NetworkSnapshot& s);

}  // namespace crn
