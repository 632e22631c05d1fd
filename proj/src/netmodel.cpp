#include "crn/netmodel.hpp"

#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

#include "crn/rng.hpp"

namespace crn {

using nlohmann::json;

std::vector<std::string> validate_params(const NetworkParams& p) {
  std::vector<std::string> issues;
  if (p.n_cus < 1) issues.emplace_back("n_cus must be >= 1");
  if (p.n_aps < 1) issues.emplace_back("n_aps must be >= 1");
  if (p.n_channels < p.n_aps)
    issues.push_back(fmt::format("n_channels ({}) must be >= n_aps ({})", p.n_channels,
                                 p.n_aps));
  if (!(p.area_side > 0.0)) issues.emplace_back("area_side must be > 0");
  if (!(p.budget_per_cu > 0.0)) issues.emplace_back("budget_per_cu must be > 0");
  if (!(p.noise_per_channel > 0.0)) issues.emplace_back("noise_per_channel must be > 0");
  return issues;
}

std::vector<ApIndex> NetworkSnapshot::channel_owner() const {
  std::vector<ApIndex> owner(num_channels(), 0);
  for (ApIndex w = 0; w < ap_channels.size(); ++w)
    for (ChannelIndex k : ap_channels[w])
      if (k < owner.size()) owner[k] = w;
  return owner;
}

double NetworkSnapshot::distance(CuIndex i, ApIndex w) const {
  return std::hypot(cu_positions[i].x - ap_positions[w].x,
                    cu_positions[i].y - ap_positions[w].y);
}

std::vector<std::vector<ChannelIndex>> contiguous_partition(std::size_t n_channels,
                                                            std::size_t n_aps) {
  std::vector<std::vector<ChannelIndex>> parts(n_aps);
  const std::size_t base = n_channels / n_aps;
  const std::size_t extra = n_channels % n_aps;
  ChannelIndex next = 0;
  for (ApIndex w = 0; w < n_aps; ++w) {
    const std::size_t count = base + (w < extra ? 1 : 0);
    for (std::size_t c = 0; c < count; ++c) parts[w].push_back(next++);
  }
  return parts;
}

double draw_gain(std::uint64_t seed, CuIndex i, ChannelIndex k, std::size_t n_channels,
                 double distance) {
  Rng g = Rng::substream(seed, Stream::kGains, i * n_channels + k);
  return g.exponential(1.0 / (distance * distance));
}

NetworkSnapshot generate_snapshot(const NetworkParams& params) {
  if (auto issues = validate_params(params); !issues.empty())
    throw std::invalid_argument("invalid network params: " + issues.front());

  const std::size_t n = params.n_cus, w_count = params.n_aps, k_count = params.n_channels;
  NetworkSnapshot s;
  s.params = params;

  Rng pos = Rng::substream(params.seed, Stream::kPositions);
  auto draw_point = [&] {
    Point pt;
    pt.x = pos.uniform() * params.area_side;
    pt.y = pos.uniform() * params.area_side;
    return pt;
  };
  for (ApIndex w = 0; w < w_count; ++w) s.ap_positions.push_back(draw_point());
  for (CuIndex i = 0; i < n; ++i) {
    Point pt = draw_point();
    auto coincides = [&](const Point& q) {
      for (const Point& ap : s.ap_positions)
        if (q.x == ap.x && q.y == ap.y) return true;
      return false;
    };
    while (coincides(pt)) pt = draw_point();
    s.cu_positions.push_back(pt);
  }

  s.ap_channels = contiguous_partition(k_count, w_count);
  s.noise.assign(k_count, params.noise_per_channel);
  s.budget.assign(n, params.budget_per_cu);
  s.gain = Matrix(n, k_count);

  const auto owner = s.channel_owner();
  for (CuIndex i = 0; i < n; ++i) {
    for (ChannelIndex k = 0; k < k_count; ++k) {
      s.gain(i, k) = draw_gain(params.seed, i, k, k_count, s.distance(i, owner[k]));
    }
  }
  return s;
}

std::vector<std::string> validate_snapshot(const NetworkSnapshot& s) {
  std::vector<std::string> issues = validate_params(s.params);
  const std::size_t n = s.num_cus(), w_count = s.num_aps(), k_count = s.num_channels();

  if (s.params.n_cus != n || s.params.n_aps != w_count || s.params.n_channels != k_count)
    issues.emplace_back("params dimensions disagree with snapshot contents");
  if (s.cu_positions.size() != n)
    issues.push_back(fmt::format("expected {} CU positions, got {}", n, s.cu_positions.size()));
  if (s.ap_positions.size() != w_count)
    issues.push_back(
        fmt::format("expected {} AP positions, got {}", w_count, s.ap_positions.size()));
  if (s.budget.size() != n)
    issues.push_back(fmt::format("expected {} budgets, got {}", n, s.budget.size()));
  if (s.gain.cols() != k_count)
    issues.push_back(fmt::format("gain matrix has {} columns, expected {}", s.gain.cols(),
                                 k_count));

  // Partition: every channel owned by exactly one AP, every AP owns >= 1.
  std::vector<std::size_t> owners(k_count, 0);
  for (ApIndex w = 0; w < w_count; ++w) {
    if (s.ap_channels[w].empty())
      issues.push_back(fmt::format("partition: AP {} owns no channels", w + 1));
    for (ChannelIndex k : s.ap_channels[w]) {
      if (k >= k_count)
        issues.push_back(
            fmt::format("partition: AP {} lists out-of-range channel {}", w + 1, k + 1));
      else
        ++owners[k];
    }
  }
  for (ChannelIndex k = 0; k < k_count; ++k) {
    if (owners[k] == 0)
      issues.push_back(fmt::format("partition: channel {} has no owner", k + 1));
    else if (owners[k] > 1)
      issues.push_back(
          fmt::format("partition: channel {} owned by {} APs", k + 1, owners[k]));
  }

  for (ChannelIndex k = 0; k < k_count; ++k)
    if (!(s.noise[k] > 0.0))
      issues.push_back(fmt::format("positivity: noise of channel {} is not > 0", k + 1));
  for (CuIndex i = 0; i < s.budget.size(); ++i)
    if (!(s.budget[i] > 0.0))
      issues.push_back(fmt::format("positivity: budget of CU {} is not > 0", i + 1));
  for (CuIndex i = 0; i < s.gain.rows(); ++i)
    for (ChannelIndex k = 0; k < s.gain.cols(); ++k)
      if (!(s.gain(i, k) > 0.0) || !std::isfinite(s.gain(i, k)))
        issues.push_back(fmt::format("positivity: gain({}, {}) is not a finite value > 0",
                                     i + 1, k + 1));
  return issues;
}

namespace {

json points_to_json(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const Point& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Point> points_from_json(const json& arr) {
  std::vector<Point> pts;
  for (const json& p : arr) {
    if (!p.is_array() || p.size() != 2) throw std::invalid_argument("point must be [x, y]");
    pts.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return pts;
}

}  // namespace

json snapshot_to_json(const NetworkSnapshot& s) {
  json doc;
  doc["schema"] = kSnapshotSchema;
  doc["rng"] = kRngName;
  doc["params"] = {{"n_cus", s.params.n_cus},
                   {"n_aps", s.params.n_aps},
                   {"n_channels", s.params.n_channels},
                   {"area_side", s.params.area_side},
                   {"budget_per_cu", s.params.budget_per_cu},
                   {"noise_per_channel", s.params.noise_per_channel},
                   {"seed", s.params.seed}};
  doc["cu_positions"] = points_to_json(s.cu_positions);
  doc["ap_positions"] = points_to_json(s.ap_positions);
  json owner = json::array();
  for (ApIndex w : s.channel_owner()) owner.push_back(w + 1);
  doc["channel_owner"] = owner;
  doc["noise"] = s.noise;
  json gain = json::array();
  for (CuIndex i = 0; i < s.gain.rows(); ++i) {
    auto row = s.gain.row(i);
    gain.push_back(std::vector<double>(row.begin(), row.end()));
  }
  doc["gain"] = gain;
  doc["budget"] = s.budget;
  return doc;
}

NetworkSnapshot snapshot_from_json(const json& doc) {
  NetworkSnapshot s;
  try {
    if (doc.at("schema").get<std::string>() != kSnapshotSchema)
      throw std::invalid_argument("unsupported snapshot schema");
    const json& p = doc.at("params");
    s.params.n_cus = p.at("n_cus").get<std::size_t>();
    s.params.n_aps = p.at("n_aps").get<std::size_t>();
    s.params.n_channels = p.at("n_channels").get<std::size_t>();
    s.params.area_side = p.at("area_side").get<double>();
    s.params.budget_per_cu = p.at("budget_per_cu").get<double>();
    s.params.noise_per_channel = p.at("noise_per_channel").get<double>();
    s.params.seed = p.at("seed").get<std::uint64_t>();
    s.cu_positions = points_from_json(doc.at("cu_positions"));
    s.ap_positions = points_from_json(doc.at("ap_positions"));
    s.noise = doc.at("noise").get<std::vector<double>>();
    s.budget = doc.at("budget").get<std::vector<double>>();

    const auto owner = doc.at("channel_owner").get<std::vector<std::size_t>>();
    if (owner.size() != s.noise.size())
      throw std::invalid_argument("channel_owner and noise lengths differ");
    s.ap_channels.assign(s.params.n_aps, {});
    for (ChannelIndex k = 0; k < owner.size(); ++k) {
      if (owner[k] < 1 || owner[k] > s.params.n_aps)
        throw std::invalid_argument(fmt::format("channel {} has invalid owner", k + 1));
      s.ap_channels[owner[k] - 1].push_back(k);
    }

    const json& gain = doc.at("gain");
    const std::size_t rows = gain.size();
    const std::size_t cols = s.noise.size();
    s.gain = Matrix(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      const auto row = gain[i].get<std::vector<double>>();
      if (row.size() != cols) throw std::invalid_argument("gain row has wrong length");
      for (std::size_t k = 0; k < cols; ++k) s.gain(i, k) = row[k];
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed snapshot document: ") + e.what());
  }
  if (auto issues = validate_snapshot(s); !issues.empty())
    throw std::invalid_argument("invalid snapshot: " + issues.front());
  return s;
}

std::string serialize_snapshot(const NetworkSnapshot& s) {
  return snapshot_to_json(s).dump(1);
}

}  // namespace crn
