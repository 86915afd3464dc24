#include "respira/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "respira/error.hpp"

namespace respira {

std::vector<double> weights(std::span<const double> snrs) {
  if (snrs.empty()) throw InputError("no SNR values to weight");
  double total = 0.0;
  for (double s : snrs) {
    if (!std::isfinite(s) || s < 0.0) throw InputError("SNR values must be finite and non-negative");
    total += s;
  }
  if (!(total > 0.0)) throw PipelineError("all SNR values are zero");
  std::vector<double> w(snrs.size());
  for (std::size_t i = 0; i < snrs.size(); ++i) w[i] = snrs[i] / total;
  return w;
}

double weighted_median(std::span<const double> fs, std::span<const double> ws) {
  if (fs.empty()) throw InputError("weighted median of an empty set");
  if (fs.size() != ws.size()) throw InputError("frequency and weight lists differ in length");
  std::vector<std::size_t> order(fs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });

  double total = 0.0;
  for (double w : ws) total += w;
  double before = 0.0;
  for (std::size_t i : order) {
    const double after = total - before - ws[i];
    if (before <= 0.5 + kHalfTolerance && after <= 0.5 + kHalfTolerance) return fs[i];
    before += ws[i];
  }
  // only reachable when the weights are not normalised
  throw InputError("weights do not admit a weighted median (are they normalised?)");
}

std::optional<WindowEstimate> fuse_window(std::span<const CellEstimate> estimates, Region region, Channel channel) {
  WindowEstimate out;
  out.region = region;
  out.channel = channel;
  out.n_total = estimates.size();
  std::vector<double> fs, snrs;
  std::vector<int> ids;
  for (const CellEstimate& e : estimates) {
    out.window_index = e.window_index;
    out.start_s = e.start_s;
    out.end_s = e.end_s;
    if (!e.valid) continue;
    fs.push_back(e.f_hz);
    snrs.push_back(e.snr);
    ids.push_back(e.roi_id);
  }
  out.n_valid = fs.size();
  if (fs.empty()) return std::nullopt;
  std::vector<double> w;
  try {
    w = weights(snrs);
  } catch (const PipelineError&) {
    return std::nullopt;
  }
  for (std::size_t i = 0; i < fs.size(); ++i) out.contributors.push_back(Contributor{ids[i], fs[i], w[i]});
  out.fused_hz = weighted_median(fs, w);
  return out;
}

FusionResult fuse_all(std::span<const CellEstimate> estimates, const SubRoiGrid& grid) {
  std::map<int, Region> labels;
  for (const CellInfo& c : grid.cells) labels[c.id] = c.label;

  using Key = std::tuple<Region, Channel, std::size_t>;
  std::map<Key, std::vector<CellEstimate>> groups;
  for (const CellEstimate& e : estimates) {
    const auto it = labels.find(e.roi_id);
    if (it == labels.end()) throw InputError("estimate refers to unknown cell " + std::to_string(e.roi_id));
    groups[{it->second, e.channel, e.window_index}].push_back(e);
  }
  FusionResult result;
  for (auto& [key, group] : groups) {
    const auto [region, channel, window] = key;
    // deterministic contributor order regardless of how estimates arrived
    std::stable_sort(group.begin(), group.end(),
                     [](const CellEstimate& a, const CellEstimate& b) { return a.roi_id < b.roi_id; });
    if (auto fused = fuse_window(group, region, channel)) {
      result.windows.push_back(std::move(*fused));
    } else {
      result.missing.push_back({window, region, channel});
    }
  }
  return result;
}

}  // namespace respira
