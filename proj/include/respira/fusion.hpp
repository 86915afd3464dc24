#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "respira/rate.hpp"
#include "respira/types.hpp"

namespace respira {

struct Contributor {
  int roi_id = 0;
  double f_hz = 0.0;
  double weight = 0.0;
};

struct WindowEstimate {
  std::size_t window_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  Region region = Region::face;
  Channel channel = Channel::R;
  double fused_hz = 0.0;
  std::vector<Contributor> contributors;
  std::size_t n_valid = 0;
  std::size_t n_total = 0;

  double center_s() const { return 0.5 * (start_s + end_s); }
};

/// Weighted-median comparisons allow this much slack around one half so that
/// uniform weights (which rarely sum to exactly 0.5) behave like exact halves.
inline constexpr double kHalfTolerance = 1e-12;

/// w_k = snr_k / sum(snr). Throws InputError on negative or non-finite
/// values and PipelineError when every SNR is zero.
std::vector<double> weights(std::span<const double> snrs);

/// Weighted median: after a stable ascending sort by frequency, the first
/// element whose cumulative weight before it and after it are both <= 1/2.
double weighted_median(std::span<const double> fs, std::span<const double> ws);

/// Fuses the valid estimates of one window/region/channel group. Returns
/// nullopt (window missing) when nothing valid with positive SNR remains.
std::optional<WindowEstimate> fuse_window(std::span<const CellEstimate> estimates, Region region, Channel channel);

/// Groups cell estimates by (window, region, channel) and fuses each group.
/// Output is ordered by region, channel, window. Groups with no valid cell
/// are reported in `missing`.
struct FusionResult {
  std::vector<WindowEstimate> windows;
  struct Missing {
    std::size_t window_index;
    Region region;
    Channel channel;
  };
  std::vector<Missing> missing;
};

FusionResult fuse_all(std::span<const CellEstimate> estimates, const SubRoiGrid& grid);

}  // namespace respira
