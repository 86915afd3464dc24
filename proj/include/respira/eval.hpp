#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "respira/fusion.hpp"
#include "respira/rate.hpp"
#include "respira/types.hpp"

namespace respira {

struct ScoredError {
  std::size_t window_index = 0;
  Region region = Region::face;
  Channel channel = Channel::R;
  double error_bpm = 0.0;  // 60 * fused_hz - stage bpm
};

struct ErrorSeries {
  std::vector<ScoredError> scored;
  /// Windows spanning a stage boundary or lying outside every stage.
  std::vector<std::size_t> excluded;  // window indices, one entry per estimate
  std::size_t boundary_count = 0;     // excluded because a boundary falls inside
};

/// Scores fused estimates against the schedule. A window is assigned to the
/// stage containing its centre time; windows with a stage boundary strictly
/// inside their span (or centred on one) and windows outside the schedule are
/// excluded. Throws InputError on empty input.
ErrorSeries error_series(std::span<const WindowEstimate> estimates, const GroundTruthSchedule& truth);

struct ErrorStats {
  std::size_t n = 0;
  double median = 0.0;  // lower of the two middle values for even n
  double q1 = 0.0;      // inclusive quartiles (linear interpolation on (n-1)q)
  double q3 = 0.0;
  double iqr = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Lower median of a sample (copies and sorts).
double lower_median(std::span<const double> values);
/// Inclusive quantile: linear interpolation at position (n-1)*q of the sorted sample.
double inclusive_quantile(std::span<const double> sorted, double q);

ErrorStats summarize(std::span<const double> errors);

struct SummaryRow {
  std::string region;   // face, chest or "all"
  std::string channel;  // R, G, B, rPPG or "all"
  ErrorStats stats;
};

/// Stats per (region, channel) plus pooled rows per region and overall.
std::vector<SummaryRow> summarize_groups(std::span<const ScoredError> errors);

struct SnrMapRow {
  int roi_id = 0;
  int x0 = -1;
  int y0 = -1;
  Region region = Region::face;
  Channel channel = Channel::R;
  std::size_t n = 0;            // valid estimates behind the median
  double median_snr_db = 0.0;   // NaN when n == 0
};

/// Median SNR (dB) per grid cell and channel over the cell's valid
/// estimates. Every grid cell appears once per channel it has estimates for.
std::vector<SnrMapRow> snr_map(std::span<const CellEstimate> estimates, const SubRoiGrid& grid);

void write_errors_csv(std::span<const ScoredError> errors, const std::filesystem::path& path);
void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path);
void write_snr_map_csv(std::span<const SnrMapRow> rows, const std::filesystem::path& path);

}  // namespace respira
