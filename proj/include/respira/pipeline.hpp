#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "respira/fusion.hpp"
#include "respira/rate.hpp"
#include "respira/rppg.hpp"
#include "respira/types.hpp"

namespace respira {

struct PipelineConfig {
  int edge_px = 10;
  double cell_purity = 1.0;
  double f_cut_hz = 4.0;
  LmsConfig lms;
  WindowSpec window;
  RateConfig rate;
  int threads = 1;  // 0 = hardware concurrency
  void validate() const;
};

struct AnalysisResult {
  SubRoiGrid grid;
  std::vector<ChannelTrace> traces;          // filtered R, G, B and face rPPG
  std::vector<CellEstimate> cell_estimates;  // ordered by trace, then window
  FusionResult fusion;
  std::size_t valid_count() const;
};

/// Runs `task(i)` for i in [0, n) on up to `threads` workers. Every index runs
/// exactly once; the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& task);

/// Grid, channel averaging, low-pass, face rPPG, windowed estimates, fusion.
AnalysisResult analyze_frames(const FrameSequence& frames, const RegionMask& mask, const PipelineConfig& cfg);

/// Same from per-cell traces: low-pass at the input rate (skipped when the
/// rate cannot represent f_cut), resample to the working rate, derive missing
/// face rPPG traces from R and G, estimate, fuse. Returned traces are at the
/// working rate. Throws PipelineError when no window yields a valid estimate.
AnalysisResult analyze_traces(std::vector<ChannelTrace> traces, SubRoiGrid grid, const PipelineConfig& cfg);

}  // namespace respira
