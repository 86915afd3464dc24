#pragma once

#include <span>
#include <vector>

#include "respira/types.hpp"

namespace respira {

/// Tiles the mask from (0,0) in steps of `edge_px`, dropping partial cells at
/// the right/bottom border. A cell is kept when at least `purity` of its
/// pixels carry one non-background label; it takes that label. Cell ids are
/// assigned in row-major order over the kept cells.
SubRoiGrid build_grid(const RegionMask& mask, int edge_px, double purity = 1.0);

/// Per-cell spatial mean of each colour channel; three traces (R, G, B) per
/// cell, in grid order.
std::vector<ChannelTrace> average_channels(const FrameSequence& frames, const SubRoiGrid& grid);

/// Linear-phase low-pass FIR (Hamming-windowed sinc, unity DC gain).
struct FirFilter {
  std::vector<double> taps;  // odd length, symmetric
  double fps = 0.0;
  double f_cut = 0.0;

  int order() const { return static_cast<int>(taps.size()) - 1; }
  /// |H(f)| of the designed taps.
  double gain(double f_hz) const;
};

/// Band edges the design must satisfy, as fractions of `f_cut`.
inline constexpr double kPassbandEdge = 0.8;
inline constexpr double kStopbandEdge = 1.25;
inline constexpr double kPassbandRipple = 0.01;
inline constexpr double kStopbandGain = 0.01;  // -40 dB

/// Smallest even order whose Hamming-windowed sinc keeps the passband within
/// 1 +/- kPassbandRipple up to kPassbandEdge*f_cut and stays below
/// kStopbandGain from kStopbandEdge*f_cut to Nyquist. Results are cached.
const FirFilter& design_lowpass(double fps, double f_cut);

/// Zero-delay FIR filtering with even (mirror) extension at both ends.
/// Output has the input's length and timing.
std::vector<double> apply_fir(std::span<const double> x, std::span<const double> taps);

ChannelTrace lowpass(const ChannelTrace& trace, double f_cut);

}  // namespace respira
