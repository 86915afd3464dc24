#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "respira/emd.hpp"
#include "respira/spectral.hpp"
#include "respira/types.hpp"

namespace respira {

struct WindowSpec {
  double length_s = 30.0;
  double step_s = 1.0;

  void validate() const;
  /// floor((duration - length) / step) + 1, or 0 when shorter than one window.
  std::size_t count(double duration_s) const;
};

struct AutocorrConfig {
  double f_min_hz = 0.05;        // exclusive plausible range
  double f_max_hz = 0.6;
  double min_peak_corr = 0.3;    // normalised ACF at the period lag
  double subharmonic_ratio = 0.8;
};

struct RateConfig {
  Band band = kRespiratoryBand;
  Band snr_total = kSnrTotalBand;
  double work_rate_hz = 8.0;
  EmdConfig emd;
  AutocorrConfig autocorr;
  // An IMF is already narrow-band, so even noise shows some periodicity; the
  // selected IMF must reach this normalised ACF peak on top of autocorr's gate.
  double min_imf_periodicity = 0.6;

  void validate() const;
};

enum class EstimateStatus {
  ok,
  no_imf_in_band,
  no_zero_crossing,
  no_peak,
  weak_periodicity,
  out_of_range,
  degenerate,
};

std::string_view to_string(EstimateStatus status);

struct CellEstimate {
  int roi_id = 0;
  Channel channel = Channel::R;
  std::size_t window_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double f_hz = 0.0;  // estimated respiratory frequency
  double snr = 0.0;   // linear, of the selected IMF
  bool valid = false;
  EstimateStatus status = EstimateStatus::degenerate;
};

struct ImfSelection {
  std::size_t index = 0;
  Psd spectrum;
  double representative_hz = 0.0;
  double band_fraction = 0.0;
};

/// Among IMFs whose representative frequency lies in the closed band, the one
/// with the largest in-band power fraction (lowest index on ties).
std::optional<ImfSelection> select_respiratory_imf(const ImfSet& imfs, double fps, Band band = kRespiratoryBand,
                                                   Band total = kSnrTotalBand);

struct AutocorrResult {
  EstimateStatus status = EstimateStatus::degenerate;
  double f_hz = 0.0;
  double period_lag = 0.0;  // samples, refined
  double peak_corr = 0.0;   // normalised ACF at the fundamental lag
};

/// Unbiased sample autocorrelation of `x`.
std::vector<double> autocorrelation(std::span<const double> x);

/// Frequency from the autocorrelation: after the first zero crossing the
/// highest peak up to lag n/2 is taken, the number of periods it spans is
/// found from the earliest comparably high peak, and the refined lag is
/// divided by that count. Peaks are refined by 3-point parabolic
/// interpolation. Never throws on signal content; inspect `status`.
AutocorrResult autocorr_analyze(std::span<const double> x, double fps, const AutocorrConfig& cfg = {});

/// As autocorr_analyze, throwing PipelineError when no valid frequency exists.
double autocorr_frequency(std::span<const double> x, double fps, const AutocorrConfig& cfg = {});

/// Linear-interpolation resampling onto a `rate_hz` grid starting at t = 0.
/// Returns the input unchanged when `rate_hz` is not below `fps`.
std::vector<double> resample(std::span<const double> x, double fps, double rate_hz);

/// Estimate from one window already at the working rate.
CellEstimate estimate_window(std::span<const double> window, double rate_hz, const RateConfig& cfg);

/// Sliding-window estimates for each trace (one cell): resample to the
/// working rate, then per window decompose, select the respiratory IMF,
/// measure its frequency and in-band SNR. Throws InputError("insufficient
/// duration") when a trace is shorter than one window.
std::vector<CellEstimate> estimate_windows(std::span<const ChannelTrace> traces, const WindowSpec& spec,
                                           const RateConfig& cfg = {});

}  // namespace respira
