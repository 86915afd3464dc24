#pragma once

#include <span>
#include <vector>

namespace respira {

/// One-sided power spectrum on a uniform grid from 0 Hz to Nyquist.
struct Psd {
  std::vector<double> freqs;
  std::vector<double> power;
  double resolution = 0.0;

  double total() const;
};

struct Band {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

inline constexpr Band kRespiratoryBand{0.1, 0.4};
inline constexpr Band kSnrTotalBand{0.0, 4.0};

/// Periodogram of the mean-removed, Hann-windowed sequence, zero-padded to a
/// power of two so that the bin spacing is at most `max_resolution_hz`.
/// Scaled so the bins sum to sum((w*x)^2) / sum(w^2).
Psd psd(std::span<const double> x, double fps, double max_resolution_hz = 0.01);

/// Frequency of the strongest bin; the lowest such frequency on ties.
/// Throws PipelineError("no dominant component") for an all-zero spectrum.
double representative_frequency(const Psd& p);

struct SnrValue {
  double ratio = 0.0;  // in [0, 1]
  double db() const;
};

/// Power in `band` over power in `total`, both as closed intervals over bin
/// centres. `total.hi_hz` is clamped to Nyquist.
SnrValue band_snr(const Psd& p, Band band = kRespiratoryBand, Band total = kSnrTotalBand);

/// Sum of bins whose centre lies in the closed interval.
double band_power(const Psd& p, Band band);

}  // namespace respira
