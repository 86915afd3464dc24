#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace respira {

struct EmdConfig {
  double sd_threshold = 0.2;  // Cauchy criterion, summed per sample
  int max_sift_iters = 200;   // safety cap; sifting normally stops on sd_threshold
  int max_imfs = 12;

  void validate() const;
};

struct ImfSet {
  std::vector<std::vector<double>> imfs;  // highest-frequency mode first
  std::vector<double> residual;
  std::size_t input_len = 0;
};

/// Interior local extrema. A run of equal samples counts as one extremum
/// located at the run's midpoint (rounded down); samples touching either end
/// of the sequence are never extrema.
struct Extrema {
  std::vector<std::size_t> maxima;
  std::vector<std::size_t> minima;

  std::size_t count() const { return maxima.size() + minima.size(); }
};

Extrema find_extrema(std::span<const double> x);

/// Sign changes, with exact zeros taking the sign of the preceding sample.
std::size_t count_zero_crossings(std::span<const double> x);

/// Natural cubic spline through (knots_x, knots_y) evaluated at 0..n-1.
/// knots_x must be strictly increasing with at least two points.
std::vector<double> cubic_spline(std::span<const double> knots_x, std::span<const double> knots_y, std::size_t n);

/// Mean of the upper and lower cubic-spline envelopes, with two extrema
/// mirrored past each end. Empty when `x` has too few extrema to envelope.
std::vector<double> envelope_mean(std::span<const double> x);

/// Empirical mode decomposition. Throws InputError when the window is shorter
/// than 8 samples or contains non-finite values.
ImfSet decompose(std::span<const double> window, double fps, const EmdConfig& cfg = {});

/// |sum_t sum_{i!=j} imf_i(t) imf_j(t)| / sum_t x(t)^2
double orthogonality_index(const ImfSet& set, std::span<const double> input);

}  // namespace respira
