#pragma once

#include "respira/types.hpp"

namespace respira {

struct LmsConfig {
  int filter_length = 32;
  double step_size = 0.1;  // normalised; stable below 2
  double leakage = 0.0;    // in [0, 1)

  void validate() const;
};

/// rPPG trace for one cell: the part of `green` that a normalised LMS filter
/// cannot predict from `red`. Both inputs are standardised (zero mean, unit
/// variance) before adaptation; the residual is returned scaled by green's
/// standard deviation. Throws InputError on length/rate mismatch and
/// PipelineError("degenerate reference") on a constant input.
ChannelTrace extract_rppg(const ChannelTrace& green, const ChannelTrace& red, const LmsConfig& cfg = {});

}  // namespace respira
