#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "respira/pipeline.hpp"
#include "respira/synth.hpp"

namespace respira {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct SelftestOptions {
  bool quick = false;     // only the criteria that need no full-length recording
  std::vector<int> only;  // empty = all selected by `quick`
  PipelineConfig pipeline;
  SynthScenario scenario;
};

inline constexpr int kCriterionCount = 11;

/// Criteria 1-3 analyse the full default recording; the rest are short.
bool is_quick_criterion(int id);
std::string criterion_name(int id);

/// Never throws on a failing check; exceptions inside a criterion mark it
/// failed with the message as detail.
CriterionResult run_criterion(int id, const SelftestOptions& opts);

/// Runs the selected criteria in id order. Criteria 1-3 share one analysis.
/// Each result is printed to `progress` (if given) as soon as it is known.
std::vector<CriterionResult> run_selftest(const SelftestOptions& opts, std::ostream* progress = nullptr);

std::string format_result(const CriterionResult& r);

}  // namespace respira
