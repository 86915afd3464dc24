#include "respira/rppg.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "respira/error.hpp"
#include "respira/kernels.hpp"

namespace respira {

void LmsConfig::validate() const {
  if (filter_length < 1) throw InputError("LMS filter length must be at least 1");
  if (!(step_size > 0.0 && step_size < 2.0)) throw InputError("LMS step size must lie in (0, 2)");
  if (!(leakage >= 0.0 && leakage < 1.0)) throw InputError("LMS leakage must lie in [0, 1)");
}

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments moments(std::span<const double> x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(x.size()));
  return m;
}

bool degenerate(const Moments& m) { return !(m.stddev > 1e-12 * std::max(1.0, std::abs(m.mean))); }

}  // namespace

ChannelTrace extract_rppg(const ChannelTrace& green, const ChannelTrace& red, const LmsConfig& cfg) {
  cfg.validate();
  if (green.samples.size() != red.samples.size())
    throw InputError("green and red traces differ in length");
  if (green.fps != red.fps) throw InputError("green and red traces differ in sampling rate");
  if (green.roi_id != red.roi_id) throw InputError("green and red traces belong to different cells");
  if (green.samples.empty()) throw InputError("empty traces");
  for (std::size_t i = 0; i < green.samples.size(); ++i) {
    if (!std::isfinite(green.samples[i]) || !std::isfinite(red.samples[i]))
      throw InputError("trace contains non-finite samples");
  }

  const Moments mg = moments(green.samples);
  const Moments mr = moments(red.samples);
  if (degenerate(mr)) throw PipelineError("degenerate reference: red trace has zero variance");
  if (degenerate(mg)) throw PipelineError("degenerate reference: green trace has zero variance");

  const std::size_t n = green.samples.size();
  const std::size_t taps = static_cast<std::size_t>(cfg.filter_length);
  // reference history laid out oldest-to-newest, zero before the first sample
  std::vector<double> ref(n + taps - 1, 0.0);
  for (std::size_t t = 0; t < n; ++t) ref[t + taps - 1] = (red.samples[t] - mr.mean) / mr.stddev;
  std::vector<double> w(taps, 0.0);
  const std::span<const double> history(ref);
  // 1% of the expected |x|^2 of a unit-variance reference. Keeps the step
  // bounded where the reference is locally near zero.
  const double regularisation = 0.01 * static_cast<double>(taps);

  ChannelTrace out;
  out.fps = green.fps;
  out.roi_id = green.roi_id;
  out.channel = Channel::rPPG;
  out.samples.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto x = history.subspan(t, taps);
    const double desired = (green.samples[t] - mg.mean) / mg.stddev;
    const double error = desired - simd::dot(w, x);
    if (cfg.leakage > 0.0) {
      for (double& wi : w) wi *= 1.0 - cfg.leakage;
    }
    simd::axpy(cfg.step_size * error / (regularisation + simd::dot(x, x)), x, w);
    out.samples[t] = error * mg.stddev;
  }
  return out;
}

}  // namespace respira
