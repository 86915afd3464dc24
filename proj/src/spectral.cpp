#include "respira/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "respira/error.hpp"

namespace respira {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Real-to-complex transform of one size with its own aligned buffers. FFTW's
// planner is not thread-safe, so plans are built and destroyed under a lock
// and each thread keeps its own.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  const fftw_complex* output() const { return out_; }
  void execute() { fftw_execute(plan_); }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

RealFft& fft_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft>> plans;
  auto& slot = plans[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

bool in_closed(double f, Band band, double tol) { return f >= band.lo_hz - tol && f <= band.hi_hz + tol; }

}  // namespace

double Psd::total() const {
  double s = 0.0;
  for (double v : power) s += v;
  return s;
}

Psd psd(std::span<const double> x, double fps, double max_resolution_hz) {
  const std::size_t n = x.size();
  if (n < 8) throw InputError("PSD input too short (need at least 8 samples)");
  if (!(fps > 0.0)) throw InputError("fps must be positive");
  if (!(max_resolution_hz > 0.0)) throw InputError("PSD resolution must be positive");
  double mean = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("PSD input contains non-finite values");
    mean += v;
  }
  mean /= static_cast<double>(n);

  std::size_t nfft = 1;
  const double min_bins = std::ceil(fps / max_resolution_hz);
  while (nfft < n || static_cast<double>(nfft) < min_bins) nfft <<= 1;

  RealFft& fft = fft_for(nfft);
  double* in = fft.input();
  double window_power = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1)));
    in[i] = w * (x[i] - mean);
    window_power += w * w;
  }
  std::fill(in + n, in + nfft, 0.0);
  fft.execute();

  const std::size_t bins = nfft / 2 + 1;
  Psd p;
  p.resolution = fps / static_cast<double>(nfft);
  p.freqs.resize(bins);
  p.power.resize(bins);
  const double scale = 1.0 / (static_cast<double>(nfft) * window_power);
  const fftw_complex* out = fft.output();
  for (std::size_t k = 0; k < bins; ++k) {
    const double mag2 = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    const bool edge = k == 0 || k == nfft / 2;
    p.freqs[k] = static_cast<double>(k) * p.resolution;
    p.power[k] = (edge ? 1.0 : 2.0) * mag2 * scale;
  }
  return p;
}

double representative_frequency(const Psd& p) {
  if (p.power.empty()) throw PipelineError("no dominant component: empty spectrum");
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.power.size(); ++k) {
    if (p.power[k] > p.power[best]) best = k;
  }
  if (!(p.power[best] > 0.0)) throw PipelineError("no dominant component: spectrum is all zero");
  return p.freqs[best];
}

double SnrValue::db() const { return 10.0 * std::log10(ratio); }

double band_power(const Psd& p, Band band) {
  const double tol = 1e-9 * std::max(p.resolution, 1e-12);
  double s = 0.0;
  for (std::size_t k = 0; k < p.freqs.size(); ++k) {
    if (in_closed(p.freqs[k], band, tol)) s += p.power[k];
  }
  return s;
}

SnrValue band_snr(const Psd& p, Band band, Band total) {
  if (p.freqs.empty()) throw PipelineError("zero total power: empty spectrum");
  const double nyquist = p.freqs.back();
  total.hi_hz = std::min(total.hi_hz, nyquist);
  if (!(band.lo_hz <= band.hi_hz) || !(total.lo_hz <= total.hi_hz) || band.lo_hz < total.lo_hz ||
      band.hi_hz > total.hi_hz || total.lo_hz < 0.0)
    throw InputError("SNR band must lie inside the total band within [0, Nyquist]");
  const double denom = band_power(p, total);
  if (!(denom > 0.0)) throw PipelineError("zero total power in SNR denominator");
  return SnrValue{band_power(p, band) / denom};
}

}  // namespace respira
