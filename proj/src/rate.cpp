#include "respira/rate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "respira/error.hpp"
#include "respira/kernels.hpp"

namespace respira {

void WindowSpec::validate() const {
  if (!(length_s > 0.0)) throw InputError("window length must be positive");
  if (!(step_s > 0.0 && step_s <= length_s)) throw InputError("window step must lie in (0, window length]");
}

std::size_t WindowSpec::count(double duration_s) const {
  if (duration_s + 1e-9 < length_s) return 0;
  return static_cast<std::size_t>(std::floor((duration_s - length_s) / step_s + 1e-9)) + 1;
}

void RateConfig::validate() const {
  if (!(band.lo_hz >= 0.0 && band.lo_hz < band.hi_hz)) throw InputError("respiratory band must satisfy 0 <= lo < hi");
  if (!(snr_total.lo_hz <= band.lo_hz && snr_total.hi_hz >= band.hi_hz))
    throw InputError("SNR total band must contain the respiratory band");
  if (!(work_rate_hz > 0.0)) throw InputError("working rate must be positive");
  if (!(autocorr.f_min_hz > 0.0 && autocorr.f_min_hz < autocorr.f_max_hz))
    throw InputError("autocorrelation frequency range must satisfy 0 < min < max");
  if (!(min_imf_periodicity >= 0.0 && min_imf_periodicity <= 1.0))
    throw InputError("IMF periodicity gate must lie in [0, 1]");
  emd.validate();
}

std::string_view to_string(EstimateStatus status) {
  switch (status) {
    case EstimateStatus::ok: return "ok";
    case EstimateStatus::no_imf_in_band: return "no_imf_in_band";
    case EstimateStatus::no_zero_crossing: return "no_zero_crossing";
    case EstimateStatus::no_peak: return "no_peak";
    case EstimateStatus::weak_periodicity: return "weak_periodicity";
    case EstimateStatus::out_of_range: return "out_of_range";
    case EstimateStatus::degenerate: return "degenerate";
  }
  return "?";
}

std::optional<ImfSelection> select_respiratory_imf(const ImfSet& imfs, double fps, Band band, Band total) {
  std::optional<ImfSelection> best;
  const double tol = 1e-9;
  for (std::size_t i = 0; i < imfs.imfs.size(); ++i) {
    const auto& imf = imfs.imfs[i];
    if (imf.size() < 8) continue;
    Psd spectrum = psd(imf, fps);
    double rep = 0.0;
    double fraction = 0.0;
    try {
      rep = representative_frequency(spectrum);
      if (rep < band.lo_hz - tol || rep > band.hi_hz + tol) continue;
      fraction = band_snr(spectrum, band, total).ratio;
    } catch (const PipelineError&) {
      continue;  // silent IMF
    }
    if (!best || fraction > best->band_fraction) {
      best = ImfSelection{i, std::move(spectrum), rep, fraction};
    }
  }
  return best;
}

std::vector<double> autocorrelation(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> centred(x.begin(), x.end());
  double mean = 0.0;
  for (double v : centred) mean += v;
  mean /= static_cast<double>(n);
  for (double& v : centred) v -= mean;
  const std::span<const double> c(centred);
  std::vector<double> r(n);
  for (std::size_t k = 0; k < n; ++k) {
    r[k] = simd::dot(c.first(n - k), c.subspan(k)) / static_cast<double>(n - k);
  }
  return r;
}

namespace {

double parabolic_peak(std::span<const double> r, std::size_t k) {
  if (k == 0 || k + 1 >= r.size()) return static_cast<double>(k);
  const double a = r[k - 1], b = r[k], c = r[k + 1];
  const double curvature = a - 2.0 * b + c;
  if (!(curvature < 0.0)) return static_cast<double>(k);
  return static_cast<double>(k) + 0.5 * (a - c) / curvature;
}

}  // namespace

AutocorrResult autocorr_analyze(std::span<const double> x, double fps, const AutocorrConfig& cfg) {
  AutocorrResult result;
  const std::size_t n = x.size();
  if (n < 8 || !(fps > 0.0)) return result;
  for (double v : x) {
    if (!std::isfinite(v)) return result;
  }
  std::vector<double> r = autocorrelation(x);
  const double r0 = r[0];
  if (!(r0 > 0.0)) return result;
  for (double& v : r) v /= r0;

  // Lags beyond n/2 rest on too few products to be trusted.
  const std::size_t max_lag = std::min<std::size_t>(n / 2, static_cast<std::size_t>(std::floor(fps / cfg.f_min_hz)));
  std::size_t zero = 0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    if (r[k] <= 0.0) {
      zero = k;
      break;
    }
  }
  if (zero == 0) {
    result.status = EstimateStatus::no_zero_crossing;
    return result;
  }

  std::vector<std::size_t> peaks;
  for (std::size_t k = zero + 1; k <= max_lag && k + 1 < n; ++k) {
    if (r[k] >= r[k - 1] && r[k] >= r[k + 1] && r[k] > 0.0) peaks.push_back(k);
  }
  if (peaks.empty()) {
    result.status = EstimateStatus::no_peak;
    return result;
  }
  std::size_t highest = peaks.front();
  for (std::size_t k : peaks) {
    if (r[k] > r[highest]) highest = k;
  }

  // The highest peak may sit at a multiple of the period; look for the
  // earliest comparably high peak near highest/m.
  std::size_t fundamental = highest;
  for (std::size_t m = highest / zero; m >= 2; --m) {
    const double centre = static_cast<double>(highest) / static_cast<double>(m);
    const double tol = std::max(1.0, centre / 4.0);
    std::size_t candidate = 0;
    for (std::size_t k : peaks) {
      if (std::abs(static_cast<double>(k) - centre) <= tol && (candidate == 0 || r[k] > r[candidate])) candidate = k;
    }
    if (candidate != 0 && r[candidate] >= cfg.subharmonic_ratio * r[highest]) {
      fundamental = candidate;
      break;
    }
  }

  result.peak_corr = r[fundamental];
  if (r[fundamental] < cfg.min_peak_corr) {
    result.status = EstimateStatus::weak_periodicity;
    return result;
  }
  const double refined_highest = parabolic_peak(r, highest);
  const double refined_fundamental = parabolic_peak(r, fundamental);
  const double periods = std::max(1.0, std::round(refined_highest / refined_fundamental));
  result.period_lag = refined_highest / periods;
  result.f_hz = fps / result.period_lag;
  result.status = (result.f_hz > cfg.f_min_hz && result.f_hz < cfg.f_max_hz) ? EstimateStatus::ok
                                                                            : EstimateStatus::out_of_range;
  return result;
}

double autocorr_frequency(std::span<const double> x, double fps, const AutocorrConfig& cfg) {
  if (x.size() < 8) throw InputError("autocorrelation input too short");
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("autocorrelation input contains non-finite values");
  }
  const AutocorrResult r = autocorr_analyze(x, fps, cfg);
  switch (r.status) {
    case EstimateStatus::ok: return r.f_hz;
    case EstimateStatus::no_zero_crossing: throw PipelineError("autocorrelation has no zero crossing");
    case EstimateStatus::no_peak: throw PipelineError("autocorrelation has no peak after the first zero crossing");
    case EstimateStatus::weak_periodicity: throw PipelineError("autocorrelation peak too weak");
    case EstimateStatus::out_of_range:
      throw PipelineError("autocorrelation frequency " + std::to_string(r.f_hz) + " Hz out of plausible range");
    default: throw PipelineError("degenerate autocorrelation input");
  }
}

std::vector<double> resample(std::span<const double> x, double fps, double rate_hz) {
  if (x.empty() || rate_hz >= fps) return std::vector<double>(x.begin(), x.end());
  const double ratio = fps / rate_hz;
  const std::size_t n_out = static_cast<std::size_t>(std::floor(static_cast<double>(x.size() - 1) / ratio + 1e-9)) + 1;
  std::vector<double> y(n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    const double pos = static_cast<double>(j) * ratio;
    const std::size_t i = std::min(static_cast<std::size_t>(pos), x.size() - 1);
    const double frac = pos - static_cast<double>(i);
    y[j] = (frac > 0.0 && i + 1 < x.size()) ? x[i] + frac * (x[i + 1] - x[i]) : x[i];
  }
  return y;
}

CellEstimate estimate_window(std::span<const double> window, double rate_hz, const RateConfig& cfg) {
  CellEstimate est;
  if (window.size() < 8) return est;
  ImfSet imfs;
  try {
    imfs = decompose(window, rate_hz, cfg.emd);
  } catch (const InputError&) {
    return est;
  }
  const auto selection = select_respiratory_imf(imfs, rate_hz, cfg.band, cfg.snr_total);
  if (!selection) {
    est.status = EstimateStatus::no_imf_in_band;
    return est;
  }
  est.snr = selection->band_fraction;
  const AutocorrResult ac = autocorr_analyze(imfs.imfs[selection->index], rate_hz, cfg.autocorr);
  est.status = ac.status;
  if (est.status == EstimateStatus::ok && ac.peak_corr < cfg.min_imf_periodicity)
    est.status = EstimateStatus::weak_periodicity;
  est.f_hz = ac.f_hz;
  est.valid = est.status == EstimateStatus::ok;
  return est;
}

std::vector<CellEstimate> estimate_windows(std::span<const ChannelTrace> traces, const WindowSpec& spec,
                                           const RateConfig& cfg) {
  spec.validate();
  cfg.validate();
  std::vector<CellEstimate> out;
  for (const ChannelTrace& trace : traces) {
    if (!(trace.fps > 0.0)) throw InputError("trace sampling rate must be positive");
    const double duration = trace.duration_s();
    const std::size_t windows = spec.count(duration);
    if (windows == 0) {
      throw InputError("insufficient duration: trace for cell " + std::to_string(trace.roi_id) + " lasts " +
                       std::to_string(duration) + " s, shorter than one " + std::to_string(spec.length_s) +
                       " s window");
    }
    const double rate = std::min(cfg.work_rate_hz, trace.fps);
    const std::vector<double> series = resample(trace.samples, trace.fps, rate);
    const auto length = static_cast<std::size_t>(std::llround(spec.length_s * rate));
    for (std::size_t w = 0; w < windows; ++w) {
      const double start_s = static_cast<double>(w) * spec.step_s;
      const auto start = std::min(static_cast<std::size_t>(std::llround(start_s * rate)), series.size());
      const std::size_t len = std::min(length, series.size() - start);
      CellEstimate est = estimate_window(std::span<const double>(series).subspan(start, len), rate, cfg);
      est.roi_id = trace.roi_id;
      est.channel = trace.channel;
      est.window_index = w;
      est.start_s = start_s;
      est.end_s = start_s + spec.length_s;
      out.push_back(est);
    }
  }
  return out;
}

}  // namespace respira
