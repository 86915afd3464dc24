#include "respira/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "respira/cli.hpp"
#include "respira/emd.hpp"
#include "respira/eval.hpp"
#include "respira/fusion.hpp"
#include "respira/ingest.hpp"
#include "respira/preprocess.hpp"
#include "respira/rate.hpp"
#include "respira/rppg.hpp"
#include "respira/spectral.hpp"

namespace respira {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Check {
  bool pass;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

std::string percent(std::size_t hits, std::size_t total) {
  return total ? fmt(100.0 * static_cast<double>(hits) / static_cast<double>(total), 1) + "%" : "n/a";
}

// ---------------------------------------------------------------------------
// 1-3: default scenario, full frame path

struct EndToEnd {
  AnalysisResult analysis;
  ErrorSeries errors;
  double analyze_seconds = 0.0;
};

EndToEnd run_end_to_end(const SelftestOptions& opts) {
  const SynthFrames data = synth_frames(opts.scenario);
  const auto t0 = std::chrono::steady_clock::now();
  EndToEnd e;
  e.analysis = analyze_frames(data.frames, data.mask, opts.pipeline);
  e.analyze_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  e.errors = error_series(e.analysis.fusion.windows, data.schedule);
  return e;
}

Check recovery(const EndToEnd& e, Region region, double tol_bpm, double min_fraction) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const ScoredError& s : e.errors.scored) {
    if (s.region != region || s.channel == Channel::rPPG) continue;
    ++total;
    if (std::abs(s.error_bpm) <= tol_bpm) ++hits;
  }
  // Windows whose fused estimate is missing count against the criterion.
  std::size_t missing = 0;
  for (const auto& m : e.analysis.fusion.missing) {
    if (m.region == region && m.channel != Channel::rPPG) ++missing;
  }
  const std::size_t denom = total + missing;
  const double fraction = denom ? static_cast<double>(hits) / static_cast<double>(denom) : 0.0;
  std::string detail = percent(hits, denom) + " of " + std::to_string(denom) + " scored windows within " +
                       fmt(tol_bpm, 1) + " bpm (need " + fmt(100 * min_fraction, 0) + "%)";
  if (missing) detail += ", " + std::to_string(missing) + " missing";
  bool pass = denom > 0 && fraction >= min_fraction;
  if (region == Region::chest) {
    detail += "; analysis " + fmt(e.analyze_seconds, 1) + " s (limit 60 s)";
    pass = pass && e.analyze_seconds <= 60.0;
  }
  return {pass, detail};
}

Check snr_ordering(const EndToEnd& e) {
  std::vector<double> chest, face_raw, face_rppg;
  for (const CellEstimate& c : e.analysis.cell_estimates) {
    if (!c.valid) continue;
    const CellInfo* cell = e.analysis.grid.find(c.roi_id);
    const double db = SnrValue{c.snr}.db();
    if (cell->label == Region::chest && c.channel != Channel::rPPG) chest.push_back(db);
    if (cell->label == Region::face) (c.channel == Channel::rPPG ? face_rppg : face_raw).push_back(db);
  }
  if (chest.empty() || face_raw.empty() || face_rppg.empty())
    return {false, "a group has no valid estimates"};
  const double a = lower_median(chest);
  const double b = lower_median(face_raw);
  const double c = lower_median(face_rppg);
  return {a > b && b > c, "median SNR chest " + fmt(a, 2) + " dB, face RGB " + fmt(b, 2) + " dB, face rPPG " +
                              fmt(c, 2) + " dB (need strictly decreasing)"};
}

// ---------------------------------------------------------------------------
// 4-5: EMD

Check emd_completeness(const SelftestOptions& opts) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double fs = opts.pipeline.rate.work_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(opts.pipeline.window.length_s * fs));
  double worst = 0.0;
  std::size_t failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int tones = 1 + static_cast<int>(uni(rng) * 3);
    std::vector<double> x(n, 0.0);
    for (int k = 0; k < tones; ++k) {
      const double f = 0.05 + uni(rng) * (0.45 * fs - 0.05);
      const double a = 0.2 + 1.8 * uni(rng);
      const double phi = kTwoPi * uni(rng);
      for (std::size_t i = 0; i < n; ++i) x[i] += a * std::sin(kTwoPi * f * static_cast<double>(i) / fs + phi);
    }
    const double sigma = uni(rng);
    const double offset = 4.0 * (uni(rng) - 0.5);
    for (double& v : x) v += offset + sigma * gauss(rng);
    const ImfSet set = decompose(x, fs, opts.pipeline.rate.emd);
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double sum = set.residual[i];
      for (const auto& imf : set.imfs) sum += imf[i];
      err += (sum - x[i]) * (sum - x[i]);
      ref += x[i] * x[i];
    }
    const double rel = std::sqrt(err / ref);
    worst = std::max(worst, rel);
    if (!(rel <= 1e-9)) ++failures;
  }
  std::ostringstream d;
  d << "worst relative L2 error " << worst << " over 200 windows (limit 1e-9)";
  return {failures == 0, d.str()};
}

Check emd_two_tone(const SelftestOptions& opts) {
  const double fs = opts.pipeline.rate.work_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(opts.pipeline.window.length_s * fs));
  constexpr double kLow = 0.25;
  constexpr double kHigh = 1.2;
  int hits = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    const double p1 = phase(rng);
    const double p2 = phase(rng);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      x[i] = std::sin(kTwoPi * kLow * t + p1) + std::sin(kTwoPi * kHigh * t + p2);
    }
    const ImfSet set = decompose(x, fs, opts.pipeline.rate.emd);
    if (set.imfs.size() < 2) continue;
    // the two most energetic modes, in decomposition order
    std::vector<std::pair<double, std::size_t>> energy;
    for (std::size_t k = 0; k < set.imfs.size(); ++k) {
      double e = 0.0;
      for (double v : set.imfs[k]) e += v * v;
      energy.emplace_back(-e, k);
    }
    std::sort(energy.begin(), energy.end());
    const std::size_t a = std::min(energy[0].second, energy[1].second);
    const std::size_t b = std::max(energy[0].second, energy[1].second);
    const double fa = representative_frequency(psd(set.imfs[a], fs));
    const double fb = representative_frequency(psd(set.imfs[b], fs));
    if (std::abs(fa - kHigh) <= 0.03 && std::abs(fb - kLow) <= 0.03) ++hits;
  }
  return {hits >= 95, std::to_string(hits) + " of 100 seeds separate 1.2 Hz then 0.25 Hz within 0.03 Hz (need 95)"};
}

// ---------------------------------------------------------------------------
// 6-7: fusion and SNR algebra

// Direct scan of every position with freshly summed weights on both sides.
double brute_weighted_median(std::vector<double> fs, std::vector<double> ws) {
  std::vector<std::size_t> order(fs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
  for (std::size_t i = 0; i < order.size(); ++i) {
    double below = 0.0;
    double above = 0.0;
    for (std::size_t j = 0; j < i; ++j) below += ws[order[j]];
    for (std::size_t j = order.size(); j-- > i + 1;) above += ws[order[j]];
    if (below <= 0.5 + kHalfTolerance && above <= 0.5 + kHalfTolerance) return fs[order[i]];
  }
  return std::nan("");
}

Check weighted_median_oracle() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(uni(rng) * 50);
    std::vector<double> fs(n);
    std::vector<double> snr(n);
    const bool coarse = trial % 3 == 0;   // many tied frequencies
    const bool uniform = trial % 5 == 0;  // equal weights, exact halves
    for (std::size_t i = 0; i < n; ++i) {
      fs[i] = coarse ? 0.1 + 0.05 * std::floor(uni(rng) * 6) : 0.1 + 0.3 * uni(rng);
      snr[i] = uniform ? 1.0 : 0.01 + uni(rng);
    }
    const std::vector<double> ws = weights(snr);
    const double got = weighted_median(fs, ws);
    const double want = brute_weighted_median(fs, ws);
    if (got == want) ++agree;
  }
  return {agree == 1000, std::to_string(agree) + " of 1000 random instances agree with the brute-force scan"};
}

Check snr_and_weight_algebra() {
  Psd p;
  p.resolution = 0.01;
  for (int k = 0; k <= 400; ++k) {
    p.freqs.push_back(0.01 * k);
    p.power.push_back(0.0);
  }
  p.power[20] = 1.0;   // 0.2 Hz, in band
  p.power[100] = 1.0;  // 1.0 Hz, out of band
  const double ratio = band_snr(p).ratio;
  const std::vector<double> w = weights(std::vector<double>{0.3, 0.1});
  const bool pass = std::abs(ratio - 0.5) <= 1e-12 && w.size() == 2 && std::abs(w[0] - 0.75) <= 1e-12 &&
                    std::abs(w[1] - 0.25) <= 1e-12;
  std::ostringstream d;
  d.precision(17);
  d << "two-tone band ratio " << ratio << ", weights [" << w.at(0) << ", " << w.at(1) << "]";
  return {pass, d.str()};
}

// ---------------------------------------------------------------------------
// 8: FIR response, evaluated directly from the taps

Check filter_response(const SelftestOptions& opts) {
  constexpr double fs = 120.0;
  const double fc = opts.pipeline.f_cut_hz;
  const FirFilter& fir = design_lowpass(fs, fc);
  const auto gain = [&](double f) {
    const double half = 0.5 * static_cast<double>(fir.taps.size() - 1);
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = 0; k < fir.taps.size(); ++k) {
      const double w = kTwoPi * f / fs * (static_cast<double>(k) - half);
      re += fir.taps[k] * std::cos(w);
      im -= fir.taps[k] * std::sin(w);
    }
    return std::hypot(re, im);
  };
  double ripple = 0.0;
  for (double f = 0.0; f <= 3.2 + 1e-12; f += 0.001) ripple = std::max(ripple, std::abs(gain(f) - 1.0));
  double stop = 0.0;
  for (double f = 5.0; f <= 60.0 + 1e-12; f += 0.001) stop = std::max(stop, gain(f));
  const double atten_db = -20.0 * std::log10(stop);
  return {ripple <= 0.01 && atten_db >= 40.0,
          "order " + std::to_string(fir.order()) + ", passband ripple " + fmt(100 * ripple, 3) +
              "% below 3.2 Hz (limit 1%), attenuation " + fmt(atten_db, 1) + " dB above 5 Hz (need 40 dB)"};
}

// ---------------------------------------------------------------------------
// 9: autocorrelation frequency at 0 dB

Check autocorr_accuracy(const SelftestOptions& opts) {
  const double fs = opts.pipeline.rate.work_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(opts.pipeline.window.length_s * fs));
  int hits = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(9000 + seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(0.5));  // unit sinusoid power 1/2
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    const double phi = phase(rng);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(kTwoPi * 0.25 * static_cast<double>(i) / fs + phi) + noise(rng);
    const AutocorrResult r = autocorr_analyze(x, fs, opts.pipeline.rate.autocorr);
    if (r.status == EstimateStatus::ok && std::abs(r.f_hz - 0.25) <= 0.02) ++hits;
  }
  return {hits >= 95, std::to_string(hits) + " of 100 seeds within 0.02 Hz of 0.25 Hz (need 95)"};
}

// ---------------------------------------------------------------------------
// 10: NLMS drift suppression

Check nlms_drift(const SelftestOptions& opts) {
  // at the rate the pipeline runs the filter
  const double fs = opts.pipeline.rate.work_rate_hz;
  constexpr double kPulseHz = 1.2;
  const auto n = static_cast<std::size_t>(std::llround(60 * fs));
  ChannelTrace green, red;
  green.fps = red.fps = fs;
  green.channel = Channel::G;
  red.channel = Channel::R;
  std::vector<double> drift(n), pulse(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    drift[i] = 4.0 * std::sin(kTwoPi * 0.02 * t + 0.3) + 2.0 * std::sin(kTwoPi * 0.13 * t + 1.1) + 0.05 * t;
    pulse[i] = std::sin(kTwoPi * kPulseHz * t);
    green.samples.push_back(100.0 + drift[i] + pulse[i]);
    red.samples.push_back(120.0 + drift[i]);
  }
  const ChannelTrace out = extract_rppg(green, red, opts.pipeline.lms);

  // Second half, after adaptation: least-squares fit of the pulse tone plus offset.
  const std::size_t from = n / 2;
  const std::size_t m = n - from;
  double ss = 0, sc = 0, cc = 0, ys = 0, yc = 0, s1 = 0, c1 = 0, y1 = 0;
  for (std::size_t i = from; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double s = std::sin(kTwoPi * kPulseHz * t);
    const double c = std::cos(kTwoPi * kPulseHz * t);
    ss += s * s; sc += s * c; cc += c * c; ys += out.samples[i] * s; yc += out.samples[i] * c;
    s1 += s; c1 += c; y1 += out.samples[i];
  }
  // Solve the 3x3 normal equations [s c 1] by Cramer's rule.
  const double N = static_cast<double>(m);
  const auto det3 = [](double a, double b, double c, double d, double e, double f, double g, double h, double k) {
    return a * (e * k - f * h) - b * (d * k - f * g) + c * (d * h - e * g);
  };
  const double D = det3(ss, sc, s1, sc, cc, c1, s1, c1, N);
  const double as = det3(ys, sc, s1, yc, cc, c1, y1, c1, N) / D;
  const double ac = det3(ss, ys, s1, sc, yc, c1, s1, y1, N) / D;
  const double a0 = det3(ss, sc, ys, sc, cc, yc, s1, c1, y1) / D;
  const double retained = std::hypot(as, ac);

  double drift_mean = 0.0;
  for (std::size_t i = from; i < n; ++i) drift_mean += drift[i];
  drift_mean /= N;
  double resid = 0.0;
  double ref = 0.0;
  for (std::size_t i = from; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double fit = a0 + as * std::sin(kTwoPi * kPulseHz * t) + ac * std::cos(kTwoPi * kPulseHz * t);
    resid += (out.samples[i] - fit) * (out.samples[i] - fit);
    ref += (drift[i] - drift_mean) * (drift[i] - drift_mean);
  }
  const double attenuation = 1.0 - std::sqrt(resid / ref);
  return {attenuation >= 0.9 && retained >= 0.8,
          "drift attenuated " + fmt(100 * attenuation, 1) + "% (need 90%), pulse amplitude retained " +
              fmt(100 * retained, 1) + "% (need 80%)"};
}

// ---------------------------------------------------------------------------
// 11: byte-identical output across thread counts

std::vector<std::string> pipeline_flags(const PipelineConfig& c) {
  return {"--edge-px",      std::to_string(c.edge_px),          "--cell-purity",   format_double(c.cell_purity),
          "--f-cut",        format_double(c.f_cut_hz),          "--window-s",      format_double(c.window.length_s),
          "--step-s",       format_double(c.window.step_s),     "--band-lo",       format_double(c.rate.band.lo_hz),
          "--band-hi",      format_double(c.rate.band.hi_hz),   "--lms-taps",      std::to_string(c.lms.filter_length),
          "--lms-mu",       format_double(c.lms.step_size),     "--emd-sd",        format_double(c.rate.emd.sd_threshold),
          "--emd-max-imfs", std::to_string(c.rate.emd.max_imfs), "--work-rate-hz", format_double(c.rate.work_rate_hz),
          "--lms-leakage",  format_double(c.lms.leakage),     "--emd-max-sift",  std::to_string(c.rate.emd.max_sift_iters),
          "--min-periodicity", format_double(c.rate.min_imf_periodicity)};
}

std::optional<std::string> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Check determinism(const SelftestOptions& opts) {
  SynthScenario s = opts.scenario;
  s.schedule.stages = {{0, 25, 12}, {25, 50, 15}};
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("respira-determinism-" + std::to_string(std::random_device{}()));
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{root};
  write_dataset(s, synth_frames(s), root / "data");

  std::vector<std::string> produced;
  for (const int threads : {1, 3}) {
    std::vector<std::string> args = {"analyze",
                                     "--frames", (root / "data" / "frames").string(),
                                     "--mask", (root / "data" / "mask.pgm").string(),
                                     "--schedule", (root / "data" / "schedule.csv").string(),
                                     "--out", (root / ("out" + std::to_string(threads))).string(),
                                     "--threads", std::to_string(threads)};
    for (auto& f : pipeline_flags(opts.pipeline)) args.push_back(std::move(f));
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (code != 0) return {false, "analyze --threads " + std::to_string(threads) + " exited " + std::to_string(code) + ": " + err.str()};
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(root / "out1")) {
    const auto a = read_file(entry.path());
    const auto b = read_file(root / "out3" / entry.path().filename());
    if (!b) return {false, entry.path().filename().string() + " missing from the 3-thread run"};
    if (*a != *b) return {false, entry.path().filename().string() + " differs between 1 and 3 threads"};
    ++files;
  }
  std::size_t other = std::distance(fs::directory_iterator(root / "out3"), fs::directory_iterator{});
  if (other != files) return {false, "runs produced different file sets"};
  return {files > 0, std::to_string(files) + " output files byte-identical with --threads 1 and 3"};
}

template <class F>
CriterionResult timed(int id, F&& body) {
  CriterionResult r;
  r.id = id;
  r.name = criterion_name(id);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Check c = body();
    r.pass = c.pass;
    r.detail = c.detail;
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

bool is_quick_criterion(int id) { return id >= 4 && id <= kCriterionCount; }

std::string criterion_name(int id) {
  switch (id) {
    case 1: return "chest recovery";
    case 2: return "face recovery";
    case 3: return "SNR ordering";
    case 4: return "EMD completeness";
    case 5: return "EMD two-tone separation";
    case 6: return "weighted median oracle";
    case 7: return "SNR ratio and weights";
    case 8: return "low-pass response";
    case 9: return "autocorrelation accuracy";
    case 10: return "NLMS drift suppression";
    case 11: return "thread determinism";
    default: return "unknown";
  }
}

CriterionResult run_criterion(int id, const SelftestOptions& opts) {
  switch (id) {
    case 1:
    case 2:
    case 3:
      return timed(id, [&] {
        const EndToEnd e = run_end_to_end(opts);
        return id == 1 ? recovery(e, Region::chest, 0.2, 0.95)
                       : id == 2 ? recovery(e, Region::face, 0.5, 0.80) : snr_ordering(e);
      });
    case 4: return timed(id, [&] { return emd_completeness(opts); });
    case 5: return timed(id, [&] { return emd_two_tone(opts); });
    case 6: return timed(id, [] { return weighted_median_oracle(); });
    case 7: return timed(id, [] { return snr_and_weight_algebra(); });
    case 8: return timed(id, [&] { return filter_response(opts); });
    case 9: return timed(id, [&] { return autocorr_accuracy(opts); });
    case 10: return timed(id, [&] { return nlms_drift(opts); });
    case 11: return timed(id, [&] { return determinism(opts); });
    default: {
      CriterionResult r;
      r.id = id;
      r.name = "unknown";
      r.detail = "no such criterion";
      return r;
    }
  }
}

std::vector<CriterionResult> run_selftest(const SelftestOptions& opts, std::ostream* progress) {
  std::vector<int> ids = opts.only;
  if (ids.empty()) {
    for (int id = 1; id <= kCriterionCount; ++id) {
      if (!opts.quick || is_quick_criterion(id)) ids.push_back(id);
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::vector<CriterionResult> results;
  auto emit = [&](CriterionResult r) {
    if (progress) *progress << format_result(r) << std::endl;
    results.push_back(std::move(r));
  };

  // 1-3 share a single analysis of the default recording.
  std::optional<EndToEnd> shared;
  std::string shared_error;
  double shared_seconds = 0.0;
  for (int id : ids) {
    if (id >= 1 && id <= 3) {
      if (!shared && shared_error.empty()) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
          shared = run_end_to_end(opts);
        } catch (const std::exception& e) {
          shared_error = std::string("error: ") + e.what();
        }
        shared_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      CriterionResult r = timed(id, [&]() -> Check {
        if (!shared) return {false, shared_error};
        return id == 1 ? recovery(*shared, Region::chest, 0.2, 0.95)
                       : id == 2 ? recovery(*shared, Region::face, 0.5, 0.80) : snr_ordering(*shared);
      });
      r.seconds += shared_seconds;
      shared_seconds = 0.0;
      emit(std::move(r));
    } else {
      emit(run_criterion(id, opts));
    }
  }
  return results;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream s;
  s << "criterion " << (r.id < 10 ? " " : "") << r.id << "  " << (r.pass ? "PASS" : "FAIL") << "  " << r.name << ": "
    << r.detail << " [" << fmt(r.seconds, 2) << " s]";
  return s.str();
}

}  // namespace respira
