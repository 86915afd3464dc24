#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "doctest.h"
#include "respira/error.hpp"
#include "respira/spectral.hpp"
#include "support.hpp"

using namespace respira;

namespace {

Psd grid_psd(double res, double nyquist) {
  Psd p;
  p.resolution = res;
  for (std::size_t i = 0; static_cast<double>(i) * res <= nyquist + 1e-12; ++i) {
    p.freqs.push_back(static_cast<double>(i) * res);
    p.power.push_back(0.0);
  }
  return p;
}

std::size_t bin_of(const Psd& p, double f) { return static_cast<std::size_t>(std::lround(f / p.resolution)); }

}  // namespace

TEST_CASE("single tone peaks at its frequency") {
  const Psd p = psd(testing::sine(240, 8.0, 0.25), 8.0);
  CHECK(p.resolution <= 0.01);
  CHECK(std::abs(representative_frequency(p) - 0.25) <= 0.01);
  CHECK(p.freqs.front() == 0.0);
  CHECK(p.freqs.back() == doctest::Approx(4.0));
  for (std::size_t i = 1; i < p.freqs.size(); ++i) REQUIRE(p.freqs[i] > p.freqs[i - 1]);
  for (double v : p.power) REQUIRE(v >= 0.0);
  CHECK(p.freqs[1] - p.freqs[0] == doctest::Approx(p.resolution));
}

TEST_CASE("resolution bound holds for any admissible length and rate") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 8 + rng() % 2000;
    const double fps = 1.0 + static_cast<double>(rng() % 2000) / 10.0;
    const Psd p = psd(testing::white(n, 1.0, i), fps);
    CHECK(p.resolution <= 0.01);
  }
}

TEST_CASE("Parseval: total power tracks the time-domain variance") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = testing::white(20000, 1.7, seed);
    double mean = 0.0, var = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    CHECK(psd(x, 8.0).total() == doctest::Approx(var).epsilon(0.05));
  }
}

TEST_CASE("Hann-window scaling matches a direct evaluation") {
  // Direct O(n^2) periodogram at one bin, same normalisation.
  const auto x = testing::white(100, 1.0, 5);
  const Psd p = psd(x, 8.0);
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> w(n);
  double w2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    w2 += w[i] * w[i];
  }
  double ref_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) ref_total += (w[i] * (x[i] - mean)) * (w[i] * (x[i] - mean));
  ref_total /= w2;
  CHECK(p.total() == doctest::Approx(ref_total).epsilon(1e-9));
  const std::size_t nfft = 2 * (p.freqs.size() - 1);
  for (std::size_t k : {std::size_t{1}, std::size_t{17}, nfft / 4}) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k * i) / static_cast<double>(nfft);
      re += w[i] * (x[i] - mean) * std::cos(a);
      im += w[i] * (x[i] - mean) * std::sin(a);
    }
    const double ref = 2.0 * (re * re + im * im) / (static_cast<double>(nfft) * w2);
    CHECK(p.power[k] == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("constant input has no power") {
  const Psd p = psd(std::vector<double>(100, 4.0), 8.0);
  for (double v : p.power) CHECK(v == doctest::Approx(0.0).scale(1e-20));
  CHECK_THROWS_AS(representative_frequency(p), PipelineError);
  CHECK_THROWS_AS(psd(std::vector<double>(7, 1.0), 8.0), InputError);
}

TEST_CASE("representative frequency: argmax with lowest-frequency ties") {
  Psd p = grid_psd(0.01, 4.0);
  p.power[bin_of(p, 0.2)] = 1.0;
  p.power[bin_of(p, 0.3)] = 0.5;
  CHECK(representative_frequency(p) == doctest::Approx(0.2));
  p.power[bin_of(p, 0.3)] = 1.0;
  CHECK(representative_frequency(p) == doctest::Approx(0.2));
  for (double& v : p.power) v *= 7.5;
  CHECK(representative_frequency(p) == doctest::Approx(0.2));
  try {
    representative_frequency(grid_psd(0.01, 4.0));
    FAIL("expected PipelineError");
  } catch (const PipelineError& e) {
    CHECK(std::string(e.what()).find("no dominant component") != std::string::npos);
  }
}

TEST_CASE("band SNR on constructed spectra") {
  Psd p = grid_psd(0.01, 4.0);
  p.power[bin_of(p, 0.25)] = 2.0;
  CHECK(band_snr(p).ratio == 1.0);
  CHECK(band_snr(p).db() == 0.0);
  p.power[bin_of(p, 1.0)] = 2.0;
  CHECK(std::abs(band_snr(p).ratio - 0.5) <= 1e-12);
  CHECK(band_snr(p).db() == doctest::Approx(10.0 * std::log10(0.5)));
  p.power[bin_of(p, 0.25)] = 0.0;
  CHECK(band_snr(p).ratio == 0.0);
  // closed interval over bin centres
  Psd q = grid_psd(0.01, 4.0);
  q.power[bin_of(q, 0.1)] = 1.0;
  q.power[bin_of(q, 0.4)] = 1.0;
  q.power[bin_of(q, 0.41)] = 2.0;
  CHECK(band_snr(q).ratio == doctest::Approx(0.5));
  CHECK(band_power(q, {0.1, 0.4}) == 2.0);
}

TEST_CASE("band SNR is invariant to positive scaling") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    Psd p = grid_psd(0.01, 4.0);
    for (double& v : p.power) v = ud(rng);
    const double r = band_snr(p).ratio;
    const double c = 1e-3 + 1e3 * ud(rng);
    for (double& v : p.power) v *= c;
    CHECK(band_snr(p).ratio == doctest::Approx(r).epsilon(1e-12));
    CHECK(band_snr(p).ratio >= 0.0);
    CHECK(band_snr(p).ratio <= 1.0);
  }
}

TEST_CASE("total band is clamped to Nyquist") {
  Psd p = grid_psd(0.01, 2.0);
  p.power[bin_of(p, 0.2)] = 1.0;
  p.power[bin_of(p, 1.9)] = 1.0;
  CHECK(band_snr(p).ratio == doctest::Approx(0.5));
  CHECK_THROWS_AS(band_snr(p, {0.3, 0.2}), InputError);
}
