#include <cmath>
#include <numbers>
#include <string>

#include "doctest.h"
#include "respira/error.hpp"
#include "respira/rppg.hpp"
#include "support.hpp"

using namespace respira;

namespace {

ChannelTrace make(std::vector<double> x, double fps, Channel ch, int roi = 0) {
  ChannelTrace t;
  t.samples = std::move(x);
  t.fps = fps;
  t.channel = ch;
  t.roi_id = roi;
  return t;
}

std::vector<double> drift(std::size_t n, double fps) {
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fps;
    d[i] = 4.0 * std::sin(2.0 * std::numbers::pi * 0.02 * t) + 2.0 * std::sin(2.0 * std::numbers::pi * 0.13 * t + 1.0) +
           0.05 * t;
  }
  return d;
}

}  // namespace

TEST_CASE("identical inputs cancel") {
  // 60 s at camera rate: many adaptation time constants (taps / step = 320 samples)
  const double fps = 120.0;
  const std::size_t n = 120 * 60;
  const auto x = testing::add(testing::sine(n, fps, 0.3, 1.0), testing::white(n, 1.0, 4));
  const auto y = extract_rppg(make(x, fps, Channel::G), make(x, fps, Channel::R)).samples;
  CHECK(y.size() == n);
  std::vector<double> xc = x;
  double mean = 0.0;
  for (double v : xc) mean += v;
  mean /= static_cast<double>(n);
  for (double& v : xc) v -= mean;
  CHECK(testing::rms(y, n / 2) < 0.05 * testing::rms(xc));
}

TEST_CASE("shared drift is removed and the pulse kept") {
  const double fps = 8.0;
  const std::size_t n = 8 * 60;
  const auto d = drift(n, fps);
  const auto pulse = testing::sine(n, fps, 1.2, 0.5);
  const auto out = extract_rppg(make(testing::add(d, pulse), fps, Channel::G), make(d, fps, Channel::R));
  CHECK(out.channel == Channel::rPPG);
  const auto& y = out.samples;
  const std::size_t from = n / 2;
  const double kept = testing::tone_amplitude(y, fps, 1.2, from, n);
  CHECK(kept >= 0.8 * 0.5);
  std::vector<double> resid(y.size());
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - pulse[i];
  // the output is mean-free; compare against the mean-free drift
  double dm = 0.0;
  for (std::size_t i = from; i < n; ++i) dm += d[i];
  dm /= static_cast<double>(n - from);
  std::vector<double> dc(d);
  for (double& v : dc) v -= dm;
  double rm = 0.0;
  for (std::size_t i = from; i < n; ++i) rm += resid[i];
  rm /= static_cast<double>(n - from);
  for (double& v : resid) v -= rm;
  CHECK(1.0 - testing::rms(resid, from) / testing::rms(dc, from) >= 0.9);
}

TEST_CASE("degenerate and mismatched inputs") {
  const auto g = make(testing::sine(100, 8.0, 0.3), 8.0, Channel::G);
  try {
    extract_rppg(g, make(std::vector<double>(100, 3.0), 8.0, Channel::R));
    FAIL("expected PipelineError");
  } catch (const PipelineError& e) {
    CHECK(std::string(e.what()).find("degenerate reference") != std::string::npos);
  }
  CHECK_THROWS_AS(extract_rppg(g, make(testing::sine(99, 8.0, 0.3), 8.0, Channel::R)), InputError);
  CHECK_THROWS_AS(extract_rppg(g, make(testing::sine(100, 9.0, 0.3), 9.0, Channel::R)), InputError);
  CHECK_THROWS_AS(extract_rppg(g, make(testing::sine(100, 8.0, 0.3), 8.0, Channel::R, 1)), InputError);
  LmsConfig bad;
  bad.step_size = 2.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = {};
  bad.filter_length = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = {};
  bad.leakage = 1.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("stability: bounded output for adversarial finite inputs with mu <= 1") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 400;
    auto g = testing::white(n, 1.0, seed);
    auto r = testing::white(n, 1.0, seed + 100);
    // bursts and steps
    for (std::size_t i = 100; i < 110; ++i) r[i] *= 1e4;
    for (std::size_t i = 300; i < 310; ++i) r[i] *= 1e-6;
    r[350] = -1e8;
    for (std::size_t i = 200; i < n; ++i) g[i] += 50.0;
    for (double mu : {0.1, 0.5, 1.0}) {
      LmsConfig cfg;
      cfg.step_size = mu;
      const auto y = extract_rppg(make(g, 8.0, Channel::G), make(r, 8.0, Channel::R), cfg).samples;
      double gmax = 0.0, ymax = 0.0;
      for (double v : g) gmax = std::max(gmax, std::abs(v));
      for (double v : y) {
        REQUIRE(std::isfinite(v));
        ymax = std::max(ymax, std::abs(v));
      }
      CHECK(ymax <= 100.0 * gmax);
    }
  }
}

TEST_CASE("joint positive scaling scales the output") {
  const std::size_t n = 300;
  const auto g = testing::add(testing::sine(n, 8.0, 1.2), testing::white(n, 0.5, 8));
  const auto r = testing::white(n, 1.0, 9);
  const auto y1 = extract_rppg(make(g, 8.0, Channel::G), make(r, 8.0, Channel::R)).samples;
  std::vector<double> g3(g), r3(r);
  for (double& v : g3) v *= 3.0;
  for (double& v : r3) v *= 3.0;
  const auto y3 = extract_rppg(make(g3, 8.0, Channel::G), make(r3, 8.0, Channel::R)).samples;
  for (std::size_t i = 0; i < n; ++i) REQUIRE(y3[i] == doctest::Approx(3.0 * y1[i]).epsilon(1e-9).scale(1e-9));
}
