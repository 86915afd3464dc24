#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "respira/types.hpp"

namespace respira {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  double operator[](int ch) const { return ch == 0 ? r : (ch == 1 ? g : b); }
};

/// Ground-truth-labelled synthetic recording: chest and face regions whose
/// brightness follows the scheduled breathing, a pulse on the face green
/// channel frequency-modulated by breathing, a shared illumination drift and
/// independent Gaussian noise per cell and channel.
struct SynthScenario {
  GroundTruthSchedule schedule = default_schedule();
  double fps = 120.0;
  int width = 40;
  int height = 40;
  Rect face{0, 0, 40, 20};
  Rect chest{0, 20, 40, 20};
  int edge_px = 10;
  int bit_depth = 8;
  Rgb face_dc{150.0, 110.0, 100.0};
  Rgb chest_dc{120.0, 100.0, 90.0};
  double background_level = 30.0;
  double motion_amp = 2.0;      // chest breathing modulation, intensity units
  double head_coupling = 0.1;   // face modulation = head_coupling * motion_amp
  double pulse_hz = 1.2;
  double pulse_amp = 0.05;      // face green only
  double rsa_depth = 0.1;       // relative pulse-rate modulation by breathing
  double drift_amp = 1.0;
  double drift_timescale_s = 45.0;
  double noise_sigma = 0.1;     // per cell, channel and sample
  std::uint64_t seed = 1;

  /// Stages of 60 s at 10, 12, 15 and 18 bpm.
  static GroundTruthSchedule default_schedule();
  void validate() const;
  std::size_t frame_count() const;
  RegionMask mask() const;
};

/// Flat `key = value` text (TOML-compatible). Unknown keys are rejected;
/// missing keys keep their defaults.
SynthScenario parse_scenario(const std::string& text);
SynthScenario load_scenario(const std::filesystem::path& path);
std::string format_scenario(const SynthScenario& s);

struct SynthTraces {
  RegionMask mask;
  SubRoiGrid grid;
  std::vector<ChannelTrace> traces;  // R, G, B per cell in grid order
  GroundTruthSchedule schedule;
};

struct SynthFrames {
  FrameSequence frames;
  RegionMask mask;
  GroundTruthSchedule schedule;
};

/// Noise-free signal of a region/channel at every frame time.
std::vector<double> region_signal(const SynthScenario& s, Region region, int channel);

SynthTraces synth_traces(const SynthScenario& s);

/// Renders every grid cell uniformly at its synth_traces value with a
/// one-step uniform dither before quantisation, so the cell mean is an
/// unbiased estimate of the trace. Throws InputError when any intensity
/// would leave the bit depth's range.
SynthFrames synth_frames(const SynthScenario& s);

/// Writes frames/ (rawseq), mask.pgm, schedule.csv and scenario.toml.
void write_dataset(const SynthScenario& s, const SynthFrames& data, const std::filesystem::path& dir);

}  // namespace respira
