#include "respira/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "respira/error.hpp"
#include "respira/ingest.hpp"
#include "respira/preprocess.hpp"

namespace respira {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool inside(const Rect& r, int w, int h) { return r.x >= 0 && r.y >= 0 && r.w > 0 && r.h > 0 && r.x + r.w <= w && r.y + r.h <= h; }

bool overlaps(const Rect& a, const Rect& b) {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

// breathing phase 2*pi*integral(f_resp dt), sampled at frame times
std::vector<double> breathing_phase(const SynthScenario& s) {
  const std::size_t n = s.frame_count();
  std::vector<double> phase(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    phase[i] = acc;
    const Stage* stage = s.schedule.stage_at(static_cast<double>(i) / s.fps);
    const double f = stage ? stage->bpm / 60.0 : 0.0;
    acc += kTwoPi * f / s.fps;
  }
  return phase;
}

std::vector<double> pulse_phase(const SynthScenario& s, const std::vector<double>& breathing) {
  std::vector<double> phase(breathing.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < breathing.size(); ++i) {
    phase[i] = acc;
    acc += kTwoPi * s.pulse_hz * (1.0 + s.rsa_depth * std::sin(breathing[i])) / s.fps;
  }
  return phase;
}

double drift_phase_offset(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  return std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
}

}  // namespace

GroundTruthSchedule SynthScenario::default_schedule() {
  GroundTruthSchedule g;
  g.stages = {{0, 60, 10}, {60, 120, 12}, {120, 180, 15}, {180, 240, 18}};
  return g;
}

void SynthScenario::validate() const {
  GroundTruthSchedule copy = schedule;
  copy.validate();
  if (!(fps > 0.0)) throw InputError("scenario fps must be positive");
  if (width <= 0 || height <= 0) throw InputError("scenario geometry must be positive");
  if (!inside(face, width, height) || !inside(chest, width, height))
    throw InputError("scenario face/chest rectangles must lie inside the frame");
  if (overlaps(face, chest)) throw InputError("scenario face and chest rectangles overlap");
  if (edge_px < 1) throw InputError("scenario edge_px must be at least 1");
  if (bit_depth != 8 && bit_depth != 16) throw InputError("scenario bit_depth must be 8 or 16");
  for (double v : {motion_amp, head_coupling, pulse_amp, drift_amp, noise_sigma, pulse_hz, drift_timescale_s}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("scenario amplitudes and rates must be finite and >= 0");
  }
  if (!(rsa_depth >= 0.0 && rsa_depth < 1.0)) throw InputError("scenario rsa_depth must lie in [0, 1)");
}

std::size_t SynthScenario::frame_count() const {
  return static_cast<std::size_t>(std::llround(schedule.end_time() * fps));
}

RegionMask SynthScenario::mask() const {
  RegionMask m(width, height);
  for (const auto& [rect, label] : {std::pair{face, Region::face}, std::pair{chest, Region::chest}}) {
    for (int y = rect.y; y < rect.y + rect.h; ++y) {
      for (int x = rect.x; x < rect.x + rect.w; ++x) m.at(x, y) = label;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// scenario text

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<double> numbers(const std::string& text, char sep) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    double v = 0.0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size() || item.empty())
      throw InputError("scenario: bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

double scalar(const std::string& text) {
  const auto v = numbers(text, ',');
  if (v.size() != 1) throw InputError("scenario: expected one number, got '" + text + "'");
  return v[0];
}

Rect rect(const std::string& text) {
  const auto v = numbers(text, ',');
  if (v.size() != 4) throw InputError("scenario: rectangle needs x,y,w,h");
  return Rect{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), static_cast<int>(v[3])};
}

Rgb rgb(const std::string& text) {
  const auto v = numbers(text, ',');
  if (v.size() != 3) throw InputError("scenario: colour needs r,g,b");
  return Rgb{v[0], v[1], v[2]};
}

std::string join(std::initializer_list<double> values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ',';
    out += format_double(v);
  }
  return out;
}

}  // namespace

SynthScenario parse_scenario(const std::string& text) {
  SynthScenario s;
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"stages",
       [&](const std::string& v) {
         s.schedule.stages.clear();
         std::stringstream ss(v);
         std::string stage;
         while (std::getline(ss, stage, ';')) {
           if (trim(stage).empty()) continue;
           const auto f = numbers(stage, ',');
           if (f.size() != 3) throw InputError("scenario: each stage needs start,end,bpm");
           s.schedule.stages.push_back(Stage{f[0], f[1], f[2]});
         }
       }},
      {"fps", [&](const std::string& v) { s.fps = scalar(v); }},
      {"width", [&](const std::string& v) { s.width = static_cast<int>(scalar(v)); }},
      {"height", [&](const std::string& v) { s.height = static_cast<int>(scalar(v)); }},
      {"face_rect", [&](const std::string& v) { s.face = rect(v); }},
      {"chest_rect", [&](const std::string& v) { s.chest = rect(v); }},
      {"edge_px", [&](const std::string& v) { s.edge_px = static_cast<int>(scalar(v)); }},
      {"bit_depth", [&](const std::string& v) { s.bit_depth = static_cast<int>(scalar(v)); }},
      {"face_dc", [&](const std::string& v) { s.face_dc = rgb(v); }},
      {"chest_dc", [&](const std::string& v) { s.chest_dc = rgb(v); }},
      {"background_level", [&](const std::string& v) { s.background_level = scalar(v); }},
      {"motion_amp", [&](const std::string& v) { s.motion_amp = scalar(v); }},
      {"head_coupling", [&](const std::string& v) { s.head_coupling = scalar(v); }},
      {"pulse_hz", [&](const std::string& v) { s.pulse_hz = scalar(v); }},
      {"pulse_amp", [&](const std::string& v) { s.pulse_amp = scalar(v); }},
      {"rsa_depth", [&](const std::string& v) { s.rsa_depth = scalar(v); }},
      {"drift_amp", [&](const std::string& v) { s.drift_amp = scalar(v); }},
      {"drift_timescale_s", [&](const std::string& v) { s.drift_timescale_s = scalar(v); }},
      {"noise_sigma", [&](const std::string& v) { s.noise_sigma = scalar(v); }},
      {"seed",
       [&](const std::string& v) {
         std::uint64_t seed = 0;
         auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
         if (ec != std::errc() || p != v.data() + v.size()) throw InputError("scenario: bad seed '" + v + "'");
         s.seed = seed;
       }},
  };

  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("scenario line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const auto it = setters.find(key);
    if (it == setters.end()) throw InputError("scenario line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second(value);
  }
  s.validate();
  return s;
}

SynthScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("missing file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string format_scenario(const SynthScenario& s) {
  std::ostringstream out;
  std::string stages;
  for (const Stage& st : s.schedule.stages) {
    if (!stages.empty()) stages += "; ";
    stages += join({st.start_s, st.end_s, st.bpm});
  }
  out << "stages = \"" << stages << "\"\n"
      << "fps = " << format_double(s.fps) << '\n'
      << "width = " << s.width << '\n'
      << "height = " << s.height << '\n'
      << "face_rect = \"" << s.face.x << ',' << s.face.y << ',' << s.face.w << ',' << s.face.h << "\"\n"
      << "chest_rect = \"" << s.chest.x << ',' << s.chest.y << ',' << s.chest.w << ',' << s.chest.h << "\"\n"
      << "edge_px = " << s.edge_px << '\n'
      << "bit_depth = " << s.bit_depth << '\n'
      << "face_dc = \"" << join({s.face_dc.r, s.face_dc.g, s.face_dc.b}) << "\"\n"
      << "chest_dc = \"" << join({s.chest_dc.r, s.chest_dc.g, s.chest_dc.b}) << "\"\n"
      << "background_level = " << format_double(s.background_level) << '\n'
      << "motion_amp = " << format_double(s.motion_amp) << '\n'
      << "head_coupling = " << format_double(s.head_coupling) << '\n'
      << "pulse_hz = " << format_double(s.pulse_hz) << '\n'
      << "pulse_amp = " << format_double(s.pulse_amp) << '\n'
      << "rsa_depth = " << format_double(s.rsa_depth) << '\n'
      << "drift_amp = " << format_double(s.drift_amp) << '\n'
      << "drift_timescale_s = " << format_double(s.drift_timescale_s) << '\n'
      << "noise_sigma = " << format_double(s.noise_sigma) << '\n'
      << "seed = " << s.seed << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// signals

std::vector<double> region_signal(const SynthScenario& s, Region region, int channel) {
  const std::size_t n = s.frame_count();
  std::vector<double> out(n, s.background_level);
  if (region == Region::background) return out;
  const std::vector<double> breathing = breathing_phase(s);
  const bool face = region == Region::face;
  const double dc = face ? s.face_dc[channel] : s.chest_dc[channel];
  const double amp = face ? s.head_coupling * s.motion_amp : s.motion_amp;
  std::vector<double> pulse;
  if (face && channel == 1 && s.pulse_amp > 0.0) pulse = pulse_phase(s, breathing);
  const double drift_offset = drift_phase_offset(s.seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / s.fps;
    double v = dc + amp * std::sin(breathing[i]);
    if (s.drift_amp > 0.0 && s.drift_timescale_s > 0.0)
      v += s.drift_amp * std::sin(kTwoPi * t / s.drift_timescale_s + drift_offset);
    if (!pulse.empty()) v += s.pulse_amp * std::sin(pulse[i]);
    out[i] = v;
  }
  return out;
}

SynthTraces synth_traces(const SynthScenario& s) {
  s.validate();
  SynthTraces out;
  out.mask = s.mask();
  out.grid = build_grid(out.mask, s.edge_px);
  out.schedule = s.schedule;
  out.schedule.validate();

  std::map<std::pair<Region, int>, std::vector<double>> clean;
  for (Region r : {Region::face, Region::chest}) {
    for (int ch = 0; ch < 3; ++ch) clean[{r, ch}] = region_signal(s, r, ch);
  }
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (const CellInfo& cell : out.grid.cells) {
    for (int ch = 0; ch < 3; ++ch) {
      ChannelTrace trace;
      trace.fps = s.fps;
      trace.roi_id = cell.id;
      trace.channel = static_cast<Channel>(ch);
      trace.samples = clean[{cell.label, ch}];
      if (s.noise_sigma > 0.0) {
        for (double& v : trace.samples) v += s.noise_sigma * noise(rng);
      }
      out.traces.push_back(std::move(trace));
    }
  }
  return out;
}

SynthFrames synth_frames(const SynthScenario& s) {
  SynthTraces traces = synth_traces(s);
  const std::size_t n = s.frame_count();
  const double max_value = static_cast<double>((1u << s.bit_depth) - 1u);

  // Source of every pixel: a cell trace, or the clean region/background signal.
  std::vector<std::vector<double>> sources;
  std::map<std::pair<Region, int>, std::size_t> clean_index;
  for (const ChannelTrace& t : traces.traces) sources.push_back(t.samples);
  for (Region r : {Region::background, Region::face, Region::chest}) {
    for (int ch = 0; ch < 3; ++ch) {
      clean_index[{r, ch}] = sources.size();
      sources.push_back(region_signal(s, r, ch));
    }
  }
  for (const auto& src : sources) {
    const auto [lo, hi] = std::minmax_element(src.begin(), src.end());
    if (*lo < 0.5 || *hi > max_value - 0.5)
      throw InputError("intensity overflow at " + std::to_string(s.bit_depth) +
                       "-bit depth (signal spans " + format_double(*lo) + " to " + format_double(*hi) +
                       "); reduce DC levels or amplitudes");
  }

  std::vector<int> cell_of(static_cast<std::size_t>(s.width) * s.height, -1);
  for (std::size_t i = 0; i < traces.grid.cells.size(); ++i) {
    const CellInfo& c = traces.grid.cells[i];
    for (int y = c.y0; y < c.y0 + c.edge_px; ++y) {
      for (int x = c.x0; x < c.x0 + c.edge_px; ++x) cell_of[static_cast<std::size_t>(y) * s.width + x] = static_cast<int>(i);
    }
  }
  // per channel, the source index of every pixel
  std::vector<std::vector<std::size_t>> pixel_source(3, std::vector<std::size_t>(cell_of.size()));
  for (int ch = 0; ch < 3; ++ch) {
    for (std::size_t p = 0; p < cell_of.size(); ++p) {
      pixel_source[ch][p] = cell_of[p] >= 0 ? static_cast<std::size_t>(cell_of[p]) * 3 + ch
                                            : clean_index[{traces.mask.labels[p], ch}];
    }
  }

  SynthFrames out{FrameSequence(s.width, s.height, s.fps, s.bit_depth, n), traces.mask, traces.schedule};
  std::mt19937_64 rng(s.seed ^ 0xd1b54a32d192ed03ULL);
  std::uniform_real_distribution<double> dither(0.0, 1.0);
  for (std::size_t f = 0; f < n; ++f) {
    for (int ch = 0; ch < 3; ++ch) {
      const auto& src = pixel_source[ch];
      if (s.bit_depth == 8) {
        auto plane = out.frames.plane8(f, ch);
        for (std::size_t p = 0; p < plane.size(); ++p)
          plane[p] = static_cast<std::uint8_t>(std::floor(sources[src[p]][f] + dither(rng)));
      } else {
        auto plane = out.frames.plane16(f, ch);
        for (std::size_t p = 0; p < plane.size(); ++p)
          plane[p] = static_cast<std::uint16_t>(std::floor(sources[src[p]][f] + dither(rng)));
      }
    }
  }
  return out;
}

void write_dataset(const SynthScenario& s, const SynthFrames& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_frames(data.frames, dir / "frames");
  write_mask(data.mask, dir / "mask.pgm");
  write_schedule(data.schedule, dir / "schedule.csv");
  std::ofstream out(dir / "scenario.toml", std::ios::trunc);
  if (!out) throw InputError("cannot write " + (dir / "scenario.toml").string());
  out << format_scenario(s);
}

}  // namespace respira
