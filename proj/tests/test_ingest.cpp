#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "doctest.h"
#include "respira/error.hpp"
#include "respira/ingest.hpp"
#include "respira/synth.hpp"
#include "support.hpp"

using namespace respira;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

FrameSequence random_frames(int w, int h, double fps, int depth, std::size_t n, std::uint64_t seed) {
  FrameSequence f(w, h, fps, depth, n);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < n; ++k)
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f.set_pixel(k, c, x, y, static_cast<std::uint32_t>(rng() & f.max_value()));
  return f;
}

void check_same_frames(const FrameSequence& a, const FrameSequence& b) {
  REQUIRE(a.width() == b.width());
  REQUIRE(a.height() == b.height());
  REQUIRE(a.frame_count() == b.frame_count());
  REQUIRE(a.bit_depth() == b.bit_depth());
  CHECK(a.fps() == b.fps());
  for (std::size_t k = 0; k < a.frame_count(); ++k)
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) REQUIRE(a.pixel(k, c, x, y) == b.pixel(k, c, x, y));
}

}  // namespace

TEST_CASE("rawseq round trip, 8 and 16 bit") {
  testing::TempDir dir("ingest");
  for (int depth : {8, 16}) {
    CAPTURE(depth);
    const FrameSequence f = random_frames(8, 8, 120.0, depth, 4, 11 + depth);
    write_frames(f, dir / ("seq" + std::to_string(depth)));
    const FrameSequence g = load_frames(dir / ("seq" + std::to_string(depth)));
    CHECK(g.frame_count() == 4);
    CHECK(g.fps() == 120.0);
    check_same_frames(f, g);
  }
}

TEST_CASE("rawseq layout is planar RGB with little-endian 16-bit samples") {
  testing::TempDir dir("ingest");
  FrameSequence f(2, 1, 30.0, 16, 2);
  // frame 1, G plane, pixel (1,0)
  f.set_pixel(1, 1, 1, 0, 0x1234);
  write_frames(f, dir / "seq");
  std::ifstream in(dir / "seq" / "frames.bin", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 2u * 3u * 2u * 2u);
  // offset (frame 1 * 3 planes + plane 1) * 2 px + x 1, in 2-byte units
  const std::size_t off = ((1 * 3 + 1) * 2 + 1) * 2;
  CHECK(bytes[off] == 0x34);
  CHECK(bytes[off + 1] == 0x12);
}

TEST_CASE("truncated frame data is rejected") {
  testing::TempDir dir("ingest");
  const FrameSequence f = random_frames(8, 8, 120.0, 8, 4, 3);
  write_frames(f, dir / "seq");
  const fs::path bin = dir / "seq" / "frames.bin";
  fs::resize_file(bin, fs::file_size(bin) - 10);  // cut into frame 3
  try {
    load_frames(dir / "seq");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("truncated frame data") != std::string::npos);
  }
}

TEST_CASE("frame header problems are input errors") {
  testing::TempDir dir("ingest");
  CHECK_THROWS_AS(load_frames(dir / "nope"), InputError);
  const FrameSequence f = random_frames(4, 4, 10.0, 8, 2, 5);
  write_frames(f, dir / "seq");
  CHECK_THROWS_AS(load_frames(dir / "seq", "mp4"), InputError);
  write_text(dir / "seq" / "header.json", R"({"width":4,"height":4,"fps":10,"bit_depth":8,"frame_count":2,"layout":"interleaved"})");
  CHECK_THROWS_AS(load_frames(dir / "seq"), InputError);
  write_text(dir / "seq" / "header.json", "{ not json");
  CHECK_THROWS_AS(load_frames(dir / "seq"), InputError);
}

TEST_CASE("mask encoding and round trip") {
  testing::TempDir dir("ingest");
  {
    std::ofstream out(dir / "m.pgm", std::ios::binary);
    out << "P5\n3 1\n255\n";
    const unsigned char px[] = {0, 128, 255};
    out.write(reinterpret_cast<const char*>(px), 3);
  }
  const RegionMask m = load_mask(dir / "m.pgm");
  REQUIRE(m.width == 3);
  CHECK(m.at(0, 0) == Region::background);
  CHECK(m.at(1, 0) == Region::face);
  CHECK(m.at(2, 0) == Region::chest);

  SynthScenario s;
  const RegionMask sm = s.mask();
  write_mask(sm, dir / "s.pgm");
  const RegionMask back = load_mask(dir / "s.pgm");
  CHECK(back.width == sm.width);
  CHECK(back.height == sm.height);
  CHECK(back.labels == sm.labels);
}

TEST_CASE("bad masks") {
  testing::TempDir dir("ingest");
  CHECK_THROWS_AS(load_mask(dir / "missing.pgm"), InputError);
  write_text(dir / "p2.pgm", "P2\n1 1\n255\n0\n");
  CHECK_THROWS_AS(load_mask(dir / "p2.pgm"), InputError);
  {
    std::ofstream out(dir / "odd.pgm", std::ios::binary);
    out << "P5\n1 1\n255\n";
    out.put(static_cast<char>(7));
  }
  CHECK_THROWS_AS(load_mask(dir / "odd.pgm"), InputError);
  write_text(dir / "short.pgm", "P5\n4 4\n255\nab");
  CHECK_THROWS_AS(load_mask(dir / "short.pgm"), InputError);
}

TEST_CASE("trace CSV basics") {
  testing::TempDir dir("ingest");
  std::string text = "# fps=8\n";
  for (int ch = 0; ch < 2; ++ch)
    for (int t = 0; t < 10; ++t)
      text += "3," + std::string(ch == 0 ? "R" : "G") + "," + std::to_string(t) + "," + std::to_string(t * 0.5) + "\n";
  write_text(dir / "t.csv", text);
  const TraceFile tf = load_traces(dir / "t.csv");
  CHECK(tf.fps == 8.0);
  REQUIRE(tf.traces.size() == 2);
  CHECK(tf.traces[0].samples.size() == 10);
  CHECK(tf.traces[1].samples.size() == 10);
  CHECK(tf.traces[0].roi_id == 3);
  CHECK(tf.traces[1].channel == Channel::G);
  CHECK(tf.traces[1].samples[9] == 4.5);
  CHECK(tf.cells.empty());
}

TEST_CASE("trace CSV errors") {
  testing::TempDir dir("ingest");
  write_text(dir / "empty.csv", "# fps=8\n");
  try {
    load_traces(dir / "empty.csv");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("no traces") != std::string::npos);
  }
  write_text(dir / "nofps.csv", "0,R,0,1\n");
  CHECK_THROWS_AS(load_traces(dir / "nofps.csv"), InputError);
  write_text(dir / "ragged.csv", "# fps=8\n0,R,0\n");
  CHECK_THROWS_AS(load_traces(dir / "ragged.csv"), InputError);
  write_text(dir / "gap.csv", "# fps=8\n0,R,0,1\n0,R,2,1\n");
  CHECK_THROWS_AS(load_traces(dir / "gap.csv"), InputError);
  write_text(dir / "order.csv", "# fps=8\n1,R,0,1\n0,R,0,1\n");
  CHECK_THROWS_AS(load_traces(dir / "order.csv"), InputError);
  write_text(dir / "chan.csv", "# fps=8\n0,X,0,1\n");
  CHECK_THROWS_AS(load_traces(dir / "chan.csv"), InputError);
}

TEST_CASE("export_traces round trip is bit-exact") {
  testing::TempDir dir("ingest");
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ud(-1e3, 1e3);
  std::vector<ChannelTrace> traces;
  std::vector<CellInfo> cells;
  for (int id = 0; id < 3; ++id) {
    cells.push_back({id, id * 10, 0, 10, id == 2 ? Region::chest : Region::face});
    for (Channel ch : {Channel::R, Channel::G, Channel::B, Channel::rPPG}) {
      ChannelTrace t;
      t.fps = 120.0 / 7.0;
      t.roi_id = id;
      t.channel = ch;
      for (int i = 0; i < 25; ++i) t.samples.push_back(ud(rng) / 3.0);
      t.samples[0] = std::numeric_limits<double>::denorm_min();
      t.samples[1] = 0.1;
      traces.push_back(t);
    }
  }
  export_traces(traces, cells, dir / "t.csv");
  const TraceFile tf = load_traces(dir / "t.csv");
  CHECK(tf.fps == traces[0].fps);
  REQUIRE(tf.traces.size() == traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    CHECK(tf.traces[i].roi_id == traces[i].roi_id);
    CHECK(tf.traces[i].channel == traces[i].channel);
    CHECK(tf.traces[i].samples == traces[i].samples);
  }
  REQUIRE(tf.cells.size() == 3);
  CHECK(tf.cells[2].label == Region::chest);
  CHECK(tf.cells[1].x0 == 10);
  CHECK(tf.cells[1].edge_px == 10);
}

TEST_CASE("format_double is shortest round-trip text") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(120.0) == "120");
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    double v;
    std::uint64_t bits = rng();
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    REQUIRE(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("schedule parsing") {
  testing::TempDir dir("ingest");
  write_text(dir / "four.csv", "# stages\n0,60,10\n60,120,12\n120,180,15\n180,240,18\n");
  const GroundTruthSchedule s = load_schedule(dir / "four.csv");
  REQUIRE(s.stages.size() == 4);
  CHECK(s.stages[3].bpm == 18.0);
  CHECK(s.end_time() == 240.0);
  CHECK(s.stage_at(60.0)->bpm == 12.0);
  CHECK(s.stage_at(240.0) == nullptr);

  write_text(dir / "one.csv", "0,30,12\n");
  CHECK(load_schedule(dir / "one.csv").stages.size() == 1);

  write_text(dir / "overlap.csv", "0,60,10\n50,120,12\n");
  try {
    load_schedule(dir / "overlap.csv");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("overlap") != std::string::npos);
  }
  write_text(dir / "neg.csv", "0,60,-1\n");
  CHECK_THROWS_AS(load_schedule(dir / "neg.csv"), InputError);
  write_text(dir / "empty.csv", "# nothing\n");
  CHECK_THROWS_AS(load_schedule(dir / "empty.csv"), InputError);

  write_schedule(s, dir / "back.csv");
  const GroundTruthSchedule b = load_schedule(dir / "back.csv");
  REQUIRE(b.stages.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(b.stages[i].start_s == s.stages[i].start_s);
    CHECK(b.stages[i].end_s == s.stages[i].end_s);
    CHECK(b.stages[i].bpm == s.stages[i].bpm);
  }
}

TEST_CASE("synth frames survive a write/read round trip") {
  testing::TempDir dir("ingest");
  SynthScenario s;
  s.schedule.stages = {{0.0, 2.0, 12.0}};
  s.fps = 30.0;
  const SynthFrames data = synth_frames(s);
  write_dataset(s, data, dir.path());
  check_same_frames(data.frames, load_frames(dir / "frames"));
  CHECK(load_mask(dir / "mask.pgm").labels == data.mask.labels);
}
