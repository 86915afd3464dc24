#include "respira/ingest.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

#include <json.hpp>

#include "respira/error.hpp"

namespace respira {
namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

std::string where(const fs::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

std::ifstream open_input(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  if (!fs::exists(path)) throw InputError("missing file: " + path.string());
  std::ifstream in(path, mode);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::uint8_t label_code(Region r) {
  switch (r) {
    case Region::background: return 0;
    case Region::face: return 128;
    case Region::chest: return 255;
  }
  return 0;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// rawseq frames

FrameSequence load_frames(const fs::path& path, std::string_view format) {
  if (format != kRawSeqFormat) throw InputError("unsupported frame format: " + std::string(format));
  const fs::path header_path = path / "header.json";
  const fs::path data_path = path / "frames.bin";
  if (!fs::is_directory(path)) throw InputError("missing frame directory: " + path.string());

  nlohmann::json header;
  {
    std::ifstream in = open_input(header_path);
    try {
      in >> header;
    } catch (const nlohmann::json::exception& e) {
      throw InputError("malformed header " + header_path.string() + ": " + e.what());
    }
  }
  int width = 0, height = 0, bit_depth = 0;
  double fps = 0.0;
  std::size_t frame_count = 0;
  try {
    width = header.at("width").get<int>();
    height = header.at("height").get<int>();
    fps = header.at("fps").get<double>();
    bit_depth = header.at("bit_depth").get<int>();
    frame_count = header.at("frame_count").get<std::size_t>();
    const std::string layout = header.value("layout", std::string("planar-rgb"));
    if (layout != "planar-rgb") throw InputError("malformed header: unsupported layout " + layout);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed header " + header_path.string() + ": " + e.what());
  }
  if (bit_depth != 8 && bit_depth != 16) throw InputError("unsupported bit depth " + std::to_string(bit_depth));
  if (width <= 0 || height <= 0 || frame_count == 0 || !(fps > 0.0))
    throw InputError("malformed header " + header_path.string() + ": non-positive geometry, fps or frame count");

  FrameSequence frames(width, height, fps, bit_depth, frame_count);
  const std::size_t bytes_per_sample = bit_depth / 8;
  const std::size_t frame_bytes = frames.plane_size() * 3 * bytes_per_sample;
  const std::size_t expected = frame_bytes * frame_count;
  if (!fs::exists(data_path)) throw InputError("missing file: " + data_path.string());
  const std::size_t actual = fs::file_size(data_path);
  if (actual < expected) {
    throw InputError("truncated frame data: " + data_path.string() + " holds " + std::to_string(actual / frame_bytes) +
                     " complete frames, header declares " + std::to_string(frame_count));
  }
  if (actual > expected) {
    throw InputError("inconsistent frame dimensions: " + data_path.string() + " is larger than " +
                     std::to_string(frame_count) + " frames of " + std::to_string(width) + "x" +
                     std::to_string(height));
  }

  std::ifstream in = open_input(data_path, std::ios::binary);
  if (bit_depth == 8) {
    auto data = frames.data8();
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  } else {
    auto data = frames.data16();
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * 2));
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& v : data) v = static_cast<std::uint16_t>((v >> 8) | (v << 8));
    }
  }
  if (!in) throw InputError("truncated frame data: " + data_path.string());
  return frames;
}

void write_frames(const FrameSequence& frames, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::ordered_json header;
  header["width"] = frames.width();
  header["height"] = frames.height();
  header["fps"] = frames.fps();
  header["bit_depth"] = frames.bit_depth();
  header["frame_count"] = frames.frame_count();
  header["layout"] = "planar-rgb";
  {
    std::ofstream out = open_output(dir / "header.json");
    out << header.dump(2) << '\n';
  }
  std::ofstream out = open_output(dir / "frames.bin", std::ios::binary);
  if (frames.bit_depth() == 8) {
    auto data = frames.data8();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  } else {
    auto data = frames.data16();
    if constexpr (std::endian::native == std::endian::big) {
      std::vector<std::uint16_t> swapped(data.begin(), data.end());
      for (auto& v : swapped) v = static_cast<std::uint16_t>((v >> 8) | (v << 8));
      out.write(reinterpret_cast<const char*>(swapped.data()), static_cast<std::streamsize>(swapped.size() * 2));
    } else {
      out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * 2));
    }
  }
  if (!out) throw InputError("failed writing " + (dir / "frames.bin").string());
}

// ---------------------------------------------------------------------------
// PGM mask

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

RegionMask load_mask(const fs::path& path) {
  std::ifstream in = open_input(path, std::ios::binary);
  if (pgm_token(in) != "P5") throw InputError("mask is not a binary PGM (P5): " + path.string());
  int width = 0, height = 0, maxval = 0;
  if (!parse_number(pgm_token(in), width) || !parse_number(pgm_token(in), height) ||
      !parse_number(pgm_token(in), maxval))
    throw InputError("malformed PGM header: " + path.string());
  if (width <= 0 || height <= 0) throw InputError("malformed PGM header: non-positive size");
  if (maxval != 255) throw InputError("mask PGM must have maxval 255: " + path.string());

  std::vector<std::uint8_t> raw(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw InputError("truncated PGM data: " + path.string());

  RegionMask mask(width, height);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    switch (raw[i]) {
      case 0: mask.labels[i] = Region::background; break;
      case 128: mask.labels[i] = Region::face; break;
      case 255: mask.labels[i] = Region::chest; break;
      default:
        throw InputError("unknown label value " + std::to_string(raw[i]) + " at pixel (" +
                         std::to_string(i % width) + "," + std::to_string(i / width) + ") in " + path.string());
    }
  }
  return mask;
}

void write_mask(const RegionMask& mask, const fs::path& path) {
  std::ofstream out = open_output(path, std::ios::binary);
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  std::vector<std::uint8_t> raw(mask.labels.size());
  std::transform(mask.labels.begin(), mask.labels.end(), raw.begin(), label_code);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw InputError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Trace CSV

TraceFile load_traces(const fs::path& path) {
  std::ifstream in = open_input(path);
  TraceFile file;
  bool have_fps = false;
  std::string line;
  std::size_t line_no = 0;

  struct Key {
    int roi;
    Channel ch;
    auto operator<=>(const Key&) const = default;
  };
  std::vector<Key> order;
  std::map<Key, std::size_t> index;
  std::optional<std::tuple<int, int, std::size_t>> last;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      view = trim(view.substr(1));
      if (view.starts_with("fps=")) {
        if (!parse_number(view.substr(4), file.fps) || !(file.fps > 0.0))
          throw InputError("invalid fps header at " + where(path, line_no));
        have_fps = true;
      } else if (view.starts_with("cell=")) {
        const auto f = split(view.substr(5), ',');
        CellInfo cell;
        std::optional<Region> label = f.size() == 5 ? parse_region(f[1]) : std::nullopt;
        if (f.size() != 5 || !label || !parse_number(f[0], cell.id) || !parse_number(f[2], cell.x0) ||
            !parse_number(f[3], cell.y0) || !parse_number(f[4], cell.edge_px))
          throw InputError("malformed cell metadata at " + where(path, line_no));
        cell.label = *label;
        file.cells.push_back(cell);
      }
      continue;
    }
    if (!have_fps) throw InputError("missing header '# fps=<float>' before data in " + path.string());
    if (view.starts_with("roi_id")) continue;  // optional column header

    const auto f = split(view, ',');
    if (f.size() != 4) throw InputError("ragged row (expected 4 fields) at " + where(path, line_no));
    int roi = 0;
    std::size_t t_index = 0;
    double value = 0.0;
    const auto channel = parse_channel(f[1]);
    if (!parse_number(f[0], roi)) throw InputError("non-numeric roi_id at " + where(path, line_no));
    if (!channel) throw InputError("unknown channel '" + std::string(f[1]) + "' at " + where(path, line_no));
    if (!parse_number(f[2], t_index)) throw InputError("non-numeric t_index at " + where(path, line_no));
    if (!parse_number(f[3], value) || !std::isfinite(value))
      throw InputError("non-numeric sample at " + where(path, line_no));

    const Key key{roi, *channel};
    auto it = index.find(key);
    if (it == index.end()) {
      if (!order.empty() && key < order.back())
        throw InputError("rows not sorted by (roi_id, channel) at " + where(path, line_no));
      it = index.emplace(key, file.traces.size()).first;
      order.push_back(key);
      ChannelTrace trace;
      trace.fps = file.fps;
      trace.roi_id = roi;
      trace.channel = *channel;
      file.traces.push_back(std::move(trace));
    } else if (!(key == order.back())) {
      throw InputError("rows not sorted by (roi_id, channel) at " + where(path, line_no));
    }
    ChannelTrace& trace = file.traces[it->second];
    if (t_index != trace.samples.size())
      throw InputError("t_index " + std::to_string(t_index) + " out of sequence (expected " +
                       std::to_string(trace.samples.size()) + ") at " + where(path, line_no));
    trace.samples.push_back(value);
  }
  if (!have_fps) throw InputError("missing header '# fps=<float>' in " + path.string());
  if (file.traces.empty()) throw InputError("no traces in " + path.string());
  return file;
}

void export_traces(std::span<const ChannelTrace> traces, std::span<const CellInfo> cells, const fs::path& path) {
  if (traces.empty()) throw InputError("no traces to export");
  const double fps = traces.front().fps;
  for (const auto& t : traces) {
    if (t.fps != fps) throw InputError("traces with different sampling rates cannot share one CSV");
  }
  std::vector<const ChannelTrace*> sorted;
  for (const auto& t : traces) sorted.push_back(&t);
  std::stable_sort(sorted.begin(), sorted.end(), [](const ChannelTrace* a, const ChannelTrace* b) {
    return std::tie(a->roi_id, a->channel) < std::tie(b->roi_id, b->channel);
  });

  std::ofstream out = open_output(path);
  out << "# fps=" << format_double(fps) << '\n';
  for (const CellInfo& c : cells) {
    out << "# cell=" << c.id << ',' << to_string(c.label) << ',' << c.x0 << ',' << c.y0 << ',' << c.edge_px << '\n';
  }
  for (const ChannelTrace* t : sorted) {
    const std::string prefix = std::to_string(t->roi_id) + "," + std::string(to_string(t->channel)) + ",";
    for (std::size_t i = 0; i < t->samples.size(); ++i) {
      out << prefix << i << ',' << format_double(t->samples[i]) << '\n';
    }
  }
  if (!out) throw InputError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Schedule CSV

GroundTruthSchedule load_schedule(const fs::path& path) {
  std::ifstream in = open_input(path);
  GroundTruthSchedule schedule;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto f = split(view, ',');
    if (f.size() != 3) throw InputError("schedule row must have 3 fields at " + where(path, line_no));
    Stage stage;
    if (!parse_number(f[0], stage.start_s) || !parse_number(f[1], stage.end_s) ||
        !parse_number(f[2], stage.bpm)) {
      if (schedule.stages.empty() && f[0] == "start_s") continue;  // column header
      throw InputError("non-numeric schedule value at " + where(path, line_no));
    }
    schedule.stages.push_back(stage);
  }
  schedule.validate();
  return schedule;
}

void write_schedule(const GroundTruthSchedule& schedule, const fs::path& path) {
  std::ofstream out = open_output(path);
  for (const Stage& s : schedule.stages) {
    out << format_double(s.start_s) << ',' << format_double(s.end_s) << ',' << format_double(s.bpm) << '\n';
  }
  if (!out) throw InputError("failed writing " + path.string());
}

}  // namespace respira
