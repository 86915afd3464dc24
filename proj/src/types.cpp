#include "respira/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "respira/error.hpp"

namespace respira {

std::string_view to_string(Region region) {
  switch (region) {
    case Region::background: return "background";
    case Region::face: return "face";
    case Region::chest: return "chest";
  }
  return "?";
}

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::R: return "R";
    case Channel::G: return "G";
    case Channel::B: return "B";
    case Channel::rPPG: return "rPPG";
  }
  return "?";
}

std::optional<Region> parse_region(std::string_view text) {
  if (text == "background") return Region::background;
  if (text == "face") return Region::face;
  if (text == "chest") return Region::chest;
  return std::nullopt;
}

std::optional<Channel> parse_channel(std::string_view text) {
  if (text == "R") return Channel::R;
  if (text == "G") return Channel::G;
  if (text == "B") return Channel::B;
  if (text == "rPPG") return Channel::rPPG;
  return std::nullopt;
}

FrameSequence::FrameSequence(int width, int height, double fps, int bit_depth,
                             std::size_t frame_count)
    : width_(width), height_(height), fps_(fps), bit_depth_(bit_depth), frame_count_(frame_count) {
  if (width <= 0 || height <= 0) throw InputError("frame geometry must be positive");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InputError("fps must be positive");
  if (frame_count == 0) throw InputError("frame sequence must contain at least one frame");
  const std::size_t total = frame_count * 3 * plane_size();
  if (bit_depth == 8) {
    u8_.assign(total, 0);
  } else if (bit_depth == 16) {
    u16_.assign(total, 0);
  } else {
    throw InputError("unsupported bit depth " + std::to_string(bit_depth));
  }
}

std::size_t FrameSequence::offset(std::size_t frame, int channel) const {
  return (frame * 3 + static_cast<std::size_t>(channel)) * plane_size();
}

std::span<std::uint8_t> FrameSequence::plane8(std::size_t frame, int channel) {
  return std::span<std::uint8_t>(u8_).subspan(offset(frame, channel), plane_size());
}
std::span<const std::uint8_t> FrameSequence::plane8(std::size_t frame, int channel) const {
  return std::span<const std::uint8_t>(u8_).subspan(offset(frame, channel), plane_size());
}
std::span<std::uint16_t> FrameSequence::plane16(std::size_t frame, int channel) {
  return std::span<std::uint16_t>(u16_).subspan(offset(frame, channel), plane_size());
}
std::span<const std::uint16_t> FrameSequence::plane16(std::size_t frame, int channel) const {
  return std::span<const std::uint16_t>(u16_).subspan(offset(frame, channel), plane_size());
}

std::uint32_t FrameSequence::pixel(std::size_t frame, int channel, int x, int y) const {
  const std::size_t i = offset(frame, channel) + static_cast<std::size_t>(y) * width_ + x;
  return bit_depth_ == 8 ? u8_[i] : u16_[i];
}

void FrameSequence::set_pixel(std::size_t frame, int channel, int x, int y, std::uint32_t value) {
  const std::size_t i = offset(frame, channel) + static_cast<std::size_t>(y) * width_ + x;
  if (bit_depth_ == 8) {
    u8_[i] = static_cast<std::uint8_t>(value);
  } else {
    u16_[i] = static_cast<std::uint16_t>(value);
  }
}

RegionMask::RegionMask(int w, int h, Region fill)
    : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

void GroundTruthSchedule::validate() {
  if (stages.empty()) throw InputError("schedule has no stages");
  std::stable_sort(stages.begin(), stages.end(),
                   [](const Stage& a, const Stage& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const Stage& s = stages[i];
    if (!std::isfinite(s.start_s) || !std::isfinite(s.end_s) || !std::isfinite(s.bpm))
      throw InputError("schedule stage " + std::to_string(i) + " has non-finite values");
    if (s.bpm <= 0.0) throw InputError("schedule stage " + std::to_string(i) + ": negative frequency");
    if (s.end_s <= s.start_s)
      throw InputError("schedule stage " + std::to_string(i) + ": end must be after start");
    if (i > 0 && s.start_s < stages[i - 1].end_s)
      throw InputError("schedule stages " + std::to_string(i - 1) + " and " + std::to_string(i) +
                       " overlap");
  }
}

const Stage* GroundTruthSchedule::stage_at(double t) const {
  for (const Stage& s : stages) {
    if (t >= s.start_s && t < s.end_s) return &s;
  }
  return nullptr;
}

const CellInfo* SubRoiGrid::find(int id) const {
  for (const CellInfo& c : cells) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

}  // namespace respira
