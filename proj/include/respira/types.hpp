#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace respira {

enum class Region : std::uint8_t { background = 0, face = 1, chest = 2 };

enum class Channel : std::uint8_t { R = 0, G = 1, B = 2, rPPG = 3 };

std::string_view to_string(Region region);
std::string_view to_string(Channel channel);
std::optional<Region> parse_region(std::string_view text);
std::optional<Channel> parse_channel(std::string_view text);

/// Time-ordered RGB frames stored planar (R, G, B plane per frame, row-major).
/// Samples are kept at their native bit depth; 8-bit data lives in `u8`,
/// 16-bit data in `u16`.
class FrameSequence {
 public:
  FrameSequence() = default;
  FrameSequence(int width, int height, double fps, int bit_depth, std::size_t frame_count);

  int width() const { return width_; }
  int height() const { return height_; }
  double fps() const { return fps_; }
  int bit_depth() const { return bit_depth_; }
  std::size_t frame_count() const { return frame_count_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(width_) * height_; }
  std::uint32_t max_value() const { return (1u << bit_depth_) - 1u; }

  std::span<std::uint8_t> plane8(std::size_t frame, int channel);
  std::span<const std::uint8_t> plane8(std::size_t frame, int channel) const;
  std::span<std::uint16_t> plane16(std::size_t frame, int channel);
  std::span<const std::uint16_t> plane16(std::size_t frame, int channel) const;

  std::uint32_t pixel(std::size_t frame, int channel, int x, int y) const;
  void set_pixel(std::size_t frame, int channel, int x, int y, std::uint32_t value);

  /// Whole payload in file order.
  std::span<const std::uint8_t> data8() const { return u8_; }
  std::span<std::uint8_t> data8() { return u8_; }
  std::span<const std::uint16_t> data16() const { return u16_; }
  std::span<std::uint16_t> data16() { return u16_; }

 private:
  std::size_t offset(std::size_t frame, int channel) const;

  int width_ = 0;
  int height_ = 0;
  double fps_ = 0.0;
  int bit_depth_ = 8;
  std::size_t frame_count_ = 0;
  std::vector<std::uint8_t> u8_;
  std::vector<std::uint16_t> u16_;
};

struct RegionMask {
  int width = 0;
  int height = 0;
  std::vector<Region> labels;  // row-major

  RegionMask() = default;
  RegionMask(int w, int h, Region fill = Region::background);

  Region at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  Region& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
};

struct Stage {
  double start_s = 0.0;
  double end_s = 0.0;
  double bpm = 0.0;
};

struct GroundTruthSchedule {
  std::vector<Stage> stages;

  /// Sorts stages by start time and checks ordering, overlap and frequencies.
  /// Throws InputError.
  void validate();
  /// Stage containing `t` (half-open [start, end)), if any.
  const Stage* stage_at(double t) const;
  double end_time() const { return stages.empty() ? 0.0 : stages.back().end_s; }
};

/// One square sub-ROI cell of the grid.
struct CellInfo {
  int id = 0;
  int x0 = -1;  // -1 when the geometry is unknown (e.g. traces loaded from CSV)
  int y0 = -1;
  int edge_px = 0;
  Region label = Region::face;
};

struct SubRoiGrid {
  int edge_px = 0;
  std::vector<CellInfo> cells;

  std::size_t n_roi() const { return cells.size(); }
  const CellInfo* find(int id) const;
};

struct ChannelTrace {
  std::vector<double> samples;
  double fps = 0.0;
  int roi_id = 0;
  Channel channel = Channel::R;

  double duration_s() const { return fps > 0.0 ? static_cast<double>(samples.size()) / fps : 0.0; }
};

}  // namespace respira
