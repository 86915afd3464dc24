#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "respira/types.hpp"

namespace respira {

/// Frame container id for a directory holding `header.json` and `frames.bin`
/// (planar RGB, frames concatenated, 16-bit samples little-endian).
inline constexpr std::string_view kRawSeqFormat = "rawseq";

FrameSequence load_frames(const std::filesystem::path& path, std::string_view format = kRawSeqFormat);
void write_frames(const FrameSequence& frames, const std::filesystem::path& dir);

/// Binary PGM (P5, maxval 255): 0 = background, 128 = face, 255 = chest.
RegionMask load_mask(const std::filesystem::path& path);
void write_mask(const RegionMask& mask, const std::filesystem::path& path);

/// Contents of a trace CSV. `cells` holds per-cell metadata when the file
/// carries `# cell=` lines; otherwise it is empty.
struct TraceFile {
  double fps = 0.0;
  std::vector<ChannelTrace> traces;
  std::vector<CellInfo> cells;
};

/// Trace CSV: `# fps=<float>` header, optional `# cell=id,label,x0,y0,edge`
/// lines, then `roi_id,channel,t_index,value` rows sorted by
/// (roi_id, channel, t_index).
TraceFile load_traces(const std::filesystem::path& path);
void export_traces(std::span<const ChannelTrace> traces, std::span<const CellInfo> cells,
                   const std::filesystem::path& path);

/// Schedule CSV: rows `start_s,end_s,freq_bpm`; `#` starts a comment line.
GroundTruthSchedule load_schedule(const std::filesystem::path& path);
void write_schedule(const GroundTruthSchedule& schedule, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace respira
