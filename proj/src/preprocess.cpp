#include "respira/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "respira/error.hpp"
#include "respira/kernels.hpp"

namespace respira {

SubRoiGrid build_grid(const RegionMask& mask, int edge_px, double purity) {
  if (edge_px < 1) throw InputError("sub-ROI edge must be at least 1 pixel");
  if (!(purity > 0.0 && purity <= 1.0)) throw InputError("cell purity must lie in (0, 1]");
  if (mask.width <= 0 || mask.height <= 0 ||
      mask.labels.size() != static_cast<std::size_t>(mask.width) * mask.height)
    throw InputError("invalid region mask");

  SubRoiGrid grid;
  grid.edge_px = edge_px;
  const int area = edge_px * edge_px;
  const double needed = purity * area;
  for (int y0 = 0; y0 + edge_px <= mask.height; y0 += edge_px) {
    for (int x0 = 0; x0 + edge_px <= mask.width; x0 += edge_px) {
      int face = 0, chest = 0;
      for (int y = y0; y < y0 + edge_px; ++y) {
        for (int x = x0; x < x0 + edge_px; ++x) {
          const Region r = mask.at(x, y);
          face += r == Region::face;
          chest += r == Region::chest;
        }
      }
      const Region label = chest > face ? Region::chest : Region::face;
      const int count = std::max(face, chest);
      // integer comparison when purity is 1 avoids rounding surprises
      const bool keep = purity == 1.0 ? count == area : count >= needed - 1e-9;
      if (count > 0 && keep) {
        grid.cells.push_back(CellInfo{static_cast<int>(grid.cells.size()), x0, y0, edge_px, label});
      }
    }
  }
  if (grid.cells.empty()) throw InputError("no valid cells: mask has no sub-ROI of the required purity");
  return grid;
}

namespace {

template <class Pixel>
double cell_mean(std::span<const Pixel> plane, int width, const CellInfo& cell) {
  std::uint64_t total = 0;
  for (int y = cell.y0; y < cell.y0 + cell.edge_px; ++y) {
    total += simd::sum(plane.subspan(static_cast<std::size_t>(y) * width + cell.x0, cell.edge_px));
  }
  return static_cast<double>(total) / (static_cast<double>(cell.edge_px) * cell.edge_px);
}

}  // namespace

std::vector<ChannelTrace> average_channels(const FrameSequence& frames, const SubRoiGrid& grid) {
  for (const CellInfo& c : grid.cells) {
    if (c.x0 < 0 || c.y0 < 0 || c.edge_px < 1 || c.x0 + c.edge_px > frames.width() ||
        c.y0 + c.edge_px > frames.height())
      throw InputError("geometry mismatch: cell " + std::to_string(c.id) + " lies outside the " +
                       std::to_string(frames.width()) + "x" + std::to_string(frames.height()) + " frame");
  }
  std::vector<ChannelTrace> traces(grid.cells.size() * 3);
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      ChannelTrace& t = traces[i * 3 + ch];
      t.fps = frames.fps();
      t.roi_id = grid.cells[i].id;
      t.channel = static_cast<Channel>(ch);
      t.samples.resize(frames.frame_count());
    }
  }
  for (std::size_t f = 0; f < frames.frame_count(); ++f) {
    for (int ch = 0; ch < 3; ++ch) {
      for (std::size_t i = 0; i < grid.cells.size(); ++i) {
        traces[i * 3 + ch].samples[f] =
            frames.bit_depth() == 8 ? cell_mean(frames.plane8(f, ch), frames.width(), grid.cells[i])
                                    : cell_mean(frames.plane16(f, ch), frames.width(), grid.cells[i]);
      }
    }
  }
  return traces;
}

// ---------------------------------------------------------------------------
// FIR design

double FirFilter::gain(double f_hz) const {
  const int half = order() / 2;
  const double w = 2.0 * std::numbers::pi * f_hz / fps;
  double h = taps[half];
  for (int k = 1; k <= half; ++k) h += 2.0 * taps[half + k] * std::cos(w * k);
  return std::abs(h);
}

namespace {

FirFilter hamming_sinc(double fps, double f_cut, int order) {
  FirFilter filter;
  filter.fps = fps;
  filter.f_cut = f_cut;
  filter.taps.resize(order + 1);
  const double fc = f_cut / fps;  // cycles per sample
  const int half = order / 2;
  // computed for the centre and right half, mirrored so symmetry is exact
  for (int m = 0; m <= half; ++m) {
    const double sinc = m == 0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double window = 0.54 + 0.46 * std::cos(2.0 * std::numbers::pi * m / order);
    filter.taps[half + m] = filter.taps[half - m] = sinc * window;
  }
  double total = 0.0;
  for (double t : filter.taps) total += t;
  for (double& t : filter.taps) t /= total;
  return filter;
}

bool meets_spec(const FirFilter& f) {
  const double pass_edge = kPassbandEdge * f.f_cut;
  const double stop_edge = kStopbandEdge * f.f_cut;
  const double nyquist = f.fps / 2.0;
  // cheap rejection at the band edges before the dense sweep
  if (std::abs(f.gain(pass_edge) - 1.0) > kPassbandRipple || f.gain(stop_edge) > kStopbandGain) return false;
  const int points = 32 * (f.order() + 1);
  const double step = nyquist / points;
  for (int i = 0; i <= points; ++i) {
    const double fr = i * step;
    if (fr <= pass_edge) {
      if (std::abs(f.gain(fr) - 1.0) > kPassbandRipple) return false;
    } else if (fr >= stop_edge) {
      if (f.gain(fr) > kStopbandGain) return false;
    }
  }
  return true;
}

}  // namespace

const FirFilter& design_lowpass(double fps, double f_cut) {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InputError("fps must be positive");
  if (!(f_cut > 0.0 && f_cut < fps / 2.0))
    throw InputError("cut-off " + std::to_string(f_cut) + " Hz must lie in (0, fps/2)");
  if (kStopbandEdge * f_cut >= fps / 2.0)
    throw InputError("cut-off too close to Nyquist: no stopband left at this sampling rate");

  static std::mutex mutex;
  static std::map<std::pair<double, double>, std::unique_ptr<FirFilter>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{fps, f_cut}];
  if (!slot) {
    constexpr int kMaxOrder = 1 << 16;
    for (int order = 2; order <= kMaxOrder; order += 2) {
      FirFilter candidate = hamming_sinc(fps, f_cut, order);
      if (meets_spec(candidate)) {
        slot = std::make_unique<FirFilter>(std::move(candidate));
        break;
      }
    }
    if (!slot) throw InputError("no FIR order up to 65536 meets the low-pass ripple and attenuation limits");
  }
  return *slot;
}

std::vector<double> apply_fir(std::span<const double> x, std::span<const double> taps) {
  const std::size_t n = x.size();
  const std::size_t half = taps.size() / 2;
  if (n <= half) throw InputError("signal shorter than the filter's half-length");
  // mirror about the first and last sample (the edge sample is not repeated)
  std::vector<double> ext(n + 2 * half);
  for (std::size_t i = 0; i < half; ++i) {
    ext[half - 1 - i] = x[i + 1];
    ext[half + n + i] = x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + half);
  std::vector<double> y(n);
  const std::span<const double> e(ext);
  for (std::size_t i = 0; i < n; ++i) y[i] = simd::dot(e.subspan(i, taps.size()), taps);
  return y;
}

ChannelTrace lowpass(const ChannelTrace& trace, double f_cut) {
  const FirFilter& filter = design_lowpass(trace.fps, f_cut);
  if (trace.samples.size() < static_cast<std::size_t>(filter.order()))
    throw InputError("trace of " + std::to_string(trace.samples.size()) + " samples is shorter than the filter order " +
                     std::to_string(filter.order()));
  for (double v : trace.samples) {
    if (!std::isfinite(v)) throw InputError("trace contains non-finite samples");
  }
  ChannelTrace out = trace;
  out.samples = apply_fir(trace.samples, filter.taps);
  return out;
}

}  // namespace respira
