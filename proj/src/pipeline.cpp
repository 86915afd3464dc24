#include "respira/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <thread>

#include "respira/error.hpp"
#include "respira/preprocess.hpp"

namespace respira {

void PipelineConfig::validate() const {
  if (edge_px < 1) throw InputError("cell edge must be at least 1 px");
  if (!(cell_purity > 0.0 && cell_purity <= 1.0)) throw InputError("cell purity must lie in (0, 1]");
  if (!(f_cut_hz > 0.0)) throw InputError("cut-off frequency must be positive");
  if (threads < 0) throw InputError("thread count must be >= 0");
  lms.validate();
  window.validate();
  rate.validate();
}

std::size_t AnalysisResult::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(cell_estimates.begin(), cell_estimates.end(), [](const CellEstimate& e) { return e.valid; }));
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& task) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

AnalysisResult analyze_frames(const FrameSequence& frames, const RegionMask& mask, const PipelineConfig& cfg) {
  cfg.validate();
  if (frames.width() != mask.width || frames.height() != mask.height)
    throw InputError("mask is " + std::to_string(mask.width) + "x" + std::to_string(mask.height) + " but frames are " +
                     std::to_string(frames.width()) + "x" + std::to_string(frames.height()));
  SubRoiGrid grid = build_grid(mask, cfg.edge_px, cfg.cell_purity);
  std::vector<ChannelTrace> traces = average_channels(frames, grid);
  return analyze_traces(std::move(traces), std::move(grid), cfg);
}

AnalysisResult analyze_traces(std::vector<ChannelTrace> traces, SubRoiGrid grid, const PipelineConfig& cfg) {
  cfg.validate();
  if (traces.empty()) throw InputError("no traces");
  for (const ChannelTrace& t : traces) {
    if (!grid.find(t.roi_id)) throw InputError("trace for unknown cell " + std::to_string(t.roi_id));
  }
  std::stable_sort(traces.begin(), traces.end(), [](const ChannelTrace& a, const ChannelTrace& b) {
    return std::pair(a.roi_id, a.channel) < std::pair(b.roi_id, b.channel);
  });
  for (std::size_t i = 1; i < traces.size(); ++i) {
    if (traces[i].roi_id == traces[i - 1].roi_id && traces[i].channel == traces[i - 1].channel)
      throw InputError("duplicate trace for cell " + std::to_string(traces[i].roi_id) + " channel " +
                       std::string(to_string(traces[i].channel)));
  }

  // Low-pass at the input rate, then move to the working rate. rPPG rows
  // supplied by the caller bypass the low-pass.
  parallel_for(traces.size(), cfg.threads, [&](std::size_t i) {
    ChannelTrace& t = traces[i];
    if (t.channel != Channel::rPPG && cfg.f_cut_hz < 0.5 * t.fps) t = lowpass(t, cfg.f_cut_hz);
    if (cfg.rate.work_rate_hz < t.fps) {
      t.samples = resample(t.samples, t.fps, cfg.rate.work_rate_hz);
      t.fps = cfg.rate.work_rate_hz;
    }
  });

  // Face cells with R and G but no rPPG trace get one. The adaptive filter
  // runs at the working rate: its step size acts per sample, and at camera
  // rates the adaptation is fast enough to track and cancel the pulse itself.
  std::map<int, std::pair<const ChannelTrace*, const ChannelTrace*>> red_green;
  std::map<int, bool> has_rppg;
  for (const ChannelTrace& t : traces) {
    if (t.channel == Channel::R) red_green[t.roi_id].first = &t;
    if (t.channel == Channel::G) red_green[t.roi_id].second = &t;
    if (t.channel == Channel::rPPG) has_rppg[t.roi_id] = true;
  }
  std::vector<std::pair<const ChannelTrace*, const ChannelTrace*>> jobs;
  for (const auto& [id, rg] : red_green) {
    if (grid.find(id)->label != Region::face || has_rppg[id] || !rg.first || !rg.second) continue;
    jobs.push_back(rg);
  }
  std::vector<ChannelTrace> rppg(jobs.size());
  parallel_for(jobs.size(), cfg.threads,
               [&](std::size_t i) { rppg[i] = extract_rppg(*jobs[i].second, *jobs[i].first, cfg.lms); });
  for (auto& t : rppg) traces.push_back(std::move(t));
  std::stable_sort(traces.begin(), traces.end(), [](const ChannelTrace& a, const ChannelTrace& b) {
    return std::pair(a.roi_id, a.channel) < std::pair(b.roi_id, b.channel);
  });

  std::vector<std::vector<CellEstimate>> per_trace(traces.size());
  parallel_for(traces.size(), cfg.threads, [&](std::size_t i) {
    per_trace[i] = estimate_windows(std::span<const ChannelTrace>(&traces[i], 1), cfg.window, cfg.rate);
  });

  AnalysisResult result;
  for (auto& v : per_trace) result.cell_estimates.insert(result.cell_estimates.end(), v.begin(), v.end());
  if (result.valid_count() == 0) throw PipelineError("all windows invalid: no cell produced a respiratory estimate");
  result.fusion = fuse_all(result.cell_estimates, grid);
  result.grid = std::move(grid);
  result.traces = std::move(traces);
  return result;
}

}  // namespace respira
