#include "respira/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "respira/error.hpp"
#include "respira/eval.hpp"
#include "respira/ingest.hpp"
#include "respira/pipeline.hpp"
#include "respira/selftest.hpp"
#include "respira/synth.hpp"

namespace respira {

namespace {

namespace fs = std::filesystem;

void add_pipeline_flags(CLI::App* cmd, PipelineConfig& c) {
  cmd->add_option("--edge-px", c.edge_px, "Sub-ROI cell edge in pixels")->capture_default_str();
  cmd->add_option("--cell-purity", c.cell_purity, "Fraction of a cell that must carry one label")->capture_default_str();
  cmd->add_option("--f-cut", c.f_cut_hz, "Low-pass cut-off (Hz)")->capture_default_str();
  cmd->add_option("--window-s", c.window.length_s, "Analysis window length (s)")->capture_default_str();
  cmd->add_option("--step-s", c.window.step_s, "Window step (s)")->capture_default_str();
  cmd->add_option("--band-lo", c.rate.band.lo_hz, "Respiratory band lower edge (Hz)")->capture_default_str();
  cmd->add_option("--band-hi", c.rate.band.hi_hz, "Respiratory band upper edge (Hz)")->capture_default_str();
  cmd->add_option("--lms-taps", c.lms.filter_length, "NLMS filter length")->capture_default_str();
  cmd->add_option("--lms-mu", c.lms.step_size, "NLMS normalised step size")->capture_default_str();
  cmd->add_option("--lms-leakage", c.lms.leakage, "NLMS leakage in [0, 1)")->capture_default_str();
  cmd->add_option("--emd-sd", c.rate.emd.sd_threshold, "EMD sifting stop threshold")->capture_default_str();
  cmd->add_option("--emd-max-sift", c.rate.emd.max_sift_iters, "EMD sifting iterations per IMF")->capture_default_str();
  cmd->add_option("--emd-max-imfs", c.rate.emd.max_imfs, "EMD maximum number of IMFs")->capture_default_str();
  cmd->add_option("--min-periodicity", c.rate.min_imf_periodicity,
                  "Normalised autocorrelation peak the selected IMF must reach")
      ->capture_default_str();
  cmd->add_option("--work-rate-hz", c.rate.work_rate_hz, "Working sample rate of the rate estimator (Hz)")
      ->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)")->capture_default_str();
}

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw InputError("missing " + what + ": " + p.string());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

SubRoiGrid grid_for_traces(const TraceFile& file, int edge_px) {
  SubRoiGrid grid;
  grid.edge_px = edge_px;
  if (!file.cells.empty()) {
    grid.cells = file.cells;
    return grid;
  }
  // Without cell metadata every trace is treated as a face cell.
  std::set<int> ids;
  for (const ChannelTrace& t : file.traces) ids.insert(t.roi_id);
  for (int id : ids) grid.cells.push_back(CellInfo{id, -1, -1, edge_px, Region::face});
  return grid;
}

void write_estimates_csv(const FusionResult& fusion, const fs::path& path) {
  using Key = std::tuple<Region, Channel, std::size_t>;
  std::map<Key, const WindowEstimate*> rows;
  std::map<Key, bool> missing;
  for (const auto& w : fusion.windows) rows[{w.region, w.channel, w.window_index}] = &w;
  for (const auto& m : fusion.missing) missing[{m.region, m.channel, m.window_index}] = true;
  for (const auto& [k, v] : missing) rows.emplace(k, nullptr);

  std::ofstream out = open_out(path);
  out << "window_index,region,channel,fused_hz,fused_bpm,n_valid,n_total\n";
  for (const auto& [key, w] : rows) {
    const auto& [region, channel, index] = key;
    out << index << ',' << to_string(region) << ',' << to_string(channel) << ',';
    if (w)
      out << format_double(w->fused_hz) << ',' << format_double(60.0 * w->fused_hz) << ',' << w->n_valid << ','
          << w->n_total << '\n';
    else
      out << "nan,nan,0,0\n";
  }
}

void write_cell_estimates_csv(const std::vector<CellEstimate>& estimates, const SubRoiGrid& grid, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "roi_id,region,channel,window_index,start_s,end_s,valid,status,f_hz,snr,snr_db\n";
  for (const CellEstimate& e : estimates) {
    out << e.roi_id << ',' << to_string(grid.find(e.roi_id)->label) << ',' << to_string(e.channel) << ','
        << e.window_index << ',' << format_double(e.start_s) << ',' << format_double(e.end_s) << ','
        << (e.valid ? 1 : 0) << ',' << to_string(e.status) << ',';
    if (e.valid)
      out << format_double(e.f_hz) << ',' << format_double(e.snr) << ',' << format_double(SnrValue{e.snr}.db()) << '\n';
    else
      out << "nan,nan,nan\n";
  }
}

int cmd_analyze(const fs::path& frames_dir, const fs::path& mask_path, const fs::path& traces_path,
                const fs::path& schedule_path, const fs::path& out_dir, const fs::path& export_path,
                const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
  const bool use_frames = !frames_dir.empty();
  if (use_frames == !traces_path.empty()) throw InputError("give either --frames with --mask, or --traces");
  std::optional<GroundTruthSchedule> schedule;
  if (!schedule_path.empty()) {
    require_exists(schedule_path, "schedule");
    schedule = load_schedule(schedule_path);
  }

  AnalysisResult result;
  if (use_frames) {
    if (mask_path.empty()) throw InputError("--frames requires --mask");
    require_exists(frames_dir, "frames");
    require_exists(mask_path, "mask");
    const RegionMask mask = load_mask(mask_path);
    const FrameSequence frames = load_frames(frames_dir);
    result = analyze_frames(frames, mask, cfg);
  } else {
    require_exists(traces_path, "traces");
    TraceFile file = load_traces(traces_path);
    SubRoiGrid grid = grid_for_traces(file, cfg.edge_px);
    result = analyze_traces(std::move(file.traces), std::move(grid), cfg);
  }

  fs::create_directories(out_dir);
  write_estimates_csv(result.fusion, out_dir / "estimates.csv");
  write_cell_estimates_csv(result.cell_estimates, result.grid, out_dir / "cell_estimates.csv");
  const std::vector<SnrMapRow> map = snr_map(result.cell_estimates, result.grid);
  if (map.empty()) err << "warning: no valid cells, SNR map is empty\n";
  write_snr_map_csv(map, out_dir / "snr_map.csv");
  if (!export_path.empty()) export_traces(result.traces, result.grid.cells, export_path);

  out << "cells: " << result.grid.n_roi() << ", cell estimates: " << result.cell_estimates.size() << " ("
      << result.valid_count() << " valid), fused windows: " << result.fusion.windows.size() << " ("
      << result.fusion.missing.size() << " missing)\n";

  if (schedule) {
    const ErrorSeries series = error_series(result.fusion.windows, *schedule);
    write_errors_csv(series.scored, out_dir / "errors.csv");
    out << "scored: " << series.scored.size() << ", excluded: " << series.excluded.size() << " ("
        << series.boundary_count << " across stage boundaries)\n";
    if (series.scored.empty()) {
      err << "warning: no window lies inside a single stage; summary.csv not written\n";
    } else {
      write_summary_csv(summarize_groups(series.scored), out_dir / "summary.csv");
    }
  }
  return kExitOk;
}

int cmd_synth(const fs::path& scenario_path, const fs::path& out_dir, bool with_traces, std::ostream& out) {
  SynthScenario s;
  if (!scenario_path.empty()) {
    require_exists(scenario_path, "scenario");
    s = load_scenario(scenario_path);
  }
  s.validate();
  const SynthFrames data = synth_frames(s);
  write_dataset(s, data, out_dir);
  if (with_traces) {
    const SynthTraces traces = synth_traces(s);
    export_traces(traces.traces, traces.grid.cells, out_dir / "traces.csv");
  }
  out << "wrote " << data.frames.frame_count() << " frames (" << s.width << "x" << s.height << ", "
      << s.bit_depth << "-bit, " << format_double(s.fps) << " fps) to " << out_dir.string() << '\n';
  return kExitOk;
}

int cmd_selftest(SelftestOptions opts, std::ostream& out) {
  const auto results = run_selftest(opts, &out);
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  out << (results.size() - failed) << " of " << results.size() << " criteria passed";
  if (failed) {
    out << "; failed:";
    for (const auto& r : results) {
      if (!r.pass) out << ' ' << r.id << " (" << r.name << ')';
    }
  }
  out << '\n';
  return failed == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Camera-based respiratory rate estimation"};
  app.name("respira");
  app.require_subcommand(1);

  PipelineConfig analyze_cfg;
  fs::path frames_dir, mask_path, traces_path, schedule_path, out_dir, export_path;
  CLI::App* analyze = app.add_subcommand("analyze", "Estimate respiratory rate from frames or traces");
  analyze->add_option("--frames", frames_dir, "rawseq directory (header.json + frames.bin)");
  analyze->add_option("--mask", mask_path, "Region mask (PGM: 0 background, 128 face, 255 chest)");
  analyze->add_option("--traces", traces_path, "Trace CSV instead of frames and mask");
  analyze->add_option("--schedule", schedule_path, "Ground-truth schedule CSV; enables errors/summary output");
  analyze->add_option("--out", out_dir, "Output directory")->required();
  analyze->add_option("--export-traces", export_path, "Also write the filtered and rPPG traces as trace CSV");
  add_pipeline_flags(analyze, analyze_cfg);

  fs::path scenario_path, synth_out;
  bool synth_traces_flag = false;
  CLI::App* synth = app.add_subcommand("synth", "Render a synthetic recording with known breathing schedule");
  synth->add_option("--scenario", scenario_path, "Scenario file (key = value); defaults when omitted");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_flag("--traces", synth_traces_flag, "Also write the noisy cell traces as traces.csv");

  SelftestOptions selftest_opts;
  CLI::App* selftest = app.add_subcommand("selftest", "Run the acceptance suite and print a pass/fail table");
  selftest->add_flag("--quick", selftest_opts.quick, "Skip the full-length end-to-end criteria");
  selftest->add_option("--only", selftest_opts.only, "Run only these criterion ids")
      ->check(CLI::Range(1, kCriterionCount));
  add_pipeline_flags(selftest, selftest_opts.pipeline);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (analyze->parsed())
      return cmd_analyze(frames_dir, mask_path, traces_path, schedule_path, out_dir, export_path, analyze_cfg, out,
                         err);
    if (synth->parsed()) return cmd_synth(scenario_path, synth_out, synth_traces_flag, out);
    if (selftest->parsed()) return cmd_selftest(selftest_opts, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const PipelineError& e) {
    err << "pipeline failure: " << e.what() << '\n';
    return kExitPipeline;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitInput;
}

}  // namespace respira
