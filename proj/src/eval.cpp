#include "respira/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <tuple>

#include "respira/error.hpp"
#include "respira/ingest.hpp"

namespace respira {

namespace {

bool boundary_inside(const GroundTruthSchedule& truth, double start, double end) {
  constexpr double eps = 1e-9;
  for (std::size_t i = 0; i < truth.stages.size(); ++i) {
    const Stage& s = truth.stages[i];
    for (double b : {s.start_s, s.end_s}) {
      if (b > start + eps && b < end - eps) return true;
    }
  }
  return false;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::string fmt(double v) { return std::isnan(v) ? "nan" : format_double(v); }

}  // namespace

ErrorSeries error_series(std::span<const WindowEstimate> estimates, const GroundTruthSchedule& truth) {
  if (estimates.empty()) throw InputError("no estimates to score");
  ErrorSeries series;
  for (const WindowEstimate& e : estimates) {
    const bool straddles = boundary_inside(truth, e.start_s, e.end_s);
    const Stage* stage = straddles ? nullptr : truth.stage_at(e.center_s());
    if (!stage) {
      series.excluded.push_back(e.window_index);
      series.boundary_count += straddles;
      continue;
    }
    series.scored.push_back(ScoredError{e.window_index, e.region, e.channel, 60.0 * e.fused_hz - stage->bpm});
  }
  return series;
}

double lower_median(std::span<const double> values) {
  if (values.empty()) throw InputError("median of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  return v[mid];
}

double inclusive_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InputError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ErrorStats summarize(std::span<const double> errors) {
  if (errors.empty()) throw InputError("no errors to summarize");
  std::vector<double> v(errors.begin(), errors.end());
  std::sort(v.begin(), v.end());
  ErrorStats s;
  s.n = v.size();
  s.median = v[(v.size() - 1) / 2];
  s.q1 = inclusive_quantile(v, 0.25);
  s.q3 = inclusive_quantile(v, 0.75);
  s.iqr = s.q3 - s.q1;
  s.min = v.front();
  s.max = v.back();
  return s;
}

std::vector<SummaryRow> summarize_groups(std::span<const ScoredError> errors) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const ScoredError& e : errors) {
    const std::string region(to_string(e.region));
    groups[{region, std::string(to_string(e.channel))}].push_back(e.error_bpm);
    groups[{region, "all"}].push_back(e.error_bpm);
    groups[{"all", "all"}].push_back(e.error_bpm);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, values] : groups) rows.push_back(SummaryRow{key.first, key.second, summarize(values)});
  return rows;
}

std::vector<SnrMapRow> snr_map(std::span<const CellEstimate> estimates, const SubRoiGrid& grid) {
  std::map<std::pair<int, Channel>, std::vector<double>> per_cell;
  for (const CellEstimate& e : estimates) {
    auto& bucket = per_cell[{e.roi_id, e.channel}];
    if (e.valid && e.snr > 0.0) bucket.push_back(10.0 * std::log10(e.snr));
  }
  std::vector<SnrMapRow> rows;
  for (const auto& [key, db] : per_cell) {
    const CellInfo* cell = grid.find(key.first);
    if (!cell) continue;  // not part of the grid: background
    SnrMapRow row;
    row.roi_id = cell->id;
    row.x0 = cell->x0;
    row.y0 = cell->y0;
    row.region = cell->label;
    row.channel = key.second;
    row.n = db.size();
    row.median_snr_db = db.empty() ? std::numeric_limits<double>::quiet_NaN() : lower_median(db);
    rows.push_back(row);
  }
  return rows;
}

void write_errors_csv(std::span<const ScoredError> errors, const std::filesystem::path& path) {
  std::ofstream out = open_csv(path);
  out << "window_index,region,channel,error_bpm\n";
  for (const ScoredError& e : errors) {
    out << e.window_index << ',' << to_string(e.region) << ',' << to_string(e.channel) << ','
        << format_double(e.error_bpm) << '\n';
  }
}

void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path) {
  std::ofstream out = open_csv(path);
  out << "region,channel,n,median_bpm,q1_bpm,q3_bpm,iqr_bpm,min_bpm,max_bpm\n";
  for (const SummaryRow& r : rows) {
    const ErrorStats& s = r.stats;
    out << r.region << ',' << r.channel << ',' << s.n << ',' << format_double(s.median) << ','
        << format_double(s.q1) << ',' << format_double(s.q3) << ',' << format_double(s.iqr) << ','
        << format_double(s.min) << ',' << format_double(s.max) << '\n';
  }
}

void write_snr_map_csv(std::span<const SnrMapRow> rows, const std::filesystem::path& path) {
  std::ofstream out = open_csv(path);
  out << "roi_id,x0,y0,region,channel,n,median_snr_db\n";
  for (const SnrMapRow& r : rows) {
    out << r.roi_id << ',' << r.x0 << ',' << r.y0 << ',' << to_string(r.region) << ',' << to_string(r.channel)
        << ',' << r.n << ',' << fmt(r.median_snr_db) << '\n';
  }
}

}  // namespace respira
