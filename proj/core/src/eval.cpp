#include "cflow/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "cflow/csv.hpp"
#include "cflow/hypothesizer.hpp"

namespace cflow {

namespace {

bool benign_cause(Errc c) {
  return c == Errc::insufficient_window || c == Errc::too_few_detections ||
         c == Errc::missing_current;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += '"';
  return out;
}

}  // namespace

double FrameScore::primary_score() const {
  if (gt) return gt->score;
  return hyp->score;
}

std::map<Errc, int> ScoreReport::skip_counts() const {
  std::map<Errc, int> counts;
  for (const auto& s : skips) ++counts[s.cause];
  return counts;
}

bool ScoreReport::has_failures() const {
  return std::any_of(skips.begin(), skips.end(),
                     [](const SkipRecord& s) { return !s.benign; });
}

namespace {

struct TrackResult {
  std::vector<FrameScore> scores;
  std::vector<SkipRecord> skips;
};

TrackResult score_one_track(const Track& track, FlowStore& flows,
                            const ScoreOptions& options) {
  TrackResult result;
  if (track.frames.empty()) return result;
  const std::int64_t first = track.first_frame_index();

  for (const auto& frame : track.frames) {
    if (!frame.gt_box) continue;
    const std::int64_t t0 = frame.frame_index;

    FrameScore fs;
    fs.track_id = track.track_id;
    fs.frame_index = t0;
    fs.timestamp_s = frame.timestamp_s;
    fs.ttc_s = frame.ttc_s;
    fs.outcome =
        classify_frame(frame.gt_box, frame.pred_box, options.iou_threshold);

    const auto attempt = [&](BoxSource window_mode, const char* label)
        -> std::optional<CFlowResult> {
      if (t0 - first < options.params.k) {
        result.skips.push_back(
            {track.track_id, t0, label, Errc::insufficient_window,
             "window [t0-k, t0] starts before the track", true});
        return std::nullopt;
      }
      try {
        const auto window =
            fill_window(track, t0, window_mode, options.params,
                        options.fill_gaps, flows, options.iou_threshold);
        return cflow(window, t0, options.params);
      } catch (const Error& e) {
        result.skips.push_back({track.track_id, t0, label, e.code(), e.what(),
                                benign_cause(e.code())});
        return std::nullopt;
      }
    };

    if (options.mode == ScoreMode::gt || options.mode == ScoreMode::both) {
      fs.gt = attempt(BoxSource::GT, "gt");
    }
    if (options.mode == ScoreMode::pred || options.mode == ScoreMode::both) {
      fs.hyp = attempt(BoxSource::PRED, "hyp");
    }
    if (fs.gt || fs.hyp) result.scores.push_back(std::move(fs));
  }
  return result;
}

}  // namespace

ScoreReport score_tracks(std::span<const Track> tracks, FlowStore& flows,
                         const ScoreOptions& options) {
  options.params.validate();
  if (!(options.iou_threshold > 0.0 && options.iou_threshold <= 1.0)) {
    throw std::invalid_argument("iou_threshold must be in (0, 1]");
  }

  std::vector<TrackResult> per_track(tracks.size());
  const int jobs =
      std::max(1, std::min<int>(options.jobs,
                                static_cast<int>(std::max<std::size_t>(
                                    tracks.size(), 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      per_track[i] = score_one_track(tracks[i], flows, options);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < tracks.size();
             i = next.fetch_add(1)) {
          per_track[i] = score_one_track(tracks[i], flows, options);
        }
      });
    }
    for (auto& w : workers) w.join();
  }

  // Merge in track order so the schedule never shows in the output.
  ScoreReport report;
  for (auto& tr : per_track) {
    std::move(tr.scores.begin(), tr.scores.end(),
              std::back_inserter(report.scores));
    std::move(tr.skips.begin(), tr.skips.end(),
              std::back_inserter(report.skips));
  }
  return report;
}

// --- binning ---------------------------------------------------------------

namespace {

std::vector<std::string> ttc_bin_labels(const std::vector<double>& edges) {
  std::vector<std::string> labels;
  labels.reserve(edges.size());
  for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
    labels.push_back("[" + format_double(edges[j]) + "," +
                     format_double(edges[j + 1]) + ")");
  }
  labels.push_back("[" + format_double(edges.back()) + ",inf)");
  return labels;
}

/// Right-open bins; values below the first edge or without a TTC go to the
/// trailing "unbinned" slot (index == edges.size()).
std::size_t ttc_bin_index(const std::optional<double>& ttc,
                          const std::vector<double>& edges) {
  if (!ttc || *ttc < edges.front()) return edges.size();
  const auto it = std::upper_bound(edges.begin(), edges.end(), *ttc);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

std::size_t score_bin_index(double score, std::size_t n_bins) {
  const auto idx = static_cast<std::size_t>(score * static_cast<double>(n_bins));
  return std::min(idx, n_bins - 1);
}

std::size_t checked_bin_count(double bin_width) {
  if (!(bin_width > 0.0) || bin_width > 1.0) {
    throw std::invalid_argument("bin_width must be in (0, 1]");
  }
  const double n = std::round(1.0 / bin_width);
  if (std::abs(n * bin_width - 1.0) > 1e-9) {
    throw std::invalid_argument("bin_width must divide 1 into whole bins");
  }
  return static_cast<std::size_t>(n);
}

std::string outcome_group(Outcome o, bool split_fn) {
  if (!split_fn && is_fn(o)) return "FN";
  return outcome_name(o);
}

}  // namespace

void SweepConfig::validate() const {
  if (thresholds.empty()) {
    throw std::invalid_argument("sweep needs at least one threshold");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0)) {
      throw std::invalid_argument("thresholds must lie in (0, 1)");
    }
    if (i > 0 && thresholds[i] <= thresholds[i - 1]) {
      throw std::invalid_argument("thresholds must be strictly increasing");
    }
  }
  if (ttc_bin_edges.size() < 2) {
    throw std::invalid_argument("need at least two TTC bin edges");
  }
  for (std::size_t i = 1; i < ttc_bin_edges.size(); ++i) {
    if (ttc_bin_edges[i] <= ttc_bin_edges[i - 1]) {
      throw std::invalid_argument("TTC bin edges must be strictly increasing");
    }
  }
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("iou_threshold must be in (0, 1]");
  }
}

std::vector<SweepRow> sweep(std::span<const FrameScore> scores,
                            const SweepConfig& config) {
  config.validate();

  const std::vector<std::string> groups =
      config.split_fn ? std::vector<std::string>{"TP", "FN_POOR", "FN_MISS"}
                      : std::vector<std::string>{"TP", "FN"};
  auto labels = ttc_bin_labels(config.ttc_bin_edges);
  labels.push_back("unbinned");
  const std::size_t n_bins = labels.size();

  // counts[bin][group_index] and flagged[bin][group][xi]
  std::vector<std::vector<std::int64_t>> totals(
      n_bins, std::vector<std::int64_t>(groups.size(), 0));
  std::vector<std::vector<std::vector<std::int64_t>>> flagged(
      n_bins, std::vector<std::vector<std::int64_t>>(
                  groups.size(),
                  std::vector<std::int64_t>(config.thresholds.size(), 0)));

  for (const auto& fs : scores) {
    const std::string group = outcome_group(fs.outcome, config.split_fn);
    const auto git = std::find(groups.begin(), groups.end(), group);
    if (git == groups.end()) continue;  // FP/NONE frames are not swept
    const auto g = static_cast<std::size_t>(git - groups.begin());
    const std::size_t b = ttc_bin_index(fs.ttc_s, config.ttc_bin_edges);
    ++totals[b][g];
    const double s = fs.primary_score();
    for (std::size_t x = 0; x < config.thresholds.size(); ++x) {
      if (s <= config.thresholds[x]) ++flagged[b][g][x];
    }
  }

  std::vector<SweepRow> rows;
  for (std::size_t b = 0; b < n_bins; ++b) {
    for (std::size_t x = 0; x < config.thresholds.size(); ++x) {
      for (std::size_t g = 0; g < groups.size(); ++g) {
        SweepRow row;
        row.ttc_bin = labels[b];
        row.xi = config.thresholds[x];
        row.outcome = groups[g];
        row.total = totals[b][g];
        row.flagged = flagged[b][g][x];
        if (row.total > 0) {
          row.percent = 100.0 * static_cast<double>(row.flagged) /
                        static_cast<double>(row.total);
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<HistogramRow> histogram(std::span<const FrameScore> scores,
                                    ScoreSeries which, double bin_width,
                                    bool split_fn) {
  const std::size_t n_bins = checked_bin_count(bin_width);

  std::map<std::pair<std::size_t, std::string>, std::int64_t> counts;
  for (const auto& fs : scores) {
    const auto& result = which == ScoreSeries::GT ? fs.gt : fs.hyp;
    if (!result) continue;
    const std::size_t b = score_bin_index(result->score, n_bins);
    ++counts[{b, outcome_group(fs.outcome, split_fn)}];
  }

  std::vector<HistogramRow> rows;
  rows.reserve(counts.size());
  for (const auto& [key, count] : counts) {
    rows.push_back({static_cast<double>(key.first) /
                        static_cast<double>(n_bins),
                    key.second, count});
  }
  return rows;
}

std::vector<HeatmapRow> heatmap(std::span<const FrameScore> scores,
                                const SweepConfig& config, double bin_width) {
  config.validate();
  const std::size_t n_bins = checked_bin_count(bin_width);
  auto labels = ttc_bin_labels(config.ttc_bin_edges);
  labels.push_back("unbinned");

  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> counts;
  for (const auto& fs : scores) {
    const std::size_t sb = score_bin_index(fs.primary_score(), n_bins);
    const std::size_t tb = ttc_bin_index(fs.ttc_s, config.ttc_bin_edges);
    ++counts[{sb, tb}];
  }

  std::vector<HeatmapRow> rows;
  rows.reserve(counts.size());
  for (const auto& [key, count] : counts) {
    rows.push_back({static_cast<double>(key.first) /
                        static_cast<double>(n_bins),
                    labels[key.second], count});
  }
  return rows;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("pearson: length mismatch");
  }
  if (xs.size() < 2) {
    throw std::invalid_argument("pearson: need at least two pairs");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    raise(Errc::degenerate_variance, "an argument has zero variance");
  }
  return sxy / std::sqrt(sxx * syy);
}

// --- CSV -------------------------------------------------------------------

namespace {

void append_result_fields(std::ostream& out,
                          const std::optional<CFlowResult>& r) {
  if (r) {
    out << format_double(r->score) << ',' << format_double(r->epsilon) << ','
        << format_double(r->epsilon_norm) << ',' << format_double(r->delta_d)
        << ',' << format_double(r->delta_d_norm) << ',' << r->n_samples << ','
        << (r->saturated ? 1 : 0);
  } else {
    out << ",,,,,,";
  }
}

}  // namespace

void write_frame_scores_csv(std::ostream& out,
                            std::span<const FrameScore> scores) {
  out << "track_id,frame_index,timestamp_s,ttc_s,outcome,"
         "score_gt,epsilon_gt,epsilon_norm_gt,delta_d_gt,delta_d_norm_gt,"
         "n_samples_gt,saturated_gt,"
         "score_hyp,epsilon_hyp,epsilon_norm_hyp,delta_d_hyp,"
         "delta_d_norm_hyp,n_samples_hyp,saturated_hyp\n";
  for (const auto& fs : scores) {
    out << csv_escape(fs.track_id) << ',' << fs.frame_index << ','
        << format_double(fs.timestamp_s) << ',' << format_optional(fs.ttc_s)
        << ',' << outcome_name(fs.outcome) << ',';
    append_result_fields(out, fs.gt);
    out << ',';
    append_result_fields(out, fs.hyp);
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "ttc_bin,xi,outcome,total,flagged,percent\n";
  for (const auto& r : rows) {
    out << r.ttc_bin << ',' << format_double(r.xi) << ',' << r.outcome << ','
        << r.total << ',' << r.flagged << ',' << format_optional(r.percent)
        << '\n';
  }
}

void write_histogram_csv(std::ostream& out,
                         std::span<const HistogramRow> gt_rows,
                         std::span<const HistogramRow> hyp_rows) {
  out << "series,bin_low,outcome,count\n";
  for (const auto& r : gt_rows) {
    out << "gt," << format_double(r.bin_low) << ',' << r.outcome << ','
        << r.count << '\n';
  }
  for (const auto& r : hyp_rows) {
    out << "hyp," << format_double(r.bin_low) << ',' << r.outcome << ','
        << r.count << '\n';
  }
}

void write_heatmap_csv(std::ostream& out, std::span<const HeatmapRow> rows) {
  out << "score_bin_low,ttc_bin,count\n";
  for (const auto& r : rows) {
    out << format_double(r.score_bin_low) << ',' << r.ttc_bin << ','
        << r.count << '\n';
  }
}

void write_correlation_txt(std::ostream& out, std::optional<double> rho,
                           std::int64_t n) {
  out << "rho=" << (rho ? format_double(*rho) : "nan") << '\n'
      << "n=" << n << '\n';
}

void write_skips_csv(std::ostream& out, std::span<const SkipRecord> skips) {
  out << "track_id,frame_index,mode,cause,benign,message\n";
  for (const auto& s : skips) {
    out << csv_escape(s.track_id) << ',' << s.frame_index << ',' << s.mode
        << ',' << errc_name(s.cause) << ',' << (s.benign ? 1 : 0) << ','
        << csv_escape(s.message) << '\n';
  }
}

}  // namespace cflow
