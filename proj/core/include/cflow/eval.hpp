#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cflow/errors.hpp"
#include "cflow/flow_store.hpp"
#include "cflow/metric.hpp"
#include "cflow/track.hpp"

namespace cflow {

/// Scores for one (track, frame) pair. gt carries the supervised score
/// (window of ground-truth boxes), hyp the unsupervised one (predicted
/// boxes, hypothesized where missing). At least one is present.
struct FrameScore {
  std::string track_id;
  std::int64_t frame_index = 0;
  double timestamp_s = 0.0;
  std::optional<double> ttc_s;
  Outcome outcome = Outcome::NONE;
  std::optional<CFlowResult> gt;
  std::optional<CFlowResult> hyp;

  /// Score used by sweep and heatmap: the supervised one when present,
  /// otherwise the unsupervised one.
  double primary_score() const;
};

enum class ScoreMode { gt, pred, both };

struct ScoreOptions {
  CFlowParams params;
  double iou_threshold = 0.5;
  ScoreMode mode = ScoreMode::both;
  bool fill_gaps = false;
  int jobs = 1;
};

/// A frame that could not be scored, with enough context to trace it.
/// benign marks expected data-driven causes (short windows, too few
/// detections) as opposed to broken inputs.
struct SkipRecord {
  std::string track_id;
  std::int64_t frame_index = 0;
  std::string mode;  // "gt" or "hyp"
  Errc cause = Errc::insufficient_window;
  std::string message;
  bool benign = true;
};

struct ScoreReport {
  std::vector<FrameScore> scores;
  std::vector<SkipRecord> skips;

  std::map<Errc, int> skip_counts() const;
  bool has_failures() const;  // any non-benign skip
};

/// Score every frame that has a ground-truth pedestrian and whose window
/// [t0 - k, t0] lies fully inside the track's frame range. Per-frame errors
/// are collected as skips, never thrown. Tracks are processed in parallel
/// when jobs > 1; output order does not depend on the schedule.
ScoreReport score_tracks(std::span<const Track> tracks, FlowStore& flows,
                         const ScoreOptions& options);

struct SweepConfig {
  std::vector<double> thresholds{0.1, 0.3};        // xi, in (0,1), increasing
  std::vector<double> ttc_bin_edges{0, 1, 2, 3, 4};  // implicit +inf tail
  double iou_threshold = 0.5;
  bool split_fn = false;  // report FN_POOR / FN_MISS separately

  void validate() const;
};

/// One sweep cell: within a TTC bin, the share of `outcome` frames whose
/// score is <= xi (inclusive, so "score equals the threshold" counts).
/// percent is empty for bins with no such frames.
struct SweepRow {
  std::string ttc_bin;
  double xi = 0.0;
  std::string outcome;
  std::int64_t total = 0;
  std::int64_t flagged = 0;
  std::optional<double> percent;
};

std::vector<SweepRow> sweep(std::span<const FrameScore> scores,
                            const SweepConfig& config);

enum class ScoreSeries { GT, HYP };

/// Fixed-width score histogram over [0, 1], right-open except the last bin.
/// Only non-empty (bin, outcome) cells are returned. bin_width must divide
/// 1 into a whole number of bins.
struct HistogramRow {
  double bin_low = 0.0;
  std::string outcome;
  std::int64_t count = 0;
};

std::vector<HistogramRow> histogram(std::span<const FrameScore> scores,
                                    ScoreSeries which, double bin_width = 0.1,
                                    bool split_fn = false);

/// Joint (score bin, TTC bin) counts over the primary score.
struct HeatmapRow {
  double score_bin_low = 0.0;
  std::string ttc_bin;
  std::int64_t count = 0;
};

std::vector<HeatmapRow> heatmap(std::span<const FrameScore> scores,
                                const SweepConfig& config,
                                double bin_width = 0.1);

/// Product-moment correlation. Throws std::invalid_argument on length
/// mismatch or fewer than two pairs, Error(degenerate_variance) when either
/// argument has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

// CSV emission. Headers are documented in the README; all numbers use
// shortest round-trip formatting so outputs are byte-stable.
void write_frame_scores_csv(std::ostream& out,
                            std::span<const FrameScore> scores);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_histogram_csv(std::ostream& out,
                         std::span<const HistogramRow> gt_rows,
                         std::span<const HistogramRow> hyp_rows);
void write_heatmap_csv(std::ostream& out, std::span<const HeatmapRow> rows);
void write_correlation_txt(std::ostream& out, std::optional<double> rho,
                           std::int64_t n);
void write_skips_csv(std::ostream& out, std::span<const SkipRecord> skips);

}  // namespace cflow
