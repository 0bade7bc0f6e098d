#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cflow/flow_store.hpp"
#include "cflow/metric.hpp"
#include "cflow/track.hpp"

namespace cflow {

/// Past detections feeding a box hypothesis. Frame indices are strictly
/// increasing and all lie before target_frame.
struct HypothesisInput {
  std::vector<std::pair<std::int64_t, BBox>> detections;
  std::int64_t target_frame = 0;
};

/// An extrapolated box for a frame with no usable detection. The box keeps
/// the most recent detection's width and height; only the upper-left corner
/// moves. direction is empty when every input corner coincided (stationary).
struct Hypothesis {
  BBox box;
  double step_px = 0.0;  // mean per-frame displacement of the UL corner
  std::optional<std::array<double, 2>> direction;
  int n_detections = 0;
};

/// Extrapolate the upper-left corner along the principal axis of the past
/// UL corners (a total-least-squares line, so near-vertical trajectories
/// work the same as horizontal ones):
///   step_px = |UL_last - UL_first| / (idx_last - idx_first)
///   UL_hyp  = UL_last + step_px * (target_frame - idx_last) * direction
/// where direction points from the earliest toward the latest corner.
/// Corners that all coincide within 1e-9 px keep UL_hyp = UL_last.
///
/// Throws Error(too_few_detections) for fewer than two detections and
/// Error(bad_target) when target_frame is not strictly after the last one.
Hypothesis hypothesize_box(const HypothesisInput& input);

/// Assemble the score window for frame t0 of a track, measuring each
/// sample's u with median_flow on that frame's flow map.
///
/// GT mode: one sample per frame in [t0 - k, t0] that has a gt_box.
/// PRED mode: one sample per frame in [t0 - k, t0] whose prediction
/// classifies as TP; when t0 itself has no TP prediction, a hypothesized
/// box (from the TP detections before t0) supplies the t0 sample. With
/// fill_gaps, interior frames that lack a TP prediction but have at least
/// two earlier TP detections in the window get hypothesized samples too.
///
/// Throws Error(missing_current) when the track has no frame t0, and
/// propagates too_few_detections / empty_region / insufficient_window with
/// track and frame context.
std::vector<WindowSample> fill_window(const Track& track, std::int64_t t0_frame,
                                      BoxSource mode, const CFlowParams& params,
                                      bool fill_gaps, FlowStore& flows,
                                      double iou_threshold = 0.5);

}  // namespace cflow
