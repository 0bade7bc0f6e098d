#include "cflow/hypothesizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cflow/errors.hpp"
#include "cflow/flow_map.hpp"

namespace cflow {

namespace {

constexpr double kStationaryTolPx = 1e-9;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

}  // namespace

Hypothesis hypothesize_box(const HypothesisInput& input) {
  const auto& dets = input.detections;
  if (dets.size() < 2) {
    raise(Errc::too_few_detections,
          "need >= 2 detections, got " + std::to_string(dets.size()));
  }
  for (std::size_t i = 1; i < dets.size(); ++i) {
    if (dets[i].first <= dets[i - 1].first) {
      throw std::invalid_argument(
          "hypothesize_box: detection frame indices must be strictly "
          "increasing");
    }
  }
  if (input.target_frame <= dets.back().first) {
    raise(Errc::bad_target,
          "target frame " + std::to_string(input.target_frame) +
              " is not after the last detection at frame " +
              std::to_string(dets.back().first));
  }

  std::vector<Point> corners;
  corners.reserve(dets.size());
  for (const auto& [_, box] : dets) {
    corners.push_back({box.x_ul, box.y_ul});
  }
  const Point first = corners.front();
  const Point last = corners.back();

  Hypothesis hyp;
  hyp.n_detections = static_cast<int>(dets.size());
  hyp.box = dets.back().second;  // dims carried over; corner moves below

  const bool stationary = std::all_of(
      corners.begin(), corners.end(), [&](const Point& p) {
        return std::hypot(p.x - first.x, p.y - first.y) <= kStationaryTolPx;
      });
  if (stationary) {
    hyp.step_px = 0.0;
    return hyp;
  }

  // Principal axis of the corner scatter (total least squares). The
  // half-angle form handles vertical trajectories without special cases.
  double mx = 0.0, my = 0.0;
  for (const auto& p : corners) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(corners.size());
  my /= static_cast<double>(corners.size());
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : corners) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  double dir_x = std::cos(theta);
  double dir_y = std::sin(theta);

  // Orient from the earliest toward the latest corner.
  if (dir_x * (last.x - first.x) + dir_y * (last.y - first.y) < 0.0) {
    dir_x = -dir_x;
    dir_y = -dir_y;
  }
  hyp.direction = {dir_x, dir_y};

  const double span =
      static_cast<double>(dets.back().first - dets.front().first);
  hyp.step_px = std::hypot(last.x - first.x, last.y - first.y) / span;

  const double shift =
      hyp.step_px * static_cast<double>(input.target_frame - dets.back().first);
  hyp.box.x_ul = last.x + shift * dir_x;
  hyp.box.y_ul = last.y + shift * dir_y;
  return hyp;
}

std::vector<WindowSample> fill_window(const Track& track,
                                      std::int64_t t0_frame, BoxSource mode,
                                      const CFlowParams& params, bool fill_gaps,
                                      FlowStore& flows, double iou_threshold) {
  params.validate();
  if (mode == BoxSource::HYP) {
    throw std::invalid_argument("fill_window: mode must be GT or PRED");
  }
  const TrackFrame* current = track.find_frame(t0_frame);
  if (current == nullptr) {
    raise(Errc::missing_current, "track '" + track.track_id +
                                     "' has no frame " +
                                     std::to_string(t0_frame));
  }

  const std::int64_t lo = t0_frame - params.k;
  const auto context = [&](const TrackFrame& f) {
    return "track '" + track.track_id + "' frame " +
           std::to_string(f.frame_index);
  };

  auto sample_from = [&](const TrackFrame& f, const BBox& box,
                         BoxSource source) {
    double u = 0.0;
    try {
      u = median_flow(flows.get(f.flow_ref), box);
    } catch (const Error& e) {
      throw Error(e.code(), context(f) + ": " + e.what());
    }
    return WindowSample{f.timestamp_s, f.frame_index, box, u, source};
  };

  std::vector<WindowSample> window;

  if (mode == BoxSource::GT) {
    for (const auto& f : track.frames) {
      if (f.frame_index < lo || f.frame_index > t0_frame) continue;
      if (!f.gt_box) continue;
      window.push_back(sample_from(f, *f.gt_box, BoxSource::GT));
    }
  } else {
    // Usable detections: frames in the window whose prediction matches its
    // ground truth. Everything else (misses, poor detections, spurious
    // boxes) is a gap to hypothesize over.
    std::vector<std::pair<std::int64_t, BBox>> detections;
    std::vector<const TrackFrame*> in_window;
    for (const auto& f : track.frames) {
      if (f.frame_index < lo || f.frame_index > t0_frame) continue;
      in_window.push_back(&f);
      if (classify_frame(f.gt_box, f.pred_box, iou_threshold) == Outcome::TP) {
        detections.emplace_back(f.frame_index, *f.pred_box);
      }
    }

    const bool tp_at_t0 =
        !detections.empty() && detections.back().first == t0_frame;

    auto hypothesis_at = [&](const TrackFrame& f,
                             std::size_t n_dets) -> WindowSample {
      HypothesisInput input;
      input.detections.assign(detections.begin(),
                              detections.begin() + n_dets);
      input.target_frame = f.frame_index;
      try {
        const Hypothesis hyp = hypothesize_box(input);
        return sample_from(f, hyp.box, BoxSource::HYP);
      } catch (const Error& e) {
        if (e.code() == Errc::too_few_detections) {
          throw Error(e.code(), context(f) + ": " + e.what());
        }
        throw;
      }
    };

    for (const TrackFrame* f : in_window) {
      const bool is_tp =
          classify_frame(f->gt_box, f->pred_box, iou_threshold) == Outcome::TP;
      if (is_tp) {
        window.push_back(sample_from(*f, *f->pred_box, BoxSource::PRED));
        continue;
      }
      const auto n_before = static_cast<std::size_t>(std::count_if(
          detections.begin(), detections.end(),
          [&](const auto& d) { return d.first < f->frame_index; }));
      if (f->frame_index == t0_frame) {
        if (!tp_at_t0) window.push_back(hypothesis_at(*f, n_before));
      } else if (fill_gaps && n_before >= 2) {
        // Interior gap with enough history; gaps before the second
        // detection stay unfilled.
        window.push_back(hypothesis_at(*f, n_before));
      }
    }
    std::sort(window.begin(), window.end(),
              [](const WindowSample& a, const WindowSample& b) {
                return a.frame_index < b.frame_index;
              });
  }

  if (window.size() < static_cast<std::size_t>(params.min_samples)) {
    raise(Errc::insufficient_window,
          "track '" + track.track_id + "' frame " + std::to_string(t0_frame) +
              ": window has " + std::to_string(window.size()) +
              " samples, need " + std::to_string(params.min_samples));
  }
  return window;
}

}  // namespace cflow
