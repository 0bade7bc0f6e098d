#pragma once

#include <cmath>
#include <optional>

namespace cflow {

/// Axis-aligned box in image coordinates, anchored at its upper-left corner.
/// Coordinates are continuous (sub-pixel positions are legal).
struct BBox {
  double x_ul = 0.0;
  double y_ul = 0.0;
  double width = 0.0;
  double height = 0.0;

  double x_lr() const { return x_ul + width; }
  double y_lr() const { return y_ul + height; }
  double area() const { return width * height; }
  double center_x() const { return x_ul + 0.5 * width; }
  double center_y() const { return y_ul + 0.5 * height; }

  bool valid() const {
    return width > 0.0 && height > 0.0 && std::isfinite(x_ul) &&
           std::isfinite(y_ul) && std::isfinite(width) && std::isfinite(height);
  }

  bool operator==(const BBox&) const = default;
};

/// Intersection-over-union on continuous geometry; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

/// Length of the box diagonal, sqrt(width^2 + height^2).
double diagonal(const BBox& box);

/// Per-frame classification of a (ground truth, prediction) pair.
/// FN_POOR and FN_MISS both count as FN in summaries; the split is kept
/// for analysis.
enum class Outcome { TP, FN_POOR, FN_MISS, FP, NONE };

const char* outcome_name(Outcome o);

inline bool is_fn(Outcome o) {
  return o == Outcome::FN_POOR || o == Outcome::FN_MISS;
}

/// TP        both present and iou >= threshold
/// FN_POOR   both present and 0 < iou < threshold
/// FN_MISS   gt present and (pred absent or iou == 0)
/// FP        pred present, gt absent
/// NONE      both absent
Outcome classify_frame(const std::optional<BBox>& gt,
                       const std::optional<BBox>& pred,
                       double iou_threshold = 0.5);

}  // namespace cflow
