#include "cflow/geometry.hpp"

#include <algorithm>

namespace cflow {

double iou(const BBox& a, const BBox& b) {
  const double ix0 = std::max(a.x_ul, b.x_ul);
  const double iy0 = std::max(a.y_ul, b.y_ul);
  const double ix1 = std::min(a.x_lr(), b.x_lr());
  const double iy1 = std::min(a.y_lr(), b.y_lr());

  const double iw = ix1 - ix0;
  const double ih = iy1 - iy0;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;

  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

double diagonal(const BBox& box) { return std::hypot(box.width, box.height); }

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::TP: return "TP";
    case Outcome::FN_POOR: return "FN_POOR";
    case Outcome::FN_MISS: return "FN_MISS";
    case Outcome::FP: return "FP";
    case Outcome::NONE: return "NONE";
  }
  return "NONE";
}

Outcome classify_frame(const std::optional<BBox>& gt,
                       const std::optional<BBox>& pred, double iou_threshold) {
  if (!gt && !pred) return Outcome::NONE;
  if (!gt) return Outcome::FP;
  if (!pred) return Outcome::FN_MISS;

  const double overlap = iou(*gt, *pred);
  if (overlap >= iou_threshold) return Outcome::TP;
  if (overlap > 0.0) return Outcome::FN_POOR;
  return Outcome::FN_MISS;
}

}  // namespace cflow
