#pragma once

#include <cstdint>
#include <span>

#include "cflow/geometry.hpp"

namespace cflow {

/// Origin of the box a window sample was cropped with.
enum class BoxSource { GT, PRED, HYP };

const char* box_source_name(BoxSource s);

/// One element of the score window: the box at one frame together with the
/// median horizontal flow u measured inside it.
struct WindowSample {
  double timestamp_s = 0.0;
  std::int64_t frame_index = 0;
  BBox box;
  double u = 0.0;  // median horizontal flow, pixels/frame
  BoxSource source = BoxSource::GT;
};

struct LineFit {
  double slope = 0.0;      // flow change per second
  double intercept = 0.0;  // flow at t = 0

  double value_at(double t) const { return intercept + slope * t; }
};

struct CFlowParams {
  int k = 5;              // window spans frame indices [t0 - k, t0]
  int min_samples = 3;    // below this a regression is not meaningful
  double tau_d = 1.0;     // px floor for the diagonal normalizer
  double tau_u = 0.1;     // px/frame floor for the flow scale
  double tau_eps = 1e-3;  // floor for the normalized error

  /// Throws std::invalid_argument when any field is out of range
  /// (k >= 2, min_samples >= 3, all floors > 0).
  void validate() const;
};

/// Score plus every intermediate quantity, so downstream reports never have
/// to recompute anything. saturated marks windows whose normalized error hit
/// the tau_eps floor (typically a perfectly linear flow series).
struct CFlowResult {
  double score = 0.0;         // in (0, 1)
  double epsilon = 0.0;       // sum of absolute regression residuals
  double epsilon_norm = 0.0;  // >= tau_eps
  double delta_d = 0.0;       // d0 - d1, pixels
  double delta_d_norm = 0.0;  // in (-1, 1)
  int n_samples = 0;
  bool saturated = false;
};

struct NormalizedInputs {
  double delta_d_norm = 0.0;
  double epsilon_norm = 0.0;
  bool saturated = false;
};

/// Ordinary least squares of u against timestamp_s. Needs two or more
/// samples with at least two distinct timestamps; otherwise throws
/// Error(degenerate_abscissa). Signed residuals of the fit sum to zero,
/// which is why the error measure below takes absolute values.
LineFit fit_line(std::span<const WindowSample> samples);

/// Overall window error: sum of |u_i - fit(t_i)|. Zero iff the flow series
/// is exactly linear in time.
double sum_abs_residuals(std::span<const WindowSample> samples,
                         const LineFit& fit);

/// Signed diagonal change between the two most recent boxes, d0 - d1.
double delta_diagonal(const BBox& box_t0, const BBox& box_t1);

/// Bring the size-change and flow-error signals to a common, dimensionless
/// scale using only window-intrinsic quantities:
///   delta_d_norm = delta_d / max(d0, d1, tau_d)
///   epsilon_norm = max(epsilon / (n * max(median|u_i|, tau_u)), tau_eps)
/// The two most recent samples of the window provide d0 and d1.
NormalizedInputs normalize_inputs(double delta_d, double epsilon,
                                  std::span<const WindowSample> samples,
                                  const CFlowParams& params);

/// Logistic function 1/(1 + exp(-x)), branch-by-sign so it never overflows.
double sigmoid(double x);

/// Nudge a sigmoid value that underflowed to 0 or rounded to 1 back into
/// the open interval, keeping scores strictly inside (0, 1).
double clamp_open_unit(double s);

/// The credibility score for the window's most recent frame:
///   score = sigmoid(delta_d_norm / epsilon_norm)
/// Window contract: sorted by strictly increasing frame_index
/// (Error(unsorted_window)), at least min_samples entries
/// (Error(insufficient_window)), every sample within [t0 - k, t0]
/// (Error(out_of_window)) and a sample at t0 itself
/// (Error(missing_current)).
CFlowResult cflow(std::span<const WindowSample> window, std::int64_t t0_frame,
                  const CFlowParams& params);

/// Convenience overload: t0 is the last sample's frame index.
CFlowResult cflow(std::span<const WindowSample> window,
                  const CFlowParams& params);

}  // namespace cflow
