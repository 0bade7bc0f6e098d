#include "cflow/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cflow/errors.hpp"

namespace cflow {

const char* box_source_name(BoxSource s) {
  switch (s) {
    case BoxSource::GT: return "GT";
    case BoxSource::PRED: return "PRED";
    case BoxSource::HYP: return "HYP";
  }
  return "GT";
}

void CFlowParams::validate() const {
  if (k < 2) throw std::invalid_argument("CFlowParams: k must be >= 2");
  if (min_samples < 3) {
    throw std::invalid_argument("CFlowParams: min_samples must be >= 3");
  }
  if (!(tau_d > 0.0) || !(tau_u > 0.0) || !(tau_eps > 0.0)) {
    throw std::invalid_argument("CFlowParams: floors must be > 0");
  }
}

LineFit fit_line(std::span<const WindowSample> samples) {
  if (samples.size() < 2) {
    raise(Errc::degenerate_abscissa, "need at least 2 samples to fit a line");
  }
  double t_mean = 0.0;
  double u_mean = 0.0;
  for (const auto& s : samples) {
    t_mean += s.timestamp_s;
    u_mean += s.u;
  }
  t_mean /= static_cast<double>(samples.size());
  u_mean /= static_cast<double>(samples.size());

  double stt = 0.0;
  double stu = 0.0;
  for (const auto& s : samples) {
    const double dt = s.timestamp_s - t_mean;
    stt += dt * dt;
    stu += dt * (s.u - u_mean);
  }
  if (stt == 0.0) {
    raise(Errc::degenerate_abscissa, "all timestamps are equal");
  }
  LineFit fit;
  fit.slope = stu / stt;
  fit.intercept = u_mean - fit.slope * t_mean;
  return fit;
}

double sum_abs_residuals(std::span<const WindowSample> samples,
                         const LineFit& fit) {
  double total = 0.0;
  for (const auto& s : samples) {
    total += std::abs(s.u - fit.value_at(s.timestamp_s));
  }
  return total;
}

double delta_diagonal(const BBox& box_t0, const BBox& box_t1) {
  return diagonal(box_t0) - diagonal(box_t1);
}

NormalizedInputs normalize_inputs(double delta_d, double epsilon,
                                  std::span<const WindowSample> samples,
                                  const CFlowParams& params) {
  if (samples.size() < 2) {
    throw std::invalid_argument("normalize_inputs: need >= 2 samples");
  }
  const double d0 = diagonal(samples[samples.size() - 1].box);
  const double d1 = diagonal(samples[samples.size() - 2].box);

  NormalizedInputs out;
  out.delta_d_norm = delta_d / std::max({d0, d1, params.tau_d});

  std::vector<double> abs_u;
  abs_u.reserve(samples.size());
  for (const auto& s : samples) abs_u.push_back(std::abs(s.u));
  const std::size_t mid = abs_u.size() / 2;
  std::nth_element(abs_u.begin(), abs_u.begin() + mid, abs_u.end());
  double med = abs_u[mid];
  if (abs_u.size() % 2 == 0) {
    med = (*std::max_element(abs_u.begin(), abs_u.begin() + mid) + med) / 2.0;
  }

  const double scale =
      static_cast<double>(samples.size()) * std::max(med, params.tau_u);
  const double raw = epsilon / scale;
  out.saturated = raw < params.tau_eps;
  out.epsilon_norm = std::max(raw, params.tau_eps);
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clamp_open_unit(double s) {
  if (s <= 0.0) return std::numeric_limits<double>::denorm_min();
  if (s >= 1.0) return std::nextafter(1.0, 0.0);
  return s;
}

CFlowResult cflow(std::span<const WindowSample> window, std::int64_t t0_frame,
                  const CFlowParams& params) {
  params.validate();
  if (window.size() < static_cast<std::size_t>(params.min_samples)) {
    raise(Errc::insufficient_window,
          "window has " + std::to_string(window.size()) + " samples, need " +
              std::to_string(params.min_samples));
  }
  for (std::size_t i = 1; i < window.size(); ++i) {
    if (window[i].frame_index <= window[i - 1].frame_index) {
      raise(Errc::unsorted_window,
            "frame indices must be strictly increasing");
    }
  }
  for (const auto& s : window) {
    if (s.frame_index < t0_frame - params.k || s.frame_index > t0_frame) {
      raise(Errc::out_of_window,
            "sample at frame " + std::to_string(s.frame_index) +
                " outside [" + std::to_string(t0_frame - params.k) + ", " +
                std::to_string(t0_frame) + "]");
    }
  }
  if (window.back().frame_index != t0_frame) {
    raise(Errc::missing_current,
          "no sample at t0 frame " + std::to_string(t0_frame));
  }

  const LineFit fit = fit_line(window);

  CFlowResult result;
  result.n_samples = static_cast<int>(window.size());
  result.epsilon = sum_abs_residuals(window, fit);
  result.delta_d = delta_diagonal(window[window.size() - 1].box,
                                  window[window.size() - 2].box);
  const NormalizedInputs norm =
      normalize_inputs(result.delta_d, result.epsilon, window, params);
  result.delta_d_norm = norm.delta_d_norm;
  result.epsilon_norm = norm.epsilon_norm;
  result.saturated = norm.saturated;
  result.score =
      clamp_open_unit(sigmoid(result.delta_d_norm / result.epsilon_norm));
  return result;
}

CFlowResult cflow(std::span<const WindowSample> window,
                  const CFlowParams& params) {
  if (window.empty()) {
    raise(Errc::insufficient_window, "window is empty");
  }
  return cflow(window, window.back().frame_index, params);
}

}  // namespace cflow
