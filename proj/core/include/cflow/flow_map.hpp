#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cflow/geometry.hpp"

namespace cflow {

/// Dense two-component optical flow field for one image pair.
/// u is the horizontal component, v the vertical one, both in pixels/frame,
/// stored row-major with the top row first. Immutable by convention after
/// construction; all queries are const and safe to run concurrently.
struct FlowMap {
  std::int32_t width = 0;
  std::int32_t height = 0;
  std::vector<float> u;
  std::vector<float> v;

  float u_at(std::int32_t x, std::int32_t y) const {
    return u[static_cast<std::size_t>(y) * width + x];
  }
  float v_at(std::int32_t x, std::int32_t y) const {
    return v[static_cast<std::size_t>(y) * width + x];
  }

  bool valid() const;
};

/// Sentinel float at the head of every .flo file ("PIEH" when read as text).
inline constexpr float kFloMagic = 202021.25f;

/// Default cap on width*height accepted by parse_flo. Rejects absurd
/// headers before any payload allocation happens.
inline constexpr std::int64_t kDefaultPixelCap =
    static_cast<std::int64_t>(10'000) * 10'000;

/// Parse a complete .flo byte image. Layout (little-endian): float magic,
/// int32 width, int32 height, then height*width interleaved (u, v) float
/// pairs, row-major, top row first.
///
/// Throws Error with code bad_magic, bad_dims, truncated or non_finite.
FlowMap parse_flo(std::span<const std::byte> bytes,
                  std::int64_t pixel_cap = kDefaultPixelCap);

/// Inverse of parse_flo: parse_flo(write_flo(m)) == m field-for-field and
/// write_flo(parse_flo(b)) == b byte-for-byte for every valid b.
std::vector<std::byte> write_flo(const FlowMap& map);

FlowMap read_flo_file(const std::filesystem::path& path,
                      std::int64_t pixel_cap = kDefaultPixelCap);
void write_flo_file(const FlowMap& map, const std::filesystem::path& path);

/// Integer pixel range covered by a box after clipping to a w*h grid.
/// A pixel (ix, iy) belongs to the box iff
///   x_ul <= ix < x_ul + width  and  y_ul <= iy < y_ul + height.
/// Half-open on the right so adjacent boxes never share pixels.
struct PixelRect {
  std::int64_t x0 = 0, y0 = 0;  // inclusive
  std::int64_t x1 = 0, y1 = 0;  // exclusive

  std::int64_t pixel_count() const {
    return x1 > x0 && y1 > y0 ? (x1 - x0) * (y1 - y0) : 0;
  }
  bool empty() const { return pixel_count() == 0; }
};

PixelRect clip_box_to_grid(const BBox& box, std::int32_t grid_w,
                           std::int32_t grid_h);

/// Median of the horizontal flow over all pixels covered by the box after
/// clipping to the image. Even pixel counts take the mean of the two middle
/// values. Throws Error(empty_region) when the clipped box covers no pixel.
double median_flow(const FlowMap& map, const BBox& box);

}  // namespace cflow
