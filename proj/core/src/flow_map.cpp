#include "cflow/flow_map.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "cflow/errors.hpp"

namespace cflow {

namespace {

constexpr std::size_t kHeaderBytes = 12;

// Explicit little-endian (dis)assembly keeps the format bit-exact on any
// host byte order.
std::uint32_t read_u32le(std::span<const std::byte> bytes, std::size_t at) {
  return static_cast<std::uint32_t>(bytes[at]) |
         static_cast<std::uint32_t>(bytes[at + 1]) << 8 |
         static_cast<std::uint32_t>(bytes[at + 2]) << 16 |
         static_cast<std::uint32_t>(bytes[at + 3]) << 24;
}

float read_f32le(std::span<const std::byte> bytes, std::size_t at) {
  return std::bit_cast<float>(read_u32le(bytes, at));
}

std::int32_t read_i32le(std::span<const std::byte> bytes, std::size_t at) {
  return static_cast<std::int32_t>(read_u32le(bytes, at));
}

void append_u32le(std::vector<std::byte>& out, std::uint32_t value) {
  out.push_back(static_cast<std::byte>(value & 0xff));
  out.push_back(static_cast<std::byte>((value >> 8) & 0xff));
  out.push_back(static_cast<std::byte>((value >> 16) & 0xff));
  out.push_back(static_cast<std::byte>((value >> 24) & 0xff));
}

void append_f32le(std::vector<std::byte>& out, float value) {
  append_u32le(out, std::bit_cast<std::uint32_t>(value));
}

}  // namespace

bool FlowMap::valid() const {
  if (width <= 0 || height <= 0) return false;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (u.size() != n || v.size() != n) return false;
  auto finite = [](float f) { return std::isfinite(f); };
  return std::all_of(u.begin(), u.end(), finite) &&
         std::all_of(v.begin(), v.end(), finite);
}

FlowMap parse_flo(std::span<const std::byte> bytes, std::int64_t pixel_cap) {
  if (bytes.size() < kHeaderBytes) {
    raise(Errc::truncated, "need at least 12 header bytes, got " +
                               std::to_string(bytes.size()));
  }
  const float magic = read_f32le(bytes, 0);
  if (magic != kFloMagic) {
    raise(Errc::bad_magic, "first 4 bytes are not the flow sentinel");
  }
  const std::int32_t w = read_i32le(bytes, 4);
  const std::int32_t h = read_i32le(bytes, 8);
  if (w <= 0 || h <= 0) {
    raise(Errc::bad_dims, "non-positive dimensions " + std::to_string(w) +
                              "x" + std::to_string(h));
  }
  const std::int64_t pixels = static_cast<std::int64_t>(w) * h;
  if (pixels > pixel_cap) {
    raise(Errc::bad_dims, "header claims " + std::to_string(pixels) +
                              " pixels, cap is " + std::to_string(pixel_cap));
  }
  const std::size_t expected =
      kHeaderBytes + static_cast<std::size_t>(pixels) * 2 * sizeof(float);
  if (bytes.size() != expected) {
    raise(Errc::truncated, "expected " + std::to_string(expected) +
                               " bytes for " + std::to_string(w) + "x" +
                               std::to_string(h) + ", got " +
                               std::to_string(bytes.size()));
  }

  FlowMap map;
  map.width = w;
  map.height = h;
  map.u.resize(static_cast<std::size_t>(pixels));
  map.v.resize(static_cast<std::size_t>(pixels));
  std::size_t at = kHeaderBytes;
  for (std::int64_t i = 0; i < pixels; ++i) {
    const float fu = read_f32le(bytes, at);
    const float fv = read_f32le(bytes, at + 4);
    if (!std::isfinite(fu) || !std::isfinite(fv)) {
      raise(Errc::non_finite, "payload value at pixel " + std::to_string(i) +
                                  " is NaN or infinite");
    }
    map.u[static_cast<std::size_t>(i)] = fu;
    map.v[static_cast<std::size_t>(i)] = fv;
    at += 8;
  }
  return map;
}

std::vector<std::byte> write_flo(const FlowMap& map) {
  const std::size_t pixels = static_cast<std::size_t>(map.width) * map.height;
  std::vector<std::byte> out;
  out.reserve(kHeaderBytes + pixels * 8);
  append_f32le(out, kFloMagic);
  append_u32le(out, static_cast<std::uint32_t>(map.width));
  append_u32le(out, static_cast<std::uint32_t>(map.height));
  for (std::size_t i = 0; i < pixels; ++i) {
    append_f32le(out, map.u[i]);
    append_f32le(out, map.v[i]);
  }
  return out;
}

FlowMap read_flo_file(const std::filesystem::path& path,
                      std::int64_t pixel_cap) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  if (in.bad()) raise(Errc::io_error, "read failure on " + path.string());
  return parse_flo(std::as_bytes(std::span<const char>(raw)), pixel_cap);
}

void write_flo_file(const FlowMap& map, const std::filesystem::path& path) {
  const auto bytes = write_flo(map);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::io_error, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(Errc::io_error, "write failure on " + path.string());
}

PixelRect clip_box_to_grid(const BBox& box, std::int32_t grid_w,
                           std::int32_t grid_h) {
  // Smallest integer >= x_ul and largest integer < x_ul + width give the
  // half-open pixel span of the box before clipping.
  const auto lo = [](double edge) {
    return static_cast<std::int64_t>(std::ceil(edge));
  };
  const auto hi = [](double edge) {  // exclusive
    return static_cast<std::int64_t>(std::ceil(edge));
  };
  PixelRect r;
  r.x0 = std::max<std::int64_t>(lo(box.x_ul), 0);
  r.y0 = std::max<std::int64_t>(lo(box.y_ul), 0);
  r.x1 = std::min<std::int64_t>(hi(box.x_lr()), grid_w);
  r.y1 = std::min<std::int64_t>(hi(box.y_lr()), grid_h);
  return r;
}

double median_flow(const FlowMap& map, const BBox& box) {
  const PixelRect r = clip_box_to_grid(box, map.width, map.height);
  if (r.empty()) {
    raise(Errc::empty_region, "box covers no pixel after clipping");
  }

  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(r.pixel_count()));
  for (std::int64_t y = r.y0; y < r.y1; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * map.width;
    for (std::int64_t x = r.x0; x < r.x1; ++x) {
      values.push_back(map.u[row + static_cast<std::size_t>(x)]);
    }
  }

  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const float upper = values[mid];
  if (n % 2 == 1) return static_cast<double>(upper);
  // Even count: the lower middle is the max of the left partition.
  const float lower = *std::max_element(values.begin(), values.begin() + mid);
  return (static_cast<double>(lower) + static_cast<double>(upper)) / 2.0;
}

}  // namespace cflow
