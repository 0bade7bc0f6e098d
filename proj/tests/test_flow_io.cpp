#include <algorithm>
#include <bit>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"

#include "cflow/errors.hpp"
#include "cflow/flow_map.hpp"

using namespace cflow;

namespace {

void push_f32(std::vector<std::byte>& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::byte>((bits >> (8 * i)) & 0xff));
  }
}

void push_i32(std::vector<std::byte>& out, std::int32_t v) {
  const auto bits = static_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::byte>((bits >> (8 * i)) & 0xff));
  }
}

FlowMap random_map(std::mt19937& rng, std::int32_t max_side = 12) {
  std::uniform_int_distribution<std::int32_t> side(1, max_side);
  std::uniform_real_distribution<float> val(-50.0f, 50.0f);
  FlowMap map;
  map.width = side(rng);
  map.height = side(rng);
  const std::size_t n = static_cast<std::size_t>(map.width) * map.height;
  map.u.resize(n);
  map.v.resize(n);
  for (auto& f : map.u) f = val(rng);
  for (auto& f : map.v) f = val(rng);
  return map;
}

/// Reference median: sort everything covered by the box, no selection tricks.
double sort_median_u(const FlowMap& map, const BBox& box) {
  const PixelRect r = clip_box_to_grid(box, map.width, map.height);
  std::vector<float> vals;
  for (std::int64_t y = r.y0; y < r.y1; ++y) {
    for (std::int64_t x = r.x0; x < r.x1; ++x) {
      vals.push_back(map.u_at(static_cast<std::int32_t>(x),
                              static_cast<std::int32_t>(y)));
    }
  }
  std::sort(vals.begin(), vals.end());
  const std::size_t n = vals.size();
  if (n % 2 == 1) return vals[n / 2];
  return (static_cast<double>(vals[n / 2 - 1]) +
          static_cast<double>(vals[n / 2])) /
         2.0;
}

}  // namespace

TEST_CASE("parse_flo decodes a hand-encoded 1x1 map") {
  std::vector<std::byte> bytes;
  push_f32(bytes, kFloMagic);
  push_i32(bytes, 1);
  push_i32(bytes, 1);
  push_f32(bytes, 2.5f);
  push_f32(bytes, -1.0f);

  const FlowMap map = parse_flo(bytes);
  CHECK(map.width == 1);
  CHECK(map.height == 1);
  CHECK(map.u == std::vector<float>{2.5f});
  CHECK(map.v == std::vector<float>{-1.0f});
}

TEST_CASE("write_flo emits 20 bytes for a 1x1 map") {
  FlowMap map;
  map.width = 1;
  map.height = 1;
  map.u = {0.0f};
  map.v = {0.0f};
  CHECK(write_flo(map).size() == 20);
}

TEST_CASE("transposed dimensions change the header bytes") {
  FlowMap wide;
  wide.width = 2;
  wide.height = 1;
  wide.u = {1.0f, 2.0f};
  wide.v = {0.0f, 0.0f};
  FlowMap tall = wide;
  tall.width = 1;
  tall.height = 2;

  const auto a = write_flo(wide);
  const auto b = write_flo(tall);
  REQUIRE(a.size() == b.size());
  CHECK(!std::equal(a.begin(), a.begin() + 12, b.begin()));
}

TEST_CASE("round-trip is byte-identical on random maps") {
  std::mt19937 rng(20240501);
  for (int i = 0; i < 100; ++i) {
    const FlowMap map = random_map(rng);
    const auto bytes = write_flo(map);
    const FlowMap back = parse_flo(bytes);
    CHECK(back.width == map.width);
    CHECK(back.height == map.height);
    CHECK(back.u == map.u);
    CHECK(back.v == map.v);
    CHECK(write_flo(back) == bytes);
  }
}

TEST_CASE("malformed inputs are rejected with the right cause") {
  SUBCASE("bad magic") {
    std::vector<std::byte> bytes;
    push_f32(bytes, 12345.0f);
    push_i32(bytes, 1);
    push_i32(bytes, 1);
    push_f32(bytes, 0.0f);
    push_f32(bytes, 0.0f);
    CHECK_THROWS_WITH_AS(parse_flo(bytes), doctest::Contains("sentinel"),
                         Error);
    try {
      parse_flo(bytes);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::bad_magic);
    }
  }
  SUBCASE("truncated: header claims 4x4 with empty payload") {
    std::vector<std::byte> bytes;
    push_f32(bytes, kFloMagic);
    push_i32(bytes, 4);
    push_i32(bytes, 4);
    try {
      parse_flo(bytes);
      FAIL("expected Truncated");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::truncated);
      // 12 + 8*16 bytes expected
      CHECK(std::string(e.what()).find("140") != std::string::npos);
    }
  }
  SUBCASE("non-positive dimensions") {
    std::vector<std::byte> bytes;
    push_f32(bytes, kFloMagic);
    push_i32(bytes, 0);
    push_i32(bytes, 4);
    try {
      parse_flo(bytes);
      FAIL("expected BadDims");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::bad_dims);
    }
  }
  SUBCASE("dimension cap") {
    std::vector<std::byte> bytes;
    push_f32(bytes, kFloMagic);
    push_i32(bytes, 100000);
    push_i32(bytes, 100000);
    try {
      parse_flo(bytes);
      FAIL("expected BadDims");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::bad_dims);
    }
  }
  SUBCASE("NaN payload") {
    std::vector<std::byte> bytes;
    push_f32(bytes, kFloMagic);
    push_i32(bytes, 1);
    push_i32(bytes, 1);
    push_f32(bytes, std::bit_cast<float>(0x7fc00000u));  // quiet NaN
    push_f32(bytes, 0.0f);
    try {
      parse_flo(bytes);
      FAIL("expected NonFinite");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::non_finite);
    }
  }
}

TEST_CASE("median_flow basics") {
  SUBCASE("constant map") {
    FlowMap map;
    map.width = 4;
    map.height = 3;
    map.u.assign(12, 3.0f);
    map.v.assign(12, 0.0f);
    CHECK(median_flow(map, {0.5, 0.5, 2.0, 2.0}) == 3.0);
  }
  SUBCASE("even count takes the middle mean") {
    FlowMap map;
    map.width = 2;
    map.height = 2;
    map.u = {1.0f, 2.0f, 3.0f, 4.0f};
    map.v.assign(4, 0.0f);
    CHECK(median_flow(map, {0.0, 0.0, 2.0, 2.0}) == 2.5);
  }
  SUBCASE("box fully left of the image") {
    FlowMap map;
    map.width = 4;
    map.height = 4;
    map.u.assign(16, 1.0f);
    map.v.assign(16, 0.0f);
    try {
      median_flow(map, {-10.0, 0.0, 5.0, 2.0});
      FAIL("expected EmptyRegion");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::empty_region);
    }
  }
}

TEST_CASE("median_flow matches a full-sort reference on random boxes") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> pos(-4.0, 14.0);
  std::uniform_real_distribution<double> len(0.3, 10.0);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const FlowMap map = random_map(rng);
    const BBox box{pos(rng), pos(rng), len(rng), len(rng)};
    if (clip_box_to_grid(box, map.width, map.height).empty()) continue;
    ++checked;
    CHECK(median_flow(map, box) == sort_median_u(map, box));
  }
  CHECK(checked > 200);
}

TEST_CASE("median lies within the covered values and ignores pixel order") {
  std::mt19937 rng(8);
  FlowMap map = random_map(rng, 10);
  const BBox box{0.0, 0.0, static_cast<double>(map.width),
                 static_cast<double>(map.height)};
  const double med = median_flow(map, box);
  const auto [lo, hi] = std::minmax_element(map.u.begin(), map.u.end());
  CHECK(med >= *lo);
  CHECK(med <= *hi);

  // Permuting the pixels inside the box must not change the median.
  FlowMap shuffled = map;
  std::shuffle(shuffled.u.begin(), shuffled.u.end(), rng);
  CHECK(median_flow(shuffled, box) == med);
}

TEST_CASE("translating box and content together leaves the median unchanged") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<float> val(-5.0f, 5.0f);

  FlowMap base;
  base.width = 24;
  base.height = 20;
  base.u.resize(24 * 20);
  base.v.assign(24 * 20, 0.0f);
  for (auto& f : base.u) f = val(rng);

  const BBox box{3.25, 4.5, 6.0, 5.5};
  const int dx = 7, dy = 5;

  FlowMap moved = base;
  for (std::int32_t y = 0; y < base.height; ++y) {
    for (std::int32_t x = 0; x < base.width; ++x) {
      const std::int32_t sx = x - dx, sy = y - dy;
      moved.u[static_cast<std::size_t>(y) * moved.width + x] =
          (sx >= 0 && sx < base.width && sy >= 0 && sy < base.height)
              ? base.u_at(sx, sy)
              : 99.0f;
    }
  }
  const BBox shifted{box.x_ul + dx, box.y_ul + dy, box.width, box.height};
  CHECK(median_flow(moved, shifted) == median_flow(base, box));
}
