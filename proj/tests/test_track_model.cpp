#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"

#include "cflow/errors.hpp"
#include "cflow/geometry.hpp"
#include "cflow/track.hpp"

using namespace cflow;

namespace {

BBox random_box(std::mt19937& rng) {
  std::uniform_real_distribution<double> pos(-20.0, 20.0);
  std::uniform_real_distribution<double> len(0.5, 15.0);
  return {pos(rng), pos(rng), len(rng), len(rng)};
}

}  // namespace

TEST_CASE("iou hand cases") {
  const BBox unit{0.0, 0.0, 1.0, 1.0};
  CHECK(iou(unit, unit) == 1.0);
  CHECK(iou(unit, {5.0, 5.0, 1.0, 1.0}) == 0.0);
  // Half-overlapping unit squares: intersection 0.5, union 1.5.
  CHECK(iou(unit, {0.5, 0.0, 1.0, 1.0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("iou properties") {
  std::mt19937 rng(11);
  for (int i = 0; i < 300; ++i) {
    const BBox a = random_box(rng);
    const BBox b = random_box(rng);
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(iou(a, a) == 1.0);
    if (ab == 1.0) {
      CHECK(a == b);
    }
  }
}

TEST_CASE("classify_frame covers every input combination") {
  const BBox unit{0.0, 0.0, 1.0, 1.0};
  const BBox half{0.5, 0.0, 1.0, 1.0};      // iou 1/3
  const BBox apart{9.0, 9.0, 1.0, 1.0};     // iou 0

  CHECK(classify_frame(std::nullopt, std::nullopt, 0.5) == Outcome::NONE);
  CHECK(classify_frame(unit, std::nullopt, 0.5) == Outcome::FN_MISS);
  CHECK(classify_frame(std::nullopt, unit, 0.5) == Outcome::FP);
  CHECK(classify_frame(unit, unit, 0.5) == Outcome::TP);
  CHECK(classify_frame(unit, half, 0.5) == Outcome::FN_POOR);
  CHECK(classify_frame(unit, apart, 0.5) == Outcome::FN_MISS);
  // Threshold boundary is inclusive for TP.
  CHECK(classify_frame(unit, half, 1.0 / 3.0) == Outcome::TP);
}

TEST_CASE("diagonal") {
  CHECK(diagonal({0.0, 0.0, 3.0, 4.0}) == 5.0);
  CHECK(diagonal({0.0, 0.0, 10.0, 10.0}) ==
        doctest::Approx(14.142135623730951).epsilon(1e-15));
  const double thin = diagonal({0.0, 0.0, 1.0, 1e-4});
  CHECK(thin > 1.0);
  CHECK(thin == doctest::Approx(1.000000005).epsilon(1e-12));
}

TEST_CASE("load_tracks parses, reorders and validates") {
  SUBCASE("frames are reordered by frame_index") {
    std::istringstream in(
        R"({"track_id":"a","frame_index":3,"timestamp_s":0.3,"flow_ref":"f3"}
{"track_id":"a","frame_index":1,"timestamp_s":0.1,"flow_ref":"f1"}
)");
    const auto tracks = parse_tracks_jsonl(in);
    REQUIRE(tracks.size() == 1);
    REQUIRE(tracks[0].frames.size() == 2);
    CHECK(tracks[0].frames[0].frame_index == 1);
    CHECK(tracks[0].frames[1].frame_index == 3);
  }
  SUBCASE("non-positive width fails with the line number") {
    std::istringstream in(
        R"({"track_id":"a","frame_index":0,"timestamp_s":0.0,"flow_ref":"f0","gt_box":[0,0,-3,5]}
)");
    try {
      parse_tracks_jsonl(in);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::parse_error);
      CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
  }
  SUBCASE("empty input gives an empty list") {
    std::istringstream in("");
    CHECK(parse_tracks_jsonl(in).empty());
  }
  SUBCASE("unknown fields are ignored") {
    std::istringstream in(
        R"({"track_id":"a","frame_index":0,"timestamp_s":0.0,"flow_ref":"f0","camera":"front","blobs":[1,2]}
)");
    CHECK(parse_tracks_jsonl(in).size() == 1);
  }
  SUBCASE("missing required field") {
    std::istringstream in(R"({"track_id":"a","frame_index":0,"flow_ref":"f"}
)");
    try {
      parse_tracks_jsonl(in);
      FAIL("expected MissingField");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::missing_field);
    }
  }
  SUBCASE("duplicate frame_index") {
    std::istringstream in(
        R"({"track_id":"a","frame_index":2,"timestamp_s":0.1,"flow_ref":"f"}
{"track_id":"a","frame_index":2,"timestamp_s":0.2,"flow_ref":"g"}
)");
    try {
      parse_tracks_jsonl(in);
      FAIL("expected OrderError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::order_error);
    }
  }
  SUBCASE("malformed JSON names the line") {
    std::istringstream in(
        "{\"track_id\":\"a\",\"frame_index\":0,\"timestamp_s\":0.0,\"flow_ref\":\"f\"}\n"
        "{not json\n");
    try {
      parse_tracks_jsonl(in);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::parse_error);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
}

TEST_CASE("save and load round-trip random track lists") {
  std::mt19937 rng(13);
  std::uniform_int_distribution<int> n_frames(1, 8);
  std::uniform_real_distribution<double> score(0.0, 1.0);

  std::vector<Track> tracks;
  for (int t = 0; t < 5; ++t) {
    Track track;
    track.track_id = "ped_" + std::to_string(t);
    const int n = n_frames(rng);
    for (int f = 0; f < n; ++f) {
      TrackFrame frame;
      frame.frame_index = 2 * f;  // gaps are legal
      frame.timestamp_s = 0.1 * f;
      frame.flow_ref = "flows/" + std::to_string(f) + ".flo";
      if (rng() % 2) frame.gt_box = random_box(rng);
      if (rng() % 2) frame.pred_box = random_box(rng);
      if (frame.pred_box) frame.pred_score = score(rng);
      if (rng() % 2) frame.ttc_s = score(rng) * 4.0;
      track.frames.push_back(frame);
    }
    tracks.push_back(track);
  }

  std::stringstream buf;
  write_tracks_jsonl(buf, tracks);
  const auto back = parse_tracks_jsonl(buf);

  REQUIRE(back.size() == tracks.size());
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    CHECK(back[t].track_id == tracks[t].track_id);
    REQUIRE(back[t].frames.size() == tracks[t].frames.size());
    for (std::size_t f = 0; f < tracks[t].frames.size(); ++f) {
      const auto& a = tracks[t].frames[f];
      const auto& b = back[t].frames[f];
      CHECK(a.frame_index == b.frame_index);
      CHECK(a.timestamp_s == b.timestamp_s);
      CHECK(a.flow_ref == b.flow_ref);
      CHECK(a.gt_box == b.gt_box);
      CHECK(a.pred_box == b.pred_box);
      CHECK(a.pred_score == b.pred_score);
      CHECK(a.ttc_s == b.ttc_s);
    }
  }
}
