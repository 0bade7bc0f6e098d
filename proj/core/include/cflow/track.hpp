#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cflow/geometry.hpp"

namespace cflow {

/// One observation of a pedestrian at one image. gt_box and pred_box may
/// both be absent, in which case the frame only carries flow context.
/// ttc_s is ingested as an annotation, never computed here.
struct TrackFrame {
  std::int64_t frame_index = 0;
  double timestamp_s = 0.0;
  std::string flow_ref;  // flow map of the (previous, this) image pair
  std::optional<BBox> gt_box;
  std::optional<BBox> pred_box;
  std::optional<double> pred_score;
  std::optional<double> ttc_s;
};

/// A single pedestrian over time. frame_index and timestamp_s are strictly
/// increasing. Immutable after load; safe to share across threads.
struct Track {
  std::string track_id;
  std::vector<TrackFrame> frames;

  const TrackFrame* find_frame(std::int64_t frame_index) const;
  std::int64_t first_frame_index() const { return frames.front().frame_index; }
  std::int64_t last_frame_index() const { return frames.back().frame_index; }
};

/// Parse the JSONL track format: one record per line with track_id,
/// frame_index, timestamp_s, flow_ref, and optional gt_box/pred_box
/// ([x_ul, y_ul, width, height]), pred_score, ttc_s. Unknown fields are
/// ignored. Records are grouped by track_id (listed in first-appearance
/// order) and sorted by frame_index within each track.
///
/// Throws Error(parse_error) (with the 1-based line number),
/// Error(missing_field) or Error(order_error).
std::vector<Track> parse_tracks_jsonl(std::istream& in);
std::vector<Track> load_tracks(const std::filesystem::path& path);

void write_tracks_jsonl(std::ostream& out, const std::vector<Track>& tracks);
void save_tracks(const std::vector<Track>& tracks,
                 const std::filesystem::path& path);

}  // namespace cflow
