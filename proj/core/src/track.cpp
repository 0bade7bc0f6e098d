#include "cflow/track.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cflow/csv.hpp"
#include "cflow/errors.hpp"

namespace cflow {

namespace {

using nlohmann::json;

[[noreturn]] void fail_line(Errc code, std::size_t line_no,
                            const std::string& what) {
  raise(code, "line " + std::to_string(line_no) + ": " + what);
}

double require_number(const json& rec, const char* field, std::size_t line_no) {
  const auto it = rec.find(field);
  if (it == rec.end()) {
    fail_line(Errc::missing_field, line_no,
              std::string("missing field '") + field + "'");
  }
  if (!it->is_number()) {
    fail_line(Errc::parse_error, line_no,
              std::string("field '") + field + "' is not a number");
  }
  return it->get<double>();
}

std::string require_string(const json& rec, const char* field,
                           std::size_t line_no) {
  const auto it = rec.find(field);
  if (it == rec.end()) {
    fail_line(Errc::missing_field, line_no,
              std::string("missing field '") + field + "'");
  }
  if (!it->is_string()) {
    fail_line(Errc::parse_error, line_no,
              std::string("field '") + field + "' is not a string");
  }
  return it->get<std::string>();
}

std::optional<BBox> optional_box(const json& rec, const char* field,
                                 std::size_t line_no) {
  const auto it = rec.find(field);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_array() || it->size() != 4 ||
      !std::all_of(it->begin(), it->end(),
                   [](const json& v) { return v.is_number(); })) {
    fail_line(Errc::parse_error, line_no,
              std::string("field '") + field +
                  "' must be [x_ul, y_ul, width, height]");
  }
  BBox box{(*it)[0].get<double>(), (*it)[1].get<double>(),
           (*it)[2].get<double>(), (*it)[3].get<double>()};
  if (!box.valid()) {
    fail_line(Errc::parse_error, line_no,
              std::string("field '") + field +
                  "' has non-positive or non-finite extent");
  }
  return box;
}

std::optional<double> optional_number(const json& rec, const char* field,
                                      std::size_t line_no) {
  const auto it = rec.find(field);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) {
    fail_line(Errc::parse_error, line_no,
              std::string("field '") + field + "' is not a number");
  }
  return it->get<double>();
}

}  // namespace

const TrackFrame* Track::find_frame(std::int64_t frame_index) const {
  const auto it = std::lower_bound(
      frames.begin(), frames.end(), frame_index,
      [](const TrackFrame& f, std::int64_t idx) { return f.frame_index < idx; });
  if (it == frames.end() || it->frame_index != frame_index) return nullptr;
  return &*it;
}

std::vector<Track> parse_tracks_jsonl(std::istream& in) {
  std::vector<Track> tracks;
  std::map<std::string, std::size_t> index_by_id;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_line(Errc::parse_error, line_no, e.what());
    }
    if (!rec.is_object()) {
      fail_line(Errc::parse_error, line_no, "record is not a JSON object");
    }

    TrackFrame frame;
    const std::string id = require_string(rec, "track_id", line_no);
    const double idx = require_number(rec, "frame_index", line_no);
    if (idx != std::floor(idx)) {
      fail_line(Errc::parse_error, line_no, "frame_index must be an integer");
    }
    frame.frame_index = static_cast<std::int64_t>(idx);
    frame.timestamp_s = require_number(rec, "timestamp_s", line_no);
    frame.flow_ref = require_string(rec, "flow_ref", line_no);
    frame.gt_box = optional_box(rec, "gt_box", line_no);
    frame.pred_box = optional_box(rec, "pred_box", line_no);
    frame.pred_score = optional_number(rec, "pred_score", line_no);
    frame.ttc_s = optional_number(rec, "ttc_s", line_no);
    if (frame.ttc_s && (!std::isfinite(*frame.ttc_s) || *frame.ttc_s < 0.0)) {
      fail_line(Errc::parse_error, line_no, "ttc_s must be finite and >= 0");
    }
    if (!std::isfinite(frame.timestamp_s)) {
      fail_line(Errc::parse_error, line_no, "timestamp_s must be finite");
    }

    auto [it, inserted] = index_by_id.try_emplace(id, tracks.size());
    if (inserted) {
      tracks.push_back(Track{id, {}});
    }
    tracks[it->second].frames.push_back(std::move(frame));
  }

  for (auto& track : tracks) {
    std::stable_sort(track.frames.begin(), track.frames.end(),
                     [](const TrackFrame& a, const TrackFrame& b) {
                       return a.frame_index < b.frame_index;
                     });
    for (std::size_t i = 1; i < track.frames.size(); ++i) {
      const auto& prev = track.frames[i - 1];
      const auto& cur = track.frames[i];
      if (cur.frame_index == prev.frame_index) {
        raise(Errc::order_error, "track '" + track.track_id +
                                     "': duplicate frame_index " +
                                     std::to_string(cur.frame_index));
      }
      if (cur.timestamp_s <= prev.timestamp_s) {
        raise(Errc::order_error,
              "track '" + track.track_id +
                  "': timestamps not strictly increasing at frame_index " +
                  std::to_string(cur.frame_index));
      }
    }
  }
  return tracks;
}

std::vector<Track> load_tracks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open " + path.string());
  return parse_tracks_jsonl(in);
}

void write_tracks_jsonl(std::ostream& out, const std::vector<Track>& tracks) {
  for (const auto& track : tracks) {
    for (const auto& frame : track.frames) {
      json rec;
      rec["track_id"] = track.track_id;
      rec["frame_index"] = frame.frame_index;
      rec["timestamp_s"] = frame.timestamp_s;
      rec["flow_ref"] = frame.flow_ref;
      if (frame.gt_box) {
        rec["gt_box"] = {frame.gt_box->x_ul, frame.gt_box->y_ul,
                         frame.gt_box->width, frame.gt_box->height};
      }
      if (frame.pred_box) {
        rec["pred_box"] = {frame.pred_box->x_ul, frame.pred_box->y_ul,
                           frame.pred_box->width, frame.pred_box->height};
      }
      if (frame.pred_score) rec["pred_score"] = *frame.pred_score;
      if (frame.ttc_s) rec["ttc_s"] = *frame.ttc_s;
      out << rec.dump() << '\n';
    }
  }
}

void save_tracks(const std::vector<Track>& tracks,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(Errc::io_error, "cannot open " + path.string());
  write_tracks_jsonl(out, tracks);
  if (!out) raise(Errc::io_error, "write failure on " + path.string());
}

}  // namespace cflow
