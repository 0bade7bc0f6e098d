#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cflow/flow_map.hpp"
#include "cflow/metric.hpp"
#include "cflow/track.hpp"

namespace cflow {

enum class EventKind { FLOW_JUMP, OCCLUSION, DROPOUT, JITTER };

const char* event_kind_name(EventKind k);

/// Scripted detector / scene behavior. Fields are used per kind:
///   FLOW_JUMP  adds delta_u inside the pedestrian box from `frame` onward
///   OCCLUSION  from `frame` onward replaces a fraction phi of the box
///              pixels with background flow and shrinks the visible extent
///              of the gt box by phi along its left side
///   DROPOUT    suppresses pred_box on the listed frames
///   JITTER     adds seeded Gaussian noise (std_px) to the pred_box corners
///              on the listed frames (empty list = every frame)
struct Event {
  EventKind kind = EventKind::FLOW_JUMP;
  std::int64_t frame = 0;
  double delta_u = 0.0;
  double phi = 0.0;
  std::vector<std::int64_t> frames;
  double std_px = 0.0;
};

/// Deterministic synthetic scene: one pedestrian moving in front of a
/// uniform background, with scripted detector behavior. Fully determined by
/// its fields, seed included.
struct ScenarioSpec {
  std::string name = "scenario";
  std::int32_t image_w = 0;
  std::int32_t image_h = 0;
  std::int32_t n_frames = 0;
  double dt = 0.1;             // seconds per frame
  double background_u = 0.0;   // px/frame
  BBox ped_start;
  std::array<double, 2> ped_velocity{0.0, 0.0};  // px/frame
  double growth_rate = 1.0;    // diagonal scale factor per frame
  double ped_u0 = 0.0;         // px/frame at frame 0
  double ped_u_slope = 0.0;    // px/frame per frame
  std::vector<Event> events;
  double noise_std = 0.0;      // px/frame, Gaussian, on both components
  std::uint64_t seed = 0;
};

struct Scenario {
  std::vector<FlowMap> flows;  // one map per frame
  Track track;
};

/// SplitMix64 step; the seed-mixing primitive behind every stream here.
std::uint64_t splitmix64(std::uint64_t x);

/// Reproducible Gaussian draws: mt19937 (bit-exact by the standard) plus an
/// explicit Box-Muller transform, so independent implementations can match
/// the stream exactly. Draws come out in pairs (z1 = cos branch first).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed)
      : engine_(static_cast<std::uint32_t>(splitmix64(seed))) {}

  double next();

 private:
  std::mt19937 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Seed of the per-frame stream: tag 1 covers flow-map noise, tag 2 the
/// detector jitter. Streams never cross frames, so maps can be generated in
/// parallel.
std::uint64_t frame_stream_seed(std::uint64_t base_seed, std::uint64_t tag,
                                std::int64_t frame);

/// Unoccluded pedestrian box at a frame: the start box translated by
/// velocity * frame and scaled by growth_rate^frame about its center.
BBox nominal_box_at(const ScenarioSpec& spec, std::int64_t frame);

/// Materialize the scenario. Throws Error(spec_error) when the pedestrian
/// box leaves the image, an event is out of range, or a field is invalid.
Scenario generate(const ScenarioSpec& spec);

/// Recompute the credibility score for one frame on an independent code
/// path: pixel medians by full sort, the regression by the raw-moment
/// closed form, and the score as one direct expression. Shares nothing
/// with the metric pipeline beyond primitive arithmetic, so agreement is
/// meaningful evidence of correctness.
double oracle_cflow(const ScenarioSpec& spec, std::int64_t frame,
                    BoxSource mode, const CFlowParams& params);

/// Same oracle against an already generated scenario (avoids regenerating
/// flow maps when sweeping every frame).
double oracle_cflow(const ScenarioSpec& spec, const Scenario& scen,
                    std::int64_t frame, BoxSource mode,
                    const CFlowParams& params);

/// Parse the scenario config format: one [name] section per scenario with
/// flat key = value fields and repeated `event = ...` lines. See the README
/// for the full grammar. Throws Error(spec_error) with the line number.
std::vector<ScenarioSpec> parse_scenarios(std::istream& in);
std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& path);

/// Write flows/NNNNNN.flo plus tracks.jsonl under dir. The track's
/// flow_refs are relative to dir, so the directory is self-contained.
void write_scenario(const Scenario& scenario,
                    const std::filesystem::path& dir);

/// Register a generated scenario's maps in an in-memory store under the
/// same refs write_scenario would use on disk.
void stage_scenario(const Scenario& scenario, class MemoryFlowStore& store);

}  // namespace cflow
