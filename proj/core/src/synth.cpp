#include "cflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "cflow/errors.hpp"
#include "cflow/flow_store.hpp"
#include "cflow/hypothesizer.hpp"

namespace cflow {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

[[noreturn]] void spec_fail(const std::string& what) {
  raise(Errc::spec_error, what);
}

}  // namespace

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::FLOW_JUMP: return "flow_jump";
    case EventKind::OCCLUSION: return "occlusion";
    case EventKind::DROPOUT: return "dropout";
    case EventKind::JITTER: return "jitter";
  }
  return "flow_jump";
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double GaussianStream::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller on two 32-bit draws; u1 is kept away from zero so the log is
  // always finite.
  const double u1 =
      (static_cast<double>(engine_()) + 1.0) / 4294967296.0;  // (0, 1]
  const double u2 = static_cast<double>(engine_()) / 4294967296.0;  // [0, 1)
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t frame_stream_seed(std::uint64_t base_seed, std::uint64_t tag,
                                std::int64_t frame) {
  return splitmix64(splitmix64(base_seed + tag * kGolden) +
                    static_cast<std::uint64_t>(frame) + 1);
}

BBox nominal_box_at(const ScenarioSpec& spec, std::int64_t frame) {
  const double f = static_cast<double>(frame);
  const double scale = std::pow(spec.growth_rate, f);
  const double w = spec.ped_start.width * scale;
  const double h = spec.ped_start.height * scale;
  const double cx = spec.ped_start.center_x() + spec.ped_velocity[0] * f;
  const double cy = spec.ped_start.center_y() + spec.ped_velocity[1] * f;
  return BBox{cx - 0.5 * w, cy - 0.5 * h, w, h};
}

namespace {

void validate_spec(const ScenarioSpec& spec) {
  if (spec.image_w <= 0 || spec.image_h <= 0) {
    spec_fail("image dimensions must be positive");
  }
  const int min_frames = CFlowParams{}.k + 2;
  if (spec.n_frames < min_frames) {
    spec_fail("n_frames must be >= " + std::to_string(min_frames));
  }
  if (!(spec.dt > 0.0)) spec_fail("dt must be > 0");
  if (!spec.ped_start.valid()) spec_fail("ped_start is not a valid box");
  if (!(spec.growth_rate > 0.0)) spec_fail("growth_rate must be > 0");
  if (spec.noise_std < 0.0) spec_fail("noise_std must be >= 0");

  for (const auto& e : spec.events) {
    switch (e.kind) {
      case EventKind::FLOW_JUMP:
      case EventKind::OCCLUSION:
        if (e.frame < 0 || e.frame >= spec.n_frames) {
          spec_fail(std::string(event_kind_name(e.kind)) + " frame " +
                    std::to_string(e.frame) + " out of [0, " +
                    std::to_string(spec.n_frames) + ")");
        }
        if (e.kind == EventKind::OCCLUSION &&
            !(e.phi > 0.0 && e.phi < 1.0)) {
          spec_fail("occlusion phi must be in (0, 1)");
        }
        break;
      case EventKind::DROPOUT:
      case EventKind::JITTER:
        for (const auto f : e.frames) {
          if (f < 0 || f >= spec.n_frames) {
            spec_fail(std::string(event_kind_name(e.kind)) + " frame " +
                      std::to_string(f) + " out of [0, " +
                      std::to_string(spec.n_frames) + ")");
          }
        }
        if (e.kind == EventKind::JITTER && e.std_px < 0.0) {
          spec_fail("jitter std must be >= 0");
        }
        break;
    }
  }
}

/// Visible fraction of the pedestrian's width at a frame; occlusions
/// compose multiplicatively.
double visible_fraction(const ScenarioSpec& spec, std::int64_t frame) {
  double vis = 1.0;
  for (const auto& e : spec.events) {
    if (e.kind == EventKind::OCCLUSION && frame >= e.frame) {
      vis *= 1.0 - e.phi;
    }
  }
  return vis;
}

/// Ground-truth box at a frame: the nominal box with the occluded strip
/// removed from its left side.
BBox visible_box_at(const ScenarioSpec& spec, std::int64_t frame) {
  BBox box = nominal_box_at(spec, frame);
  const double vis = visible_fraction(spec, frame);
  box.x_ul += (1.0 - vis) * box.width;
  box.width *= vis;
  return box;
}

double ped_flow_at(const ScenarioSpec& spec, std::int64_t frame) {
  double u = spec.ped_u0 + spec.ped_u_slope * static_cast<double>(frame);
  for (const auto& e : spec.events) {
    if (e.kind == EventKind::FLOW_JUMP && frame >= e.frame) {
      u += e.delta_u;
    }
  }
  return u;
}

bool dropped_at(const ScenarioSpec& spec, std::int64_t frame) {
  for (const auto& e : spec.events) {
    if (e.kind == EventKind::DROPOUT &&
        std::find(e.frames.begin(), e.frames.end(), frame) !=
            e.frames.end()) {
      return true;
    }
  }
  return false;
}

std::string flow_ref_for(std::int64_t frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "flows/%06lld.flo",
                static_cast<long long>(frame));
  return buf;
}

}  // namespace

Scenario generate(const ScenarioSpec& spec) {
  validate_spec(spec);

  Scenario scen;
  scen.track.track_id = spec.name;
  scen.flows.reserve(static_cast<std::size_t>(spec.n_frames));

  for (std::int64_t f = 0; f < spec.n_frames; ++f) {
    const BBox gt = visible_box_at(spec, f);
    if (gt.x_ul < 0.0 || gt.y_ul < 0.0 ||
        gt.x_lr() > static_cast<double>(spec.image_w) ||
        gt.y_lr() > static_cast<double>(spec.image_h)) {
      spec_fail("pedestrian box leaves the image at frame " +
                std::to_string(f));
    }
    if (clip_box_to_grid(gt, spec.image_w, spec.image_h).empty()) {
      spec_fail("pedestrian box covers no pixel at frame " +
                std::to_string(f));
    }

    FlowMap map;
    map.width = spec.image_w;
    map.height = spec.image_h;
    const std::size_t pixels =
        static_cast<std::size_t>(spec.image_w) * spec.image_h;
    map.u.assign(pixels, static_cast<float>(spec.background_u));
    map.v.assign(pixels, 0.0f);

    const float ped_u = static_cast<float>(ped_flow_at(spec, f));
    const PixelRect r = clip_box_to_grid(gt, spec.image_w, spec.image_h);
    for (std::int64_t y = r.y0; y < r.y1; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * spec.image_w;
      for (std::int64_t x = r.x0; x < r.x1; ++x) {
        map.u[row + static_cast<std::size_t>(x)] = ped_u;
      }
    }

    if (spec.noise_std > 0.0) {
      GaussianStream noise(frame_stream_seed(spec.seed, 1, f));
      for (std::size_t i = 0; i < pixels; ++i) {
        map.u[i] += static_cast<float>(spec.noise_std * noise.next());
        map.v[i] += static_cast<float>(spec.noise_std * noise.next());
      }
    }

    TrackFrame frame;
    frame.frame_index = f;
    frame.timestamp_s = static_cast<double>(f) * spec.dt;
    frame.flow_ref = flow_ref_for(f);
    frame.gt_box = gt;

    if (!dropped_at(spec, f)) {
      BBox pred = gt;
      GaussianStream jitter(frame_stream_seed(spec.seed, 2, f));
      for (const auto& e : spec.events) {
        if (e.kind != EventKind::JITTER) continue;
        if (!e.frames.empty() &&
            std::find(e.frames.begin(), e.frames.end(), f) ==
                e.frames.end()) {
          continue;
        }
        const double dx0 = e.std_px * jitter.next();
        const double dy0 = e.std_px * jitter.next();
        const double dx1 = e.std_px * jitter.next();
        const double dy1 = e.std_px * jitter.next();
        const double x1 = pred.x_lr() + dx1;
        const double y1 = pred.y_lr() + dy1;
        pred.x_ul += dx0;
        pred.y_ul += dy0;
        pred.width = std::max(x1 - pred.x_ul, 0.1);
        pred.height = std::max(y1 - pred.y_ul, 0.1);
      }
      frame.pred_box = pred;
    }

    scen.flows.push_back(std::move(map));
    scen.track.frames.push_back(std::move(frame));
  }
  return scen;
}

// --- oracle ---------------------------------------------------------------

namespace {

/// Median horizontal flow inside a box, recomputed from scratch: its own
/// pixel membership arithmetic and a full sort instead of selection.
double oracle_median_u(const FlowMap& map, const BBox& box) {
  const auto x0 =
      std::max<std::int64_t>(static_cast<std::int64_t>(std::ceil(box.x_ul)), 0);
  const auto y0 =
      std::max<std::int64_t>(static_cast<std::int64_t>(std::ceil(box.y_ul)), 0);
  const auto x1 = std::min<std::int64_t>(
      static_cast<std::int64_t>(std::ceil(box.x_lr())), map.width);
  const auto y1 = std::min<std::int64_t>(
      static_cast<std::int64_t>(std::ceil(box.y_lr())), map.height);
  if (x1 <= x0 || y1 <= y0) {
    raise(Errc::empty_region, "oracle: box covers no pixel");
  }
  std::vector<float> vals;
  vals.reserve(static_cast<std::size_t>((x1 - x0) * (y1 - y0)));
  for (std::int64_t y = y0; y < y1; ++y) {
    for (std::int64_t x = x0; x < x1; ++x) {
      vals.push_back(map.u[static_cast<std::size_t>(y) * map.width +
                           static_cast<std::size_t>(x)]);
    }
  }
  std::sort(vals.begin(), vals.end());
  const std::size_t n = vals.size();
  if (n % 2 == 1) return static_cast<double>(vals[n / 2]);
  return (static_cast<double>(vals[n / 2 - 1]) +
          static_cast<double>(vals[n / 2])) /
         2.0;
}

double sorted_median(std::vector<double> vals) {
  std::sort(vals.begin(), vals.end());
  const std::size_t n = vals.size();
  if (n % 2 == 1) return vals[n / 2];
  return (vals[n / 2 - 1] + vals[n / 2]) / 2.0;
}

struct OracleSample {
  double t = 0.0;
  double u = 0.0;
  BBox box;
};

}  // namespace

double oracle_cflow(const ScenarioSpec& spec, const Scenario& scen,
                    std::int64_t frame, BoxSource mode,
                    const CFlowParams& params) {
  params.validate();
  if (frame < 0 || frame >= spec.n_frames) {
    raise(Errc::missing_current,
          "oracle: frame " + std::to_string(frame) + " not in scenario");
  }
  const std::int64_t lo = frame - params.k;

  std::vector<OracleSample> samples;
  if (mode == BoxSource::GT) {
    for (std::int64_t f = std::max<std::int64_t>(lo, 0); f <= frame; ++f) {
      const TrackFrame& tf = scen.track.frames[static_cast<std::size_t>(f)];
      if (!tf.gt_box) continue;
      samples.push_back({tf.timestamp_s,
                         oracle_median_u(scen.flows[static_cast<std::size_t>(f)],
                                         *tf.gt_box),
                         *tf.gt_box});
    }
  } else {
    std::vector<std::pair<std::int64_t, BBox>> detections;
    for (std::int64_t f = std::max<std::int64_t>(lo, 0); f <= frame; ++f) {
      const TrackFrame& tf = scen.track.frames[static_cast<std::size_t>(f)];
      if (classify_frame(tf.gt_box, tf.pred_box, 0.5) == Outcome::TP) {
        detections.emplace_back(f, *tf.pred_box);
        samples.push_back(
            {tf.timestamp_s,
             oracle_median_u(scen.flows[static_cast<std::size_t>(f)],
                             *tf.pred_box),
             *tf.pred_box});
      }
    }
    const bool tp_at_t0 = !detections.empty() && detections.back().first == frame;
    if (!tp_at_t0) {
      HypothesisInput input;
      input.detections = detections;
      input.target_frame = frame;
      const Hypothesis hyp = hypothesize_box(input);
      const TrackFrame& tf =
          scen.track.frames[static_cast<std::size_t>(frame)];
      samples.push_back(
          {tf.timestamp_s,
           oracle_median_u(scen.flows[static_cast<std::size_t>(frame)],
                           hyp.box),
           hyp.box});
    }
  }

  const auto n = static_cast<double>(samples.size());
  if (samples.size() < static_cast<std::size_t>(params.min_samples)) {
    raise(Errc::insufficient_window,
          "oracle: " + std::to_string(samples.size()) + " samples at frame " +
              std::to_string(frame));
  }

  // Raw-moment least squares (two passes over plain sums).
  double st = 0.0, su = 0.0, stt = 0.0, stu = 0.0;
  for (const auto& s : samples) {
    st += s.t;
    su += s.u;
    stt += s.t * s.t;
    stu += s.t * s.u;
  }
  const double denom = n * stt - st * st;
  if (denom == 0.0) {
    raise(Errc::degenerate_abscissa, "oracle: all timestamps equal");
  }
  const double slope = (n * stu - st * su) / denom;
  const double intercept = (su - slope * st) / n;

  double eps = 0.0;
  std::vector<double> abs_u;
  abs_u.reserve(samples.size());
  for (const auto& s : samples) {
    eps += std::abs(s.u - (intercept + slope * s.t));
    abs_u.push_back(std::abs(s.u));
  }

  const BBox& b0 = samples[samples.size() - 1].box;
  const BBox& b1 = samples[samples.size() - 2].box;
  const double d0 = std::sqrt(b0.width * b0.width + b0.height * b0.height);
  const double d1 = std::sqrt(b1.width * b1.width + b1.height * b1.height);

  // Eq. of the score, evaluated in one expression.
  const double score =
      1.0 /
      (1.0 +
       std::exp(-((d0 - d1) / std::max({d0, d1, params.tau_d})) /
                std::max(eps / (n * std::max(sorted_median(std::move(abs_u)),
                                             params.tau_u)),
                         params.tau_eps)));
  if (score <= 0.0) return std::numeric_limits<double>::denorm_min();
  if (score >= 1.0) return std::nextafter(1.0, 0.0);
  return score;
}

double oracle_cflow(const ScenarioSpec& spec, std::int64_t frame,
                    BoxSource mode, const CFlowParams& params) {
  return oracle_cflow(spec, generate(spec), frame, mode, params);
}

// --- scenario config ------------------------------------------------------

namespace {

[[noreturn]] void config_fail(std::size_t line_no, const std::string& what) {
  raise(Errc::spec_error, "line " + std::to_string(line_no) + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_num(const std::string& tok, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    config_fail(line_no, "cannot parse number '" + tok + "'");
  }
}

std::int64_t parse_int(const std::string& tok, std::size_t line_no) {
  const double v = parse_num(tok, line_no);
  if (v != std::floor(v)) config_fail(line_no, "'" + tok + "' is not integral");
  return static_cast<std::int64_t>(v);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::int64_t> parse_int_list(const std::string& s,
                                         std::size_t line_no) {
  std::vector<std::int64_t> out;
  std::string cur;
  std::istringstream iss(s);
  while (std::getline(iss, cur, ',')) {
    out.push_back(parse_int(trim(cur), line_no));
  }
  if (out.empty()) config_fail(line_no, "empty frame list");
  return out;
}

Event parse_event(const std::string& value, std::size_t line_no) {
  const auto toks = split_ws(value);
  if (toks.empty()) config_fail(line_no, "empty event");

  Event e;
  const std::string& kind = toks[0];
  if (kind == "flow_jump") {
    e.kind = EventKind::FLOW_JUMP;
  } else if (kind == "occlusion") {
    e.kind = EventKind::OCCLUSION;
  } else if (kind == "dropout") {
    e.kind = EventKind::DROPOUT;
  } else if (kind == "jitter") {
    e.kind = EventKind::JITTER;
  } else {
    config_fail(line_no, "unknown event kind '" + kind + "'");
  }

  for (std::size_t i = 1; i < toks.size(); ++i) {
    const auto eq = toks[i].find('=');
    if (eq == std::string::npos) {
      config_fail(line_no, "event attribute '" + toks[i] +
                               "' is not key=value");
    }
    const std::string key = toks[i].substr(0, eq);
    const std::string val = toks[i].substr(eq + 1);
    if (key == "frame") {
      e.frame = parse_int(val, line_no);
    } else if (key == "delta_u") {
      e.delta_u = parse_num(val, line_no);
    } else if (key == "phi") {
      e.phi = parse_num(val, line_no);
    } else if (key == "frames") {
      e.frames = parse_int_list(val, line_no);
    } else if (key == "std") {
      e.std_px = parse_num(val, line_no);
    } else {
      config_fail(line_no, "unknown event attribute '" + key + "'");
    }
  }
  return e;
}

void apply_key(ScenarioSpec& spec, const std::string& key,
               const std::string& value, std::size_t line_no) {
  const auto toks = split_ws(value);
  const auto one = [&]() -> double {
    if (toks.size() != 1) config_fail(line_no, "expected one value");
    return parse_num(toks[0], line_no);
  };
  if (key == "image_w") {
    spec.image_w = static_cast<std::int32_t>(parse_int(toks.at(0), line_no));
  } else if (key == "image_h") {
    spec.image_h = static_cast<std::int32_t>(parse_int(toks.at(0), line_no));
  } else if (key == "n_frames") {
    spec.n_frames = static_cast<std::int32_t>(parse_int(toks.at(0), line_no));
  } else if (key == "dt") {
    spec.dt = one();
  } else if (key == "background_u") {
    spec.background_u = one();
  } else if (key == "ped_start") {
    if (toks.size() != 4) {
      config_fail(line_no, "ped_start expects 'x_ul y_ul width height'");
    }
    spec.ped_start = BBox{parse_num(toks[0], line_no), parse_num(toks[1], line_no),
                          parse_num(toks[2], line_no), parse_num(toks[3], line_no)};
  } else if (key == "ped_velocity") {
    if (toks.size() != 2) config_fail(line_no, "ped_velocity expects 'vx vy'");
    spec.ped_velocity = {parse_num(toks[0], line_no),
                         parse_num(toks[1], line_no)};
  } else if (key == "growth_rate") {
    spec.growth_rate = one();
  } else if (key == "ped_u0") {
    spec.ped_u0 = one();
  } else if (key == "ped_u_slope") {
    spec.ped_u_slope = one();
  } else if (key == "noise_std") {
    spec.noise_std = one();
  } else if (key == "seed") {
    spec.seed = static_cast<std::uint64_t>(parse_int(toks.at(0), line_no));
  } else if (key == "event") {
    spec.events.push_back(parse_event(value, line_no));
  } else {
    config_fail(line_no, "unknown key '" + key + "'");
  }
}

}  // namespace

std::vector<ScenarioSpec> parse_scenarios(std::istream& in) {
  std::vector<ScenarioSpec> specs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        config_fail(line_no, "malformed section header");
      }
      ScenarioSpec spec;
      spec.name = trim(t.substr(1, t.size() - 2));
      specs.push_back(std::move(spec));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      config_fail(line_no, "expected 'key = value'");
    }
    if (specs.empty()) {
      config_fail(line_no, "key before any [scenario] section");
    }
    apply_key(specs.back(), trim(t.substr(0, eq)), trim(t.substr(eq + 1)),
              line_no);
  }
  if (specs.empty()) {
    raise(Errc::spec_error, "no scenario sections found");
  }
  return specs;
}

std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open " + path.string());
  return parse_scenarios(in);
}

void write_scenario(const Scenario& scenario,
                    const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "flows", ec);
  if (ec) raise(Errc::io_error, "cannot create " + (dir / "flows").string());
  for (std::size_t i = 0; i < scenario.flows.size(); ++i) {
    write_flo_file(scenario.flows[i], dir / scenario.track.frames[i].flow_ref);
  }
  save_tracks({scenario.track}, dir / "tracks.jsonl");
}

void stage_scenario(const Scenario& scenario, MemoryFlowStore& store) {
  for (std::size_t i = 0; i < scenario.flows.size(); ++i) {
    store.add(scenario.track.frames[i].flow_ref, scenario.flows[i]);
  }
}

}  // namespace cflow
