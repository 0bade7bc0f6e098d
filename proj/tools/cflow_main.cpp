// Command-line front end: score, eval, synth, flo.
//
// Exit codes: 0 success, 2 partial (frames skipped for non-benign causes,
// see skips.csv), 1 fatal error, 64 usage error, 74 I/O error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cflow/csv.hpp"
#include "cflow/errors.hpp"
#include "cflow/eval.hpp"
#include "cflow/flow_map.hpp"
#include "cflow/flow_store.hpp"
#include "cflow/synth.hpp"
#include "cflow/track.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;
constexpr int kExitUsage = 64;
constexpr int kExitIo = 74;

struct CommonOptions {
  std::string tracks_path;
  std::string flows_dir;
  std::string out_dir;
  cflow::ScoreOptions score;
  std::string mode_name = "both";
};

void add_scoring_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--tracks", opt.tracks_path, "Track JSONL file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--flows", opt.flows_dir,
                  "Directory flow_ref paths are resolved against")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--out", opt.out_dir, "Output directory (created)")
      ->required();
  cmd->add_option("--k", opt.score.params.k, "Window depth in frames")
      ->capture_default_str();
  cmd->add_option("--min-samples", opt.score.params.min_samples,
                  "Minimum samples per window")
      ->capture_default_str();
  cmd->add_option("--tau-d", opt.score.params.tau_d,
                  "Diagonal normalizer floor, px")
      ->capture_default_str();
  cmd->add_option("--tau-u", opt.score.params.tau_u,
                  "Flow scale floor, px/frame")
      ->capture_default_str();
  cmd->add_option("--tau-eps", opt.score.params.tau_eps,
                  "Normalized error floor")
      ->capture_default_str();
  cmd->add_option("--iou-threshold", opt.score.iou_threshold,
                  "TP boundary for classification")
      ->capture_default_str();
  cmd->add_option("--mode", opt.mode_name, "Score series: gt, pred or both")
      ->check(CLI::IsMember({"gt", "pred", "both"}))
      ->capture_default_str();
  cmd->add_flag("--fill-gaps", opt.score.fill_gaps,
                "Hypothesize boxes for interior detection gaps");
  cmd->add_option("--jobs", opt.score.jobs, "Worker threads over tracks")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

cflow::ScoreMode mode_from_name(const std::string& name) {
  if (name == "gt") return cflow::ScoreMode::gt;
  if (name == "pred") return cflow::ScoreMode::pred;
  return cflow::ScoreMode::both;
}

void echo_config(const CLI::App& cmd, const fs::path& out_dir) {
  std::ofstream out(out_dir / "effective_config.ini", std::ios::trunc);
  out << cmd.config_to_str(true, true);
}

void log_skips(const cflow::ScoreReport& report) {
  for (const auto& s : report.skips) {
    std::cerr << "skip track=" << s.track_id << " frame=" << s.frame_index
              << " mode=" << s.mode << " cause=" << cflow::errc_name(s.cause)
              << (s.benign ? "" : " [failure]") << '\n';
  }
  const auto counts = report.skip_counts();
  if (!counts.empty()) {
    std::cerr << "skipped frames by cause:";
    for (const auto& [cause, n] : counts) {
      std::cerr << ' ' << cflow::errc_name(cause) << '=' << n;
    }
    std::cerr << '\n';
  }
}

struct ScoredInputs {
  std::vector<cflow::Track> tracks;
  cflow::ScoreReport report;
};

ScoredInputs run_scoring(const CommonOptions& opt) {
  ScoredInputs result;
  result.tracks = cflow::load_tracks(opt.tracks_path);
  cflow::DirectoryFlowStore flows(opt.flows_dir);
  cflow::ScoreOptions score = opt.score;
  score.mode = mode_from_name(opt.mode_name);
  result.report = cflow::score_tracks(result.tracks, flows, score);
  return result;
}

void write_file(const fs::path& path, const auto& writer) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) cflow::raise(cflow::Errc::io_error, "cannot open " + path.string());
  writer(out);
  if (!out) {
    cflow::raise(cflow::Errc::io_error, "write failure on " + path.string());
  }
}

int cmd_score(const CLI::App& cmd, const CommonOptions& opt) {
  fs::create_directories(opt.out_dir);
  echo_config(cmd, opt.out_dir);

  const ScoredInputs scored = run_scoring(opt);
  write_file(fs::path(opt.out_dir) / "frame_scores.csv", [&](std::ostream& o) {
    cflow::write_frame_scores_csv(o, scored.report.scores);
  });
  write_file(fs::path(opt.out_dir) / "skips.csv", [&](std::ostream& o) {
    cflow::write_skips_csv(o, scored.report.skips);
  });
  log_skips(scored.report);
  std::cout << "scored " << scored.report.scores.size() << " frames, skipped "
            << scored.report.skips.size() << '\n';
  return scored.report.has_failures() ? kExitPartial : kExitOk;
}

int cmd_eval(const CLI::App& cmd, const CommonOptions& opt,
             const cflow::SweepConfig& sweep_config, double bin_width) {
  fs::create_directories(opt.out_dir);
  echo_config(cmd, opt.out_dir);

  cflow::SweepConfig config = sweep_config;
  config.iou_threshold = opt.score.iou_threshold;
  config.validate();

  const ScoredInputs scored = run_scoring(opt);
  const auto& scores = scored.report.scores;
  const fs::path out_dir(opt.out_dir);

  write_file(out_dir / "frame_scores.csv", [&](std::ostream& o) {
    cflow::write_frame_scores_csv(o, scores);
  });
  write_file(out_dir / "skips.csv", [&](std::ostream& o) {
    cflow::write_skips_csv(o, scored.report.skips);
  });

  const auto rows = cflow::sweep(scores, config);
  write_file(out_dir / "sweep.csv", [&](std::ostream& o) {
    cflow::write_sweep_csv(o, rows);
  });

  const auto hist_gt =
      cflow::histogram(scores, cflow::ScoreSeries::GT, bin_width,
                       config.split_fn);
  const auto hist_hyp =
      cflow::histogram(scores, cflow::ScoreSeries::HYP, bin_width,
                       config.split_fn);
  write_file(out_dir / "histogram.csv", [&](std::ostream& o) {
    cflow::write_histogram_csv(o, hist_gt, hist_hyp);
  });

  const auto heat = cflow::heatmap(scores, config, bin_width);
  write_file(out_dir / "heatmap.csv", [&](std::ostream& o) {
    cflow::write_heatmap_csv(o, heat);
  });

  // Correlation between the two series over frames carrying both.
  std::vector<double> xs, ys;
  for (const auto& fsc : scores) {
    if (fsc.gt && fsc.hyp) {
      xs.push_back(fsc.gt->score);
      ys.push_back(fsc.hyp->score);
    }
  }
  std::optional<double> rho;
  if (xs.size() >= 2) {
    try {
      rho = cflow::pearson(xs, ys);
    } catch (const cflow::Error&) {
      // degenerate variance: leave rho empty
    }
  }
  write_file(out_dir / "correlation.txt", [&](std::ostream& o) {
    cflow::write_correlation_txt(o, rho, static_cast<std::int64_t>(xs.size()));
  });

  log_skips(scored.report);
  std::cout << "scored " << scores.size() << " frames, skipped "
            << scored.report.skips.size() << '\n';
  return scored.report.has_failures() ? kExitPartial : kExitOk;
}

int cmd_synth(const CLI::App& cmd, const std::string& scenario_path,
              const std::string& out_dir, bool force, bool seed_given,
              std::uint64_t seed_override) {
  auto specs = cflow::load_scenarios(scenario_path);
  if (seed_given) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      specs[i].seed = seed_override + i;
    }
  }

  for (const auto& spec : specs) {
    const fs::path dir = fs::path(out_dir) / spec.name;
    if (fs::exists(dir) && !force) {
      throw std::runtime_error(dir.string() +
                               " exists; pass --force to overwrite");
    }
  }
  fs::create_directories(out_dir);
  echo_config(cmd, out_dir);

  for (const auto& spec : specs) {
    const cflow::Scenario scen = cflow::generate(spec);
    cflow::write_scenario(scen, fs::path(out_dir) / spec.name);
    std::cout << "wrote scenario '" << spec.name << "' ("
              << scen.flows.size() << " frames)\n";
  }
  return kExitOk;
}

int cmd_flo(const std::string& path) {
  const cflow::FlowMap map = cflow::read_flo_file(path);
  const cflow::BBox all{0.0, 0.0, static_cast<double>(map.width),
                        static_cast<double>(map.height)};
  const auto [umin, umax] =
      std::minmax_element(map.u.begin(), map.u.end());
  std::cout << "width=" << map.width << " height=" << map.height << '\n'
            << "u: min=" << cflow::format_double(*umin)
            << " max=" << cflow::format_double(*umax)
            << " median=" << cflow::format_double(cflow::median_flow(map, all))
            << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-based credibility scoring for detection tracks"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI file");

  CommonOptions score_opt;
  auto* score = app.add_subcommand(
      "score", "Score every frame of the given tracks; write frame_scores.csv");
  add_scoring_flags(score, score_opt);

  CommonOptions eval_opt;
  cflow::SweepConfig sweep_config;
  double bin_width = 0.1;
  auto* eval = app.add_subcommand(
      "eval", "Score tracks and write sweep, histogram, heatmap, correlation");
  add_scoring_flags(eval, eval_opt);
  eval->add_option("--xi", sweep_config.thresholds,
                   "Score thresholds for the sweep (repeatable)")
      ->capture_default_str();
  eval->add_option("--ttc-bins", sweep_config.ttc_bin_edges,
                   "TTC bin edges in seconds (last bin is open-ended)")
      ->delimiter(',')
      ->capture_default_str();
  eval->add_flag("--split-fn", sweep_config.split_fn,
                 "Report FN_POOR and FN_MISS separately");
  eval->add_option("--bin-width", bin_width, "Score histogram bin width")
      ->capture_default_str();

  std::string scenario_path, synth_out;
  bool force = false;
  std::uint64_t seed_override = 0;
  auto* synth = app.add_subcommand(
      "synth", "Materialize synthetic scenarios (.flo files + tracks.jsonl)");
  auto* scen_opt =
      synth->add_option("--scenarios", scenario_path, "Scenario config file")
          ->required()
          ->check(CLI::ExistingFile);
  (void)scen_opt;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_flag("--force", force, "Overwrite existing scenario directories");
  auto* seed_flag = synth->add_option(
      "--seed", seed_override,
      "Override scenario seeds (scenario i gets seed + i)");

  std::string flo_path;
  auto* flo = app.add_subcommand("flo", "Print header and stats of a .flo file");
  flo->add_option("path", flo_path, "File to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (score->parsed()) return cmd_score(*score, score_opt);
    if (eval->parsed()) {
      return cmd_eval(*eval, eval_opt, sweep_config, bin_width);
    }
    if (synth->parsed()) {
      return cmd_synth(*synth, scenario_path, synth_out, force,
                       seed_flag->count() > 0, seed_override);
    }
    if (flo->parsed()) return cmd_flo(flo_path);
  } catch (const cflow::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == cflow::Errc::io_error ? kExitIo : kExitFatal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitUsage;
}
