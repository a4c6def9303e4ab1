#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fastlight/experiment.hpp"
#include "fastlight/outputs.hpp"
#include "fastlight/plot_emitter.hpp"

namespace fs = std::filesystem;
using namespace fastlight;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> seeds;
  std::optional<int> threads;
  bool save_frames = false;
  bool quiet = false;
  std::string channel = "fast";
  std::string param;
  std::vector<double> values;
  std::string figure;
  std::string from;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? parse_config("") : load_config(o.config);
  if (o.seed) cfg.ensemble.base_seed = *o.seed;
  if (o.seeds) cfg.ensemble.n_seeds = *o.seeds;
  if (o.threads) cfg.ensemble.threads = *o.threads;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Options& o, const ExperimentConfig& cfg) {
  fs::create_directories(o.out);
  write_text((fs::path(o.out) / "config.cfg").string(), to_config_text(cfg));
  return o.out;
}

void say(const Options& o, const std::string& s) {
  if (!o.quiet) std::cout << s << '\n';
}

Experiment prepared(const ExperimentConfig& cfg) {
  auto exp = prepare(cfg);
  for (const auto& w : exp.warnings) std::cerr << "warning: " << w << '\n';
  return exp;
}

std::string ns(const std::optional<double>& v) { return v ? fmt::format("{:.2f} ns", *v * 1e9) : "none"; }

Channel parse_channel(const std::string& s) {
  if (s == "reference") return Channel::Reference;
  if (s == "fast") return Channel::Fast;
  throw Error(ErrorCode::Config, "channel must be reference or fast");
}

void simulate(const Options& o) {
  const auto cfg = load(o);
  const auto dir = out_dir(o, cfg);
  const auto exp = prepared(cfg);
  const Channel ch = parse_channel(o.channel);
  const auto seed = cfg.ensemble.base_seed;
  const auto run = run_channel(exp, ch, seed, o.save_frames);
  const double floor = estimate_background_floor(run.trace, cfg.analysis.background_fraction);
  const auto name = channel_name(ch);
  write_text((dir / fmt::format("trace_{}.csv", name)).string(),
             trace_csv(exp, ch, run.trace, integrated_snr(run.trace, floor), seed));
  if (o.save_frames) write_frame_stack(run.stack, (dir / fmt::format("stack_{}.flstack", name)).string(), exp.hash);
  const auto t = detection_time(run.trace, cfg.analysis.threshold, cfg.analysis.persistence);
  say(o, fmt::format("{} channel, seed {}: detection {} after onset",
                     name, seed, ns(t ? std::optional<double>(*t - exp.onset) : std::nullopt)));
}

void compare_cmd(const Options& o) {
  const auto cfg = load(o);
  const auto dir = out_dir(o, cfg);
  const auto exp = prepared(cfg);
  const auto seed = cfg.ensemble.base_seed;
  const auto r = run_seed(exp, seed);
  write_text((dir / "trace_reference.csv").string(),
             trace_csv(exp, Channel::Reference, r.reference, r.report.cumulative_reference, seed));
  write_text((dir / "trace_fast.csv").string(), trace_csv(exp, Channel::Fast, r.fast, r.report.cumulative_fast, seed));
  write_text((dir / "report.txt").string(), report_text(exp, r.report, seed));
  say(o, fmt::format("seed {}: advancement {}", seed, ns(r.report.advancement)));
}

void ensemble_cmd(const Options& o) {
  const auto cfg = load(o);
  const auto dir = out_dir(o, cfg);
  ProgressFn progress;
  if (!o.quiet)
    progress = [](int done, int total) {
      std::fprintf(stderr, "\r%d/%d seeds", done, total);
      if (done == total) std::fputc('\n', stderr);
    };
  const auto e = run_ensemble(prepared(cfg), progress);
  write_text((dir / "trace_reference.csv").string(), mean_trace_csv(e, cfg, Channel::Reference));
  write_text((dir / "trace_fast.csv").string(), mean_trace_csv(e, cfg, Channel::Fast));
  write_text((dir / "summary.txt").string(), ensemble_summary_text(e, cfg));
  write_text((dir / "seeds.csv").string(), seed_table_csv(e, cfg));
  const auto& a = e.advancement;
  say(o, fmt::format("advancement {:.2f} +- {:.2f} ns (std {:.2f} ns, {} of {} seeds detected in both channels)",
                     a.mean * 1e9, a.standard_error() * 1e9, a.std * 1e9, a.count, e.seeds.size()));
  say(o, fmt::format("reference detection {:.2f} ns after onset, fast {:.2f} ns", e.t_reference.mean * 1e9,
                     e.t_fast.mean * 1e9));
  if (e.window)
    say(o, fmt::format("fast integrated SNR above reference from {:.1f} to {:.1f} ns after onset",
                       (e.window->lo - e.onset) * 1e9, (e.window->hi - e.onset) * 1e9));
}

void sweep_cmd(const Options& o) {
  const auto cfg = load(o);
  const auto dir = out_dir(o, cfg);
  prepared(cfg);
  const auto rows = sweep_parameter(cfg, o.param, o.values);
  write_text((dir / fmt::format("sweep_{}.csv", o.param)).string(), sweep_table_csv(rows, o.param, cfg));
  for (const auto& r : rows)
    say(o, fmt::format("{}={}: advancement {:.2f} +- {:.2f} ns ({} pairs)", o.param, r.value,
                       r.advancement.mean * 1e9, r.advancement.standard_error() * 1e9, r.detected_pairs));
}

void calibrate_cmd(const Options& o) {
  const auto cfg = load(o);
  const auto dir = out_dir(o, cfg);
  const auto cal = calibrate_doublet(cfg.calibration.target);
  const auto check = narrowband_check(cal.medium, cfg.calibration.spacing_cycles);
  write_text((dir / "calibration.txt").string(), calibration_text(cal, check, cfg));
  ExperimentConfig medium_cfg = cfg;
  medium_cfg.medium = cal.medium;
  write_text((dir / "calibrated_medium.cfg").string(), to_config_text(medium_cfg));
  say(o, fmt::format("group index {:.1f}, carrier gain {:.4f}, half width {:.4g} Hz, detuning {:.4g} Hz",
                     cal.achieved_group_index, cal.achieved_carrier_gain, cal.medium.lines[1].half_width,
                     cal.medium.lines[1].center_detuning));
  say(o, fmt::format("narrowband check: peak shift {:.2f} ns vs group delay {:.2f} ns ({:.2f}% off)",
                     check.measured_shift * 1e9, check.predicted_shift * 1e9, 100 * check.relative_error()));
}

void emit_cmd(const Options& o) {
  const auto artifacts = load_artifacts(o.from);
  const auto bundle = emit_figure(artifacts, parse_figure_id(o.figure));
  const auto files = write_figure(bundle, o.out.empty() ? o.from : o.out);
  for (const auto& f : files) say(o, f);
}

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config:
    case ErrorCode::InvalidSpec:
    case ErrorCode::UnknownParameter:
      return 2;
    case ErrorCode::Io:
    case ErrorCode::MissingSeries:
      return 1;
    default:
      return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast-light detection simulator"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config file");
    sub->add_option("--seed", o.seed, "seed (base seed for ensembles)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", o.threads, "worker threads, 0 for all cores");
    sub->add_flag("--quiet", o.quiet, "suppress progress and summaries");
  };

  auto* sim = app.add_subcommand("simulate", "run one channel and write its trace");
  common(sim);
  sim->add_option("--channel", o.channel, "reference or fast");
  sim->add_flag("--save-frames", o.save_frames, "also write the full-frame stack");

  auto* cmp = app.add_subcommand("compare", "run both channels for one seed");
  common(cmp);

  auto* ens = app.add_subcommand("ensemble", "ensemble statistics over seeds");
  common(ens);
  ens->add_option("--seeds", o.seeds, "number of seeds");

  auto* swp = app.add_subcommand("sweep", "ensemble per parameter value");
  common(swp);
  swp->add_option("--seeds", o.seeds, "number of seeds");
  swp->add_option("--param", o.param, "efficiency, gain or advancement")->required();
  swp->add_option("--values", o.values, "parameter values")->required()->delimiter(',');

  auto* cal = app.add_subcommand("calibrate-medium", "solve doublet parameters for a target group index");
  common(cal);

  auto* emit = app.add_subcommand("emit", "write plot-ready figure data from an output directory");
  emit->add_option("--figure", o.figure, "arrival, visibility, snr or integrated_snr")->required();
  emit->add_option("--from", o.from, "output directory with traces")->required()->check(CLI::ExistingDirectory);
  emit->add_option("--out", o.out, "destination directory (default: --from)");
  emit->add_flag("--quiet", o.quiet, "suppress file listing");

  CLI11_PARSE(app, argc, argv);
  if (emit->parsed() && emit->count("--out") == 0) o.out.clear();

  try {
    if (sim->parsed()) simulate(o);
    if (cmp->parsed()) compare_cmd(o);
    if (ens->parsed()) ensemble_cmd(o);
    if (swp->parsed()) sweep_cmd(o);
    if (cal->parsed()) calibrate_cmd(o);
    if (emit->parsed()) emit_cmd(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
