#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "fastlight/experiment.hpp"

namespace fastlight {

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::Config, what); }

void check_keys(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) {
  if (!node.IsMap()) config_error("section '" + section + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) config_error("unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& section) {
  const auto v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    config_error("bad value for '" + section + "." + key + "'");
  }
}

Rect read_rect(const YAML::Node& n, const std::string& name) {
  if (!n.IsSequence() || n.size() != 4) config_error("region '" + name + "' must be [row0, col0, rows, cols]");
  try {
    return {n[0].as<int>(), n[1].as<int>(), n[2].as<int>(), n[3].as<int>()};
  } catch (const YAML::Exception&) {
    config_error("region '" + name + "' must hold integers");
  }
}

std::string num(double v) { return fmt::format("{}", v); }

std::string rect_text(const Rect& r) { return fmt::format("[{}, {}, {}, {}]", r.row0, r.col0, r.rows, r.cols); }

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    config_error(std::string("unparseable config: ") + e.what());
  }
  ExperimentConfig cfg;
  if (root.IsNull()) {
    cfg.validate();
    return cfg;
  }
  check_keys(root, "", {"pulse", "medium", "amplifier", "scene", "detector", "sweep", "analysis", "ensemble",
                        "calibration"});

  if (auto n = root["pulse"]) {
    check_keys(n, "pulse", {"fwhm", "photons_total", "t_peak", "grid_start", "grid_stop", "dt"});
    auto& p = cfg.pulse;
    read(n, "fwhm", p.fwhm, "pulse");
    read(n, "photons_total", p.photons_total, "pulse");
    read(n, "t_peak", p.t_peak, "pulse");
    read(n, "grid_start", p.grid_start, "pulse");
    read(n, "grid_stop", p.grid_stop, "pulse");
    read(n, "dt", p.dt, "pulse");
  }

  if (auto n = root["medium"]) {
    check_keys(n, "medium", {"mode", "length", "advancement", "compression", "gain_total", "lines"});
    auto& m = cfg.medium;
    std::string mode = m.mode == MediumMode::Empirical ? "empirical" : "physical";
    read(n, "mode", mode, "medium");
    if (mode == "empirical") {
      m.mode = MediumMode::Empirical;
    } else if (mode == "physical" || mode == "identity") {
      m.mode = MediumMode::Physical;
      if (mode == "identity") m.lines.clear();
    } else {
      config_error("medium.mode must be empirical, physical or identity");
    }
    read(n, "length", m.length, "medium");
    read(n, "advancement", m.advancement, "medium");
    read(n, "compression", m.compression, "medium");
    read(n, "gain_total", m.gain_total, "medium");
    if (auto lines = n["lines"]) {
      if (!lines.IsSequence()) config_error("medium.lines must be a list");
      m.lines.clear();
      for (const auto& l : lines) {
        check_keys(l, "medium.lines", {"center_detuning", "half_width", "strength"});
        GainLine g;
        read(l, "center_detuning", g.center_detuning, "medium.lines");
        read(l, "half_width", g.half_width, "medium.lines");
        read(l, "strength", g.strength, "medium.lines");
        m.lines.push_back(g);
      }
    }
  }

  if (auto n = root["amplifier"]) {
    check_keys(n, "amplifier", {"variance_input_term", "gain_floor"});
    std::string term = "mean";
    read(n, "variance_input_term", term, "amplifier");
    if (term == "mean")
      cfg.amplifier.reading = VarianceReading::MeanPhotonNumber;
    else if (term == "zero")
      cfg.amplifier.reading = VarianceReading::ZeroFluctuation;
    else
      config_error("amplifier.variance_input_term must be mean or zero");
    read(n, "gain_floor", cfg.amplifier.gain_floor, "amplifier");
  }

  if (auto n = root["scene"]) {
    check_keys(n, "scene",
               {"width_px", "height_px", "pixel_pitch", "beam_waist", "beam_center_x", "beam_center_y", "stripe"});
    auto& s = cfg.scene;
    read(n, "width_px", s.grid.width_px, "scene");
    read(n, "height_px", s.grid.height_px, "scene");
    read(n, "pixel_pitch", s.grid.pixel_pitch, "scene");
    read(n, "beam_waist", s.beam_waist, "scene");
    read(n, "beam_center_x", s.beam_center_x, "scene");
    read(n, "beam_center_y", s.beam_center_y, "scene");
    if (auto st = n["stripe"]) {
      check_keys(st, "scene.stripe", {"center_row", "width", "contrast", "edge_smoothing"});
      read(st, "center_row", s.stripe.center_row, "scene.stripe");
      read(st, "width", s.stripe.width, "scene.stripe");
      read(st, "contrast", s.stripe.contrast, "scene.stripe");
      read(st, "edge_smoothing", s.stripe.edge_smoothing, "scene.stripe");
    }
  }

  if (auto n = root["detector"]) {
    check_keys(n, "detector", {"efficiency", "dark_mean", "dark_std", "gate_width", "threshold_D", "adu_gain"});
    auto& d = cfg.detector;
    read(n, "efficiency", d.efficiency, "detector");
    read(n, "dark_mean", d.dark_mean, "detector");
    read(n, "dark_std", d.dark_std, "detector");
    read(n, "gate_width", d.gate_width, "detector");
    read(n, "threshold_D", d.threshold_D, "detector");
    read(n, "adu_gain", d.adu_gain, "detector");
  }

  if (auto n = root["sweep"]) {
    check_keys(n, "sweep", {"start", "stop", "step", "delays"});
    read(n, "start", cfg.sweep.start, "sweep");
    read(n, "stop", cfg.sweep.stop, "sweep");
    read(n, "step", cfg.sweep.step, "sweep");
    read(n, "delays", cfg.sweep.delays, "sweep");
  }

  if (auto n = root["analysis"]) {
    check_keys(n, "analysis", {"window", "threshold", "persistence", "background_fraction", "region_rows",
                               "region_cols", "region_gap", "regions"});
    auto& a = cfg.analysis;
    read(n, "window", a.window, "analysis");
    read(n, "threshold", a.threshold, "analysis");
    read(n, "persistence", a.persistence, "analysis");
    read(n, "background_fraction", a.background_fraction, "analysis");
    read(n, "region_rows", a.region_rows, "analysis");
    read(n, "region_cols", a.region_cols, "analysis");
    read(n, "region_gap", a.region_gap, "analysis");
    if (auto r = n["regions"]) {
      check_keys(r, "analysis.regions", {"max_upper", "max_lower", "min"});
      if (!r["max_upper"] || !r["max_lower"] || !r["min"])
        config_error("analysis.regions needs max_upper, max_lower and min");
      RegionSpec spec;
      spec.max_regions[0] = read_rect(r["max_upper"], "max_upper");
      spec.max_regions[1] = read_rect(r["max_lower"], "max_lower");
      spec.min_region = read_rect(r["min"], "min");
      a.regions = spec;
    }
  }

  if (auto n = root["ensemble"]) {
    check_keys(n, "ensemble", {"n_seeds", "base_seed", "threads"});
    read(n, "n_seeds", cfg.ensemble.n_seeds, "ensemble");
    read(n, "base_seed", cfg.ensemble.base_seed, "ensemble");
    read(n, "threads", cfg.ensemble.threads, "ensemble");
  }

  if (auto n = root["calibration"]) {
    check_keys(n, "calibration", {"target_group_index", "carrier_gain", "detuning_ratio", "length", "spacing_cycles"});
    auto& c = cfg.calibration;
    read(n, "target_group_index", c.target.group_index, "calibration");
    read(n, "carrier_gain", c.target.carrier_gain, "calibration");
    read(n, "detuning_ratio", c.target.detuning_ratio, "calibration");
    read(n, "length", c.target.length, "calibration");
    read(n, "spacing_cycles", c.spacing_cycles, "calibration");
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

RegionSpec ExperimentConfig::regions() const {
  if (analysis.regions) return *analysis.regions;
  return RegionSpec::around_stripe(scene, analysis.region_rows, analysis.region_cols, analysis.region_gap);
}

void ExperimentConfig::validate() const {
  try {
    const auto& p = pulse;
    if (!(p.fwhm > 0)) config_error("pulse.fwhm must be positive");
    if (!(p.photons_total >= 0)) config_error("pulse.photons_total must be >= 0");
    if (!(p.dt > 0)) config_error("pulse.dt must be positive");
    if (!(p.grid_stop > p.grid_start)) config_error("pulse.grid_stop must exceed pulse.grid_start");
    if (!(p.t_peak > p.grid_start && p.t_peak < p.grid_stop)) config_error("pulse.t_peak must lie inside the grid");
    medium.validate();
    if (!(amplifier.gain_floor > 0 && amplifier.gain_floor < 1)) config_error("amplifier.gain_floor must lie in (0, 1)");
    scene.validate();
    detector.validate();

    const auto delays = sweep.resolve();
    check_uniform_delays(delays);
    if (delays.size() >= 2 && delays[1] - delays[0] < detector.gate_width * (1 - 1e-9))
      config_error("sweep step must be >= detector.gate_width");
    if (delays.front() < p.grid_start || delays.back() + detector.gate_width > p.grid_stop)
      config_error("sweep gates must lie inside the pulse grid");

    const auto& a = analysis;
    if (a.window < 2) config_error("analysis.window must be >= 2");
    if (a.persistence < 1) config_error("analysis.persistence must be >= 1");
    if (!(a.threshold > 0)) config_error("analysis.threshold must be positive");
    if (!(a.background_fraction > 0 && a.background_fraction < 1))
      config_error("analysis.background_fraction must lie in (0, 1)");
    if (background_frames(delays.size(), a.background_fraction) <= static_cast<std::size_t>(a.window))
      config_error("background region must extend past the running window");
    regions().validate(scene.grid.width_px, scene.grid.height_px);

    if (ensemble.n_seeds < 1) config_error("ensemble.n_seeds must be >= 1");
    if (ensemble.threads < 0) config_error("ensemble.threads must be >= 0");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    throw Error(ErrorCode::Config, e.what());
  }
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string s;
  auto line = [&](const std::string& l) {
    s += l;
    s += '\n';
  };
  const auto& p = cfg.pulse;
  line("pulse:");
  line("  fwhm: " + num(p.fwhm));
  line("  photons_total: " + num(p.photons_total));
  line("  t_peak: " + num(p.t_peak));
  line("  grid_start: " + num(p.grid_start));
  line("  grid_stop: " + num(p.grid_stop));
  line("  dt: " + num(p.dt));

  const auto& m = cfg.medium;
  line("medium:");
  line(std::string("  mode: ") + (m.mode == MediumMode::Empirical ? "empirical" : "physical"));
  line("  length: " + num(m.length));
  line("  advancement: " + num(m.advancement));
  line("  compression: " + num(m.compression));
  line("  gain_total: " + num(m.gain_total));
  if (m.lines.empty()) {
    line("  lines: []");
  } else {
    line("  lines:");
    for (const auto& l : m.lines)
      line(fmt::format("    - {{center_detuning: {}, half_width: {}, strength: {}}}", l.center_detuning, l.half_width,
                       l.strength));
  }

  line("amplifier:");
  line(std::string("  variance_input_term: ") +
       (cfg.amplifier.reading == VarianceReading::MeanPhotonNumber ? "mean" : "zero"));
  line("  gain_floor: " + num(cfg.amplifier.gain_floor));

  const auto& sc = cfg.scene;
  line("scene:");
  line(fmt::format("  width_px: {}", sc.grid.width_px));
  line(fmt::format("  height_px: {}", sc.grid.height_px));
  line("  pixel_pitch: " + num(sc.grid.pixel_pitch));
  line("  beam_waist: " + num(sc.beam_waist));
  line("  beam_center_x: " + num(sc.beam_center_x));
  line("  beam_center_y: " + num(sc.beam_center_y));
  line("  stripe:");
  line("    center_row: " + num(sc.stripe.center_row));
  line("    width: " + num(sc.stripe.width));
  line("    contrast: " + num(sc.stripe.contrast));
  line(std::string("    edge_smoothing: ") + (sc.stripe.edge_smoothing ? "true" : "false"));

  const auto& d = cfg.detector;
  line("detector:");
  line("  efficiency: " + num(d.efficiency));
  line("  dark_mean: " + num(d.dark_mean));
  line("  dark_std: " + num(d.dark_std));
  line("  gate_width: " + num(d.gate_width));
  line("  threshold_D: " + num(d.threshold_D));
  line("  adu_gain: " + num(d.adu_gain));

  line("sweep:");
  line("  start: " + num(cfg.sweep.start));
  line("  stop: " + num(cfg.sweep.stop));
  line("  step: " + num(cfg.sweep.step));
  if (cfg.sweep.delays.empty()) {
    line("  delays: []");
  } else {
    std::string list;
    for (double v : cfg.sweep.delays) list += (list.empty() ? "" : ", ") + num(v);
    line("  delays: [" + list + "]");
  }

  const auto& a = cfg.analysis;
  line("analysis:");
  line(fmt::format("  window: {}", a.window));
  line("  threshold: " + num(a.threshold));
  line(fmt::format("  persistence: {}", a.persistence));
  line("  background_fraction: " + num(a.background_fraction));
  line(fmt::format("  region_rows: {}", a.region_rows));
  line(fmt::format("  region_cols: {}", a.region_cols));
  line(fmt::format("  region_gap: {}", a.region_gap));
  if (a.regions) {
    line("  regions:");
    line("    max_upper: " + rect_text(a.regions->max_regions[0]));
    line("    max_lower: " + rect_text(a.regions->max_regions[1]));
    line("    min: " + rect_text(a.regions->min_region));
  }

  line("ensemble:");
  line(fmt::format("  n_seeds: {}", cfg.ensemble.n_seeds));
  line(fmt::format("  base_seed: {}", cfg.ensemble.base_seed));

  const auto& c = cfg.calibration;
  line("calibration:");
  line("  target_group_index: " + num(c.target.group_index));
  line("  carrier_gain: " + num(c.target.carrier_gain));
  line("  detuning_ratio: " + num(c.target.detuning_ratio));
  line("  length: " + num(c.target.length));
  line("  spacing_cycles: " + num(c.spacing_cycles));
  return s;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : to_config_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace fastlight
