#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fastlight/amplifier_noise.hpp"
#include "fastlight/analysis_snr.hpp"
#include "fastlight/detector_iccd.hpp"
#include "fastlight/dispersion_medium.hpp"
#include "fastlight/scene_spatial.hpp"
#include "fastlight/timegrid_pulse.hpp"

namespace fastlight {

struct PulseConfig {
  double fwhm = 190e-9;
  double photons_total = 3.8e6;
  double t_peak = 600e-9;
  double grid_start = -600e-9;
  double grid_stop = 1800e-9;
  double dt = 0.5e-9;
};

struct AmplifierConfig {
  VarianceReading reading = VarianceReading::MeanPhotonNumber;
  double gain_floor = 1e-6;  // relative input intensity below which G is not defined
};

struct SweepConfig {
  double start = 0;
  double stop = 1000e-9;
  double step = 2.44e-9;
  std::vector<double> delays;  // overrides start/stop/step when non-empty

  std::vector<double> resolve() const { return delays.empty() ? uniform_delays(start, stop, step) : delays; }
};

struct AnalysisConfig {
  std::optional<RegionSpec> regions;  // derived from the scene when absent
  int region_rows = 3;
  int region_cols = 90;
  int region_gap = 4;
  int window = 10;
  double threshold = 1;
  int persistence = 3;
  double background_fraction = 0.25;
};

struct EnsembleConfig {
  int n_seeds = 100;
  std::uint64_t base_seed = 1;
  int threads = 0;  // 0: hardware concurrency; not part of the canonical text
};

struct CalibrationConfig {
  DoubletTarget target;
  double spacing_cycles = 10;
};

struct ExperimentConfig {
  PulseConfig pulse;
  MediumSpec medium = MediumSpec::empirical(90e-9, 0.8, 1.0);
  AmplifierConfig amplifier;
  SceneSpec scene;
  DetectorSpec detector;
  SweepConfig sweep;
  AnalysisConfig analysis;
  EnsembleConfig ensemble;
  CalibrationConfig calibration;

  /// Throws Error(Config) naming the first inconsistency.
  void validate() const;
  RegionSpec regions() const;
  DetectionCriteria criteria() const {
    return {analysis.threshold, analysis.persistence, analysis.background_fraction};
  }
};

/// Parses the nested key-value config format (YAML subset). Unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Canonical text form: every result-affecting field, fixed order, shortest
/// round-trip numbers.
std::string to_config_text(const ExperimentConfig& cfg);
/// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

enum class Channel : std::uint8_t { Reference = 0, Fast = 1 };
std::string channel_name(Channel ch);

/// Deterministic part of a channel, shared by all seeds.
struct ChannelModel {
  SampledPulse<double> output;
  GainTrace<double> gain;
  SweepPlan plan;
  std::vector<double> arrival_expected;  // noiseless detected signal per gate, whole frame
};

/// Everything derived from a config before any random draw.
struct Experiment {
  ExperimentConfig cfg;
  std::string hash;
  SampledPulse<double> input;
  ChannelModel reference;
  ChannelModel fast;
  RegionSpec regions;
  double onset = 0;  // time the reference intensity first reaches 1e-3 of its peak
  std::vector<std::string> warnings;


  const ChannelModel& channel(Channel ch) const { return ch == Channel::Reference ? reference : fast; }
};

/// Warns when the brightest gate puts fewer than this many photons into a
/// flank region, where Gaussian count sampling stops being a good model.
inline constexpr double kGaussianSamplingMinPhotons = 1e3;

Experiment prepare(const ExperimentConfig& cfg);

struct ChannelRun {
  FrameStack stack;
  VisibilityTrace trace;
};

/// One seeded gate sweep and its analysis. Without `full_frame` only the rows
/// covering the analysis regions are read out; the values are identical.
ChannelRun run_channel(const Experiment& exp, Channel ch, std::uint64_t seed, bool full_frame = false);
ChannelRun run_channel(const ExperimentConfig& cfg, Channel ch, std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  VisibilityTrace reference;
  VisibilityTrace fast;
  DetectionReport report;
};

SeedResult run_seed(const Experiment& exp, std::uint64_t seed);

struct Stats {
  int count = 0;
  double mean = 0;
  double std = 0;  // sample standard deviation
  double standard_error() const;
};
Stats summarize(const std::vector<double>& v);

/// Per-frame ensemble means of one channel. Averages skip frames where the
/// quantity is undefined for a seed; `valid_count` counts Valid frames.
struct MeanTrace {
  std::vector<double> delay;
  std::vector<double> visibility;
  std::vector<double> spread;
  std::vector<double> snr;
  std::vector<double> cumulative;
  std::vector<int> valid_count;
};

struct EnsembleResult {
  std::string hash;
  std::vector<SeedResult> seeds;  // ordered by seed
  MeanTrace reference;
  MeanTrace fast;
  std::vector<double> arrival_reference;
  std::vector<double> arrival_fast;
  double onset = 0;
  Stats t_reference;  // detection times relative to onset
  Stats t_fast;
  Stats advancement;  // over seeds where both channels detect
  std::optional<double> relative_advancement;
  std::optional<TimeWindow> window;  // on the ensemble-mean cumulative curves
  double pulse_fwhm = 0;
};

using ProgressFn = std::function<void(int done, int total)>;

EnsembleResult run_ensemble(const ExperimentConfig& cfg, ProgressFn progress = {});
EnsembleResult run_ensemble(const Experiment& exp, ProgressFn progress = {});

struct SweepRow {
  double value = 0;
  Stats advancement;
  int detected_pairs = 0;
  std::optional<TimeWindow> window;
};

/// parameter: efficiency | gain | advancement. Returns one ensemble row per value.
std::vector<SweepRow> sweep_parameter(const ExperimentConfig& cfg, const std::string& parameter,
                                      const std::vector<double>& values, ProgressFn progress = {});
ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& parameter, double value);

}  // namespace fastlight
