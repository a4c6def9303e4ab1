#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fastlight/amplifier_noise.hpp"
#include "fastlight/dispersion_medium.hpp"
#include "fastlight/error.hpp"
#include "fastlight/scene_spatial.hpp"
#include "fastlight/timegrid_pulse.hpp"

namespace fastlight {

struct DetectorSpec {
  double efficiency = 0.3;
  double dark_mean = 0;  // counts per pixel per gate
  double dark_std = 0;
  double gate_width = 2.44e-9;
  double threshold_D = 0;
  double adu_gain = 1;

  void validate() const {
    if (!(efficiency > 0 && efficiency <= 1)) throw Error(ErrorCode::InvalidSpec, "efficiency must lie in (0, 1]");
    if (!(gate_width > 0)) throw Error(ErrorCode::InvalidSpec, "gate width must be positive");
    if (!(dark_std >= 0)) throw Error(ErrorCode::InvalidSpec, "dark noise std must be >= 0");
    if (!(threshold_D >= 0)) throw Error(ErrorCode::InvalidSpec, "threshold D must be >= 0");
    if (!(adu_gain > 0)) throw Error(ErrorCode::InvalidSpec, "adu gain must be positive");
  }
};

using CountImage = Image<std::int64_t>;

/// One gated exposure. A frame may hold only some sensor rows; `sensor_rows`
/// lists them in storage order and is empty for a full frame.
struct ImageFrame {
  CountImage counts;
  double gate_delay = 0;
  std::vector<int> sensor_rows;

  int rows() const { return static_cast<int>(counts.rows()); }
  int cols() const { return static_cast<int>(counts.cols()); }

  /// Storage row holding sensor row `y`, or -1 when it was not read out.
  int local_row(int y) const {
    if (sensor_rows.empty()) return y >= 0 && y < rows() ? y : -1;
    const auto it = std::lower_bound(sensor_rows.begin(), sensor_rows.end(), y);
    return it != sensor_rows.end() && *it == y ? static_cast<int>(it - sensor_rows.begin()) : -1;
  }
};

/// Sensor rows to read out, strictly increasing. Empty selects every row.
using RowSelection = std::vector<int>;

struct FrameStack {
  std::vector<ImageFrame> frames;
  int width_px = 0;
  int height_px = 0;
  double gate_width = 0;
  std::uint64_t seed = 0;
  DetectorSpec detector;

  std::size_t size() const { return frames.size(); }

  std::vector<double> delays() const {
    std::vector<double> d;
    d.reserve(frames.size());
    for (const auto& f : frames) d.push_back(f.gate_delay);
    return d;
  }

  /// Uniform gate step; the gate width for single-frame stacks.
  double step() const { return frames.size() < 2 ? gate_width : frames[1].gate_delay - frames[0].gate_delay; }
};

/// Throws unless delays are strictly increasing with a uniform step.
inline void check_uniform_delays(const std::vector<double>& delays) {
  if (delays.size() < 2) return;
  const double step = delays[1] - delays[0];
  if (!(step > 0)) throw Error(ErrorCode::NonUniformDelays, "gate delays must be strictly increasing");
  const double tol = 1e-6 * step;
  for (std::size_t i = 1; i < delays.size(); ++i) {
    const double expect = delays[0] + step * static_cast<double>(i);
    if (!(delays[i] > delays[i - 1]) || std::abs(delays[i] - expect) > tol)
      throw Error(ErrorCode::NonUniformDelays, "gate delays must share a uniform step");
  }
}

inline std::vector<double> uniform_delays(double start, double stop, double step) {
  if (!(step > 0) || stop < start) throw Error(ErrorCode::NonUniformDelays, "sweep needs step > 0 and stop >= start");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = start + step * static_cast<double>(i);
  return d;
}

/// Identifies the independent random stream of one sensor row. The engine
/// seed is a splitmix64 hash of (seed, channel, frame, row), so any subset of
/// rows or frames can be sampled in any order with identical results.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t channel = 0;
  std::uint64_t frame = 0;

  std::mt19937_64 row_engine(int row) const {
    auto mix = [](std::uint64_t x) {
      x += 0x9e3779b97f4a7c15ull;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
      return x ^ (x >> 31);
    };
    std::uint64_t h = mix(seed);
    h = mix(h ^ channel);
    h = mix(h ^ frame);
    h = mix(h ^ static_cast<std::uint64_t>(row));
    return std::mt19937_64(h);
  }
};

/// Samples one gated exposure of `photons` expected photons spread over the
/// sensor by `weights`. Every pixel sees the shot-limited expectation, the
/// medium's gate-averaged gain, efficiency thinning, one Gaussian draw and
/// additive dark noise; the result is scaled by adu_gain, clamped and rounded.
inline ImageFrame expose(const Image<double>& weights, double photons, double gate_delay, double gate_gain,
                         const DetectorSpec& det, const StreamKey& key,
                         VarianceReading reading = VarianceReading::MeanPhotonNumber, const RowSelection& rows = {}) {
  const int height = static_cast<int>(weights.rows());
  const int width = static_cast<int>(weights.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i] < 0 || rows[i] >= height || (i > 0 && rows[i] <= rows[i - 1]))
      throw Error(ErrorCode::OutOfBounds, "row selection must be increasing sensor rows");
  const int n_rows = rows.empty() ? height : static_cast<int>(rows.size());

  ImageFrame frame{CountImage(n_rows, width), gate_delay, rows};
  for (int r = 0; r < n_rows; ++r) {
    const int y = rows.empty() ? r : rows[static_cast<std::size_t>(r)];
    auto rng = key.row_engine(y);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int x = 0; x < width; ++x) {
      const auto in = PhotonMoments<double>::shot_limited(weights(y, x) * photons);
      const auto detected = thin_moments(transmit_moments(in, gate_gain, reading), det.efficiency);
      const double photo = static_cast<double>(sample_counts(detected, rng, unit));
      const double noise = det.dark_mean + det.dark_std * unit(rng);
      frame.counts(r, x) = std::llround(std::max(0.0, (photo + noise) * det.adu_gain));
    }
  }
  return frame;
}

inline ImageFrame expose(const ExpectedFrame<double>& expected, double gate_gain, const DetectorSpec& det,
                         const StreamKey& key, VarianceReading reading = VarianceReading::MeanPhotonNumber,
                         const RowSelection& rows = {}) {
  return expose(expected.photons, 1.0, expected.gate_delay, gate_gain, det, key, reading, rows);
}

/// Precomputed per-gate quantities shared by every seed of a sweep.
struct SweepPlan {
  Image<double> weights;
  std::vector<double> delays;
  std::vector<double> gate_photons;  // expected photons at the medium input
  std::vector<double> gate_gain;     // input-weighted mean of G(t) over the gate
  DetectorSpec detector;
  VarianceReading reading = VarianceReading::MeanPhotonNumber;

  ExpectedFrame<double> expected(std::size_t i) const {
    return {weights * gate_photons[i], delays[i], detector.gate_width};
  }
};

/// Input-weighted gate gain: integral of G I_in over the gate divided by the
/// integral of I_in. Samples flagged invalid count as transparent.
inline std::vector<double> gate_gains(const SampledPulse<double>& input, const GainTrace<double>& gain,
                                      const std::vector<double>& delays, double gate_width) {
  const auto& g = input.grid();
  if (gain.gain.size() != g.size() || gain.valid.size() != g.size())
    throw Error(ErrorCode::LengthMismatch, "gain trace does not match the pulse grid");
  const ArrayX<double> eff = gain.valid.select(gain.gain, ArrayX<double>::Ones(g.size()));
  const ArrayX<double> weighted = eff * input.intensity();
  const ArrayX<double> cum_w = cumulative_trapezoid(weighted, g.dt());
  const ArrayX<double> cum_i = cumulative_signal(input);
  std::vector<double> out;
  out.reserve(delays.size());
  for (double d : delays) {
    if (!g.contains(d) || !g.contains(d + gate_width))
      throw Error(ErrorCode::GateOutsideGrid, "gate window extends beyond the pulse grid");
    const double num = interpolate_cumulative(g, weighted, cum_w, d + gate_width) -
                       interpolate_cumulative(g, weighted, cum_w, d);
    const double den = integrated_signal(input, cum_i, d + gate_width) - integrated_signal(input, cum_i, d);
    out.push_back(den > 0 ? num / den : 1.0);
  }
  return out;
}

/// `input` is the pulse entering the medium; `output` is what reaches the
/// camera. Gate photon numbers come from the input and the medium acts
/// through the gate gain.
inline SweepPlan make_sweep_plan(const SceneSpec& scene, const SampledPulse<double>& input,
                                 const GainTrace<double>& gain, const DetectorSpec& det,
                                 const std::vector<double>& delays,
                                 VarianceReading reading = VarianceReading::MeanPhotonNumber) {
  det.validate();
  check_uniform_delays(delays);
  SweepPlan plan;
  plan.weights = beam_pattern(scene);
  plan.delays = delays;
  plan.detector = det;
  plan.reading = reading;
  const ArrayX<double> cum = cumulative_signal(input);
  plan.gate_photons.reserve(delays.size());
  for (double d : delays) plan.gate_photons.push_back(gate_photons(input, cum, d, det.gate_width));
  plan.gate_gain = gate_gains(input, gain, delays, det.gate_width);
  return plan;
}

inline FrameStack gate_sweep(const SweepPlan& plan, std::uint64_t seed, std::uint64_t channel = 0,
                             const RowSelection& rows = {}) {
  FrameStack stack;
  stack.width_px = static_cast<int>(plan.weights.cols());
  stack.height_px = static_cast<int>(plan.weights.rows());
  stack.gate_width = plan.detector.gate_width;
  stack.seed = seed;
  stack.detector = plan.detector;
  stack.frames.reserve(plan.delays.size());
  for (std::size_t i = 0; i < plan.delays.size(); ++i)
    stack.frames.push_back(expose(plan.weights, plan.gate_photons[i], plan.delays[i], plan.gate_gain[i],
                                  plan.detector, StreamKey{seed, channel, i}, plan.reading, rows));
  return stack;
}

/// Sweep with a gain sampled on the pulse grid (all samples valid).
inline FrameStack gate_sweep(const SceneSpec& scene, const SampledPulse<double>& pulse, const ArrayX<double>& gain,
                             const DetectorSpec& det, const std::vector<double>& delays, std::uint64_t seed) {
  GainTrace<double> trace{gain, Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(gain.size(), true)};
  return gate_sweep(make_sweep_plan(scene, pulse, trace, det, delays), seed);
}

/// Container I/O. Layout is documented in README.md.
void write_frame_stack(const FrameStack& stack, const std::string& path, const std::string& config_hash = "");
FrameStack read_frame_stack(const std::string& path);

}  // namespace fastlight
