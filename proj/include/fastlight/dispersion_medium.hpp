#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "fastlight/error.hpp"
#include "fastlight/timegrid_pulse.hpp"

namespace fastlight {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Lorentzian gain line, frequencies in Hz relative to the pulse carrier.
struct GainLine {
  double center_detuning = 0;
  double half_width = 1;
  double strength = 0;
};

enum class MediumMode { Physical, Empirical };

/// Fast-light medium. Physical mode: product of Lorentzian gain lines over a
/// cell of length `length`. Empirical mode: the output pulse is the input
/// Gaussian advanced by `advancement`, its FWHM scaled by `compression` and
/// its photon number by `gain_total`.
struct MediumSpec {
  MediumMode mode = MediumMode::Physical;
  std::vector<GainLine> lines;
  double length = 0.017;
  double advancement = 0;
  double compression = 1;
  double gain_total = 1;

  static MediumSpec identity(double length = 0.017) {
    MediumSpec m;
    m.length = length;
    return m;
  }

  static MediumSpec physical(std::vector<GainLine> lines, double length) {
    MediumSpec m;
    m.lines = std::move(lines);
    m.length = length;
    return m;
  }

  static MediumSpec empirical(double advancement, double compression, double gain_total = 1) {
    MediumSpec m;
    m.mode = MediumMode::Empirical;
    m.advancement = advancement;
    m.compression = compression;
    m.gain_total = gain_total;
    return m;
  }

  bool is_identity() const { return mode == MediumMode::Physical && lines.empty(); }

  /// An empty line list is accepted as the vacuum reference.
  void validate() const {
    if (mode == MediumMode::Physical) {
      if (!(length > 0)) throw Error(ErrorCode::InvalidSpec, "medium length must be positive");
      for (const auto& line : lines) {
        if (!(line.half_width > 0) || !std::isfinite(line.half_width))
          throw Error(ErrorCode::InvalidSpec, "gain line half width must be positive");
        if (!(line.strength >= 0) || !std::isfinite(line.strength))
          throw Error(ErrorCode::InvalidSpec, "gain line strength must be finite and non-negative");
        if (!std::isfinite(line.center_detuning))
          throw Error(ErrorCode::InvalidSpec, "gain line detuning must be finite");
      }
    } else {
      if (!std::isfinite(advancement)) throw Error(ErrorCode::InvalidSpec, "advancement must be finite");
      if (!(compression > 0 && compression <= 1))
        throw Error(ErrorCode::InvalidSpec, "compression must lie in (0, 1]");
      if (!(gain_total > 0) || !std::isfinite(gain_total))
        throw Error(ErrorCode::InvalidSpec, "total gain must be positive");
    }
  }
};

struct DispersionReport {
  double group_index = 1;
  double group_velocity = kSpeedOfLight;
  double delta_t = 0;
  double gain_at_carrier = 1;
  double max_gain_in_band = 1;
  double peak_gain = 1;
};

namespace detail {

inline void require_physical(const MediumSpec& medium) {
  if (medium.mode != MediumMode::Physical)
    throw Error(ErrorCode::EmpiricalModeMisuse, "operation needs a physical (gain-line) medium");
}

// Sum over lines of strength * i*gamma / (f - center + i*gamma); H = exp(.).
inline std::complex<double> log_transfer(const MediumSpec& medium, double f) {
  std::complex<double> acc{0, 0};
  for (const auto& line : medium.lines) {
    const std::complex<double> ig{0, line.half_width};
    acc += line.strength * ig / (f - line.center_detuning + ig);
  }
  return acc;
}

inline double spectral_phase(const MediumSpec& medium, double f) { return log_transfer(medium, f).imag(); }

}  // namespace detail

/// Frequency interval over which the line shapes are considered resolved:
/// every line centre +/- 50 half widths.
inline std::pair<double, double> resolved_band(const MediumSpec& medium) {
  detail::require_physical(medium);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& line : medium.lines) {
    lo = std::min(lo, line.center_detuning - 50 * line.half_width);
    hi = std::max(hi, line.center_detuning + 50 * line.half_width);
  }
  return {lo, hi};
}

/// H(f) = exp[ sum strength * i*gamma / (f - center + i*gamma) ] for each offset.
template <typename Derived>
ArrayXc<double> transfer_function(const MediumSpec& medium, const Eigen::ArrayBase<Derived>& freq_offsets) {
  detail::require_physical(medium);
  ArrayXc<double> h(freq_offsets.size());
  for (Eigen::Index k = 0; k < freq_offsets.size(); ++k)
    h(k) = std::exp(detail::log_transfer(medium, static_cast<double>(freq_offsets(k))));
  return h;
}

/// Group index at `probe_offset` from a Richardson-extrapolated central
/// difference of the transfer-function phase; background index is 1.
/// `df` is the frequency resolution of the grid the result is used with.
inline double group_index(const MediumSpec& medium, double probe_offset, double df = 0) {
  detail::require_physical(medium);
  if (medium.lines.empty()) return 1.0;
  const auto [lo, hi] = resolved_band(medium);
  if (probe_offset < lo || probe_offset > hi)
    throw Error(ErrorCode::ProbeOutsideBand, "probe offset outside the resolved band of the medium");

  const double h = std::max(df, (hi - lo) / 1e4);
  auto central = [&](double step) {
    return (detail::spectral_phase(medium, probe_offset + step) -
            detail::spectral_phase(medium, probe_offset - step)) /
           (2 * step);
  };
  const double dphi_df = (4 * central(h / 2) - central(h)) / 3;
  const double delay = dphi_df / (2 * std::numbers::pi);
  return 1.0 + kSpeedOfLight * delay / medium.length;
}

/// Arrival-time change relative to vacuum, L/v_g - L/c = L (n_g - 1) / c.
inline double group_delay(double n_g, double length) { return length * (n_g - 1.0) / kSpeedOfLight; }

/// Group index, delay and gain figures at the carrier. `band_halfwidth` is
/// the half width of the pulse band over which the in-band gain maximum is
/// taken.
inline DispersionReport dispersion_report(const MediumSpec& medium, double band_halfwidth) {
  detail::require_physical(medium);
  DispersionReport r;
  r.group_index = group_index(medium, 0.0);
  r.group_velocity = kSpeedOfLight / r.group_index;
  r.delta_t = medium.length / r.group_velocity - medium.length / kSpeedOfLight;
  r.gain_at_carrier = std::norm(std::exp(detail::log_transfer(medium, 0.0)));

  auto power_gain = [&](double f) { return std::exp(2 * detail::log_transfer(medium, f).real()); };
  r.max_gain_in_band = r.gain_at_carrier;
  constexpr int kSamples = 2001;
  for (int i = 0; i < kSamples; ++i) {
    const double f = -band_halfwidth + 2 * band_halfwidth * i / (kSamples - 1);
    r.max_gain_in_band = std::max(r.max_gain_in_band, power_gain(f));
  }
  r.peak_gain = r.max_gain_in_band;
  for (const auto& line : medium.lines) r.peak_gain = std::max(r.peak_gain, power_gain(line.center_detuning));
  return r;
}

/// Sends a pulse through the medium. Physical mode multiplies the spectrum by
/// H(f); empirical mode returns the reshaped Gaussian.
template <typename Scalar>
SampledPulse<Scalar> propagate(const SampledPulse<Scalar>& pulse, const MediumSpec& medium) {
  medium.validate();
  const auto& grid = pulse.grid();

  if (medium.mode == MediumMode::Empirical) {
    const Scalar t_in = peak_time(pulse);
    const Scalar width = measure_fwhm(pulse);
    return make_gaussian_pulse(grid, t_in - Scalar(medium.advancement), width * Scalar(medium.compression),
                               pulse.photons_total() * Scalar(medium.gain_total));
  }

  Spectrum<Scalar> spec = to_spectrum(pulse);
  const Scalar df = grid.df();
  for (const auto& line : medium.lines) {
    const bool in_window = std::abs(line.center_detuning) < 0.5 / static_cast<double>(grid.dt());
    if (in_window && line.half_width < 2 * static_cast<double>(df))
      throw Error(ErrorCode::BandViolation, "gain line narrower than the spectral resolution of the grid");
  }
  // Pulse spectrum must stay away from the Nyquist edge where H is aliased.
  const Scalar nyquist = Scalar(0.5) / grid.dt();
  Scalar edge = 0;
  for (Eigen::Index k = 0; k < spec.components.size(); ++k)
    if (std::abs(grid.frequency(k)) > Scalar(0.8) * nyquist) edge += std::norm(spec.components(k));
  if (edge * df > Scalar(1e-9) * std::max(spec.energy(), std::numeric_limits<Scalar>::min()))
    throw Error(ErrorCode::BandViolation, "pulse spectrum reaches the edge of the sampled band");

  if (!medium.lines.empty()) {
    const ArrayXc<double> h = transfer_function(medium, grid.frequencies().template cast<double>());
    spec.components *= h.template cast<std::complex<Scalar>>();
  }
  return from_spectrum(spec, grid);
}

/// Pointwise G(t) = I_out / I_in. Samples where I_in is below
/// `floor_rel` times its peak are flagged invalid and hold G = 1.
template <typename Scalar>
struct GainTrace {
  ArrayX<Scalar> gain;
  Eigen::Array<bool, Eigen::Dynamic, 1> valid;
};

template <typename Scalar>
GainTrace<Scalar> gain_profile(const SampledPulse<Scalar>& input, const SampledPulse<Scalar>& output,
                               Scalar floor_rel = Scalar(1e-6)) {
  if (!(input.grid() == output.grid())) throw Error(ErrorCode::GridMismatch, "pulses live on different grids");
  const ArrayX<Scalar> in = input.intensity();
  const ArrayX<Scalar> out = output.intensity();
  const Scalar floor = floor_rel * in.maxCoeff();
  GainTrace<Scalar> g;
  g.gain = ArrayX<Scalar>::Ones(in.size());
  g.valid = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(in.size(), false);
  for (Eigen::Index i = 0; i < in.size(); ++i) {
    if (in(i) > floor && in(i) > Scalar(0)) {
      g.gain(i) = out(i) / in(i);
      g.valid(i) = true;
    }
  }
  return g;
}

/// Unit-gain reference trace (every sample valid, G = 1).
template <typename Scalar>
GainTrace<Scalar> unity_gain(Eigen::Index n) {
  return {ArrayX<Scalar>::Ones(n), Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true)};
}

struct DoubletTarget {
  double group_index = -2400;
  double carrier_gain = 1.005;  // power gain |H(0)|^2
  double length = 0.017;
  double detuning_ratio = 10;  // line detuning / half width
};

struct DoubletCalibration {
  MediumSpec medium;
  double achieved_group_index = 1;
  double achieved_carrier_gain = 1;
  int iterations = 0;
};

/// Solves for a symmetric gain doublet at +/- detuning hitting the target
/// carrier gain and group index. Strength is bisected against the carrier
/// gain (independent of the line width at fixed detuning ratio), then the
/// half width is bisected on a log scale against the numerical group index.
inline DoubletCalibration calibrate_doublet(const DoubletTarget& target) {
  if (!(target.carrier_gain > 1))
    throw Error(ErrorCode::InvalidSpec, "a pure-gain doublet needs a carrier gain above 1");
  if (!(target.detuning_ratio > 1))
    throw Error(ErrorCode::InvalidSpec, "detuning ratio must exceed 1 for anomalous dispersion at the carrier");
  if (!(target.group_index < 1))
    throw Error(ErrorCode::Numerical, "a gain doublet only produces fast light (group index below 1)");
  if (!(target.length > 0)) throw Error(ErrorCode::InvalidSpec, "medium length must be positive");

  const double r = target.detuning_ratio;
  auto doublet = [&](double strength, double half_width) {
    return MediumSpec::physical({{-r * half_width, half_width, strength}, {r * half_width, half_width, strength}},
                                target.length);
  };
  auto carrier_gain = [&](double strength) {
    return std::norm(std::exp(detail::log_transfer(doublet(strength, 1.0), 0.0)));
  };

  DoubletCalibration out;
  double s_lo = 0, s_hi = 1;
  while (carrier_gain(s_hi) < target.carrier_gain) {
    s_hi *= 2;
    if (s_hi > 1e6) throw Error(ErrorCode::Numerical, "carrier gain target unreachable");
  }
  for (int i = 0; i < 200 && (s_hi - s_lo) > 1e-15 * s_hi; ++i, ++out.iterations) {
    const double mid = 0.5 * (s_lo + s_hi);
    (carrier_gain(mid) < target.carrier_gain ? s_lo : s_hi) = mid;
  }
  const double strength = 0.5 * (s_lo + s_hi);

  // n_g - 1 scales as -1/half_width, so n_g rises monotonically with width.
  double log_lo = -6, log_hi = 12;
  auto ng_at = [&](double log_w) { return group_index(doublet(strength, std::pow(10.0, log_w)), 0.0); };
  if (ng_at(log_lo) > target.group_index || ng_at(log_hi) < target.group_index)
    throw Error(ErrorCode::Numerical, "group index target outside the searchable line-width range");
  for (int i = 0; i < 200 && (log_hi - log_lo) > 1e-13; ++i, ++out.iterations) {
    const double mid = 0.5 * (log_lo + log_hi);
    (ng_at(mid) < target.group_index ? log_lo : log_hi) = mid;
  }
  out.medium = doublet(strength, std::pow(10.0, 0.5 * (log_lo + log_hi)));
  out.achieved_group_index = group_index(out.medium, 0.0);
  out.achieved_carrier_gain = carrier_gain(strength);
  return out;
}

struct NarrowbandCheck {
  double pulse_fwhm = 0;
  double band_halfwidth = 0;  // half of the pulse's spectral intensity FWHM
  double predicted_shift = 0;
  double measured_shift = 0;
  double min_gain_in_band = 1;
  double max_gain_in_band = 1;

  double relative_error() const { return std::abs(measured_shift - predicted_shift) / std::abs(predicted_shift); }
};

/// Propagates a Gaussian pulse much longer than the inverse line spacing and
/// compares its peak shift with the group delay at the carrier. The pulse
/// FWHM is `spacing_cycles` divided by the spread of line detunings.
inline NarrowbandCheck narrowband_check(const MediumSpec& medium, double spacing_cycles = 10) {
  detail::require_physical(medium);
  if (medium.lines.empty()) throw Error(ErrorCode::InvalidSpec, "narrowband check needs at least one gain line");
  double lo = medium.lines.front().center_detuning, hi = lo;
  for (const auto& l : medium.lines) {
    lo = std::min(lo, l.center_detuning);
    hi = std::max(hi, l.center_detuning);
  }
  double spread = hi - lo;
  if (!(spread > 0)) spread = 2 * medium.lines.front().half_width;

  NarrowbandCheck c;
  c.pulse_fwhm = spacing_cycles / spread;
  const double dt = c.pulse_fwhm / 64;
  const TimeGrid<double> grid(0.0, dt, 2048);
  const double t_peak = grid.time(grid.size() / 2);
  const auto in = make_gaussian_pulse(grid, t_peak, c.pulse_fwhm, 1.0);
  const auto out = propagate(in, medium);
  c.measured_shift = peak_time(out) - peak_time(in);
  c.predicted_shift = group_delay(group_index(medium, 0.0), medium.length);

  c.band_halfwidth = std::log(2.0) / (std::numbers::pi * c.pulse_fwhm);
  c.min_gain_in_band = std::numeric_limits<double>::infinity();
  c.max_gain_in_band = 0;
  constexpr int kSamples = 401;
  for (int i = 0; i < kSamples; ++i) {
    const double f = -c.band_halfwidth + 2 * c.band_halfwidth * i / (kSamples - 1);
    const double g = std::exp(2 * detail::log_transfer(medium, f).real());
    c.min_gain_in_band = std::min(c.min_gain_in_band, g);
    c.max_gain_in_band = std::max(c.max_gain_in_band, g);
  }
  return c;
}

}  // namespace fastlight
