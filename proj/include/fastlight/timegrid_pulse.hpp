#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "fastlight/error.hpp"

namespace fastlight {

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using ArrayXc = Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1>;

/// Uniform sampling of the time axis: t_i = t_start + i * dt, i in [0, n).
template <typename Scalar>
class TimeGrid {
 public:
  TimeGrid(Scalar t_start, Scalar dt, Eigen::Index n_samples)
      : t_start_(t_start), dt_(dt), n_(n_samples) {
    if (!(dt > Scalar(0)) || !std::isfinite(dt))
      throw Error(ErrorCode::InvalidGrid, "dt must be positive and finite");
    if (n_samples < 16 || n_samples % 2 != 0)
      throw Error(ErrorCode::InvalidGrid, "sample count must be even and >= 16");
  }

  /// Grid covering [t_start, t_stop] with the sample count rounded up to even.
  static TimeGrid spanning(Scalar t_start, Scalar t_stop, Scalar dt) {
    auto n = static_cast<Eigen::Index>(std::ceil((t_stop - t_start) / dt - Scalar(1e-9))) + 1;
    if (n % 2 != 0) ++n;
    return TimeGrid(t_start, dt, std::max<Eigen::Index>(n, 16));
  }

  Scalar t_start() const { return t_start_; }
  Scalar dt() const { return dt_; }
  Eigen::Index size() const { return n_; }
  Scalar t_end() const { return t_start_ + dt_ * Scalar(n_ - 1); }
  Scalar span() const { return dt_ * Scalar(n_ - 1); }
  Scalar time(Eigen::Index i) const { return t_start_ + dt_ * Scalar(i); }

  ArrayX<Scalar> times() const {
    return ArrayX<Scalar>::LinSpaced(n_, t_start_, t_end());
  }

  /// Frequency resolution of the matching DFT.
  Scalar df() const { return Scalar(1) / (Scalar(n_) * dt_); }

  /// DFT-ordered frequency of bin k: non-negative first, then negative.
  Scalar frequency(Eigen::Index k) const {
    const Eigen::Index signed_k = k < n_ / 2 ? k : k - n_;
    return Scalar(signed_k) * df();
  }

  ArrayX<Scalar> frequencies() const {
    ArrayX<Scalar> f(n_);
    for (Eigen::Index k = 0; k < n_; ++k) f(k) = frequency(k);
    return f;
  }

  bool contains(Scalar t) const {
    const Scalar slack = dt_ * Scalar(1e-9);
    return t >= t_start_ - slack && t <= t_end() + slack;
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.t_start_ == b.t_start_ && a.dt_ == b.dt_ && a.n_ == b.n_;
  }

 private:
  Scalar t_start_;
  Scalar dt_;
  Eigen::Index n_;
};

/// Trapezoid rule on uniformly spaced samples.
template <typename Derived>
typename Derived::Scalar trapezoid(const Eigen::ArrayBase<Derived>& y, typename Derived::Scalar dt) {
  const auto n = y.size();
  if (n < 2) return typename Derived::Scalar(0);
  return dt * (y.sum() - (y(0) + y(n - 1)) / 2);
}

/// Complex field envelope on a time grid. |envelope|^2 is the photon flux
/// (photons per second), so the intensity integrates to photons_total.
template <typename Scalar>
class SampledPulse {
 public:
  using Complex = std::complex<Scalar>;

  SampledPulse(TimeGrid<Scalar> grid, ArrayXc<Scalar> envelope)
      : grid_(grid), envelope_(std::move(envelope)) {
    if (envelope_.size() != grid_.size())
      throw Error(ErrorCode::SizeMismatch, "envelope length does not match grid");
    photons_total_ = trapezoid(intensity(), grid_.dt());
  }

  const TimeGrid<Scalar>& grid() const { return grid_; }
  const ArrayXc<Scalar>& envelope() const { return envelope_; }
  Scalar photons_total() const { return photons_total_; }
  ArrayX<Scalar> intensity() const { return envelope_.abs2(); }

 private:
  TimeGrid<Scalar> grid_;
  ArrayXc<Scalar> envelope_;
  Scalar photons_total_{};
};

/// Continuous-transform approximation of a pulse: components are in
/// DFT order and scaled so that sum |X|^2 df equals dt sum |x|^2.
template <typename Scalar>
struct Spectrum {
  Scalar df{};
  ArrayXc<Scalar> components;
  Scalar photons_total{};

  Scalar energy() const { return components.abs2().sum() * df; }
};

namespace detail {

template <typename Scalar>
Scalar fwhm_to_sigma(Scalar fwhm) {
  return fwhm / (Scalar(2) * std::sqrt(Scalar(2) * std::numbers::ln2_v<Scalar>));
}

// Unnormalised forward DFT, sum_n x_n exp(-2 pi i k n / N).
template <typename Scalar>
std::vector<std::complex<Scalar>> dft(const ArrayXc<Scalar>& x) {
  Eigen::FFT<Scalar> fft;
  std::vector<std::complex<Scalar>> in(x.data(), x.data() + x.size());
  std::vector<std::complex<Scalar>> out;
  fft.fwd(out, in);
  return out;
}

}  // namespace detail

/// Gaussian intensity profile I(t) = I0 exp(-4 ln2 (t - t_peak)^2 / fwhm^2),
/// normalised so the trapezoid integral equals photons_total.
template <typename Scalar>
SampledPulse<Scalar> make_gaussian_pulse(const TimeGrid<Scalar>& grid, Scalar t_peak, Scalar fwhm,
                                         Scalar photons_total) {
  if (!(fwhm > Scalar(4) * grid.dt()))
    throw Error(ErrorCode::GridTooCoarse, "FWHM must exceed four grid steps");
  if (!(photons_total >= Scalar(0)) || !std::isfinite(photons_total))
    throw Error(ErrorCode::InvalidSpec, "photon number must be finite and non-negative");
  if (grid.span() < Scalar(6) * fwhm)
    throw Error(ErrorCode::PulseExceedsGrid, "grid must span at least 6 FWHM");
  if (!grid.contains(t_peak))
    throw Error(ErrorCode::PulseExceedsGrid, "pulse peak lies outside the grid");

  const Scalar c = Scalar(4) * std::numbers::ln2_v<Scalar> / (fwhm * fwhm);
  const Scalar lead = t_peak - grid.t_start();
  const Scalar tail = grid.t_end() - t_peak;
  // Edge intensity must be below 1e-6 of the peak.
  if (std::exp(-c * lead * lead) >= Scalar(1e-6) || std::exp(-c * tail * tail) >= Scalar(1e-6))
    throw Error(ErrorCode::PulseExceedsGrid, "pulse wings reach the grid edges");

  const ArrayX<Scalar> u = grid.times() - t_peak;
  ArrayXc<Scalar> envelope = (-(c / Scalar(2)) * u.square()).exp().template cast<std::complex<Scalar>>();
  if (photons_total == Scalar(0)) return SampledPulse<Scalar>(grid, ArrayXc<Scalar>::Zero(grid.size()));

  const Scalar raw = trapezoid(envelope.abs2().eval(), grid.dt());
  envelope *= std::sqrt(photons_total / raw);
  return SampledPulse<Scalar>(grid, std::move(envelope));
}

template <typename Scalar>
Spectrum<Scalar> to_spectrum(const SampledPulse<Scalar>& pulse) {
  const auto& grid = pulse.grid();
  const Eigen::Index n = grid.size();
  const auto raw = detail::dft(pulse.envelope());
  Spectrum<Scalar> spec;
  spec.df = grid.df();
  spec.photons_total = pulse.photons_total();
  spec.components.resize(n);
  // X(f_k) = dt sum_n x_n exp(+2 pi i f_k t_n): bin k reads the forward DFT at -k.
  for (Eigen::Index k = 0; k < n; ++k) spec.components(k) = grid.dt() * raw[(n - k) % n];
  return spec;
}

template <typename Scalar>
SampledPulse<Scalar> from_spectrum(const Spectrum<Scalar>& spec, const TimeGrid<Scalar>& grid) {
  if (spec.components.size() != grid.size())
    throw Error(ErrorCode::SizeMismatch, "spectrum bin count does not match grid");
  const auto raw = detail::dft(spec.components);
  ArrayXc<Scalar> envelope(grid.size());
  const Scalar df = grid.df();
  for (Eigen::Index i = 0; i < grid.size(); ++i) envelope(i) = df * raw[i];
  return SampledPulse<Scalar>(grid, std::move(envelope));
}

/// Intensity maximum with 3-point parabolic refinement. Exact ties resolve
/// to the earliest sample.
template <typename Scalar>
Scalar peak_time(const SampledPulse<Scalar>& pulse) {
  const ArrayX<Scalar> y = pulse.intensity();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < y.size(); ++i)
    if (y(i) > y(best)) best = i;
  if (!(y(best) > Scalar(0))) throw Error(ErrorCode::ZeroPulse, "pulse has no intensity");

  Scalar offset = 0;
  if (best > 0 && best + 1 < y.size()) {
    const Scalar y0 = y(best - 1), y1 = y(best), y2 = y(best + 1);
    const Scalar curvature = y0 - Scalar(2) * y1 + y2;
    if (curvature < Scalar(0)) offset = Scalar(0.5) * (y0 - y2) / curvature;
  }
  return pulse.grid().time(best) + offset * pulse.grid().dt();
}

/// Full width at half maximum of the intensity, from linearly interpolated
/// half-maximum crossings on either side of the highest sample.
template <typename Scalar>
Scalar measure_fwhm(const SampledPulse<Scalar>& pulse) {
  const ArrayX<Scalar> y = pulse.intensity();
  Eigen::Index best = 0;
  y.maxCoeff(&best);
  const Scalar half = y(best) / Scalar(2);
  if (!(half > Scalar(0))) throw Error(ErrorCode::ZeroPulse, "pulse has no intensity");

  Eigen::Index lo = best;
  while (lo > 0 && y(lo - 1) >= half) --lo;
  Eigen::Index hi = best;
  while (hi + 1 < y.size() && y(hi + 1) >= half) ++hi;
  if (lo == 0 || hi + 1 == y.size())
    throw Error(ErrorCode::PulseExceedsGrid, "half-maximum crossing outside the grid");

  const auto& g = pulse.grid();
  const Scalar t_lo = g.time(lo - 1) + g.dt() * (half - y(lo - 1)) / (y(lo) - y(lo - 1));
  const Scalar t_hi = g.time(hi) + g.dt() * (y(hi) - half) / (y(hi) - y(hi + 1));
  return t_hi - t_lo;
}

/// Running trapezoid integral of uniformly spaced samples.
template <typename Scalar>
ArrayX<Scalar> cumulative_trapezoid(const ArrayX<Scalar>& y, Scalar dt) {
  ArrayX<Scalar> cum(y.size());
  if (y.size() == 0) return cum;
  cum(0) = 0;
  const Scalar half_dt = dt / Scalar(2);
  for (Eigen::Index i = 1; i < y.size(); ++i) cum(i) = cum(i - 1) + half_dt * (y(i - 1) + y(i));
  return cum;
}

/// Integral from grid start to t of the piecewise-linear interpolant of y.
template <typename Scalar>
Scalar interpolate_cumulative(const TimeGrid<Scalar>& g, const ArrayX<Scalar>& y, const ArrayX<Scalar>& cumulative,
                              Scalar t) {
  if (!g.contains(t)) throw Error(ErrorCode::OutsideGrid, "integration limit outside the grid");
  const Scalar pos = std::clamp((t - g.t_start()) / g.dt(), Scalar(0), Scalar(g.size() - 1));
  const auto i = static_cast<Eigen::Index>(std::floor(pos));
  if (i >= g.size() - 1) return cumulative(g.size() - 1);
  const Scalar s = pos - Scalar(i);
  const Scalar yt = y(i) + s * (y(i + 1) - y(i));
  return cumulative(i) + s * g.dt() * (y(i) + yt) / Scalar(2);
}

/// Running trapezoid integral of the intensity, one entry per sample.
template <typename Scalar>
ArrayX<Scalar> cumulative_signal(const SampledPulse<Scalar>& pulse) {
  return cumulative_trapezoid(pulse.intensity(), pulse.grid().dt());
}

/// Photons delivered between grid start and t, treating I(t) as piecewise
/// linear between samples. `cumulative` comes from cumulative_signal().
template <typename Scalar>
Scalar integrated_signal(const SampledPulse<Scalar>& pulse, const ArrayX<Scalar>& cumulative, Scalar t) {
  return interpolate_cumulative(pulse.grid(), pulse.intensity(), cumulative, t);
}

template <typename Scalar>
Scalar integrated_signal(const SampledPulse<Scalar>& pulse, Scalar t) {
  return integrated_signal(pulse, cumulative_signal(pulse), t);
}

}  // namespace fastlight
