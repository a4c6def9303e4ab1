#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "fastlight/timegrid_pulse.hpp"
#include "oracles.hpp"

using namespace fastlight;

namespace {

constexpr double ns = 1e-9;

TimeGrid<double> standard_grid() { return TimeGrid<double>::spanning(0.0, 2000 * ns, 0.5 * ns); }

void expect_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(TimeGrid, RejectsBadShapes) {
  expect_code(ErrorCode::InvalidGrid, [] { TimeGrid<double>(0, 1, 17); });
  expect_code(ErrorCode::InvalidGrid, [] { TimeGrid<double>(0, 1, 14); });
  expect_code(ErrorCode::InvalidGrid, [] { TimeGrid<double>(0, 0, 64); });
  expect_code(ErrorCode::InvalidGrid, [] { TimeGrid<double>(0, -1, 64); });
}

TEST(TimeGrid, SpanningCoversInterval) {
  const auto g = standard_grid();
  EXPECT_EQ(g.size() % 2, 0);
  EXPECT_GE(g.t_end(), 2000 * ns - 1e-18);
  EXPECT_DOUBLE_EQ(g.df(), 1.0 / (g.size() * g.dt()));
  EXPECT_DOUBLE_EQ(g.frequency(g.size() - 1), -g.df());
}

TEST(Gaussian, BaselinePulseWidthAndNormalisation) {
  const auto p = make_gaussian_pulse(standard_grid(), 500 * ns, 190 * ns, 3.8e6);
  EXPECT_NEAR(measure_fwhm(p), 190 * ns, 0.5 * ns);
  EXPECT_NEAR(peak_time(p), 500 * ns, 0.25 * ns);
  EXPECT_NEAR(trapezoid(p.intensity(), p.grid().dt()), 3.8e6, 3.8e6 * 1e-9);
  EXPECT_DOUBLE_EQ(p.photons_total(), 3.8e6);
  const double peak = p.intensity().maxCoeff();
  EXPECT_LT(p.intensity()(0), 1e-6 * peak);
  EXPECT_LT(p.intensity()(p.grid().size() - 1), 1e-6 * peak);
}

TEST(Gaussian, ZeroPhotonsGivesZeroPulse) {
  const auto p = make_gaussian_pulse(standard_grid(), 500 * ns, 190 * ns, 0.0);
  EXPECT_EQ(p.intensity().abs().maxCoeff(), 0.0);
}

TEST(Gaussian, SymmetricAboutCentre) {
  const TimeGrid<double> g(0.0, 1 * ns, 2000);
  const double centre = g.time(1000);
  const auto p = make_gaussian_pulse(g, centre, 150 * ns, 1e5);
  for (int k = 1; k < 999; ++k)
    EXPECT_NEAR(p.intensity()(1000 - k), p.intensity()(1000 + k), 1e-12 * p.intensity().maxCoeff());
}

TEST(Gaussian, Errors) {
  const auto g = standard_grid();
  expect_code(ErrorCode::GridTooCoarse, [&] { make_gaussian_pulse(g, 500 * ns, 2 * ns, 1.0); });
  expect_code(ErrorCode::PulseExceedsGrid, [&] { make_gaussian_pulse(g, 500 * ns, 400 * ns, 1.0); });
  expect_code(ErrorCode::PulseExceedsGrid, [&] { make_gaussian_pulse(g, 100 * ns, 190 * ns, 1.0); });
}

TEST(Gaussian, FwhmWithinOneStepAcrossResolutions) {
  for (double ratio : {8.0, 16.0, 64.0, 256.0, 1024.0, 4096.0}) {
    const double dt = 1.0;
    const double fwhm = ratio * dt;
    auto n = static_cast<Eigen::Index>(std::ceil(8 * fwhm / dt));
    n += n % 2;
    const TimeGrid<double> g(0.0, dt, std::max<Eigen::Index>(n, 16));
    const auto p = make_gaussian_pulse(g, g.time(g.size() / 2) + 0.3 * dt, fwhm, 1.0);
    EXPECT_NEAR(measure_fwhm(p), fwhm, dt) << "fwhm/dt " << ratio;
  }
}

TEST(Spectrum, RoundTripAndParsevalOnRandomPulses) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> fw(20, 120), shift(-50, 50), amp(1, 1e6);
  const TimeGrid<double> g(0.0, 1.0, 1024);
  for (int i = 0; i < 100; ++i) {
    const auto p = make_gaussian_pulse(g, 512 + shift(rng), fw(rng), amp(rng));
    const auto spec = to_spectrum(p);
    const double t_energy = trapezoid(p.intensity(), g.dt());
    EXPECT_NEAR(spec.energy(), t_energy, 1e-9 * t_energy);
    const auto back = from_spectrum(spec, g);
    const double scale = p.envelope().abs().maxCoeff();
    EXPECT_LE((back.envelope() - p.envelope()).abs().maxCoeff(), 1e-12 * scale);
  }
}

TEST(Spectrum, SpectralWidthMatchesFourierPair) {
  const double fwhm = 190 * ns;
  const TimeGrid<double> g(0.0, 2 * ns, 16384);
  const auto p = make_gaussian_pulse(g, g.time(8192), fwhm, 1.0);
  const auto spec = to_spectrum(p);
  // Half-maximum crossing on the positive-frequency side, linearly interpolated.
  const ArrayX<double> power = spec.components.abs2();
  const double half = power(0) / 2;
  Eigen::Index k = 0;
  while (power(k + 1) > half) ++k;
  const double f = (k + (power(k) - half) / (power(k) - power(k + 1))) * g.df();
  const double expected = 2 * std::log(2.0) / (std::numbers::pi * fwhm);
  EXPECT_NEAR(2 * f, expected, 0.005 * expected);
  EXPECT_NEAR(expected, 2.3224e6, 1e3);
}

TEST(Spectrum, ZeroAndDcCases) {
  const TimeGrid<double> g(0.0, 1.0, 64);
  const auto zero = make_gaussian_pulse(g, 32.0, 8.0, 0.0);
  EXPECT_EQ(to_spectrum(zero).components.abs().maxCoeff(), 0.0);

  Spectrum<double> dc{g.df(), ArrayXc<double>::Zero(64), 0.0};
  dc.components(0) = {3.0, 0.0};
  const auto flat = from_spectrum(dc, g);
  for (Eigen::Index i = 0; i < 64; ++i) EXPECT_NEAR(std::abs(flat.envelope()(i) - flat.envelope()(0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(flat.envelope()(0)), 3.0 * g.df(), 1e-12);
}

TEST(Spectrum, SizeMismatch) {
  const TimeGrid<double> g(0.0, 1.0, 64);
  Spectrum<double> s{g.df(), ArrayXc<double>::Zero(32), 0.0};
  expect_code(ErrorCode::SizeMismatch, [&] { from_spectrum(s, g); });
}

TEST(Spectrum, GaussianSurvivesRoundTrip) {
  const auto p = make_gaussian_pulse(standard_grid(), 700 * ns, 190 * ns, 3.8e6);
  const auto back = from_spectrum(to_spectrum(p), p.grid());
  EXPECT_NEAR(measure_fwhm(back), 190 * ns, p.grid().dt());
}

TEST(PeakTime, TieGoesToEarliest) {
  const TimeGrid<double> g(0.0, 1.0, 32);
  ArrayXc<double> e = ArrayXc<double>::Zero(32);
  e(10) = 1.0;
  e(20) = 1.0;
  const SampledPulse<double> p(g, e);
  EXPECT_NEAR(peak_time(p), 10.0, 1e-12);
}

TEST(PeakTime, AdvancedCopyDiffersByShift) {
  const auto g = standard_grid();
  const auto a = make_gaussian_pulse(g, 700 * ns, 190 * ns, 1.0);
  const auto b = make_gaussian_pulse(g, 610 * ns, 190 * ns, 1.0);
  EXPECT_NEAR(peak_time(b) - peak_time(a), -90 * ns, g.dt());
}

TEST(PeakTime, ZeroPulse) {
  const auto p = make_gaussian_pulse(standard_grid(), 500 * ns, 190 * ns, 0.0);
  expect_code(ErrorCode::ZeroPulse, [&] { peak_time(p); });
}

TEST(IntegratedSignal, ErfOracle) {
  const double n = 3.8e6, t0 = 900 * ns, w = 190 * ns;
  const auto p = make_gaussian_pulse(standard_grid(), t0, w, n);
  const double tau = w / (2 * std::sqrt(std::log(2.0)));
  EXPECT_NEAR(integrated_signal(p, t0), n / 2, n * 1e-6);
  EXPECT_NEAR(integrated_signal(p, p.grid().t_end()), n, n * 1e-6);
  const double expect = n * (1 + oracle::erf_one_series()) / 2;
  EXPECT_NEAR(integrated_signal(p, t0 + tau), expect, n * 1e-6);
  EXPECT_NEAR(expect / n, 0.9214, 1e-4);
  for (double t = 500 * ns; t < 1400 * ns; t += 37 * ns)
    EXPECT_NEAR(integrated_signal(p, t), oracle::gaussian_photons(t0, w, n, -1.0, t), n * 1e-6);
}

TEST(IntegratedSignal, MonotoneAndBounded) {
  const auto p = make_gaussian_pulse(standard_grid(), 800 * ns, 190 * ns, 1e4);
  const auto cum = cumulative_signal(p);
  double prev = 0;
  for (double t = 0; t <= p.grid().t_end(); t += 0.37 * ns) {
    const double v = integrated_signal(p, cum, t);
    EXPECT_GE(v, prev);
    prev = v;
  }
  expect_code(ErrorCode::OutsideGrid, [&] { integrated_signal(p, -1 * ns); });
  expect_code(ErrorCode::OutsideGrid, [&] { integrated_signal(p, p.grid().t_end() + 1 * ns); });
}
