#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fastlight/analysis_snr.hpp"

using namespace fastlight;

namespace {

ImageFrame frame_of(const CountImage& c) { return {c, 0.0, {}}; }

std::vector<double> axis(std::size_t n, double step = 2.44e-9, double start = 0) {
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = start + step * static_cast<double>(i);
  return d;
}

/// Visibility series with seeded noise, rising to `level` from frame `rise`.
std::vector<std::optional<double>> noisy_step(std::size_t n, std::size_t rise, double level, double sd,
                                              std::uint64_t seed, std::size_t shift = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0, sd);
  std::vector<std::optional<double>> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = (i >= rise + shift ? level : 0.0) + z(rng);
  return m;
}

}  // namespace

TEST(RegionMean, ConstantImage) {
  const auto f = frame_of(CountImage::Constant(20, 30, 7));
  EXPECT_EQ(region_mean(f, {2, 3, 5, 10}), 7.0);
}

TEST(RegionMean, Checkerboard) {
  CountImage c(10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) c(y, x) = (x + y) % 2 ? 3 : 1;
  EXPECT_EQ(region_mean(frame_of(c), {0, 0, 2, 2}), 2.0);
  EXPECT_EQ(region_mean(frame_of(c), {1, 1, 1, 1}), 1.0);
  EXPECT_EQ(region_mean(frame_of(c), {1, 2, 3, 3}), 19.0 / 9);
}

TEST(RegionMean, MatchesNestedLoopSum) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> v(0, 100000);
  CountImage c(64, 80);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = v(rng);
  std::uniform_int_distribution<int> r(0, 40);
  for (int trial = 0; trial < 100; ++trial) {
    const Rect rect{r(rng) % 30, r(rng), 1 + r(rng) % 30, 1 + r(rng) % 39};
    long double sum = 0;
    for (int y = rect.row0; y < rect.row0 + rect.rows; ++y)
      for (int x = rect.col0; x < rect.col0 + rect.cols; ++x) sum += c(y, x);
    const double expect = static_cast<double>(sum / (rect.rows * rect.cols));
    EXPECT_DOUBLE_EQ(region_mean(frame_of(c), rect), expect);
  }
}

TEST(RegionMean, OutOfBounds) {
  const auto f = frame_of(CountImage::Constant(10, 10, 1));
  EXPECT_THROW(region_mean(f, {8, 0, 3, 3}), Error);
  EXPECT_THROW(region_mean(f, {0, 9, 1, 2}), Error);
  EXPECT_THROW(region_mean(f, {-1, 0, 1, 1}), Error);
  const ImageFrame part{CountImage::Constant(2, 10, 1), 0.0, {4, 5}};
  EXPECT_EQ(region_mean(part, {4, 0, 2, 10}), 1.0);
  EXPECT_THROW(region_mean(part, {3, 0, 2, 10}), Error);
}

TEST(Visibility, ExactOnIntegers) {
  EXPECT_EQ(*visibility(3.0, 1.0), 0.5);
  EXPECT_EQ(*visibility(5.0, 5.0), 0.0);
  EXPECT_EQ(*visibility(0.0, 4.0), -1.0);
  EXPECT_FALSE(visibility(0.0, 0.0));
  EXPECT_EQ(*visibility_corrected(10.0, 2.0, 0.0), *visibility(10.0, 2.0));
  EXPECT_EQ(*visibility_corrected(10.0, 2.0, 4.0), 0.5);
  EXPECT_EQ(*visibility_corrected(7.0, 1.0, 2.0), 4.0 / 6);
  EXPECT_FALSE(visibility_corrected(3.0, 1.0, 4.0));
}

TEST(Trace, WarmupAndStatus) {
  const std::size_t n = 30;
  std::vector<std::optional<double>> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = (i % 2) ? 0.2 : 0.1;
  m[20].reset();
  const auto t = trace_from_visibility(axis(n), m, 10);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(t.status[i], FrameStatus::Warmup);
  EXPECT_EQ(t.status[10], FrameStatus::Valid);
  EXPECT_EQ(t.status[20], FrameStatus::InvalidVisibility);
  EXPECT_EQ(t.status[30 - 1], FrameStatus::InvalidVisibility);
  EXPECT_EQ(t.status[19], FrameStatus::Valid);
  EXPECT_TRUE(std::isnan(t.visibility[20]));
  // Previous ten alternate 0.1 / 0.2: sample sd sqrt(10 * 0.0025 / 9).
  const double sd = std::sqrt(10 * 0.0025 / 9);
  EXPECT_NEAR(t.spread[10], sd, 1e-15);
  EXPECT_NEAR(t.snr[10], 0.01 / (sd * sd), 1e-12);
}

TEST(Trace, ConstantSeriesHasZeroSpread) {
  std::vector<std::optional<double>> m(20, 0.3);
  auto t = trace_from_visibility(axis(20), m, 10);
  EXPECT_EQ(t.status[15], FrameStatus::ZeroSpread);
  EXPECT_TRUE(std::isinf(t.snr[15]));
  EXPECT_TRUE(above_threshold(t, 15, 1.0));
  ASSERT_TRUE(detection_time(t, 1.0, 3));
  EXPECT_EQ(*detection_time(t, 1.0, 3), t.delay[10]);

  std::vector<std::optional<double>> zero(20, 0.0);
  t = trace_from_visibility(axis(20), zero, 10);
  EXPECT_EQ(t.status[15], FrameStatus::ZeroSpread);
  EXPECT_TRUE(std::isnan(t.snr[15]));
  EXPECT_FALSE(detection_time(t, 1.0, 1));
}

TEST(Trace, Errors) {
  std::vector<std::optional<double>> m(10, 0.1);
  try {
    trace_from_visibility(axis(10), m, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StackTooShort);
  }
  EXPECT_THROW(trace_from_visibility(axis(9), m, 5), Error);
  EXPECT_THROW(trace_from_visibility(axis(10), m, 1), Error);
}

TEST(Floor, IntegratedSnrIsFlatInBackground) {
  const std::size_t n = 200;
  const auto t = trace_from_visibility(axis(n), noisy_step(n, 1000, 0, 0.01, 3), 10);
  const double floor = estimate_background_floor(t, 0.25);
  EXPECT_GT(floor, 0);
  const auto cum = integrated_snr(t, floor);
  // Floor-subtracted SNR sums to zero over the background region, leaving
  // only the trapezoid end correction.
  const std::size_t last = background_frames(n, 0.25) - 1;
  const double expect = -0.5 * t.step() * (snr_or_zero(t, last) - floor);
  EXPECT_NEAR(cum[last], expect, 1e-9 * t.step() * floor * static_cast<double>(n));
}

TEST(Floor, MatchesHandAverage) {
  const std::size_t n = 80;
  const auto t = trace_from_visibility(axis(n), noisy_step(n, 1000, 0, 0.01, 5), 10);
  double s = 0;
  for (std::size_t i = 10; i < 20; ++i) s += t.valid(i) ? t.snr[i] : 0;
  EXPECT_DOUBLE_EQ(estimate_background_floor(t, 0.25), s / 10);
  try {
    estimate_background_floor(t, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoPrePulseRegion);
  }
}

TEST(Integrated, TrapezoidOfShiftedSnr) {
  const std::size_t n = 40;
  std::vector<std::optional<double>> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = 0.1 * static_cast<double>(i % 3);
  const auto t = trace_from_visibility(axis(n, 1.0), m, 10);
  const auto cum = integrated_snr(t, 0.5);
  EXPECT_EQ(cum[10], 0.0 + 0.5 * (0 + snr_or_zero(t, 10) - 0.5));
  double acc = 0;
  for (std::size_t i = 1; i < n; ++i) {
    auto f = [&](std::size_t k) { return k < 10 ? 0.0 : snr_or_zero(t, k) - 0.5; };
    acc += 0.5 * (f(i - 1) + f(i));
    EXPECT_NEAR(cum[i], acc, 1e-12 * std::max(1.0, std::abs(acc)));
  }
}

TEST(Detection, InterpolatesOnRamp) {
  // Valid everywhere with snr rising linearly through the threshold.
  VisibilityTrace t;
  t.window = 2;
  t.delay = axis(10, 1.0);
  t.snr = {0, 0, 0.2, 0.4, 0.6, 0.8, 1.2, 1.6, 2.0, 2.4};
  t.visibility.assign(10, 0.1);
  t.spread.assign(10, 0.1);
  t.status.assign(10, FrameStatus::Valid);
  t.status[0] = t.status[1] = FrameStatus::Warmup;
  EXPECT_NEAR(*detection_time(t, 1.0, 3), 5.5, 1e-12);
  EXPECT_NEAR(*detection_time(t, 1.0, 1), 5.5, 1e-12);
  EXPECT_FALSE(detection_time(t, 3.0, 1));
  // No interpolation when the preceding frame is not valid.
  t.status[5] = FrameStatus::InvalidVisibility;
  EXPECT_EQ(*detection_time(t, 1.0, 3), 6.0);
  EXPECT_THROW(detection_time(t, 1.0, 0), Error);
}

TEST(Detection, PersistenceSkipsShortRuns) {
  VisibilityTrace t;
  t.window = 2;
  t.delay = axis(12, 1.0);
  t.snr = {0, 0, 0, 5, 5, 0, 0, 5, 5, 5, 5, 0};
  t.visibility.assign(12, 0.1);
  t.spread.assign(12, 0.1);
  t.status.assign(12, FrameStatus::Valid);
  EXPECT_EQ(*detection_time(t, 1.0, 3), 7.0 - 1.0 + (1.0 - 0) / 5);
  EXPECT_DOUBLE_EQ(*detection_time(t, 1.0, 2), 2.2);
}

TEST(Compare, IdenticalTracesGiveZeroAdvancement) {
  const std::size_t n = 200;
  const auto t = trace_from_visibility(axis(n), noisy_step(n, 100, 0.5, 0.02, 9), 10);
  const auto r = compare(t, t, 190e-9, {1, 3, 0.25});
  ASSERT_TRUE(r.advancement);
  EXPECT_EQ(*r.advancement, 0.0);
  EXPECT_EQ(*r.relative_advancement, 0.0);
  EXPECT_FALSE(r.window_fast_exceeds_reference);
}

TEST(Compare, ShiftedTraceGivesShift) {
  const double step = 1e-9;
  const std::size_t n = 300;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    // Smooth rise plus noise; the fast series is the same sequence 20 frames earlier.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0, 0.01);
    std::vector<double> s(n + 20);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = 0.5 / (1 + std::exp(-(static_cast<double>(k) - 180) / 8)) + z(rng);
    std::vector<std::optional<double>> ref(n), fast(n);
    for (std::size_t i = 0; i < n; ++i) {
      ref[i] = s[i];
      fast[i] = s[i + 20];
    }
    const auto a = trace_from_visibility(axis(n, step), ref, 10);
    const auto b = trace_from_visibility(axis(n, step), fast, 10);
    const auto r = compare(a, b, 190e-9, {1, 10, 0.25});
    ASSERT_TRUE(r.advancement) << "seed " << seed;
    EXPECT_NEAR(*r.advancement, 20 * step, step) << "seed " << seed;
    ASSERT_TRUE(r.window_fast_exceeds_reference);
  }
}

TEST(Compare, AxisMismatch) {
  const auto a = trace_from_visibility(axis(50), noisy_step(50, 100, 0, 0.01, 1), 10);
  const auto b = trace_from_visibility(axis(50, 2e-9), noisy_step(50, 100, 0, 0.01, 1), 10);
  const auto c = trace_from_visibility(axis(60), noisy_step(60, 100, 0, 0.01, 1), 10);
  for (const auto* other : {&b, &c}) {
    try {
      compare(a, *other, 1.0);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::AxisMismatch);
    }
  }
}

TEST(Trace, SnrInvariantUnderScaling) {
  const std::size_t n = 100;
  const auto m = noisy_step(n, 50, 0.3, 0.02, 4);
  std::vector<std::optional<double>> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = *m[i] * 7.5;
  const auto a = trace_from_visibility(axis(n), m, 10);
  const auto b = trace_from_visibility(axis(n), scaled, 10);
  for (std::size_t i = 10; i < n; ++i) EXPECT_NEAR(a.snr[i], b.snr[i], 1e-9 * a.snr[i]);
}

TEST(Regions, AroundStripeLayout) {
  const auto r = RegionSpec::around_stripe(SceneSpec{});
  EXPECT_EQ(r.min_region.row0, 63);
  EXPECT_EQ(r.min_region.col0, 19);
  EXPECT_EQ(r.max_regions[0].row0, 53);
  EXPECT_EQ(r.max_regions[1].row0, 73);
  EXPECT_NO_THROW(r.validate(128, 128));
  EXPECT_EQ(r.rows_needed(), (RowSelection{53, 54, 55, 63, 64, 65, 73, 74, 75}));
  RegionSpec bad = r;
  bad.max_regions[0] = r.min_region;
  EXPECT_THROW(bad.validate(128, 128), Error);
  EXPECT_THROW(r.validate(100, 70), Error);
}

TEST(Windows, Exceedance) {
  const std::vector<double> d = {0, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<double> a = {1, 1, 0, 2, 2, 2, 0, 3};
  const std::vector<double> b(8, 0.5);
  const auto w = exceedance_windows(d, a, b);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[1].lo, 3);
  EXPECT_EQ(w[1].hi, 5);
  EXPECT_EQ(longest_window(w)->lo, 3);
  EXPECT_EQ(exceedance_windows(d, a, b, 4).front().lo, 4);
  EXPECT_FALSE(longest_window({}));
}
