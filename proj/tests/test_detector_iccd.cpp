#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "fastlight/detector_iccd.hpp"
#include "oracles.hpp"

using namespace fastlight;

namespace {

constexpr double ns = 1e-9;

Image<double> flat(int n) { return Image<double>::Constant(n, n, 1.0 / (n * n)); }

std::vector<double> pixels(const ImageFrame& f) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < f.counts.size(); ++i) v.push_back(static_cast<double>(f.counts.data()[i]));
  return v;
}

DetectorSpec ideal() {
  DetectorSpec d;
  d.efficiency = 1;
  return d;
}

}  // namespace

TEST(Expose, IdealDetectorShowsShotNoise) {
  const int n = 128;
  const auto f = expose(flat(n), 400.0 * n * n, 0, 1.0, ideal(), {1, 0, 0});
  const auto v = pixels(f);
  const double se = std::sqrt(400.0 / static_cast<double>(v.size()));
  EXPECT_NEAR(oracle::mean(v), 400, 4 * se);
  EXPECT_NEAR(oracle::variance(v), 400 + 1.0 / 12, 4 * oracle::variance_se(v));
}

TEST(Expose, DarkNoiseStatistics) {
  DetectorSpec d = ideal();
  d.dark_mean = 100;
  d.dark_std = 5;
  const auto v = pixels(expose(flat(100), 0.0, 0, 1.0, d, {2, 0, 0}));
  EXPECT_NEAR(oracle::mean(v), 100, 4 * 5 / 100.0);
  EXPECT_NEAR(oracle::variance(v), 25 + 1.0 / 12, 4 * oracle::variance_se(v));
}

TEST(Expose, EfficiencyThinsTheMean) {
  DetectorSpec d;
  d.efficiency = 0.3;
  const int n = 128;
  const auto v = pixels(expose(flat(n), 1000.0 * n * n, 0, 1.0, d, {3, 0, 0}));
  EXPECT_NEAR(oracle::mean(v), 300, 4 * std::sqrt(300.0 / v.size()));
  EXPECT_NEAR(oracle::variance(v), 300 + 1.0 / 12, 4 * oracle::variance_se(v));
}

TEST(Expose, AduGainScales) {
  DetectorSpec d = ideal();
  d.adu_gain = 2;
  const auto v = pixels(expose(flat(64), 0.0, 0, 1.0, d, {1, 0, 0}));
  EXPECT_EQ(oracle::mean(v), 0.0);
  d.adu_gain = 1;
  d.dark_mean = 10;
  const auto a = expose(flat(64), 1e6, 0, 1.0, d, {9, 0, 0});
  d.adu_gain = 3;
  const auto b = expose(flat(64), 1e6, 0, 1.0, d, {9, 0, 0});
  EXPECT_NEAR(oracle::mean(pixels(b)), 3 * oracle::mean(pixels(a)), 0.01 * 3 * oracle::mean(pixels(a)));
}

TEST(Expose, SameKeySameFrame) {
  DetectorSpec d;
  d.dark_mean = 2;
  d.dark_std = 1.5;
  const auto w = flat(64);
  const auto a = expose(w, 1e6, 0, 1.7, d, {5, 1, 3});
  const auto b = expose(w, 1e6, 0, 1.7, d, {5, 1, 3});
  EXPECT_TRUE((a.counts == b.counts).all());
  const auto c = expose(w, 1e6, 0, 1.7, d, {5, 0, 3});
  const auto e = expose(w, 1e6, 0, 1.7, d, {6, 1, 3});
  EXPECT_FALSE((a.counts == c.counts).all());
  EXPECT_FALSE((a.counts == e.counts).all());
}

TEST(Expose, RowSelectionMatchesFullFrame) {
  DetectorSpec d;
  d.dark_mean = 2;
  d.dark_std = 1.5;
  const auto w = beam_pattern(SceneSpec{});
  const auto full = expose(w, 4e4, 0, 1.3, d, {7, 1, 12});
  const RowSelection rows = {0, 53, 54, 63, 100, 127};
  const auto part = expose(w, 4e4, 0, 1.3, d, {7, 1, 12}, VarianceReading::MeanPhotonNumber, rows);
  ASSERT_EQ(part.rows(), 6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_TRUE((part.counts.row(static_cast<Eigen::Index>(i)) == full.counts.row(rows[i])).all());
    EXPECT_EQ(part.local_row(rows[i]), static_cast<int>(i));
  }
  EXPECT_EQ(part.local_row(1), -1);
  EXPECT_EQ(full.local_row(1), 1);
  EXPECT_THROW(expose(w, 1.0, 0, 1.0, d, {}, VarianceReading::MeanPhotonNumber, RowSelection{5, 5}), Error);
}

TEST(Expose, ExcessNoiseFromGain) {
  // Same mean detected signal, with and without amplification.
  const int n = 32;
  std::vector<double> plain, amplified;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto a = expose(flat(n), 2000.0 * n * n, 0, 1.0, ideal(), {s, 0, 0});
    const auto b = expose(flat(n), 1000.0 * n * n, 0, 2.0, ideal(), {s, 1, 0});
    for (double v : pixels(a)) plain.push_back(v);
    for (double v : pixels(b)) amplified.push_back(v - 1);
  }
  EXPECT_NEAR(oracle::mean(plain), oracle::mean(amplified), 1.0);
  EXPECT_NEAR(oracle::variance(amplified), 4 * 1000 + 2 * 1001, 4 * oracle::variance_se(amplified));
  EXPECT_GT(oracle::variance(amplified), 2.5 * oracle::variance(plain));
}

TEST(Expose, ZeroPulseGivesDarkFrames) {
  DetectorSpec d;
  d.dark_mean = 2;
  d.dark_std = 0;
  const auto f = expose(beam_pattern(SceneSpec{}), 0.0, 0, 1.0, d, {1, 0, 0});
  EXPECT_TRUE((f.counts == 2).all());
}

TEST(GateSweep, ArrivalFollowsExpectedSignal) {
  const auto grid = TimeGrid<double>::spanning(-600 * ns, 1800 * ns, 0.5 * ns);
  DetectorSpec d;
  const auto delays = uniform_delays(0, 1000 * ns, 2.44 * ns);
  // Bright enough that nearly every pixel sits far above the clamp at zero.
  const auto bright = make_gaussian_pulse(grid, 600 * ns, 190 * ns, 3.8e9);
  const auto plan = make_sweep_plan(SceneSpec{}, bright, unity_gain<double>(grid.size()), d, delays);
  const auto stack = gate_sweep(plan, 4);
  ASSERT_EQ(stack.size(), delays.size());
  double total_counts = 0;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const double total = static_cast<double>(stack.frames[i].counts.sum());
    const double expect = d.efficiency * plan.gate_photons[i];
    if (expect > 1e5) {
      EXPECT_NEAR(total, expect, 6 * std::sqrt(expect) + 64) << "frame " << i;
    }
    total_counts += total;
  }
  EXPECT_NEAR(total_counts, d.efficiency * 3.8e9, 1e-3 * d.efficiency * 3.8e9);

  // At the experiment's photon number the arrival curve is still centred on the pulse peak.
  const auto dim = make_gaussian_pulse(grid, 600 * ns, 190 * ns, 3.8e6);
  const auto dim_stack = gate_sweep(make_sweep_plan(SceneSpec{}, dim, unity_gain<double>(grid.size()), d, delays), 4);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < dim_stack.size(); ++i) {
    const double total = static_cast<double>(dim_stack.frames[i].counts.sum());
    num += total * (delays[i] + d.gate_width / 2);
    den += total;
  }
  EXPECT_NEAR(num / den, 600 * ns, 2.44 * ns);
}

TEST(GateSweep, GateGainAveragesOverInput) {
  const auto grid = TimeGrid<double>::spanning(-600 * ns, 1800 * ns, 0.5 * ns);
  const auto p = make_gaussian_pulse(grid, 600 * ns, 190 * ns, 3.8e6);
  GainTrace<double> g = unity_gain<double>(grid.size());
  g.gain *= 2.5;
  for (double v : gate_gains(p, g, {100 * ns, 600 * ns}, 2.44 * ns)) EXPECT_NEAR(v, 2.5, 1e-12);
  g.valid.setConstant(false);
  for (double v : gate_gains(p, g, {100 * ns, 600 * ns}, 2.44 * ns)) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(GateSweep, RejectsNonUniformDelays) {
  EXPECT_NO_THROW(check_uniform_delays({0, 1, 2, 3}));
  try {
    check_uniform_delays({0, 1, 2.5, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonUniformDelays);
  }
  EXPECT_THROW(check_uniform_delays({0, 0}), Error);
  EXPECT_EQ(uniform_delays(0, 1000 * ns, 2.44 * ns).size(), 410u);
}

TEST(FrameIo, RoundTrip) {
  const auto grid = TimeGrid<double>::spanning(-600 * ns, 1800 * ns, 0.5 * ns);
  const auto p = make_gaussian_pulse(grid, 600 * ns, 190 * ns, 3.8e6);
  DetectorSpec d;
  d.dark_mean = 2;
  d.dark_std = 1.5;
  const auto delays = uniform_delays(500 * ns, 530 * ns, 2.44 * ns);
  const auto plan = make_sweep_plan(SceneSpec{}, p, unity_gain<double>(grid.size()), d, delays);
  for (const RowSelection& rows : {RowSelection{}, RowSelection{53, 54, 63}}) {
    const auto stack = gate_sweep(plan, 8, 1, rows);
    const auto path = (std::filesystem::temp_directory_path() / "fastlight_roundtrip.flstack").string();
    write_frame_stack(stack, path, "0123456789abcdef");
    const auto back = read_frame_stack(path);
    std::filesystem::remove(path);
    ASSERT_EQ(back.size(), stack.size());
    EXPECT_EQ(back.width_px, stack.width_px);
    EXPECT_EQ(back.height_px, stack.height_px);
    EXPECT_EQ(back.seed, stack.seed);
    EXPECT_EQ(back.gate_width, stack.gate_width);
    EXPECT_EQ(back.detector.dark_std, stack.detector.dark_std);
    for (std::size_t i = 0; i < stack.size(); ++i) {
      EXPECT_EQ(back.frames[i].gate_delay, stack.frames[i].gate_delay);
      EXPECT_EQ(back.frames[i].sensor_rows, stack.frames[i].sensor_rows);
      EXPECT_TRUE((back.frames[i].counts == stack.frames[i].counts).all());
    }
  }
  EXPECT_THROW(read_frame_stack("/nonexistent/stack.flstack"), Error);
}
