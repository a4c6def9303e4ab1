#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "fastlight/detector_iccd.hpp"
#include "fastlight/error.hpp"
#include "fastlight/scene_spatial.hpp"

namespace fastlight {

/// Pixel rectangle in sensor coordinates.
struct Rect {
  int row0 = 0;
  int col0 = 0;
  int rows = 3;
  int cols = 90;

  int row_end() const { return row0 + rows; }
  int col_end() const { return col0 + cols; }

  bool overlaps(const Rect& o) const {
    return row0 < o.row_end() && o.row0 < row_end() && col0 < o.col_end() && o.col0 < col_end();
  }
};

struct RegionSpec {
  Rect max_regions[2];
  Rect min_region;

  /// Centre region on the stripe axis, flank regions `offset` rows above and
  /// below it, all centred on the beam horizontally.
  static RegionSpec around_stripe(const SceneSpec& scene, int rows = 3, int cols = 90, int gap = 4) {
    const int row0 = static_cast<int>(std::lround(scene.stripe.center_row - (rows - 1) / 2.0));
    const int col0 = static_cast<int>(std::lround(scene.beam_center_x - (cols - 1) / 2.0));
    const int offset = static_cast<int>(std::ceil(scene.stripe.width / 2 + gap));
    RegionSpec r;
    r.min_region = {row0, col0, rows, cols};
    r.max_regions[0] = {row0 - offset, col0, rows, cols};
    r.max_regions[1] = {row0 + offset, col0, rows, cols};
    return r;
  }

  void validate(int width, int height) const {
    const Rect all[3] = {max_regions[0], max_regions[1], min_region};
    for (const auto& r : all)
      if (r.rows <= 0 || r.cols <= 0 || r.row0 < 0 || r.col0 < 0 || r.row_end() > height || r.col_end() > width)
        throw Error(ErrorCode::OutOfBounds, "analysis region outside the sensor");
    if (all[0].overlaps(all[1]) || all[0].overlaps(all[2]) || all[1].overlaps(all[2]))
      throw Error(ErrorCode::InvalidSpec, "analysis regions must be disjoint");
  }

  /// Sensor rows touched by any region, increasing.
  RowSelection rows_needed() const {
    RowSelection rows;
    for (const auto& r : {max_regions[0], max_regions[1], min_region})
      for (int y = r.row0; y < r.row_end(); ++y) rows.push_back(y);
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
  }
};

inline double region_mean(const ImageFrame& frame, const Rect& r) {
  if (r.rows <= 0 || r.cols <= 0 || r.col0 < 0 || r.col_end() > frame.cols())
    throw Error(ErrorCode::OutOfBounds, "region outside the frame");
  std::int64_t sum = 0;
  for (int y = r.row0; y < r.row_end(); ++y) {
    const int local = frame.local_row(y);
    if (local < 0) throw Error(ErrorCode::OutOfBounds, "region row not present in the frame");
    sum += frame.counts.row(local).segment(r.col0, r.cols).sum();
  }
  return static_cast<double>(sum) / static_cast<double>(r.rows * r.cols);
}

/// Stripe visibility; empty when the denominator vanishes.
template <typename Scalar>
std::optional<Scalar> visibility(Scalar i_max, Scalar i_min) {
  const Scalar den = i_max + i_min;
  if (den == Scalar(0)) return std::nullopt;
  return (i_max - i_min) / den;
}

/// Visibility with the detector threshold D removed from both sums.
template <typename Scalar>
std::optional<Scalar> visibility_corrected(Scalar n_max, Scalar n_min, Scalar threshold) {
  const Scalar den = n_max + n_min - threshold;
  if (den == Scalar(0)) return std::nullopt;
  return (n_max - n_min - threshold) / den;
}

enum class FrameStatus : std::uint8_t {
  Warmup,             // fewer than `window` previous frames
  Valid,
  InvalidVisibility,  // this frame or one in its window has no visibility
  ZeroSpread,         // the previous frames agree exactly
};

struct VisibilityTrace {
  std::vector<double> delay;
  std::vector<double> visibility;  // NaN where undefined
  std::vector<double> spread;      // running std of the previous `window` values
  std::vector<double> snr;         // NaN unless defined; +inf for ZeroSpread with M != 0
  std::vector<FrameStatus> status;
  int window = 10;

  std::size_t size() const { return delay.size(); }
  bool valid(std::size_t i) const { return status[i] == FrameStatus::Valid; }
  double step() const { return size() < 2 ? 0.0 : delay[1] - delay[0]; }
};

/// Builds M, dM and SNR from a per-frame visibility series.
inline VisibilityTrace trace_from_visibility(const std::vector<double>& delays,
                                             const std::vector<std::optional<double>>& m, int window = 10) {
  if (delays.size() != m.size()) throw Error(ErrorCode::LengthMismatch, "delays and visibilities differ in length");
  if (window < 2) throw Error(ErrorCode::InvalidSpec, "window must be >= 2");
  if (m.size() <= static_cast<std::size_t>(window))
    throw Error(ErrorCode::StackTooShort, "need more frames than the running window");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = m.size();
  VisibilityTrace t;
  t.window = window;
  t.delay = delays;
  t.visibility.assign(n, nan);
  t.spread.assign(n, nan);
  t.snr.assign(n, nan);
  t.status.assign(n, FrameStatus::Warmup);
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i]) t.visibility[i] = *m[i];
    if (i < static_cast<std::size_t>(window)) continue;
    bool ok = m[i].has_value();
    for (std::size_t j = i - window; j < i && ok; ++j) ok = m[j].has_value();
    if (!ok) {
      t.status[i] = FrameStatus::InvalidVisibility;
      continue;
    }
    // Deviations from the first value keep identical inputs at exactly zero spread.
    const double origin = *m[i - window];
    double mean = 0;
    for (std::size_t j = i - window; j < i; ++j) mean += *m[j] - origin;
    mean /= window;
    double ss = 0;
    for (std::size_t j = i - window; j < i; ++j) ss += (*m[j] - origin - mean) * (*m[j] - origin - mean);
    const double sd = std::sqrt(ss / (window - 1));
    t.spread[i] = sd;
    const double v = *m[i];
    if (sd > 0) {
      t.snr[i] = v * v / (sd * sd);
      t.status[i] = FrameStatus::Valid;
    } else {
      t.status[i] = FrameStatus::ZeroSpread;
      if (v != 0) t.snr[i] = std::numeric_limits<double>::infinity();
    }
  }
  return t;
}

/// Per-frame flank and centre means; I_max pools the two flanks.
inline std::vector<std::optional<double>> stack_visibility(const FrameStack& stack, const RegionSpec& regions,
                                                           double threshold_D) {
  regions.validate(stack.width_px, stack.height_px);
  std::vector<std::optional<double>> m;
  m.reserve(stack.size());
  for (const auto& f : stack.frames) {
    const double a = 0.5 * (region_mean(f, regions.max_regions[0]) + region_mean(f, regions.max_regions[1]));
    const double b = region_mean(f, regions.min_region);
    m.push_back(visibility_corrected(a, b, threshold_D));
  }
  return m;
}

inline VisibilityTrace visibility_trace(const FrameStack& stack, const RegionSpec& regions, double threshold_D,
                                        int window = 10) {
  if (stack.size() <= static_cast<std::size_t>(window))
    throw Error(ErrorCode::StackTooShort, "need more frames than the running window");
  return trace_from_visibility(stack.delays(), stack_visibility(stack, regions, threshold_D), window);
}

/// Number of leading frames treated as pre-pulse background.
inline std::size_t background_frames(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
}

/// SNR integrand value: the SNR of valid frames, zero otherwise.
inline double snr_or_zero(const VisibilityTrace& t, std::size_t i) { return t.valid(i) ? t.snr[i] : 0.0; }

/// Mean SNR over the post-warm-up part of the leading `fraction` of the
/// sweep, undefined frames counting as zero.
inline double estimate_background_floor(const VisibilityTrace& t, double fraction = 0.25) {
  const std::size_t end = background_frames(t.size(), fraction);
  const auto start = static_cast<std::size_t>(t.window);
  if (end <= start) throw Error(ErrorCode::NoPrePulseRegion, "no post-warm-up frames in the background region");
  double sum = 0;
  for (std::size_t i = start; i < end; ++i) sum += snr_or_zero(t, i);
  return sum / static_cast<double>(end - start);
}

/// Running trapezoid integral of SNR - floor over gate delay. Warm-up frames
/// contribute nothing; other undefined frames enter with SNR 0.
inline std::vector<double> integrated_snr(const VisibilityTrace& t, double floor) {
  std::vector<double> cum(t.size(), 0.0);
  auto f = [&](std::size_t i) { return t.status[i] == FrameStatus::Warmup ? 0.0 : snr_or_zero(t, i) - floor; };
  for (std::size_t i = 1; i < t.size(); ++i)
    cum[i] = cum[i - 1] + 0.5 * (t.delay[i] - t.delay[i - 1]) * (f(i - 1) + f(i));
  return cum;
}

/// Frame counts as above threshold when valid with SNR >= threshold, or when
/// the spread is exactly zero under a nonzero visibility (infinite SNR).
inline bool above_threshold(const VisibilityTrace& t, std::size_t i, double threshold) {
  if (t.valid(i)) return t.snr[i] >= threshold;
  return t.status[i] == FrameStatus::ZeroSpread && std::isinf(t.snr[i]);
}

/// Start of the first run of `persistence` frames above threshold, linearly
/// interpolated against the preceding frame when both SNRs are finite.
inline std::optional<double> detection_time(const VisibilityTrace& t, double threshold = 1, int persistence = 3) {
  if (persistence < 1) throw Error(ErrorCode::InvalidSpec, "persistence must be >= 1");
  int run = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    run = above_threshold(t, i, threshold) ? run + 1 : 0;
    if (run < persistence) continue;
    const std::size_t first = i + 1 - static_cast<std::size_t>(persistence);
    if (first > 0 && t.valid(first - 1) && t.valid(first) && t.snr[first] > t.snr[first - 1]) {
      const double s0 = t.snr[first - 1];
      const double s1 = t.snr[first];
      const double d0 = t.delay[first - 1];
      return d0 + (threshold - s0) / (s1 - s0) * (t.delay[first] - d0);
    }
    return t.delay[first];
  }
  return std::nullopt;
}

struct TimeWindow {
  double lo = 0;
  double hi = 0;
};

/// Contiguous runs where a > b, as [first delay, last delay], from index `from`.
inline std::vector<TimeWindow> exceedance_windows(const std::vector<double>& delays, const std::vector<double>& a,
                                                  const std::vector<double>& b, std::size_t from = 0) {
  if (a.size() != delays.size() || b.size() != delays.size())
    throw Error(ErrorCode::LengthMismatch, "series differ in length");
  std::vector<TimeWindow> out;
  std::optional<std::size_t> start;
  for (std::size_t i = from; i <= delays.size(); ++i) {
    const bool in = i < delays.size() && a[i] > b[i];
    if (in && !start) start = i;
    if (!in && start) {
      out.push_back({delays[*start], delays[i - 1]});
      start.reset();
    }
  }
  return out;
}

inline std::optional<TimeWindow> longest_window(const std::vector<TimeWindow>& w) {
  std::optional<TimeWindow> best;
  for (const auto& x : w)
    if (!best || x.hi - x.lo > best->hi - best->lo) best = x;
  return best;
}

struct DetectionCriteria {
  double threshold = 1;
  int persistence = 3;
  double background_fraction = 0.25;
};

struct DetectionReport {
  std::optional<double> t_detect_reference;
  std::optional<double> t_detect_fast;
  std::optional<double> advancement;
  std::optional<double> relative_advancement;  // advancement / pulse FWHM
  double floor_reference = 0;
  double floor_fast = 0;
  std::vector<double> cumulative_reference;
  std::vector<double> cumulative_fast;
  std::optional<TimeWindow> window_fast_exceeds_reference;
};

inline void require_same_axis(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::AxisMismatch, "traces have different lengths");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > 1e-9 * std::max(1e-12, std::abs(a[i])))
      throw Error(ErrorCode::AxisMismatch, "traces have different delay axes");
}

inline DetectionReport compare(const VisibilityTrace& reference, const VisibilityTrace& fast, double pulse_fwhm,
                               const DetectionCriteria& criteria = {}) {
  require_same_axis(reference.delay, fast.delay);
  DetectionReport r;
  r.t_detect_reference = detection_time(reference, criteria.threshold, criteria.persistence);
  r.t_detect_fast = detection_time(fast, criteria.threshold, criteria.persistence);
  if (r.t_detect_reference && r.t_detect_fast) {
    r.advancement = *r.t_detect_reference - *r.t_detect_fast;
    if (pulse_fwhm > 0) r.relative_advancement = *r.advancement / pulse_fwhm;
  }
  r.floor_reference = estimate_background_floor(reference, criteria.background_fraction);
  r.floor_fast = estimate_background_floor(fast, criteria.background_fraction);
  r.cumulative_reference = integrated_snr(reference, r.floor_reference);
  r.cumulative_fast = integrated_snr(fast, r.floor_fast);
  r.window_fast_exceeds_reference =
      longest_window(exceedance_windows(reference.delay, r.cumulative_fast, r.cumulative_reference,
                                        background_frames(reference.size(), criteria.background_fraction)));
  return r;
}

}  // namespace fastlight
