#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "fastlight/error.hpp"
#include "fastlight/timegrid_pulse.hpp"

namespace fastlight {

/// Row-major pixel image; rows are the vertical (y) axis.
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct PixelGrid {
  int width_px = 128;
  int height_px = 128;
  double pixel_pitch = 1.0;
};

/// Horizontal dark stripe imprinted by the mask. contrast 1 is fully dark.
struct Stripe {
  double center_row = 63.5;
  double width = 12;
  double contrast = 1.0;
  bool edge_smoothing = true;
};

struct SceneSpec {
  PixelGrid grid;
  double beam_waist = 40;  // 1/e^2 intensity radius, pixels
  double beam_center_x = 63.5;
  double beam_center_y = 63.5;
  Stripe stripe;

  void validate() const {
    if (grid.width_px < 16 || grid.height_px < 16)
      throw Error(ErrorCode::InvalidSpec, "pixel grid must be at least 16 x 16");
    if (!(beam_waist > 0)) throw Error(ErrorCode::InvalidSpec, "beam waist must be positive");
    if (!(stripe.contrast >= 0 && stripe.contrast <= 1))
      throw Error(ErrorCode::InvalidSpec, "stripe contrast must lie in [0, 1]");
    if (!(stripe.width > 0)) throw Error(ErrorCode::InvalidSpec, "stripe width must be positive");
    const double half = stripe.width / 2;
    if (stripe.center_row - half < -0.5 || stripe.center_row + half > grid.height_px - 0.5)
      throw Error(ErrorCode::InvalidSpec, "stripe must lie inside the pixel grid");
  }
};

/// Mask transmission of a pixel row. With edge smoothing the dark-to-bright
/// transition is a one-pixel linear ramp centred on the nominal edge.
inline double stripe_transmission(const Stripe& stripe, double row) {
  const double d = std::abs(row - stripe.center_row);
  const double half = stripe.width / 2;
  const double outside = stripe.edge_smoothing ? std::clamp(d - (half - 0.5), 0.0, 1.0) : (d < half ? 0.0 : 1.0);
  return 1.0 - stripe.contrast * (1.0 - outside);
}

/// Gaussian beam cross-section times stripe transmission, normalised to a
/// unit sum over the grid.
inline Image<double> beam_pattern(const SceneSpec& scene) {
  scene.validate();
  const int h = scene.grid.height_px;
  const int w = scene.grid.width_px;
  Image<double> weights(h, w);
  const double k = 2.0 / (scene.beam_waist * scene.beam_waist);
  for (int y = 0; y < h; ++y) {
    const double dy = y - scene.beam_center_y;
    const double t = stripe_transmission(scene.stripe, y);
    for (int x = 0; x < w; ++x) {
      const double dx = x - scene.beam_center_x;
      weights(y, x) = t * std::exp(-k * (dx * dx + dy * dy));
    }
  }
  const double total = weights.sum();
  if (!(total > 0)) throw Error(ErrorCode::InvalidSpec, "scene transmits no light");
  return weights / total;
}

/// Expected photons per pixel during one gate window.
template <typename Scalar>
struct ExpectedFrame {
  Image<Scalar> photons;
  Scalar gate_delay{};
  Scalar gate_width{};

  Scalar total() const { return photons.sum(); }
};

/// Photons the pulse delivers in [gate_start, gate_start + gate_width].
template <typename Scalar>
Scalar gate_photons(const SampledPulse<Scalar>& pulse, const ArrayX<Scalar>& cumulative, Scalar gate_start,
                    Scalar gate_width) {
  const auto& g = pulse.grid();
  if (!(gate_width > Scalar(0))) throw Error(ErrorCode::InvalidSpec, "gate width must be positive");
  if (!g.contains(gate_start) || !g.contains(gate_start + gate_width))
    throw Error(ErrorCode::GateOutsideGrid, "gate window extends beyond the pulse grid");
  return integrated_signal(pulse, cumulative, gate_start + gate_width) -
         integrated_signal(pulse, cumulative, gate_start);
}

template <typename Scalar>
ExpectedFrame<Scalar> expected_frame(const Image<double>& weights, const SampledPulse<Scalar>& pulse,
                                     const ArrayX<Scalar>& cumulative, Scalar gate_start, Scalar gate_width) {
  const Scalar n = gate_photons(pulse, cumulative, gate_start, gate_width);
  return {(weights.template cast<Scalar>() * n).eval(), gate_start, gate_width};
}

/// Per-pixel expectation weight(x, y) * integral of I(t) over the gate.
template <typename Scalar>
ExpectedFrame<Scalar> expected_frame(const SceneSpec& scene, const SampledPulse<Scalar>& pulse, Scalar gate_start,
                                     Scalar gate_width) {
  return expected_frame(beam_pattern(scene), pulse, cumulative_signal(pulse), gate_start, gate_width);
}

}  // namespace fastlight
