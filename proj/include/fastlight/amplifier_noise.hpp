#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "fastlight/error.hpp"

namespace fastlight {

/// First and second moments of a photon-number distribution.
template <typename Scalar>
struct PhotonMoments {
  Scalar mean{};
  Scalar variance{};

  static PhotonMoments shot_limited(Scalar mean) { return {mean, mean}; }

  Scalar fano() const { return variance / mean; }
};

/// How the fluctuation term in the output variance reads the input.
/// MeanPhotonNumber: G(G-1)(<n_in> + 1). ZeroFluctuation: G(G-1).
enum class VarianceReading { MeanPhotonNumber, ZeroFluctuation };

/// Phase-insensitive amplifier with vacuum excess noise:
///   <n_out>  = G <n_in> + G - 1
///   var_out  = G^2 var_in + G (G - 1) (<n_in> + 1)
template <typename Scalar>
PhotonMoments<Scalar> amplify_moments(const PhotonMoments<Scalar>& in, Scalar gain,
                                      VarianceReading reading = VarianceReading::MeanPhotonNumber) {
  if (!(gain >= Scalar(1))) throw Error(ErrorCode::GainBelowUnity, "amplifier power gain must be >= 1");
  const Scalar fluct = reading == VarianceReading::MeanPhotonNumber ? in.mean : Scalar(0);
  return {gain * in.mean + (gain - Scalar(1)),
          gain * gain * in.variance + gain * (gain - Scalar(1)) * (fluct + Scalar(1))};
}

/// Beam-splitter loss (and detector efficiency) with transmission t in [0, 1]:
/// mean t<n>, variance t^2 var + t (1 - t) <n>.
template <typename Scalar>
PhotonMoments<Scalar> thin_moments(const PhotonMoments<Scalar>& in, Scalar transmission) {
  if (!(transmission >= Scalar(0) && transmission <= Scalar(1)))
    throw Error(ErrorCode::InvalidSpec, "transmission must lie in [0, 1]");
  return {transmission * in.mean,
          transmission * transmission * in.variance + transmission * (Scalar(1) - transmission) * in.mean};
}

/// Time-dependent medium response: amplification where G >= 1, loss otherwise.
template <typename Scalar>
PhotonMoments<Scalar> transmit_moments(const PhotonMoments<Scalar>& in, Scalar gain,
                                       VarianceReading reading = VarianceReading::MeanPhotonNumber) {
  return gain >= Scalar(1) ? amplify_moments(in, gain, reading) : thin_moments(in, gain);
}

/// Counts for a given standard-normal variate z: mean + sd z, clamped at
/// zero and rounded.
template <typename Scalar>
std::int64_t counts_from_normal(const PhotonMoments<Scalar>& moments, double z) {
  const double sd = std::sqrt(std::max(0.0, static_cast<double>(moments.variance)));
  const double x = static_cast<double>(moments.mean) + sd * z;
  return static_cast<std::int64_t>(std::llround(std::max(0.0, x)));
}

/// Gaussian draw with the given moments, clamped at zero and rounded.
/// Always consumes exactly one standard-normal variate from `unit`.
template <typename Scalar, typename Urbg>
std::int64_t sample_counts(const PhotonMoments<Scalar>& moments, Urbg& rng,
                           std::normal_distribution<double>& unit) {
  return counts_from_normal(moments, unit(rng));
}

template <typename Scalar, typename Urbg>
std::int64_t sample_counts(const PhotonMoments<Scalar>& moments, Urbg& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  return sample_counts(moments, rng, unit);
}

/// Per-bin amplifier moments for a shot-noise-limited input pulse.
template <typename Scalar>
std::vector<PhotonMoments<Scalar>> amplify_pulse_moments(const Eigen::Ref<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>& bin_means,
                                                         const Eigen::Ref<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>& gain,
                                                         VarianceReading reading = VarianceReading::MeanPhotonNumber) {
  if (bin_means.size() != gain.size())
    throw Error(ErrorCode::LengthMismatch, "photon bins and gain samples differ in length");
  std::vector<PhotonMoments<Scalar>> out;
  out.reserve(static_cast<std::size_t>(bin_means.size()));
  for (Eigen::Index i = 0; i < bin_means.size(); ++i)
    out.push_back(amplify_moments(PhotonMoments<Scalar>::shot_limited(bin_means(i)), gain(i), reading));
  return out;
}

}  // namespace fastlight
