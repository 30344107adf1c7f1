#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "ccae/scenario.hpp"

namespace ccae {

using CsiMatrix = Eigen::MatrixXcd;  // N x M, row n = user n

/// Uniform linear array along the x axis, centred at `position`.
struct ArrayGeometry {
  std::size_t num_antennas = 32;
  double element_spacing = 0.5;  // wavelengths
  double carrier_frequency = 2.0e9;
  Eigen::Vector3d position{0.0, 0.0, 10.0};

  double wavelength() const;
  void validate() const;
};

enum class ChannelMode { LoS, NLoS };

/// Geometric multipath model.
///
/// Direct path gain: d^(-n/2) * exp(-i 2 pi d / lambda).
/// Bounce via scatterer s: each leg attenuates as distance^(-n/2); the
/// scatterer re-radiates with gain reflection_gain * reference_distance^(n/2)
/// and a static random phase drawn once per scatterer. Departure angles are
/// measured at the array.
struct ChannelConfig {
  ChannelMode mode = ChannelMode::LoS;
  std::size_t num_scatterers = 10;
  Area scatterer_area;
  double scatterer_z_min = 5.0;
  double scatterer_z_max = 20.0;
  double path_loss_exponent = 2.0;
  double reflection_gain = 1.0;
  double reference_distance = 100.0;
  double snr_db = 0.0;  // +inf disables noise
  std::uint64_t seed = 2;

  void validate() const;
};

struct Scatterer {
  Eigen::Vector3d position;
  double phase = 0.0;
};

/// Array response; entry m is exp(-i 2 pi spacing m sin_angle).
Eigen::VectorXcd steering_vector(double sin_angle, const ArrayGeometry& geometry);

/// Direction cosine of `target` with respect to the array axis.
double array_sin_angle(const Eigen::Vector3d& target, const ArrayGeometry& geometry);

/// Scatterer set for `config`; identical for every user of a run.
std::vector<Scatterer> draw_scatterers(const ChannelConfig& config);

/// Noise-free CSI of a single position for a given scatterer set.
Eigen::VectorXcd channel_response(const Eigen::Vector3d& user, const ArrayGeometry& geometry,
                                  const ChannelConfig& config,
                                  const std::vector<Scatterer>& scatterers);

/// Noise-free CSI for every user. Throws std::invalid_argument when a user
/// is within 0.1 m of the array or a scatterer.
CsiMatrix synthesize_csi(const UePlacement& placement, const ArrayGeometry& geometry,
                         const ChannelConfig& config);

/// Adds circularly-symmetric complex Gaussian noise, per-entry variance
/// ||h_n||^2 / (M 10^(snr_db/10)). Row n uses stream (seed, n).
CsiMatrix add_noise(const CsiMatrix& csi, double snr_db, std::uint64_t seed);

}  // namespace ccae
