#include "ccae/channel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ccae/random.hpp"

namespace ccae {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kMinDistance = 0.1;
constexpr std::uint64_t kScattererStream = 1;
constexpr std::uint64_t kNoiseStreamBase = 0x1000;

using cd = std::complex<double>;

}  // namespace

double ArrayGeometry::wavelength() const { return kSpeedOfLight / carrier_frequency; }

void ArrayGeometry::validate() const {
  if (num_antennas < 1) throw std::invalid_argument("array: num_antennas must be >= 1");
  if (!(element_spacing > 0.0)) throw std::invalid_argument("array: element_spacing must be > 0");
  if (!(carrier_frequency > 0.0))
    throw std::invalid_argument("array: carrier_frequency must be > 0");
}

void ChannelConfig::validate() const {
  if (mode == ChannelMode::NLoS && num_scatterers < 1)
    throw std::invalid_argument("channel: NLoS requires at least one scatterer");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("channel: snr_db must be finite or +inf");
  if (!(path_loss_exponent >= 0.0))
    throw std::invalid_argument("channel: path_loss_exponent must be >= 0");
  if (!(scatterer_area.x_max >= scatterer_area.x_min) ||
      !(scatterer_area.y_max >= scatterer_area.y_min) || !(scatterer_z_max >= scatterer_z_min))
    throw std::invalid_argument("channel: invalid scatterer bounds");
  if (!(reference_distance > 0.0))
    throw std::invalid_argument("channel: reference_distance must be > 0");
}

Eigen::VectorXcd steering_vector(double sin_angle, const ArrayGeometry& geometry) {
  if (!(std::abs(sin_angle) <= 1.0))
    throw std::invalid_argument("steering_vector: |sin_angle| must be <= 1");
  const auto m = static_cast<Eigen::Index>(geometry.num_antennas);
  Eigen::VectorXcd a(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    a(k) = std::polar(1.0, -2.0 * std::numbers::pi * geometry.element_spacing *
                               static_cast<double>(k) * sin_angle);
  }
  return a;
}

double array_sin_angle(const Eigen::Vector3d& target, const ArrayGeometry& geometry) {
  const Eigen::Vector3d d = target - geometry.position;
  const double norm = d.norm();
  if (norm == 0.0) return 0.0;
  return std::clamp(d.x() / norm, -1.0, 1.0);
}

std::vector<Scatterer> draw_scatterers(const ChannelConfig& config) {
  Rng rng = Rng::derive(config.seed, kScattererStream);
  const Area& a = config.scatterer_area;
  std::vector<Scatterer> out;
  out.reserve(config.num_scatterers);
  for (std::size_t s = 0; s < config.num_scatterers; ++s) {
    Scatterer sc;
    sc.position.x() = rng.uniform(a.x_min, a.x_max);
    sc.position.y() = rng.uniform(a.y_min, a.y_max);
    sc.position.z() = rng.uniform(config.scatterer_z_min, config.scatterer_z_max);
    sc.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out.push_back(sc);
  }
  return out;
}

Eigen::VectorXcd channel_response(const Eigen::Vector3d& user, const ArrayGeometry& geometry,
                                  const ChannelConfig& config,
                                  const std::vector<Scatterer>& scatterers) {
  const double lambda = geometry.wavelength();
  const double half_exp = 0.5 * config.path_loss_exponent;
  const double two_pi = 2.0 * std::numbers::pi;

  Eigen::VectorXcd h = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(geometry.num_antennas));

  const double direct = (user - geometry.position).norm();
  if (direct < kMinDistance)
    throw std::invalid_argument("channel: user collocated with the base station");
  if (config.mode == ChannelMode::LoS) {
    const cd gain = std::polar(std::pow(direct, -half_exp), -two_pi * direct / lambda);
    h += gain * steering_vector(array_sin_angle(user, geometry), geometry);
  }

  const double reradiation = config.reflection_gain * std::pow(config.reference_distance, half_exp);
  for (const Scatterer& s : scatterers) {
    const double leg_bs = (s.position - geometry.position).norm();
    const double leg_ue = (user - s.position).norm();
    if (leg_ue < kMinDistance)
      throw std::invalid_argument("channel: user collocated with a scatterer");
    if (leg_bs < kMinDistance)
      throw std::invalid_argument("channel: scatterer collocated with the base station");
    const double amplitude = reradiation * std::pow(leg_bs * leg_ue, -half_exp);
    const double phase = s.phase - two_pi * (leg_bs + leg_ue) / lambda;
    h += std::polar(amplitude, phase) * steering_vector(array_sin_angle(s.position, geometry), geometry);
  }
  return h;
}

CsiMatrix synthesize_csi(const UePlacement& placement, const ArrayGeometry& geometry,
                         const ChannelConfig& config) {
  geometry.validate();
  config.validate();
  const auto scatterers = draw_scatterers(config);
  CsiMatrix csi(static_cast<Eigen::Index>(placement.size()),
                static_cast<Eigen::Index>(geometry.num_antennas));
  for (std::size_t n = 0; n < placement.size(); ++n) {
    try {
      csi.row(static_cast<Eigen::Index>(n)) =
          channel_response(placement.positions[n], geometry, config, scatterers).transpose();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(e.what()) + " (user " + std::to_string(n) + ")");
    }
  }
  return csi;
}

CsiMatrix add_noise(const CsiMatrix& csi, double snr_db, std::uint64_t seed) {
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("add_noise: snr_db must be finite or +inf");
  if (snr_db == std::numeric_limits<double>::infinity()) return csi;
  CsiMatrix out = csi;
  const double m = static_cast<double>(csi.cols());
  const double snr = std::pow(10.0, snr_db / 10.0);
  for (Eigen::Index n = 0; n < csi.rows(); ++n) {
    const double variance = csi.row(n).squaredNorm() / (m * snr);
    const double sigma = std::sqrt(variance / 2.0);
    Rng rng = Rng::derive(seed, kNoiseStreamBase + static_cast<std::uint64_t>(n));
    for (Eigen::Index k = 0; k < csi.cols(); ++k) {
      const double re = rng.normal();
      const double im = rng.normal();
      out(n, k) += cd(sigma * re, sigma * im);
    }
  }
  return out;
}

}  // namespace ccae
