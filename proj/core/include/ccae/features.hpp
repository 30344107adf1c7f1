#pragma once

#include <string_view>

#include <Eigen/Core>

#include "ccae/channel.hpp"

namespace ccae {

enum class ScalingMode {
  UnitNorm,     // each CSI row scaled to unit Euclidean norm
  Standardize,  // UnitNorm, then per-dimension zero mean / unit variance
};

std::string_view to_string(ScalingMode mode);
ScalingMode parse_scaling_mode(std::string_view text);

struct FeatureSet {
  Eigen::MatrixXd values;  // N x D
  ScalingMode mode = ScalingMode::UnitNorm;
  // Standardize only; empty otherwise.
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd stddev;

  Eigen::Index size() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }
};

/// Unitary DFT across antennas, X_k = M^(-1/2) sum_m h_m exp(+i 2 pi k m / M).
/// The sign makes a half-wavelength steering vector with sin_angle = 2k/M
/// land in bin k. Radix-2 FFT when M is a power of two.
Eigen::VectorXcd angular_transform(const Eigen::VectorXcd& h);

/// Scale, transform to the angular domain, take magnitudes.
/// Throws std::invalid_argument on an all-zero row.
FeatureSet extract_features(const CsiMatrix& csi, ScalingMode mode = ScalingMode::UnitNorm);

}  // namespace ccae
