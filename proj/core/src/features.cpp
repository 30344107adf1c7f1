#include "ccae/features.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ccae {

namespace {

using cd = std::complex<double>;

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT with kernel exp(+i 2 pi k m / M), unscaled.
void fft_positive(Eigen::VectorXcd& x) {
  const Eigen::Index n = x.size();
  for (Eigen::Index i = 1, j = 0; i < n; ++i) {
    Eigen::Index bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x(i), x(j));
  }
  for (Eigen::Index len = 2; len <= n; len <<= 1) {
    const double angle = 2.0 * std::numbers::pi / static_cast<double>(len);
    for (Eigen::Index start = 0; start < n; start += len) {
      for (Eigen::Index k = 0; k < len / 2; ++k) {
        const cd w = std::polar(1.0, angle * static_cast<double>(k));
        const cd u = x(start + k);
        const cd v = x(start + k + len / 2) * w;
        x(start + k) = u + v;
        x(start + k + len / 2) = u - v;
      }
    }
  }
}

Eigen::VectorXcd dft_positive(const Eigen::VectorXcd& x) {
  const Eigen::Index n = x.size();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index m = 0; m < n; ++m) {
      const auto km = static_cast<double>((k * m) % n);
      out(k) += x(m) * std::polar(1.0, 2.0 * std::numbers::pi * km / static_cast<double>(n));
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(ScalingMode mode) {
  return mode == ScalingMode::UnitNorm ? "unit_norm" : "standardize";
}

ScalingMode parse_scaling_mode(std::string_view text) {
  if (text == "unit_norm") return ScalingMode::UnitNorm;
  if (text == "standardize") return ScalingMode::Standardize;
  throw std::invalid_argument("unknown scaling mode: " + std::string(text));
}

Eigen::VectorXcd angular_transform(const Eigen::VectorXcd& h) {
  if (h.size() < 1) throw std::invalid_argument("angular_transform: empty input");
  Eigen::VectorXcd out;
  if (is_power_of_two(h.size())) {
    out = h;
    fft_positive(out);
  } else {
    out = dft_positive(h);
  }
  return out / std::sqrt(static_cast<double>(h.size()));
}

FeatureSet extract_features(const CsiMatrix& csi, ScalingMode mode) {
  FeatureSet fs;
  fs.mode = mode;
  fs.values.resize(csi.rows(), csi.cols());
  for (Eigen::Index n = 0; n < csi.rows(); ++n) {
    const Eigen::VectorXcd row = csi.row(n).transpose();
    if (!row.allFinite()) throw std::invalid_argument("extract_features: non-finite CSI in row " + std::to_string(n));
    const double norm = row.norm();
    if (norm == 0.0)
      throw std::invalid_argument("extract_features: all-zero CSI row " + std::to_string(n));
    fs.values.row(n) = angular_transform(row / norm).cwiseAbs().transpose();
  }

  if (mode == ScalingMode::Standardize) {
    const double count = static_cast<double>(csi.rows());
    fs.mean = fs.values.colwise().sum() / count;
    fs.stddev.resize(fs.values.cols());
    for (Eigen::Index d = 0; d < fs.values.cols(); ++d) {
      const double var = (fs.values.col(d).array() - fs.mean(d)).square().sum() / count;
      fs.stddev(d) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    for (Eigen::Index n = 0; n < fs.values.rows(); ++n)
      fs.values.row(n) = (fs.values.row(n) - fs.mean).cwiseQuotient(fs.stddev);
  }
  return fs;
}

}  // namespace ccae
