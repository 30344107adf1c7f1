#include <cmath>
#include <numbers>

#include "ccae/channel.hpp"
#include "ccae/features.hpp"
#include "ccae/random.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ccae;

namespace {

Eigen::VectorXcd random_vector(Rng& rng, Eigen::Index m) {
  Eigen::VectorXcd v(m);
  for (Eigen::Index k = 0; k < m; ++k) v(k) = {rng.normal(), rng.normal()};
  return v;
}

}  // namespace

TEST_CASE("angular transform of a constant is an impulse") {
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(4);
  const auto x = angular_transform(ones);
  CHECK(std::abs(x(0) - std::complex<double>(2.0, 0.0)) < 1e-12);
  for (Eigen::Index k = 1; k < 4; ++k) CHECK(std::abs(x(k)) < 1e-12);
}

TEST_CASE("angular transform matches a brute-force DFT and preserves norm") {
  Rng rng(17);
  for (Eigen::Index m : {1, 2, 3, 4, 5, 8, 12, 16, 32, 64}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto h = random_vector(rng, m);
      const auto x = angular_transform(h);
      CHECK((x - oracle::unitary_dft(h)).norm() < 1e-12 * std::max(1.0, h.norm()));
      CHECK(std::abs(x.norm() - h.norm()) < 1e-12 * h.norm());
    }
  }
}

TEST_CASE("half-wavelength steering vector at sin = 2k/M lands in bin k") {
  ArrayGeometry g;
  g.num_antennas = 32;
  for (Eigen::Index k = 0; k < 16; ++k) {
    const double s = 2.0 * static_cast<double>(k) / 32.0;
    const auto a = steering_vector(s, g);
    const auto x = angular_transform(a);
    const auto ref = oracle::unitary_dft(a);
    for (Eigen::Index b = 0; b < 32; ++b) {
      const double expected = b == k ? std::sqrt(32.0) : 0.0;
      CHECK(std::abs(std::abs(ref(b)) - expected) < 1e-9);
      CHECK(std::abs(std::abs(x(b)) - expected) < 1e-9);
    }
  }
}

TEST_CASE("unit-norm features") {
  CsiMatrix csi(1, 4);
  csi.row(0).setOnes();
  const auto f = extract_features(csi);
  CHECK(f.values(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  for (Eigen::Index k = 1; k < 4; ++k) CHECK(std::abs(f.values(0, k)) < 1e-12);

  Rng rng(23);
  CsiMatrix many(50, 32);
  for (Eigen::Index r = 0; r < 50; ++r) many.row(r) = random_vector(rng, 32).transpose() * (1.0 + r);
  const auto fs = extract_features(many);
  for (Eigen::Index r = 0; r < 50; ++r) {
    CHECK(std::abs(fs.values.row(r).norm() - 1.0) < 1e-9);
    CHECK(fs.values.row(r).minCoeff() >= 0.0);
  }
}

TEST_CASE("features are invariant to complex scaling of the CSI") {
  Rng rng(29);
  CsiMatrix csi(10, 16);
  for (Eigen::Index r = 0; r < 10; ++r) csi.row(r) = random_vector(rng, 16).transpose();
  const auto base = extract_features(csi);
  for (const std::complex<double> c : {std::complex<double>(5.0, 0.0), std::complex<double>(-0.3, 2.0),
                                       std::polar(1e-6, 1.0)}) {
    const CsiMatrix scaled = csi * c;
    CHECK((extract_features(scaled).values - base.values).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("zero CSI rows are rejected") {
  CsiMatrix csi = CsiMatrix::Ones(3, 4);
  csi.row(1).setZero();
  CHECK_THROWS_AS(extract_features(csi), std::invalid_argument);
}

TEST_CASE("standardized features have zero mean and unit variance") {
  Rng rng(31);
  CsiMatrix csi(200, 8);
  for (Eigen::Index r = 0; r < 200; ++r) csi.row(r) = random_vector(rng, 8).transpose();
  const auto f = extract_features(csi, ScalingMode::Standardize);
  CHECK(f.mode == ScalingMode::Standardize);
  REQUIRE(f.mean.size() == 8);
  for (Eigen::Index d = 0; d < 8; ++d) {
    const auto col = f.values.col(d);
    CHECK(std::abs(col.mean()) < 1e-12);
    CHECK(std::abs((col.array() - col.mean()).square().mean() - 1.0) < 1e-9);
  }
  CHECK(parse_scaling_mode(to_string(ScalingMode::Standardize)) == ScalingMode::Standardize);
  CHECK_THROWS_AS(parse_scaling_mode("minmax"), std::invalid_argument);
}
