#include "ccae/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ccae/random.hpp"

namespace ccae {

namespace {

constexpr std::uint64_t kPositionStream = 1;
constexpr std::uint64_t kAnchorStream = 2;

}  // namespace

double Area::diagonal() const { return std::hypot(x_max - x_min, y_max - y_min); }

void ScenarioConfig::validate() const {
  if (num_users < 1) throw std::invalid_argument("scenario: num_users must be >= 1");
  if (!(area.x_max > area.x_min) || !(area.y_max > area.y_min))
    throw std::invalid_argument("scenario: area extents must be nonempty");
  if (!(anchor_fraction >= 0.0 && anchor_fraction <= 1.0))
    throw std::invalid_argument("scenario: anchor_fraction must lie in [0, 1]");
  if (trajectory.num_points > num_users)
    throw std::invalid_argument("scenario: trajectory has more points than users");
}

bool UePlacement::is_anchor(std::size_t id) const {
  return std::binary_search(anchor_indices.begin(), anchor_indices.end(), id);
}

long UePlacement::trajectory_order(std::size_t id) const {
  const auto it = std::find(trajectory_indices.begin(), trajectory_indices.end(), id);
  return it == trajectory_indices.end() ? -1L : static_cast<long>(it - trajectory_indices.begin());
}

std::vector<Eigen::Vector3d> generate_trajectory(const ScenarioConfig& config) {
  const TrajectoryConfig& t = config.trajectory;
  if (!(t.step_length > 0.0)) throw std::invalid_argument("trajectory: step_length must be > 0");
  if (t.num_points < 2) throw std::invalid_argument("trajectory: num_points must be >= 2");
  if (t.shape == TrajectoryShape::SCurve && !(t.turn_period > 0.0))
    throw std::invalid_argument("trajectory: turn_period must be > 0");

  const double deg = std::numbers::pi / 180.0;
  std::vector<Eigen::Vector3d> points;
  points.reserve(t.num_points);
  Eigen::Vector3d p(t.start_x, t.start_y, config.user_height);
  for (std::size_t k = 0; k < t.num_points; ++k) {
    if (!config.area.contains(p.x(), p.y()))
      throw std::invalid_argument("trajectory: point " + std::to_string(k) +
                                  " leaves the scenario area");
    points.push_back(p);
    double heading = t.heading_deg;
    if (t.shape == TrajectoryShape::SCurve)
      heading += t.turn_amplitude_deg *
                 std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / t.turn_period);
    p.x() += t.step_length * std::cos(heading * deg);
    p.y() += t.step_length * std::sin(heading * deg);
  }
  return points;
}

std::vector<std::size_t> select_anchors(std::size_t num_users, double fraction,
                                        std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw std::invalid_argument("select_anchors: fraction must lie in [0, 1]");
  const auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(num_users)));
  std::vector<std::size_t> pool(num_users);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  Rng rng = Rng::derive(seed, kAnchorStream);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = k + rng.index(num_users - k);
    std::swap(pool[k], pool[pick]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

UePlacement generate_placement(const ScenarioConfig& config) {
  config.validate();
  UePlacement placement;
  placement.positions.reserve(config.num_users);
  if (config.trajectory.num_points > 0) {
    for (const auto& p : generate_trajectory(config)) {
      placement.trajectory_indices.push_back(placement.positions.size());
      placement.positions.push_back(p);
    }
  }
  Rng rng = Rng::derive(config.seed, kPositionStream);
  const Area& a = config.area;
  while (placement.positions.size() < config.num_users) {
    const double x = rng.uniform(a.x_min, a.x_max);
    const double y = rng.uniform(a.y_min, a.y_max);
    placement.positions.emplace_back(x, y, config.user_height);
  }
  placement.anchor_indices = select_anchors(config.num_users, config.anchor_fraction, config.seed);
  return placement;
}

}  // namespace ccae
