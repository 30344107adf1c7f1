#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace ccae {

struct Area {
  double x_min = -500.0;
  double x_max = 500.0;
  double y_min = 0.0;
  double y_max = 500.0;

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  double diagonal() const;
};

enum class TrajectoryShape { Straight, SCurve };

/// Parametric moving-user path. The path is walked in fixed-length steps;
/// at step k the heading is
///   heading_deg + turn_amplitude_deg * sin(2*pi*k / turn_period)
/// (S-curve) or constant (straight), so every segment is exactly
/// `step_length` long.
struct TrajectoryConfig {
  double start_x = -300.0;
  double start_y = 250.0;
  double step_length = 5.0;
  std::size_t num_points = 100;  // 0 disables the trajectory
  TrajectoryShape shape = TrajectoryShape::SCurve;
  double heading_deg = 0.0;
  double turn_amplitude_deg = 60.0;
  double turn_period = 100.0;
};

struct ScenarioConfig {
  Area area;
  Eigen::Vector3d bs_position{0.0, 0.0, 10.0};
  double user_height = 1.5;
  std::size_t num_users = 2048;
  TrajectoryConfig trajectory;
  double anchor_fraction = 0.10;
  std::uint64_t seed = 1;

  void validate() const;
};

/// User positions. Trajectory users occupy indices [0, trajectory_indices.size())
/// in path order; anchors are sorted ascending.
struct UePlacement {
  std::vector<Eigen::Vector3d> positions;
  std::vector<std::size_t> trajectory_indices;
  std::vector<std::size_t> anchor_indices;

  std::size_t size() const { return positions.size(); }
  bool is_anchor(std::size_t id) const;
  /// Position of `id` along the trajectory, or -1.
  long trajectory_order(std::size_t id) const;
};

/// Ordered trajectory points. Throws std::invalid_argument on a bad step
/// length or point count, or if the path leaves the area.
std::vector<Eigen::Vector3d> generate_trajectory(const ScenarioConfig& config);

/// Trajectory points first, then uniform users over the area at fixed height;
/// anchors drawn with select_anchors. Deterministic in config.seed.
UePlacement generate_placement(const ScenarioConfig& config);

/// floor(fraction * N) distinct indices, uniform without replacement, sorted.
std::vector<std::size_t> select_anchors(std::size_t num_users, double fraction,
                                        std::uint64_t seed);

}  // namespace ccae
