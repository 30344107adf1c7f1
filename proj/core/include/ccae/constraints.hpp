#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ccae/nn.hpp"
#include "ccae/random.hpp"

namespace ccae {

/// Fixed/maximum, absolute/relative pairwise distance constraints.
enum class ConstraintKind : std::uint8_t { FAD = 0, FRD = 1, MAD = 2, MRD = 3 };

std::string_view to_string(ConstraintKind kind);
ConstraintKind parse_constraint_kind(std::string_view text);

constexpr bool is_absolute(ConstraintKind k) {
  return k == ConstraintKind::FAD || k == ConstraintKind::MAD;
}
constexpr bool is_maximum(ConstraintKind k) {
  return k == ConstraintKind::MAD || k == ConstraintKind::MRD;
}

struct Constraint {
  ConstraintKind kind = ConstraintKind::FAD;
  std::size_t i = 0;
  std::optional<std::size_t> j;         // relative kinds
  std::optional<Eigen::VectorXd> anchor;  // absolute kinds
  double target = 0.0;                  // distance bound, >= 0
  double weight = 1.0;

  /// Throws std::invalid_argument if the operand layout does not match `kind`.
  void validate() const;
};

struct ConstraintSet {
  std::vector<Constraint> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  std::size_t count(ConstraintKind kind) const;
  void append(const ConstraintSet& other);
  /// Validates every constraint and checks indices against `num_points`.
  void validate(std::size_t num_points) const;
};

/// FAD/FRD: (||y_i - y_j|| - d)^2. MAD/MRD: max(||y_i - y_j|| - d, 0)^2.
/// Absolute kinds take y_j from the constraint's anchor and must not be given one.
double penalty(const Constraint& c, const Eigen::VectorXd& y_i,
               const Eigen::VectorXd* y_j = nullptr);

struct PairGradient {
  Eigen::VectorXd grad_i;
  std::optional<Eigen::VectorXd> grad_j;  // relative kinds only
};

/// Generalized gradient of penalty(). Zero at ||y_i - y_j|| = 0.
PairGradient penalty_gradient(const Constraint& c, const Eigen::VectorXd& y_i,
                              const Eigen::VectorXd* y_j = nullptr);

/// One FAD constraint (d = 0) per anchor, pinned to the anchor's true (x, y).
ConstraintSet build_anchor_constraints(std::span<const std::size_t> anchor_indices,
                                       std::span<const Eigen::Vector3d> positions,
                                       double weight = 1.0);

/// MRD between trajectory points k and k + l for 1 <= l <= lag_max, with
/// bound l * d_max.
ConstraintSet build_trajectory_constraints(std::span<const std::size_t> trajectory_indices,
                                           double d_max, std::size_t lag_max,
                                           double weight = 1.0);

/// Positions into `set.items`, drawn uniformly with replacement. Empty when
/// the set is empty.
std::vector<std::size_t> sample_constraints(const ConstraintSet& set, std::size_t batch_size,
                                            Rng& rng);

struct KindWeights {
  std::array<double, 4> values{1.0, 1.0, 1.0, 1.0};  // indexed by ConstraintKind

  double operator[](ConstraintKind k) const { return values[static_cast<std::size_t>(k)]; }
  double& operator[](ConstraintKind k) { return values[static_cast<std::size_t>(k)]; }
};

/// Sorted distinct datapoint indices referenced by `batch`.
std::vector<std::size_t> referenced_indices(const ConstraintSet& set,
                                            std::span<const std::size_t> batch);

struct BottleneckGradients {
  std::vector<std::size_t> indices;  // datapoint of each gradient row
  Matrix gradients;                  // |indices| x D'
  double penalty = 0.0;              // sum of lambda * weight * penalty
};

/// Sums lambda_kind * weight * penalty_gradient over `batch`. `embeddings`
/// row r holds the representation of datapoint `indices[r]`, where `indices`
/// is referenced_indices(set, batch). Summation follows batch order.
BottleneckGradients accumulate_bottleneck_gradients(const ConstraintSet& set,
                                                    std::span<const std::size_t> batch,
                                                    std::span<const std::size_t> indices,
                                                    const Matrix& embeddings,
                                                    const KindWeights& lambdas);

}  // namespace ccae
