#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ccae {

using PointMatrix = Eigen::MatrixXd;  // N x d, one point per row

/// Exact neighbor ranks under the Euclidean metric. Ties are broken by
/// ascending index; squared distances within a relative 1e-12 of each other
/// count as ties, so ranks survive rescaling of the point set.
class RankTable {
 public:
  RankTable() = default;
  explicit RankTable(const PointMatrix& points);

  std::size_t size() const { return n_; }
  /// k-th nearest neighbor of i, k in [1, N-1].
  std::uint32_t neighbor(std::size_t i, std::size_t k) const {
    return order_[i * (n_ - 1) + (k - 1)];
  }
  /// Rank of j among i's neighbors, in [1, N-1]; 0 when i == j.
  std::uint32_t rank(std::size_t i, std::size_t j) const { return rank_[i * n_ + j]; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {order_.data() + i * (n_ - 1), n_ - 1};
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> rank_;
};

inline RankTable neighbor_ranks(const PointMatrix& points) { return RankTable(points); }

/// Throws std::invalid_argument unless 1 <= K, K <= N-1 and 2N - 3K - 1 > 0.
void check_neighborhood_size(std::size_t n, std::size_t k);

double trustworthiness(const RankTable& reference, const RankTable& embedding, std::size_t k);
double continuity(const RankTable& reference, const RankTable& embedding, std::size_t k);
double trustworthiness(const PointMatrix& reference, const PointMatrix& embedding, std::size_t k);
double continuity(const PointMatrix& reference, const PointMatrix& embedding, std::size_t k);

/// Kruskal's stress with the least-squares scaling beta = sum(d d^) / sum(d^^2),
/// summed over all ordered pairs. Throws on a degenerate reference. A fully
/// collapsed embedding has beta = 0 and stress 1.
double kruskal_stress(const PointMatrix& reference, const PointMatrix& embedding);

enum class ReferenceSpace { TruePositions, FeatureSpace };

std::string_view to_string(ReferenceSpace space);
ReferenceSpace parse_reference_space(std::string_view text);

struct NeighborhoodScore {
  std::size_t k = 0;
  double trustworthiness = 0.0;
  double continuity = 0.0;
};

struct MetricsReport {
  std::vector<NeighborhoodScore> scores;
  double kruskal_stress = 0.0;
  ReferenceSpace reference = ReferenceSpace::TruePositions;
  std::size_t n = 0;

  /// Throws std::out_of_range if `k` was not evaluated.
  const NeighborhoodScore& at(std::size_t k) const;
};

/// {1, floor(0.025 N), floor(0.05 N)} with duplicates and invalid sizes removed.
std::vector<std::size_t> default_neighborhood_sizes(std::size_t n);

MetricsReport evaluate_embedding(const PointMatrix& reference, const PointMatrix& embedding,
                                 std::span<const std::size_t> ks, ReferenceSpace tag);

}  // namespace ccae
