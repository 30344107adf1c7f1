#include "ccae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ccae {

namespace {

// Relative tolerance on squared distances below which two neighbors tie.
constexpr double kTieTolerance = 1e-12;

}  // namespace

RankTable::RankTable(const PointMatrix& points) : n_(static_cast<std::size_t>(points.rows())) {
  if (n_ < 2) throw std::invalid_argument("neighbor ranks need at least 2 points");
  order_.resize(n_ * (n_ - 1));
  rank_.assign(n_ * n_, 0);
  std::vector<double> dist(n_);
  std::vector<std::uint32_t> idx;
  idx.reserve(n_ - 1);
  for (std::size_t i = 0; i < n_; ++i) {
    const auto row_i = points.row(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < n_; ++j)
      dist[j] = (points.row(static_cast<Eigen::Index>(j)) - row_i).squaredNorm();
    idx.clear();
    for (std::size_t j = 0; j < n_; ++j)
      if (j != i) idx.push_back(static_cast<std::uint32_t>(j));
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    });
    // Distances equal up to rounding count as ties and go back to index order.
    for (std::size_t start = 0; start < idx.size();) {
      std::size_t end = start + 1;
      while (end < idx.size() && dist[idx[end]] - dist[idx[start]] <= kTieTolerance * dist[idx[end]]) ++end;
      if (end - start > 1) std::sort(idx.begin() + static_cast<std::ptrdiff_t>(start), idx.begin() + static_cast<std::ptrdiff_t>(end));
      start = end;
    }
    std::copy(idx.begin(), idx.end(), order_.begin() + static_cast<std::ptrdiff_t>(i * (n_ - 1)));
    for (std::size_t k = 0; k < idx.size(); ++k)
      rank_[i * n_ + idx[k]] = static_cast<std::uint32_t>(k + 1);
  }
}

void check_neighborhood_size(std::size_t n, std::size_t k) {
  if (k < 1 || k + 1 > n || 2 * n <= 3 * k + 1)
    throw std::invalid_argument("neighborhood size K=" + std::to_string(k) +
                                " out of range for N=" + std::to_string(n));
}

namespace {

// Sum over i of (rank_in_a(i, j) - K) for the K-neighbors j of i in `b`
// that are not K-neighbors of i in `a`.
double rank_penalty_sum(const RankTable& a, const RankTable& b, std::size_t k) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t r = 1; r <= k; ++r) {
      const std::size_t j = b.neighbor(i, r);
      const std::uint32_t rank_a = a.rank(i, j);
      if (rank_a > k) total += static_cast<double>(rank_a - k);
    }
  }
  return total;
}

double neighborhood_score(const RankTable& a, const RankTable& b, std::size_t k) {
  if (a.size() != b.size()) throw std::invalid_argument("point sets differ in size");
  check_neighborhood_size(a.size(), k);
  const double n = static_cast<double>(a.size());
  const double kk = static_cast<double>(k);
  const double norm = 2.0 / (n * kk * (2.0 * n - 3.0 * kk - 1.0));
  return 1.0 - norm * rank_penalty_sum(a, b, k);
}

}  // namespace

double trustworthiness(const RankTable& reference, const RankTable& embedding, std::size_t k) {
  return neighborhood_score(reference, embedding, k);
}

double continuity(const RankTable& reference, const RankTable& embedding, std::size_t k) {
  return neighborhood_score(embedding, reference, k);
}

double trustworthiness(const PointMatrix& reference, const PointMatrix& embedding, std::size_t k) {
  if (reference.rows() != embedding.rows()) throw std::invalid_argument("point sets differ in size");
  check_neighborhood_size(static_cast<std::size_t>(reference.rows()), k);
  return trustworthiness(RankTable(reference), RankTable(embedding), k);
}

double continuity(const PointMatrix& reference, const PointMatrix& embedding, std::size_t k) {
  if (reference.rows() != embedding.rows()) throw std::invalid_argument("point sets differ in size");
  check_neighborhood_size(static_cast<std::size_t>(reference.rows()), k);
  return continuity(RankTable(reference), RankTable(embedding), k);
}

double kruskal_stress(const PointMatrix& reference, const PointMatrix& embedding) {
  const Eigen::Index n = reference.rows();
  if (n != embedding.rows()) throw std::invalid_argument("point sets differ in size");
  if (n < 2) throw std::invalid_argument("Kruskal stress needs at least 2 points");

  // Ordered pairs (n, m) and (m, n) contribute equally; the diagonal is zero.
  double ref_sq = 0.0, cross = 0.0, emb_sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = (reference.row(i) - reference.row(j)).norm();
      const double dh = (embedding.row(i) - embedding.row(j)).norm();
      ref_sq += d * d;
      cross += d * dh;
      emb_sq += dh * dh;
    }
  }
  if (ref_sq == 0.0) throw std::invalid_argument("Kruskal stress: degenerate reference");
  const double beta = emb_sq > 0.0 ? cross / emb_sq : 0.0;

  double residual = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = (reference.row(i) - reference.row(j)).norm();
      const double dh = (embedding.row(i) - embedding.row(j)).norm();
      const double e = d - beta * dh;
      residual += e * e;
    }
  }
  return std::sqrt(residual / ref_sq);
}

std::string_view to_string(ReferenceSpace space) {
  return space == ReferenceSpace::TruePositions ? "true_positions" : "feature_space";
}

ReferenceSpace parse_reference_space(std::string_view text) {
  if (text == "true_positions") return ReferenceSpace::TruePositions;
  if (text == "feature_space") return ReferenceSpace::FeatureSpace;
  throw std::invalid_argument("unknown reference space: " + std::string(text));
}

const NeighborhoodScore& MetricsReport::at(std::size_t k) const {
  for (const auto& s : scores)
    if (s.k == k) return s;
  throw std::out_of_range("K=" + std::to_string(k) + " not in report");
}

std::vector<std::size_t> default_neighborhood_sizes(std::size_t n) {
  std::vector<std::size_t> ks;
  const double nn = static_cast<double>(n);
  for (std::size_t k : {std::size_t{1}, static_cast<std::size_t>(std::floor(0.025 * nn)),
                        static_cast<std::size_t>(std::floor(0.05 * nn))}) {
    if (k < 1 || k + 1 > n || 2 * n <= 3 * k + 1) continue;
    if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
  }
  return ks;
}

MetricsReport evaluate_embedding(const PointMatrix& reference, const PointMatrix& embedding,
                                 std::span<const std::size_t> ks, ReferenceSpace tag) {
  if (reference.rows() != embedding.rows()) throw std::invalid_argument("point sets differ in size");
  const auto n = static_cast<std::size_t>(reference.rows());
  for (std::size_t k : ks) check_neighborhood_size(n, k);
  MetricsReport report;
  report.reference = tag;
  report.n = n;
  const RankTable ref_ranks(reference);
  const RankTable emb_ranks(embedding);
  for (std::size_t k : ks)
    report.scores.push_back({k, trustworthiness(ref_ranks, emb_ranks, k),
                             continuity(ref_ranks, emb_ranks, k)});
  report.kruskal_stress = kruskal_stress(reference, embedding);
  return report;
}

}  // namespace ccae
