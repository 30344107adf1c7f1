#include "ccae/constraints.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ccae {

namespace {

const Eigen::VectorXd& partner(const Constraint& c, const Eigen::VectorXd& y_i,
                               const Eigen::VectorXd* y_j) {
  if (is_absolute(c.kind)) {
    if (y_j != nullptr)
      throw std::invalid_argument(std::string(to_string(c.kind)) + " takes no second operand");
    if (!c.anchor) throw std::invalid_argument(std::string(to_string(c.kind)) + " missing anchor");
    if (c.anchor->size() != y_i.size())
      throw std::invalid_argument("anchor dimension does not match the representation");
    return *c.anchor;
  }
  if (y_j == nullptr)
    throw std::invalid_argument(std::string(to_string(c.kind)) + " requires a second operand");
  if (y_j->size() != y_i.size())
    throw std::invalid_argument("representation dimensions differ");
  return *y_j;
}

// Signed residual r such that penalty = r^2 and grad = 2 r (delta / |delta|).
double residual(const Constraint& c, double distance) {
  const double r = distance - c.target;
  return is_maximum(c.kind) ? std::max(r, 0.0) : r;
}

}  // namespace

std::string_view to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::FAD:
      return "FAD";
    case ConstraintKind::FRD:
      return "FRD";
    case ConstraintKind::MAD:
      return "MAD";
    case ConstraintKind::MRD:
      return "MRD";
  }
  return "?";
}

ConstraintKind parse_constraint_kind(std::string_view text) {
  for (auto k : {ConstraintKind::FAD, ConstraintKind::FRD, ConstraintKind::MAD, ConstraintKind::MRD})
    if (text == to_string(k)) return k;
  throw std::invalid_argument("unknown constraint kind: " + std::string(text));
}

void Constraint::validate() const {
  if (!(target >= 0.0)) throw std::invalid_argument("constraint target distance must be >= 0");
  if (!(weight >= 0.0)) throw std::invalid_argument("constraint weight must be >= 0");
  if (is_absolute(kind)) {
    if (!anchor || j) throw std::invalid_argument("absolute constraints need an anchor and no j");
  } else {
    if (anchor || !j) throw std::invalid_argument("relative constraints need j and no anchor");
    if (*j == i) throw std::invalid_argument("relative constraints need j != i");
  }
}

std::size_t ConstraintSet::count(ConstraintKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [&](const Constraint& c) { return c.kind == kind; }));
}

void ConstraintSet::append(const ConstraintSet& other) {
  items.insert(items.end(), other.items.begin(), other.items.end());
}

void ConstraintSet::validate(std::size_t num_points) const {
  for (const auto& c : items) {
    c.validate();
    if (c.i >= num_points || (c.j && *c.j >= num_points))
      throw std::invalid_argument("constraint index out of range");
  }
}

double penalty(const Constraint& c, const Eigen::VectorXd& y_i, const Eigen::VectorXd* y_j) {
  const Eigen::VectorXd& other = partner(c, y_i, y_j);
  const double r = residual(c, (y_i - other).norm());
  return r * r;
}

PairGradient penalty_gradient(const Constraint& c, const Eigen::VectorXd& y_i,
                              const Eigen::VectorXd* y_j) {
  const Eigen::VectorXd& other = partner(c, y_i, y_j);
  const Eigen::VectorXd delta = y_i - other;
  const double distance = delta.norm();
  PairGradient g;
  if (distance == 0.0) {
    g.grad_i = Eigen::VectorXd::Zero(y_i.size());
  } else {
    g.grad_i = (2.0 * residual(c, distance) / distance) * delta;
  }
  if (!is_absolute(c.kind)) g.grad_j = -g.grad_i;
  return g;
}

ConstraintSet build_anchor_constraints(std::span<const std::size_t> anchor_indices,
                                       std::span<const Eigen::Vector3d> positions, double weight) {
  ConstraintSet set;
  set.items.reserve(anchor_indices.size());
  for (std::size_t idx : anchor_indices) {
    if (idx >= positions.size())
      throw std::invalid_argument("anchor index " + std::to_string(idx) + " out of range");
    Constraint c;
    c.kind = ConstraintKind::FAD;
    c.i = idx;
    c.anchor = Eigen::Vector2d(positions[idx].x(), positions[idx].y());
    c.target = 0.0;
    c.weight = weight;
    set.items.push_back(std::move(c));
  }
  return set;
}

ConstraintSet build_trajectory_constraints(std::span<const std::size_t> trajectory_indices,
                                           double d_max, std::size_t lag_max, double weight) {
  if (trajectory_indices.size() < 2)
    throw std::invalid_argument("trajectory constraints need at least 2 points");
  if (!(d_max > 0.0)) throw std::invalid_argument("d_max must be > 0");
  if (lag_max < 1) throw std::invalid_argument("lag_max must be >= 1");
  ConstraintSet set;
  for (std::size_t lag = 1; lag <= lag_max; ++lag) {
    for (std::size_t k = 0; k + lag < trajectory_indices.size(); ++k) {
      Constraint c;
      c.kind = ConstraintKind::MRD;
      c.i = trajectory_indices[k];
      c.j = trajectory_indices[k + lag];
      c.target = static_cast<double>(lag) * d_max;
      c.weight = weight;
      set.items.push_back(std::move(c));
    }
  }
  return set;
}

std::vector<std::size_t> sample_constraints(const ConstraintSet& set, std::size_t batch_size,
                                            Rng& rng) {
  std::vector<std::size_t> batch;
  if (set.empty()) return batch;
  batch.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) batch.push_back(rng.index(set.size()));
  return batch;
}

std::vector<std::size_t> referenced_indices(const ConstraintSet& set,
                                            std::span<const std::size_t> batch) {
  std::vector<std::size_t> out;
  for (std::size_t b : batch) {
    const Constraint& c = set.items.at(b);
    out.push_back(c.i);
    if (c.j) out.push_back(*c.j);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

BottleneckGradients accumulate_bottleneck_gradients(const ConstraintSet& set,
                                                    std::span<const std::size_t> batch,
                                                    std::span<const std::size_t> indices,
                                                    const Matrix& embeddings,
                                                    const KindWeights& lambdas) {
  if (static_cast<std::size_t>(embeddings.rows()) != indices.size())
    throw std::invalid_argument("one embedding row per referenced index is required");
  auto row_of = [&](std::size_t id) {
    const auto it = std::lower_bound(indices.begin(), indices.end(), id);
    if (it == indices.end() || *it != id)
      throw std::invalid_argument("no embedding for datapoint " + std::to_string(id));
    return static_cast<Eigen::Index>(it - indices.begin());
  };

  BottleneckGradients out;
  out.indices.assign(indices.begin(), indices.end());
  out.gradients = Matrix::Zero(embeddings.rows(), embeddings.cols());
  for (std::size_t b : batch) {
    const Constraint& c = set.items.at(b);
    const double scale = lambdas[c.kind] * c.weight;
    const Eigen::Index ri = row_of(c.i);
    const Eigen::VectorXd y_i = embeddings.row(ri).transpose();
    if (c.j) {
      const Eigen::Index rj = row_of(*c.j);
      const Eigen::VectorXd y_j = embeddings.row(rj).transpose();
      out.penalty += scale * penalty(c, y_i, &y_j);
      const PairGradient g = penalty_gradient(c, y_i, &y_j);
      out.gradients.row(ri) += scale * g.grad_i.transpose();
      out.gradients.row(rj) += scale * g.grad_j->transpose();
    } else {
      out.penalty += scale * penalty(c, y_i);
      out.gradients.row(ri) += scale * penalty_gradient(c, y_i).grad_i.transpose();
    }
  }
  return out;
}

}  // namespace ccae
