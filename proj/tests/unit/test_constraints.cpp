#include <cmath>
#include <map>

#include "ccae/constraints.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ccae;

namespace {

Constraint absolute(ConstraintKind kind, Eigen::VectorXd anchor, double target) {
  Constraint c;
  c.kind = kind;
  c.i = 0;
  c.anchor = std::move(anchor);
  c.target = target;
  return c;
}

Constraint relative(ConstraintKind kind, std::size_t i, std::size_t j, double target) {
  Constraint c;
  c.kind = kind;
  c.i = i;
  c.j = j;
  c.target = target;
  return c;
}

Eigen::VectorXd v2(double a, double b) { return Eigen::Vector2d(a, b); }

Eigen::VectorXd random_vec(Rng& rng, Eigen::Index d, double scale) {
  Eigen::VectorXd v(d);
  for (Eigen::Index k = 0; k < d; ++k) v(k) = scale * rng.normal();
  return v;
}

constexpr ConstraintKind kAllKinds[] = {ConstraintKind::FAD, ConstraintKind::FRD, ConstraintKind::MAD,
                                        ConstraintKind::MRD};

}  // namespace

TEST_CASE("penalty examples") {
  CHECK(penalty(absolute(ConstraintKind::FAD, v2(3, 4), 0.0), v2(3, 4)) == 0.0);
  const Eigen::VectorXd a = v2(5, 0), b = v2(0, 0);
  CHECK(penalty(relative(ConstraintKind::FRD, 0, 1, 3.0), a, &b) == doctest::Approx(4.0));
  const Eigen::VectorXd c = v2(2, 0);
  CHECK(penalty(relative(ConstraintKind::MRD, 0, 1, 3.0), c, &b) == 0.0);
  CHECK(penalty(relative(ConstraintKind::MRD, 0, 1, 3.0), a, &b) == doctest::Approx(4.0));
  CHECK(penalty(absolute(ConstraintKind::MAD, v2(0, 0), 1.0), v2(0, 0.5)) == 0.0);
}

TEST_CASE("penalty_gradient examples") {
  const Eigen::VectorXd yi = v2(3, 0), yj = v2(0, 0);
  const auto g = penalty_gradient(relative(ConstraintKind::FRD, 0, 1, 1.0), yi, &yj);
  CHECK((g.grad_i - v2(4, 0)).norm() < 1e-15);
  REQUIRE(g.grad_j);
  CHECK((*g.grad_j - v2(-4, 0)).norm() < 1e-15);

  const auto inside = penalty_gradient(relative(ConstraintKind::MRD, 0, 1, 5.0), yi, &yj);
  CHECK(inside.grad_i.isZero(0.0));
  CHECK(inside.grad_j->isZero(0.0));

  const auto fad = penalty_gradient(absolute(ConstraintKind::FAD, v2(1, 1), 0.0), v2(2, 3));
  CHECK(!fad.grad_j);
  CHECK((fad.grad_i - 2.0 * v2(1, 2)).norm() < 1e-14);
}

TEST_CASE("coincident points and exact satisfaction give zero gradients") {
  for (ConstraintKind kind : kAllKinds) {
    const Eigen::VectorXd y = v2(1.5, -2.0);
    if (is_absolute(kind)) {
      CHECK(penalty_gradient(absolute(kind, y, 2.0), y).grad_i.isZero(0.0));
      CHECK(penalty_gradient(absolute(kind, v2(0, 0), 5.0), v2(3, 4)).grad_i.isZero(0.0));
    } else {
      const Eigen::VectorXd same = y;
      CHECK(penalty_gradient(relative(kind, 0, 1, 2.0), y, &same).grad_i.isZero(0.0));
      const Eigen::VectorXd o = v2(0, 0), p = v2(3, 4);
      const auto g = penalty_gradient(relative(kind, 0, 1, 5.0), p, &o);
      CHECK(g.grad_i.isZero(0.0));
      CHECK(g.grad_j->isZero(0.0));
    }
  }
}

TEST_CASE("operand errors") {
  const Eigen::VectorXd y = v2(0, 0);
  CHECK_THROWS_AS(penalty(relative(ConstraintKind::FRD, 0, 1, 1.0), y), std::invalid_argument);
  CHECK_THROWS_AS(penalty(absolute(ConstraintKind::FAD, y, 0.0), y, &y), std::invalid_argument);
  Constraint no_anchor;
  no_anchor.kind = ConstraintKind::MAD;
  CHECK_THROWS_AS(penalty_gradient(no_anchor, y), std::invalid_argument);
  CHECK_THROWS_AS(penalty(absolute(ConstraintKind::FAD, Eigen::Vector3d(0, 0, 0), 0.0), y), std::invalid_argument);
  CHECK_THROWS_AS(relative(ConstraintKind::MRD, 2, 2, 1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(relative(ConstraintKind::MRD, 0, 1, -1.0).validate(), std::invalid_argument);
}

TEST_CASE("generalized gradients match finite differences away from kinks") {
  Rng rng(404);
  int checked = 0;
  for (ConstraintKind kind : kAllKinds) {
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.index(4));
      const Eigen::VectorXd yi = random_vec(rng, d, 2.0);
      const Eigen::VectorXd yj = random_vec(rng, d, 2.0);
      const double target = rng.uniform(0.0, 4.0);
      const double dist = (yi - yj).norm();
      if (std::abs(dist - target) < 1e-3 || dist < 1e-3) continue;

      const Constraint c = is_absolute(kind) ? absolute(kind, yj, target) : relative(kind, 0, 1, target);
      const auto g = is_absolute(kind) ? penalty_gradient(c, yi) : penalty_gradient(c, yi, &yj);

      auto f_i = [&](const Eigen::VectorXd& y) { return is_absolute(kind) ? penalty(c, y) : penalty(c, y, &yj); };
      const Eigen::VectorXd num_i = oracle::central_difference(f_i, yi);
      if (g.grad_i.norm() == 0.0) {
        CHECK(num_i.norm() < 1e-9);
      } else {
        CHECK(oracle::relative_error(g.grad_i, num_i) < 1e-6);
      }
      if (!is_absolute(kind)) {
        auto f_j = [&](const Eigen::VectorXd& y) { return penalty(c, yi, &y); };
        const Eigen::VectorXd num_j = oracle::central_difference(f_j, yj);
        if (g.grad_j->norm() == 0.0) {
          CHECK(num_j.norm() < 1e-9);
        } else {
          CHECK(oracle::relative_error(*g.grad_j, num_j) < 1e-6);
        }
      }
      ++checked;
    }
  }
  CHECK(checked >= 380);
}

TEST_CASE("zero target makes fixed and maximum kinds identical") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd yi = random_vec(rng, 2, 3.0), yj = random_vec(rng, 2, 3.0);
    const auto fad = absolute(ConstraintKind::FAD, yj, 0.0);
    const auto mad = absolute(ConstraintKind::MAD, yj, 0.0);
    CHECK(penalty(fad, yi) == penalty(mad, yi));
    CHECK(penalty_gradient(fad, yi).grad_i == penalty_gradient(mad, yi).grad_i);

    const auto frd = relative(ConstraintKind::FRD, 0, 1, 0.0);
    const auto mrd = relative(ConstraintKind::MRD, 0, 1, 0.0);
    CHECK(penalty(frd, yi, &yj) == penalty(mrd, yi, &yj));
    const auto gf = penalty_gradient(frd, yi, &yj), gm = penalty_gradient(mrd, yi, &yj);
    CHECK(gf.grad_i == gm.grad_i);
    CHECK(*gf.grad_j == *gm.grad_j);
  }
}

TEST_CASE("relative gradients are exactly antisymmetric; penalties nonnegative") {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd yi = random_vec(rng, 3, 1.0), yj = random_vec(rng, 3, 1.0);
    const double target = rng.uniform(0.0, 2.0);
    for (ConstraintKind kind : {ConstraintKind::FRD, ConstraintKind::MRD}) {
      const auto c = relative(kind, 0, 1, target);
      const auto g = penalty_gradient(c, yi, &yj);
      CHECK(*g.grad_j == -g.grad_i);
      CHECK(penalty(c, yi, &yj) >= 0.0);
    }
    const auto mrd = relative(ConstraintKind::MRD, 0, 1, target);
    CHECK((penalty(mrd, yi, &yj) == 0.0) == ((yi - yj).norm() <= target));
  }
}

TEST_CASE("FRD with zero target pulls y_i toward y_j") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd yi = random_vec(rng, 2, 1.0), yj = random_vec(rng, 2, 1.0);
    const auto g = penalty_gradient(relative(ConstraintKind::FRD, 0, 1, 0.0), yi, &yj);
    // Descent direction -grad points toward y_j.
    CHECK(g.grad_i.dot(yj - yi) < 0.0);
  }
}

TEST_CASE("anchor constraints") {
  const std::vector<Eigen::Vector3d> positions{{1, 2, 1.5}, {3, 4, 1.5}, {5, 6, 1.5}, {-7, 8, 1.5}};
  CHECK(build_anchor_constraints({}, positions).empty());
  const std::vector<std::size_t> anchors{1, 3};
  const auto set = build_anchor_constraints(anchors, positions, 2.0);
  REQUIRE(set.size() == 2);
  CHECK(set.count(ConstraintKind::FAD) == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& c = set.items[k];
    CHECK(c.i == anchors[k]);
    CHECK(c.target == 0.0);
    CHECK(c.weight == 2.0);
    CHECK((*c.anchor - v2(positions[anchors[k]].x(), positions[anchors[k]].y())).norm() == 0.0);
  }
  const std::vector<std::size_t> bad{4};
  CHECK_THROWS_AS(build_anchor_constraints(bad, positions), std::invalid_argument);

  std::vector<Eigen::Vector3d> many(2048, Eigen::Vector3d::Zero());
  std::vector<std::size_t> idx(204);
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = 10 * k;
  const auto big = build_anchor_constraints(idx, many);
  CHECK(big.size() == 204);
  for (const auto& c : big.items) CHECK(c.target == 0.0);
}

TEST_CASE("trajectory constraints") {
  const std::vector<std::size_t> two{7, 3};
  const auto one = build_trajectory_constraints(two, 4.0, 1);
  REQUIRE(one.size() == 1);
  CHECK(one.items[0].kind == ConstraintKind::MRD);
  CHECK(one.items[0].i == 7);
  CHECK(*one.items[0].j == 3);
  CHECK(one.items[0].target == 4.0);

  std::vector<std::size_t> traj(10);
  for (std::size_t k = 0; k < 10; ++k) traj[k] = 100 + k;
  CHECK(build_trajectory_constraints(traj, 1.0, 1).size() == 9);

  // Enumerate (k, k + l) pairs for l <= 3 and compare.
  const auto lagged = build_trajectory_constraints(traj, 2.5, 3);
  std::map<std::pair<std::size_t, std::size_t>, double> expected;
  for (std::size_t a = 0; a < 10; ++a)
    for (std::size_t b = a + 1; b < 10 && b - a <= 3; ++b) expected[{traj[a], traj[b]}] = 2.5 * static_cast<double>(b - a);
  CHECK(expected.size() == 24);
  REQUIRE(lagged.size() == 24);
  for (const auto& c : lagged.items) {
    const auto it = expected.find({c.i, *c.j});
    REQUIRE(it != expected.end());
    CHECK(c.target == it->second);
  }

  CHECK_THROWS_AS(build_trajectory_constraints(std::vector<std::size_t>{1}, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_trajectory_constraints(traj, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_trajectory_constraints(traj, 1.0, 0), std::invalid_argument);
}

TEST_CASE("constraint sampling") {
  ConstraintSet single;
  single.items.push_back(relative(ConstraintKind::MRD, 0, 1, 1.0));
  Rng rng(1);
  CHECK(sample_constraints(single, 5, rng) == std::vector<std::size_t>(5, 0));

  ConstraintSet empty;
  CHECK(sample_constraints(empty, 8, rng).empty());

  ConstraintSet set;
  for (std::size_t k = 0; k < 10; ++k) set.items.push_back(relative(ConstraintKind::MRD, k, k + 1, 1.0));
  Rng a(77), b(77);
  CHECK(sample_constraints(set, 32, a) == sample_constraints(set, 32, b));

  // 1e5 draws: each count within 3 sigma of the multinomial mean, and a
  // chi-square statistic below the 0.999 quantile for 9 dof (27.88).
  Rng c(5);
  const auto draws = sample_constraints(set, 100000, c);
  std::vector<double> counts(10, 0.0);
  for (std::size_t d : draws) counts[d] += 1.0;
  const double mean = 1e4, sigma = std::sqrt(1e5 * 0.1 * 0.9);
  double chi2 = 0.0;
  for (double n : counts) {
    CHECK(std::abs(n - mean) < 3.0 * sigma);
    chi2 += (n - mean) * (n - mean) / mean;
  }
  CHECK(chi2 < 27.88);
}

TEST_CASE("bottleneck gradient accumulation") {
  KindWeights lambdas;
  lambdas[ConstraintKind::FAD] = 3.0;
  lambdas[ConstraintKind::MRD] = 0.5;

  SUBCASE("satisfied MRD batch gives nothing") {
    ConstraintSet set;
    set.items.push_back(relative(ConstraintKind::MRD, 0, 1, 10.0));
    set.items.push_back(relative(ConstraintKind::MRD, 1, 2, 10.0));
    const std::vector<std::size_t> batch{0, 1, 1};
    const auto refs = referenced_indices(set, batch);
    CHECK(refs == std::vector<std::size_t>{0, 1, 2});
    Matrix y(3, 2);
    y << 0, 0, 1, 1, 2, 0;
    const auto acc = accumulate_bottleneck_gradients(set, batch, refs, y, lambdas);
    CHECK(acc.penalty == 0.0);
    CHECK(acc.gradients.isZero(0.0));
  }

  SUBCASE("single FAD at zero target") {
    ConstraintSet set;
    Constraint c = absolute(ConstraintKind::FAD, v2(10, 20), 0.0);
    c.i = 4;
    set.items.push_back(c);
    const std::vector<std::size_t> batch{0};
    const auto refs = referenced_indices(set, batch);
    Matrix y(1, 2);
    y << 13, 16;
    const auto acc = accumulate_bottleneck_gradients(set, batch, refs, y, lambdas);
    CHECK(acc.indices == std::vector<std::size_t>{4});
    CHECK(acc.gradients(0, 0) == doctest::Approx(2.0 * 3.0 * 3.0));
    CHECK(acc.gradients(0, 1) == doctest::Approx(2.0 * 3.0 * -4.0));
    CHECK(acc.penalty == doctest::Approx(3.0 * 25.0));
  }

  SUBCASE("total matches finite differences of the weighted penalty sum") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      ConstraintSet set;
      for (int k = 0; k < 12; ++k) {
        const auto kind = kAllKinds[rng.index(4)];
        Constraint c;
        c.kind = kind;
        c.i = rng.index(6);
        if (is_absolute(kind)) {
          c.anchor = random_vec(rng, 2, 2.0);
        } else {
          c.j = (c.i + 1 + rng.index(5)) % 6;
        }
        c.target = rng.uniform(0.0, 1.5);
        c.weight = rng.uniform(0.5, 2.0);
        set.items.push_back(c);
      }
      KindWeights lam;
      for (double& l : lam.values) l = rng.uniform(0.1, 3.0);
      const auto batch = sample_constraints(set, 20, rng);
      const auto refs = referenced_indices(set, batch);
      Matrix y(static_cast<Eigen::Index>(refs.size()), 2);
      for (Eigen::Index r = 0; r < y.rows(); ++r) y.row(r) = random_vec(rng, 2, 2.0).transpose();

      const auto acc = accumulate_bottleneck_gradients(set, batch, refs, y, lam);
      auto total = [&](const Eigen::VectorXd& flat) {
        const Matrix yy = Eigen::Map<const Matrix>(flat.data(), y.rows(), y.cols());
        return accumulate_bottleneck_gradients(set, batch, refs, yy, lam).penalty;
      };
      const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
      // Skip instances that sit on a kink.
      bool near_kink = false;
      for (std::size_t b : batch) {
        const auto& c = set.items[b];
        const auto ri = static_cast<Eigen::Index>(std::lower_bound(refs.begin(), refs.end(), c.i) - refs.begin());
        const Eigen::VectorXd other = c.j ? Eigen::VectorXd(y.row(static_cast<Eigen::Index>(
                                                std::lower_bound(refs.begin(), refs.end(), *c.j) - refs.begin())).transpose())
                                          : *c.anchor;
        const double dist = (Eigen::VectorXd(y.row(ri).transpose()) - other).norm();
        if (std::abs(dist - c.target) < 1e-3 || dist < 1e-3) near_kink = true;
      }
      if (near_kink) continue;
      const Eigen::VectorXd numeric = oracle::central_difference(total, flat);
      const Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(acc.gradients.data(), acc.gradients.size());
      CHECK(oracle::relative_error(analytic, numeric) < 1e-6);
    }
  }
}

TEST_CASE("constraint set validation and kind names") {
  ConstraintSet set;
  set.items.push_back(relative(ConstraintKind::FRD, 0, 5, 1.0));
  CHECK_NOTHROW(set.validate(6));
  CHECK_THROWS_AS(set.validate(5), std::invalid_argument);
  for (ConstraintKind k : kAllKinds) CHECK(parse_constraint_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_constraint_kind("XYZ"), std::invalid_argument);
}
