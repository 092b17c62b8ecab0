#include <doctest.h>

#include <cmath>

#include "posekit/error.hpp"
#include "posekit/losses.hpp"
#include "posekit/random.hpp"

using namespace posekit;

namespace {

PointRoleWeights roles_of(std::vector<PointRole> roles, double wk = 2.0,
                          double wb = 0.0, double wo = 1.0) {
  PointRoleWeights w;
  w.w_keypoint = wk;
  w.w_background = wb;
  w.w_others = wo;
  w.roles = std::move(roles);
  return w;
}

}  // namespace

TEST_CASE("edge offset loss worked examples") {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd pred = truth;

  auto w = roles_of({PointRole::keypoint});
  LossValue lv = edge_offset_loss(pred, truth, w);
  CHECK(lv.value == 0.0);
  CHECK(lv.gradient.cwiseAbs().maxCoeff() == 0.0);

  pred(0, 0) = 0.1;  // single keypoint, error (0.1, 0, 0), weight 2
  lv = edge_offset_loss(pred, truth, w);
  CHECK(lv.value == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(lv.gradient(0, 0) == doctest::Approx(2.0).epsilon(1e-12));

  // background weight 0 annihilates a huge error; the other point is exact
  Eigen::MatrixXd truth2 = Eigen::MatrixXd::Zero(2, 3);
  Eigen::MatrixXd pred2 = truth2;
  pred2(0, 0) = 1e6;
  auto w2 = roles_of({PointRole::background, PointRole::other});
  lv = edge_offset_loss(pred2, truth2, w2);
  CHECK(lv.value == 0.0);
}

TEST_CASE("center offset loss worked examples") {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd pred = truth;
  pred(0, 1) = 0.3;
  auto w = roles_of({PointRole::other});
  LossValue lv = center_offset_loss(pred, truth, w);
  CHECK(lv.value == doctest::Approx(0.3).epsilon(1e-12));

  // all background: value 0 regardless of predictions
  Eigen::MatrixXd pred3(3, 3), truth3(3, 3);
  Rng rng(2);
  for (int i = 0; i < 9; ++i) {
    pred3(i / 3, i % 3) = rng.uniform(-5, 5);
    truth3(i / 3, i % 3) = rng.uniform(-5, 5);
  }
  auto wb = roles_of({PointRole::background, PointRole::background,
                      PointRole::background});
  lv = center_offset_loss(pred3, truth3, wb);
  CHECK(lv.value == 0.0);
  CHECK(lv.gradient.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(center_offset_loss(pred3, truth3.topRows(2), wb), ConfigError);
}

TEST_CASE("focal loss worked examples") {
  Eigen::MatrixXd conf(1, 2);
  conf << 1.0, 0.0;
  LossValue lv = focal_semantic_loss(conf, {0}, 0.25, 2.0);
  CHECK(lv.value == 0.0);

  conf << 0.5, 0.5;
  lv = focal_semantic_loss(conf, {0}, 1.0, 0.0);
  CHECK(lv.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  lv = focal_semantic_loss(conf, {0}, 0.25, 2.0);
  CHECK(lv.value == doctest::Approx(0.25 * 0.25 * std::log(2.0)).epsilon(1e-12));

  Eigen::MatrixXd bad(1, 2);
  bad << 0.9, 0.4;
  CHECK_THROWS_AS(focal_semantic_loss(bad, {0}, 0.25, 2.0), ValidationError);
}

TEST_CASE("focal loss with alpha 1 gamma 0 is mean cross-entropy") {
  Rng rng(3);
  const int n = 40, c = 5;
  Eigen::MatrixXd conf(n, c);
  std::vector<int> labels(n);
  double ce = 0.0;
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      conf(i, j) = rng.uniform(0.05, 1.0);
      sum += conf(i, j);
    }
    conf.row(i) /= sum;
    labels[i] = static_cast<int>(rng.uniform_index(c));
  }
  for (int i = 0; i < n; ++i) ce += -std::log(conf(i, labels[i]));
  ce /= n;
  const LossValue lv = focal_semantic_loss(conf, labels, 1.0, 0.0);
  CHECK(std::abs(lv.value - ce) < 1e-12);
}

TEST_CASE("multi task loss composition") {
  CHECK(multi_task_loss(0, 0, 0) == 0.0);
  CHECK(multi_task_loss(1, 1, 1) == doctest::Approx(5.0));  // defaults 3,1,1
  CHECK(multi_task_loss(0.2, 0.1, 0.3, {3, 1, 1}) == doctest::Approx(1.0));

  // linear in each component
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const double le = rng.uniform(0, 2), lc = rng.uniform(0, 2),
                 ls = rng.uniform(0, 2);
    const Eigen::Vector3d lam(rng.uniform(0, 4), rng.uniform(0, 4),
                              rng.uniform(0, 4));
    const double base = multi_task_loss(le, lc, ls, lam);
    CHECK(multi_task_loss(2 * le, lc, ls, lam) ==
          doctest::Approx(base + lam(0) * le).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(5);
  const double h = 1e-5;
  int checked = 0;
  while (checked < 100) {
    const int n = 1 + static_cast<int>(rng.uniform_index(4));
    const int m = 1 + static_cast<int>(rng.uniform_index(3));
    Eigen::MatrixXd pred(n, 3 * m), truth(n, 3 * m);
    std::vector<PointRole> roles(n);
    for (int i = 0; i < n; ++i) {
      roles[i] = static_cast<PointRole>(rng.uniform_index(3));
      for (int j = 0; j < 3 * m; ++j) {
        truth(i, j) = rng.uniform(-0.5, 0.5);
        // keep residuals away from the L1 kink
        double e = rng.uniform(0.01, 0.5) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
        pred(i, j) = truth(i, j) + e;
      }
    }
    auto w = roles_of(roles, rng.uniform(0.5, 3), rng.uniform(0, 1),
                      rng.uniform(0.5, 2));
    const LossValue lv = edge_offset_loss(pred, truth, w);
    for (int probes = 0; probes < 4; ++probes) {
      const int i = static_cast<int>(rng.uniform_index(n));
      const int j = static_cast<int>(rng.uniform_index(3 * m));
      Eigen::MatrixXd up = pred, down = pred;
      up(i, j) += h;
      down(i, j) -= h;
      const double fd = (edge_offset_loss(up, truth, w).value -
                         edge_offset_loss(down, truth, w).value) /
                        (2 * h);
      if (std::abs(fd) < 1e-12 && std::abs(lv.gradient(i, j)) < 1e-12) {
        ++checked;
        continue;
      }
      const double rel = std::abs(fd - lv.gradient(i, j)) /
                         std::max(std::abs(fd), std::abs(lv.gradient(i, j)));
      CHECK(rel < 1e-4);
      ++checked;
    }
  }

  // focal gradient, probabilities away from the clamp
  checked = 0;
  while (checked < 100) {
    const int n = 2, c = 3;
    Eigen::MatrixXd conf(n, c);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      double sum = 0;
      for (int j = 0; j < c; ++j) {
        conf(i, j) = rng.uniform(0.1, 1.0);
        sum += conf(i, j);
      }
      conf.row(i) /= sum;
      labels[i] = static_cast<int>(rng.uniform_index(c));
    }
    const LossValue lv = focal_semantic_loss(conf, labels, 0.25, 2.0);
    const int i = static_cast<int>(rng.uniform_index(n));
    const int j = labels[i];
    Eigen::MatrixXd up = conf, down = conf;
    up(i, j) += h;
    down(i, j) -= h;
    const double fd = (focal_semantic_loss(up, labels, 0.25, 2.0).value -
                       focal_semantic_loss(down, labels, 0.25, 2.0).value) /
                      (2 * h);
    const double rel = std::abs(fd - lv.gradient(i, j)) /
                       std::max({std::abs(fd), std::abs(lv.gradient(i, j)), 1e-12});
    CHECK(rel < 1e-4);
    ++checked;
  }
}

TEST_CASE("background predictions cannot influence the loss when weight is 0") {
  Rng rng(6);
  const int n = 8, m = 2;
  Eigen::MatrixXd truth(n, 3 * m), pred(n, 3 * m);
  std::vector<PointRole> roles(n);
  for (int i = 0; i < n; ++i) {
    roles[i] = i % 2 == 0 ? PointRole::background : PointRole::other;
    for (int j = 0; j < 3 * m; ++j) {
      truth(i, j) = rng.uniform(-1, 1);
      pred(i, j) = rng.uniform(-1, 1);
    }
  }
  auto w = roles_of(roles);
  const LossValue base = edge_offset_loss(pred, truth, w);

  Eigen::MatrixXd perturbed = pred;
  for (int i = 0; i < n; i += 2)
    for (int j = 0; j < 3 * m; ++j) perturbed(i, j) = rng.uniform(-100, 100);
  const LossValue after = edge_offset_loss(perturbed, truth, w);

  CHECK(base.value == after.value);  // bitwise: zero terms either way
  for (int i = 1; i < n; i += 2)
    for (int j = 0; j < 3 * m; ++j)
      CHECK(base.gradient(i, j) == after.gradient(i, j));
  for (int i = 0; i < n; i += 2)
    for (int j = 0; j < 3 * m; ++j) CHECK(after.gradient(i, j) == 0.0);
}

TEST_CASE("euclidean norm variant") {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd pred(1, 3);
  pred << 0.3, 0.4, 0.0;
  auto w = roles_of({PointRole::other});
  const LossValue l2 = center_offset_loss(pred, truth, w, OffsetNorm::l2);
  CHECK(l2.value == doctest::Approx(0.5).epsilon(1e-12));
  const LossValue l1 = center_offset_loss(pred, truth, w, OffsetNorm::l1);
  CHECK(l1.value == doctest::Approx(0.7).epsilon(1e-12));
}
