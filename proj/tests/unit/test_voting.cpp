#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>

#include "posekit/error.hpp"
#include "posekit/random.hpp"
#include "posekit/voting.hpp"

using namespace posekit;

namespace {

PredictionField one_hot_field(const std::vector<int>& columns, int num_cols,
                              int m_edges = 1) {
  PredictionField pred;
  const int n = static_cast<int>(columns.size());
  pred.class_confidence = Eigen::MatrixXd::Zero(n, num_cols);
  for (int i = 0; i < n; ++i) pred.class_confidence(i, columns[i]) = 1.0;
  pred.edge_offsets = Eigen::MatrixXd::Zero(n, 3 * m_edges);
  pred.center_offset = Eigen::MatrixXd::Zero(n, 3);
  return pred;
}

// probes random separating directions; sound evidence the point is in the hull
bool inside_hull_probe(const Eigen::Vector3d& c,
                       const std::vector<Eigen::Vector3d>& samples, Rng& rng) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  std::vector<Eigen::Vector3d> dirs;
  if ((c - mean).norm() > 0) dirs.push_back((c - mean).normalized());
  for (int i = 0; i < 64; ++i) {
    Eigen::Vector3d d(rng.normal(), rng.normal(), rng.normal());
    if (d.norm() > 0) dirs.push_back(d.normalized());
  }
  for (const auto& d : dirs) {
    double support = -std::numeric_limits<double>::infinity();
    for (const auto& s : samples) support = std::max(support, d.dot(s));
    if (d.dot(c) > support + 1e-9) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("filter_background groups by argmax class") {
  // all rows argmax background -> empty
  PredictionField all_bg = one_hot_field({3, 3, 3}, 4);  // column 3 = background
  CHECK(filter_background(all_bg).empty());

  // single confident class-3 row (3 object classes + background)
  PredictionField single = one_hot_field({2}, 4);
  const auto m = filter_background(single);
  REQUIRE(m.size() == 1);
  CHECK(m.count(3) == 1);
  CHECK(m.at(3) == std::vector<int>{0});

  // 10 rows, 6 of class 1 with mixed confidence, 4 background
  PredictionField mixed;
  mixed.class_confidence = Eigen::MatrixXd::Zero(10, 2);
  mixed.edge_offsets = Eigen::MatrixXd::Zero(10, 3);
  mixed.center_offset = Eigen::MatrixXd::Zero(10, 3);
  Rng rng(4);
  std::vector<int> expect;
  for (int i = 0; i < 10; ++i) {
    const bool fg = i % 5 != 0 && i % 7 != 0;  // 6 foreground rows
    const double p = rng.uniform(0.55, 0.95);
    mixed.class_confidence(i, 0) = fg ? p : 1.0 - p;
    mixed.class_confidence(i, 1) = fg ? 1.0 - p : p;
    if (fg) expect.push_back(i);
  }
  const auto got = filter_background(mixed);
  REQUIRE(got.size() == 1);
  CHECK(got.at(1) == expect);
}

TEST_CASE("mean_shift trivial inputs") {
  const std::vector<Eigen::Vector3d> one = {{0.2, -0.1, 1.4}};
  const MeanShiftResult r1 = mean_shift(one, 0.05);
  REQUIRE(r1.centers.size() == 1);
  CHECK(r1.centers[0] == one[0]);
  CHECK(r1.assignment == std::vector<int>{0});

  const std::vector<Eigen::Vector3d> same(7, Eigen::Vector3d(1.5, 2.5, -0.5));
  const MeanShiftResult r2 = mean_shift(same, 0.03);
  REQUIRE(r2.centers.size() == 1);
  CHECK(r2.centers[0] == same[0]);  // unanimous input returns it exactly
  for (int a : r2.assignment) CHECK(a == 0);

  CHECK_THROWS_AS(mean_shift(one, 0.0), ConfigError);
  CHECK_THROWS_AS(mean_shift({}, 0.1), EmptyInputError);
}

TEST_CASE("mean_shift resolves two blobs to their means") {
  Rng rng(21);
  std::vector<Eigen::Vector3d> samples;
  Eigen::Vector3d mean_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_b = Eigen::Vector3d::Zero();
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d a(rng.normal(0.0, 0.01), rng.normal(0.0, 0.01),
                            rng.normal(1.0, 0.01));
    samples.push_back(a);
    mean_a += a;
  }
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d b(rng.normal(1.0, 0.01), rng.normal(0.0, 0.01),
                            rng.normal(1.0, 0.01));
    samples.push_back(b);
    mean_b += b;
  }
  mean_a /= 50.0;
  mean_b /= 50.0;

  const MeanShiftResult r = mean_shift(samples, 0.05);
  REQUIRE(r.centers.size() == 2);
  CHECK((r.centers[0] - mean_a).norm() < 0.01);
  CHECK((r.centers[1] - mean_b).norm() < 0.01);
  for (int i = 0; i < 50; ++i) CHECK(r.assignment[i] == 0);
  for (int i = 50; i < 100; ++i) CHECK(r.assignment[i] == 1);
}

TEST_CASE("mean_shift centers stay inside the sample hull") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5 + static_cast<int>(rng.uniform_index(60));
    std::vector<Eigen::Vector3d> samples(n);
    for (auto& s : samples)
      s = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1),
                          rng.uniform(-1, 1));
    const double bw = rng.uniform(0.05, 0.8);
    const MeanShiftResult r = mean_shift(samples, bw);
    for (const auto& c : r.centers) CHECK(inside_hull_probe(c, samples, rng));
  }
}

TEST_CASE("mean_shift translation equivariance") {
  Rng rng(41);
  std::vector<Eigen::Vector3d> samples(80);
  for (auto& s : samples)
    s = Eigen::Vector3d(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                        rng.uniform(-0.3, 0.3));
  const Eigen::Vector3d v(10.25, -3.5, 0.75);
  auto shifted = samples;
  for (auto& s : shifted) s += v;

  const MeanShiftResult a = mean_shift(samples, 0.1);
  const MeanShiftResult b = mean_shift(shifted, 0.1);
  REQUIRE(a.centers.size() == b.centers.size());
  for (std::size_t i = 0; i < a.centers.size(); ++i)
    CHECK((a.centers[i] + v - b.centers[i]).norm() < 1e-9);
  CHECK(a.assignment == b.assignment);
}

TEST_CASE("cluster_instances separates exact single and double objects") {
  VoteParams params;
  params.min_cluster_size = 3;

  // one object: every vote lands on the center
  const Eigen::Vector3d center(0.1, 0.2, 1.0);
  std::vector<Eigen::Vector3d> pts;
  PredictionField pred;
  const int n = 40;
  pred.class_confidence = Eigen::MatrixXd::Zero(n, 2);
  pred.edge_offsets = Eigen::MatrixXd::Zero(n, 3);
  pred.center_offset.resize(n, 3);
  Rng rng(5);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d p(rng.uniform(-0.05, 0.05) + center.x(),
                            rng.uniform(-0.05, 0.05) + center.y(),
                            rng.uniform(-0.05, 0.05) + center.z());
    pts.push_back(p);
    pred.class_confidence(i, 0) = 1.0;
    pred.center_offset.row(i) = (center - p).transpose();
  }
  auto hyps = cluster_instances(pts, pred, params);
  REQUIRE(hyps.size() == 1);
  CHECK(hyps[0].class_id == 1);
  CHECK((hyps[0].voted_center - center).norm() < 1e-9);
  CHECK(hyps[0].point_indices.size() == static_cast<std::size_t>(n));

  // two same-class objects half a meter apart, exact offsets
  const Eigen::Vector3d center_b = center + Eigen::Vector3d(0.5, 0, 0);
  std::vector<Eigen::Vector3d> pts2 = pts;
  PredictionField pred2;
  pred2.class_confidence = Eigen::MatrixXd::Zero(2 * n, 2);
  pred2.edge_offsets = Eigen::MatrixXd::Zero(2 * n, 3);
  pred2.center_offset.resize(2 * n, 3);
  for (int i = 0; i < n; ++i) {
    pred2.class_confidence(i, 0) = 1.0;
    pred2.center_offset.row(i) = pred.center_offset.row(i);
  }
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d p = pts[i] + Eigen::Vector3d(0.5, 0, 0);
    pts2.push_back(p);
    pred2.class_confidence(n + i, 0) = 1.0;
    pred2.center_offset.row(n + i) = (center_b - p).transpose();
  }
  hyps = cluster_instances(pts2, pred2, params);
  REQUIRE(hyps.size() == 2);
  CHECK((hyps[0].voted_center - center).norm() < 1e-9);
  CHECK((hyps[1].voted_center - center_b).norm() < 1e-9);
  for (int i : hyps[0].point_indices) CHECK(i < n);
  for (int i : hyps[1].point_indices) CHECK(i >= n);
}

TEST_CASE("cluster_instances concentrates noisy votes") {
  // Monte-Carlo: mean of votes concentrates as sigma / sqrt(n)
  Rng rng(61);
  VoteParams params;
  params.min_cluster_size = 30;
  int ok = 0;
  const int trials = 25;
  for (int t = 0; t < trials; ++t) {
    const int n = 200;
    const Eigen::Vector3d center(0.0, 0.1, 1.2);
    std::vector<Eigen::Vector3d> pts;
    PredictionField pred;
    pred.class_confidence = Eigen::MatrixXd::Zero(n, 2);
    pred.edge_offsets = Eigen::MatrixXd::Zero(n, 3);
    pred.center_offset.resize(n, 3);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d p(rng.uniform(-0.08, 0.08),
                              0.1 + rng.uniform(-0.08, 0.08),
                              1.2 + rng.uniform(-0.08, 0.08));
      pts.push_back(p);
      pred.class_confidence(i, 0) = 1.0;
      const Eigen::Vector3d noisy =
          center + Eigen::Vector3d(rng.normal(0, 0.005), rng.normal(0, 0.005),
                                   rng.normal(0, 0.005));
      pred.center_offset.row(i) = (noisy - p).transpose();
    }
    const auto hyps = cluster_instances(pts, pred, params);
    if (hyps.size() == 1 && (hyps[0].voted_center - center).norm() < 0.002) ++ok;
  }
  CHECK(ok >= trials - 1);
}

TEST_CASE("vote_edge_points exact, outlier, and noisy cases") {
  const int n = 100;
  const Eigen::Vector3d target(0.25, -0.1, 1.1);
  std::vector<Eigen::Vector3d> pts;
  PredictionField pred;
  pred.class_confidence = Eigen::MatrixXd::Zero(n, 2);
  pred.class_confidence.col(0).setOnes();
  pred.edge_offsets.resize(n, 3);
  pred.center_offset = Eigen::MatrixXd::Zero(n, 3);
  Rng rng(71);
  InstanceHypothesis hyp;
  hyp.class_id = 1;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d p(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                            1.0 + rng.uniform(-0.1, 0.1));
    pts.push_back(p);
    pred.edge_offsets.row(i) = (target - p).transpose();
    hyp.point_indices.push_back(i);
  }
  VoteParams params;

  SUBCASE("unanimous votes return the candidate exactly") {
    const InstanceHypothesis filled = vote_edge_points(hyp, pts, pred, params);
    REQUIRE(filled.voted_edge_points.size() == 1);
    // every candidate is p + (target - p); votes agree to roundoff
    CHECK((filled.voted_edge_points[0] - target).norm() < 1e-12);
    CHECK(filled.vote_support[0] == n);

    // bit-exact when candidates are literally identical
    PredictionField exact = pred;
    for (int i = 0; i < n; ++i)
      exact.edge_offsets.row(i) = (target - pts[0]).transpose();
    InstanceHypothesis one;
    one.class_id = 1;
    one.point_indices = {0};
    std::vector<Eigen::Vector3d> single_pt = {pts[0]};
    PredictionField single;
    single.class_confidence = Eigen::MatrixXd::Zero(1, 2);
    single.class_confidence(0, 0) = 1.0;
    single.edge_offsets = exact.edge_offsets.row(0);
    single.center_offset = Eigen::MatrixXd::Zero(1, 3);
    const InstanceHypothesis u = vote_edge_points(one, single_pt, single, params);
    const Eigen::Vector3d candidate = single_pt[0] + single.edge_offsets.row(0).transpose();
    CHECK(u.voted_edge_points[0] == candidate);
  }

  SUBCASE("a distant outlier vote cannot move the edge point") {
    PredictionField corrupted = pred;
    corrupted.edge_offsets.row(13) =
        (target + Eigen::Vector3d(1.0, 0, 0) - pts[13]).transpose();
    const InstanceHypothesis clean = vote_edge_points(hyp, pts, pred, params);
    const InstanceHypothesis dirty = vote_edge_points(hyp, pts, corrupted, params);
    CHECK((dirty.voted_edge_points[0] - clean.voted_edge_points[0]).norm() < 1e-9);
    CHECK(dirty.vote_support[0] == n - 1);
  }

  SUBCASE("noisy votes land within 2 mm") {
    int ok = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
      PredictionField noisy = pred;
      for (int i = 0; i < n; ++i)
        noisy.edge_offsets.row(i) +=
            Eigen::RowVector3d(rng.normal(0, 0.005), rng.normal(0, 0.005),
                               rng.normal(0, 0.005));
      const InstanceHypothesis filled = vote_edge_points(hyp, pts, noisy, params);
      if ((filled.voted_edge_points[0] - target).norm() < 0.002) ++ok;
    }
    CHECK(ok >= trials - 1);
  }
}

TEST_CASE("estimate_pose round trips through voted edge points") {
  Rng rng(81);
  ObjectModel model;
  model.class_id = 1;
  model.symmetric = false;
  for (int i = 0; i < 30; ++i)
    model.vertices.emplace_back(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                rng.uniform(-0.1, 0.1));
  model.diameter = max_pairwise_distance(model.vertices);
  for (int i = 0; i < 8; ++i) model.edge_points.push_back(model.vertices[i]);

  InstanceHypothesis hyp;
  hyp.point_indices = {0};
  hyp.voted_edge_points = model.edge_points;
  hyp.vote_support.assign(8, 50);
  RigidTransform id = estimate_pose(hyp, model);
  CHECK(rotation_angle_between(id.rotation, Matrix3d::Identity()) < 1e-12);
  CHECK(id.translation.norm() < 1e-12);

  Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  RigidTransform truth;
  truth.rotation = Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
  truth.translation = Eigen::Vector3d(0.2, -0.3, 1.4);
  hyp.voted_edge_points = transform_points(truth, model.edge_points);
  const RigidTransform fit = estimate_pose(hyp, model);
  CHECK(rotation_angle_between(fit.rotation, truth.rotation) < 1e-8);
  CHECK((fit.translation - truth.translation).norm() < 1e-8);

  // weighted fit also recovers the exact pose on exact votes
  hyp.vote_support = {10, 20, 30, 40, 50, 60, 70, 80};
  const RigidTransform wfit = estimate_pose(hyp, model, true);
  CHECK(rotation_angle_between(wfit.rotation, truth.rotation) < 1e-8);
}
