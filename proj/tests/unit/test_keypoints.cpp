#include <doctest.h>

#include <algorithm>
#include <set>

#include "posekit/error.hpp"
#include "posekit/keypoints.hpp"
#include "posekit/random.hpp"
#include "posekit/synth.hpp"

using namespace posekit;

namespace {

FeatureMap make_fm(const Eigen::MatrixXd& values) {
  FeatureMap fm;
  fm.values = values;
  fm.point_index.resize(values.rows());
  for (int i = 0; i < values.rows(); ++i) fm.point_index[i] = i;
  return fm;
}

// Brute-force tally oracle: per-channel argmax (lowest row on ties), then
// rank rows by wins, sorted-value sum, index.
std::vector<std::pair<int, int>> tally_oracle(const Eigen::MatrixXd& v, int k) {
  const int n = static_cast<int>(v.rows());
  std::vector<int> wins(n, 0);
  for (int c = 0; c < v.cols(); ++c) {
    int best = 0;
    for (int r = 1; r < n; ++r)
      if (v(r, c) > v(best, c)) best = r;
    ++wins[best];
  }
  std::vector<double> sums(n, 0.0);
  for (int r = 0; r < n; ++r) {
    std::vector<double> row(v.cols());
    for (int c = 0; c < v.cols(); ++c) row[c] = v(r, c);
    std::sort(row.begin(), row.end());
    for (double x : row) sums[r] += x;
  }
  std::vector<int> order(n);
  for (int r = 0; r < n; ++r) order[r] = r;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if ((wins[a] > 0) != (wins[b] > 0)) return wins[a] > 0;
    if (wins[a] != wins[b]) return wins[a] > wins[b];
    if (sums[a] != sums[b]) return sums[a] > sums[b];
    return a < b;
  });
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < std::min(k, n); ++i)
    out.emplace_back(order[i], wins[order[i]]);
  return out;
}

}  // namespace

TEST_CASE("dynamic keypoints worked example, two channels") {
  Eigen::MatrixXd v(3, 2);
  v << 5, 0, 1, 9, 2, 2;
  const KeypointSet ks = select_dynamic_keypoints(make_fm(v), 2);
  REQUIRE(ks.indices.size() == 2);
  // rows 0 and 1 each win one channel; row 1 ranks first on value sum
  CHECK(std::set<int>(ks.indices.begin(), ks.indices.end()) ==
        std::set<int>{0, 1});
  CHECK(ks.indices[0] == 1);
  CHECK(ks.win_counts == std::vector<int>{1, 1});

  const auto oracle = tally_oracle(v, 2);
  CHECK(oracle[0].first == ks.indices[0]);
  CHECK(oracle[1].first == ks.indices[1]);
}

TEST_CASE("dynamic keypoints single candidate wins every channel") {
  Eigen::MatrixXd v(1, 7);
  v.setConstant(0.5);
  const KeypointSet ks = select_dynamic_keypoints(make_fm(v), 1);
  CHECK(ks.indices == std::vector<int>{0});
  CHECK(ks.win_counts == std::vector<int>{7});
}

TEST_CASE("dynamic keypoints pads with best losing row") {
  // row 2 dominates every channel; padding must pick the best row sum
  Eigen::MatrixXd v(4, 8);
  v.setZero();
  for (int c = 0; c < 8; ++c) v(2, c) = 10.0;
  v.row(0).setConstant(1.0);
  v.row(1).setConstant(3.0);
  v.row(3).setConstant(2.0);
  const KeypointSet ks = select_dynamic_keypoints(make_fm(v), 2);
  REQUIRE(ks.indices.size() == 2);
  CHECK(ks.indices[0] == 2);
  CHECK(ks.win_counts[0] == 8);
  CHECK(ks.indices[1] == 1);  // highest sum among non-winners
  CHECK(ks.win_counts[1] == 0);

  const auto oracle = tally_oracle(v, 2);
  CHECK(oracle[0].first == 2);
  CHECK(oracle[1].first == 1);
}

TEST_CASE("dynamic keypoints matches the tally oracle on random maps") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(40));
    const int c = 1 + static_cast<int>(rng.uniform_index(24));
    Eigen::MatrixXd v(n, c);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j)
        v(i, j) = rng.uniform(-1.0, 1.0);
    const int k = 1 + static_cast<int>(rng.uniform_index(n));
    const KeypointSet ks = select_dynamic_keypoints(make_fm(v), k);
    const auto oracle = tally_oracle(v, k);
    REQUIRE(ks.indices.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      CHECK(ks.indices[i] == oracle[i].first);
      CHECK(ks.win_counts[i] == oracle[i].second);
    }
  }
}

TEST_CASE("dynamic keypoints channel permutation invariance") {
  Rng rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_index(30));
    const int c = 2 + static_cast<int>(rng.uniform_index(16));
    Eigen::MatrixXd v(n, c);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) v(i, j) = rng.uniform(-2.0, 2.0);
    // inject exact win-count ties
    if (n > 4) v.row(1) = v.row(0) * 0.5;

    std::vector<int> perm(c);
    for (int j = 0; j < c; ++j) perm[j] = j;
    for (int j = c - 1; j > 0; --j)
      std::swap(perm[j], perm[rng.uniform_index(j + 1)]);
    Eigen::MatrixXd shuffled(n, c);
    for (int j = 0; j < c; ++j) shuffled.col(j) = v.col(perm[j]);

    const int k = 1 + static_cast<int>(rng.uniform_index(n));
    const KeypointSet a = select_dynamic_keypoints(make_fm(v), k);
    const KeypointSet b = select_dynamic_keypoints(make_fm(shuffled), k);
    CHECK(a.indices == b.indices);
    CHECK(a.win_counts == b.win_counts);
  }
}

TEST_CASE("dynamic keypoints determinism and membership") {
  Rng rng(77);
  Eigen::MatrixXd v(25, 12);
  for (int i = 0; i < v.rows(); ++i)
    for (int j = 0; j < v.cols(); ++j) v(i, j) = rng.uniform(-1, 1);
  FeatureMap fm;
  fm.values = v;
  fm.point_index.resize(25);
  for (int i = 0; i < 25; ++i) fm.point_index[i] = 1000 + 3 * i;  // sparse ids

  const KeypointSet a = select_dynamic_keypoints(fm, 10);
  const KeypointSet b = select_dynamic_keypoints(fm, 10);
  CHECK(a.indices == b.indices);
  CHECK(a.win_counts == b.win_counts);
  for (int idx : a.indices) {
    CHECK(std::find(fm.point_index.begin(), fm.point_index.end(), idx) !=
          fm.point_index.end());
  }
  // win_counts nonincreasing
  CHECK(std::is_sorted(a.win_counts.rbegin(), a.win_counts.rend()));
}

TEST_CASE("adding a channel won by a top-k row keeps it in the top-k") {
  Rng rng(303);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6 + static_cast<int>(rng.uniform_index(20));
    const int c = 3 + static_cast<int>(rng.uniform_index(10));
    Eigen::MatrixXd v(n, c);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) v(i, j) = rng.uniform(-1, 1);
    const int k = 2 + static_cast<int>(rng.uniform_index(4));
    const KeypointSet before = select_dynamic_keypoints(make_fm(v), k);
    const int chosen =
        before.indices[rng.uniform_index(before.indices.size())];

    Eigen::MatrixXd extended(n, c + 1);
    extended.leftCols(c) = v;
    for (int i = 0; i < n; ++i) extended(i, c) = rng.uniform(-1, 1);
    extended(chosen, c) = 10.0;  // the new channel's argmax
    const KeypointSet after = select_dynamic_keypoints(make_fm(extended), k);
    CHECK(std::find(after.indices.begin(), after.indices.end(), chosen) !=
          after.indices.end());
  }
}

TEST_CASE("dynamic keypoints input validation") {
  Eigen::MatrixXd v(2, 2);
  v.setZero();
  CHECK_THROWS_AS(select_dynamic_keypoints(make_fm(v), 0), ConfigError);
  FeatureMap empty;
  empty.values.resize(0, 4);
  CHECK_THROWS_AS(select_dynamic_keypoints(empty, 3), EmptyInputError);
}

TEST_CASE("fps basics and worked examples") {
  const std::vector<Eigen::Vector3d> square = {
      {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  CHECK(select_fps(square, 1, 0) == std::vector<int>{0});
  // second pick is the diagonal corner: sqrt(2) beats 1
  CHECK(select_fps(square, 2, 0) == std::vector<int>{0, 2});

  const std::vector<Eigen::Vector3d> line = {
      {0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {5, 0, 0}};
  CHECK(select_fps(line, 3, 0) == std::vector<int>{0, 3, 2});

  CHECK(select_fps(line, 99, 0).size() == 4);
}

TEST_CASE("fps min pairwise distance is nonincreasing in k") {
  Rng rng(811);
  std::vector<Eigen::Vector3d> pts(40);
  for (auto& p : pts)
    p = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  const auto min_pairwise = [&](const std::vector<int>& idx) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = i + 1; j < idx.size(); ++j)
        best = std::min(best, (pts[idx[i]] - pts[idx[j]]).norm());
    return best;
  };
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 2; k <= 20; ++k) {
    const double d = min_pairwise(select_fps(pts, k, 0));
    CHECK(d <= prev + 1e-15);
    prev = d;
  }
}

TEST_CASE("salient fps with uniform saliency reduces to plain fps") {
  Rng rng(99);
  std::vector<Eigen::Vector3d> pts(60);
  for (auto& p : pts)
    p = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  const std::vector<double> uniform(pts.size(), 0.7);
  CHECK(select_salient_fps(pts, uniform, 6) == select_fps(pts, 6, 0));

  // sphere vertices: estimated saliency is nearly uniform
  const SynthModel sphere = make_model(ShapeKind::sphere, {0.1, 0, 0}, 400, 4, 1);
  const auto sal = normal_saliency(sphere.object.vertices);
  double lo = sal[0], hi = sal[0], mean = 0;
  for (double s : sal) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    mean += s;
  }
  mean /= static_cast<double>(sal.size());
  CHECK(hi - lo < 0.5 * mean);
  const std::vector<double> flat(sphere.object.vertices.size(), mean);
  CHECK(select_salient_fps(sphere.object.vertices, flat, 4) ==
        select_fps(sphere.object.vertices, 4, 0));
}

TEST_CASE("edge point selection picks box corners") {
  const SynthModel box =
      make_model(ShapeKind::box, {0.2, 0.16, 0.12}, 600, 8, 42);
  const auto& eps = box.object.edge_points;
  REQUIRE(eps.size() == 8);
  std::set<std::array<int, 3>> got, want;
  for (const auto& e : eps)
    got.insert({e.x() > 0 ? 1 : -1, e.y() > 0 ? 1 : -1, e.z() > 0 ? 1 : -1});
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) want.insert({sx, sy, sz});
  CHECK(got == want);
  for (const auto& e : eps) {
    CHECK(std::abs(std::abs(e.x()) - 0.1) < 1e-12);
    CHECK(std::abs(std::abs(e.y()) - 0.08) < 1e-12);
    CHECK(std::abs(std::abs(e.z()) - 0.06) < 1e-12);
  }
}

TEST_CASE("edge point selection returns all vertices when m equals count") {
  const SynthModel box = make_model(ShapeKind::box, {0.1, 0.1, 0.1}, 60, 8, 3);
  ObjectModel model = box.object;
  const auto all = select_edge_points(model, static_cast<int>(model.vertices.size()));
  CHECK(all.size() == model.vertices.size());
  CHECK_THROWS_AS(select_edge_points(model, 0), ConfigError);
}
