#include "posekit/keypoints.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "posekit/error.hpp"

namespace posekit {

void FeatureMap::validate() const {
  if (static_cast<std::size_t>(values.rows()) != point_index.size())
    throw ValidationError("feature map: row count does not match point_index");
  if (!values.allFinite())
    throw ValidationError("feature map: non-finite values");
  std::unordered_set<int> seen(point_index.begin(), point_index.end());
  if (seen.size() != point_index.size())
    throw ValidationError("feature map: duplicate point indices");
}

namespace {

// Row sums are a ranking tie-break; summing values in sorted order makes the
// ranking exactly invariant to feature channel permutations.
double sorted_row_sum(const Eigen::MatrixXd& values, int row) {
  std::vector<double> vals(static_cast<std::size_t>(values.cols()));
  for (int c = 0; c < values.cols(); ++c) vals[c] = values(row, c);
  std::sort(vals.begin(), vals.end());
  double s = 0.0;
  for (double v : vals) s += v;
  return s;
}

}  // namespace

KeypointSet select_dynamic_keypoints(const FeatureMap& fm, int k) {
  if (k <= 0)
    throw ConfigError("select_dynamic_keypoints: k must be positive");
  fm.validate();
  const int n = fm.count();
  const int c = fm.dim();
  if (n == 0)
    throw EmptyInputError("select_dynamic_keypoints: empty feature map");

  std::vector<int> wins(n, 0);
  for (int ch = 0; ch < c; ++ch) {
    int best = 0;
    double best_val = fm.values(0, ch);
    for (int r = 1; r < n; ++r) {
      const double v = fm.values(r, ch);
      if (v > best_val) {  // ties keep the lowest row
        best_val = v;
        best = r;
      }
    }
    ++wins[best];
  }

  std::vector<double> sums(n);
  std::vector<char> sum_ready(n, 0);
  auto sum_of = [&](int r) {
    if (!sum_ready[r]) {
      sums[r] = sorted_row_sum(fm.values, r);
      sum_ready[r] = 1;
    }
    return sums[r];
  };
  auto row_before = [&](int a, int b) {
    if (wins[a] != wins[b]) return wins[a] > wins[b];
    const double sa = sum_of(a), sb = sum_of(b);
    if (sa != sb) return sa > sb;
    return a < b;
  };

  std::vector<int> winners;
  winners.reserve(std::min(n, c));
  for (int r = 0; r < n; ++r)
    if (wins[r] > 0) winners.push_back(r);
  std::sort(winners.begin(), winners.end(), row_before);

  const int want = std::min(k, n);
  std::vector<int> picked(winners.begin(),
                          winners.begin() + std::min<std::size_t>(want, winners.size()));
  if (static_cast<int>(picked.size()) < want) {
    // pad from rows without a win, best value sum first
    std::vector<int> rest;
    rest.reserve(n - winners.size());
    for (int r = 0; r < n; ++r)
      if (wins[r] == 0) rest.push_back(r);
    std::sort(rest.begin(), rest.end(), row_before);
    for (int r : rest) {
      if (static_cast<int>(picked.size()) == want) break;
      picked.push_back(r);
    }
  }

  KeypointSet out;
  out.indices.reserve(picked.size());
  out.win_counts.reserve(picked.size());
  for (int r : picked) {
    out.indices.push_back(fm.point_index[r]);
    out.win_counts.push_back(wins[r]);
  }
  return out;
}

std::vector<int> select_fps(const std::vector<Eigen::Vector3d>& points, int k,
                            int start) {
  if (points.empty())
    throw EmptyInputError("select_fps: no points");
  if (start < 0 || start >= static_cast<int>(points.size()))
    throw ConfigError("select_fps: start index out of range");
  if (k <= 0)
    throw ConfigError("select_fps: k must be positive");

  const int n = static_cast<int>(points.size());
  const int want = std::min(k, n);
  std::vector<int> picked;
  picked.reserve(want);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  int next = start;
  while (static_cast<int>(picked.size()) < want) {
    picked.push_back(next);
    taken[next] = 1;
    const Eigen::Vector3d& p = points[next];
    int best = -1;
    double best_d2 = -1.0;
    for (int i = 0; i < n; ++i) {
      const double d2 = (points[i] - p).squaredNorm();
      if (d2 < min_d2[i]) min_d2[i] = d2;
      if (!taken[i] && min_d2[i] > best_d2) {  // ties keep the lowest index
        best_d2 = min_d2[i];
        best = i;
      }
    }
    if (best < 0) break;
    next = best;
  }
  return picked;
}

std::vector<double> normal_saliency(const std::vector<Eigen::Vector3d>& points,
                                    int k_neighbors) {
  const int n = static_cast<int>(points.size());
  if (n == 0) return {};
  const int k = std::min(k_neighbors, n - 1);

  std::vector<std::vector<int>> neighbors(n);
  std::vector<Eigen::Vector3d> normals(n, Eigen::Vector3d::UnitZ());
  std::vector<double> extremeness(n, 0.0);
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      dist[j] = {(points[j] - points[i]).squaredNorm(), j};
    dist[i].first = std::numeric_limits<double>::infinity();  // exclude self
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    neighbors[i].reserve(k);
    Eigen::Vector3d mean = points[i];
    for (int m = 0; m < k; ++m) {
      neighbors[i].push_back(dist[m].second);
      mean += points[dist[m].second];
    }
    mean /= static_cast<double>(k + 1);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    Eigen::Vector3d d = points[i] - mean;
    cov += d * d.transpose();
    for (int m = 0; m < k; ++m) {
      d = points[dist[m].second] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    normals[i] = eig.eigenvectors().col(0);  // eigenvalues ascending
    const double spread = eig.eigenvalues().sum();
    // squared offset of the point from its neighborhood centroid, relative
    // to the neighborhood spread: ~0 on faces and flat regions, maximal at
    // convex vertices. Suppresses points merely adjacent to a sharp feature,
    // whose PCA normals are unstable enough to fake large deviations.
    if (spread > 0.0)
      extremeness[i] = (points[i] - mean).squaredNorm() / spread;
  }

  std::vector<double> saliency(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (neighbors[i].empty()) continue;
    double acc = 0.0;
    for (int j : neighbors[i]) {
      // undirected lines: estimated normals carry an arbitrary sign
      const double c = std::min(1.0, std::abs(normals[i].dot(normals[j])));
      acc += std::acos(c);
    }
    saliency[i] =
        acc / static_cast<double>(neighbors[i].size()) * extremeness[i];
  }
  return saliency;
}

std::vector<int> select_salient_fps(const std::vector<Eigen::Vector3d>& points,
                                    const std::vector<double>& saliency, int m) {
  if (m <= 0)
    throw ConfigError("select_salient_fps: m must be positive");
  if (points.empty())
    throw EmptyInputError("select_salient_fps: no points");
  if (saliency.size() != points.size())
    throw ValidationError("select_salient_fps: saliency size mismatch");

  const int n = static_cast<int>(points.size());
  const int want = std::min(m, n);
  std::vector<int> picked;
  picked.reserve(want);

  int first = 0;
  for (int i = 1; i < n; ++i)
    if (saliency[i] > saliency[first]) first = i;

  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  int next = first;
  while (static_cast<int>(picked.size()) < want) {
    picked.push_back(next);
    taken[next] = 1;
    const Eigen::Vector3d& p = points[next];
    int best = -1;
    double best_score = -1.0;
    for (int i = 0; i < n; ++i) {
      const double d = (points[i] - p).norm();
      if (d < min_d[i]) min_d[i] = d;
      const double score = saliency[i] * min_d[i];
      if (!taken[i] && score > best_score) {
        best_score = score;
        best = i;
      }
    }
    if (best < 0) break;
    next = best;
  }
  return picked;
}

std::vector<Eigen::Vector3d> select_edge_points(const ObjectModel& model, int m) {
  if (m <= 0)
    throw ConfigError("select_edge_points: m must be positive");
  if (static_cast<int>(model.vertices.size()) < m)
    throw ValidationError("select_edge_points: model has fewer vertices than m");
  const std::vector<double> sal = normal_saliency(model.vertices);
  const std::vector<int> idx = select_salient_fps(model.vertices, sal, m);
  std::vector<Eigen::Vector3d> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(model.vertices[i]);
  return out;
}

}  // namespace posekit
