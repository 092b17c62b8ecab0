#include "posekit/voting.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "posekit/error.hpp"
#include "posekit/spatial_grid.hpp"

namespace posekit {

int PredictionField::argmax_class(int i) const {
  int best = 0;
  double best_v = class_confidence(i, 0);
  for (int c = 1; c < class_confidence.cols(); ++c) {
    const double v = class_confidence(i, c);
    if (v > best_v) {  // ties keep the lowest column
      best_v = v;
      best = c;
    }
  }
  return best == background_column() ? 0 : best + 1;
}

void PredictionField::validate() const {
  const int n = num_points();
  if (class_confidence.cols() < 2)
    throw ValidationError("prediction field: needs at least one class plus background");
  if (edge_offsets.rows() != n || center_offset.rows() != n)
    throw ValidationError("prediction field: row counts differ across heads");
  if (center_offset.cols() != 3 || edge_offsets.cols() % 3 != 0)
    throw ValidationError("prediction field: offset column counts invalid");
  if (!edge_offsets.allFinite() || !center_offset.allFinite())
    throw ValidationError("prediction field: non-finite offsets");
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < class_confidence.cols(); ++c) {
      const double v = class_confidence(i, c);
      if (!(v >= 0.0) || !(v <= 1.0 + 1e-9))
        throw ValidationError("prediction field: confidence outside [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw ValidationError("prediction field: confidence row does not sum to 1");
  }
}

std::map<int, std::vector<int>> filter_background(const PredictionField& pred) {
  pred.validate();
  std::map<int, std::vector<int>> out;
  for (int i = 0; i < pred.num_points(); ++i) {
    const int c = pred.argmax_class(i);
    if (c != 0) out[c].push_back(i);
  }
  return out;
}

namespace {

// One trajectory step: x <- x + sum w (s_j - x) / sum w over kernel neighbors.
// Centering on x keeps unanimous vote sets exact (all terms are zero).
bool shift_step(const std::vector<Eigen::Vector3d>& samples,
                const std::vector<double>& weights, const SpatialGrid& grid,
                const MeanShiftParams& params, Eigen::Vector3d& x) {
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  double wsum = 0.0;
  if (params.kernel == MeanShiftKernel::flat) {
    grid.for_each_in_radius(x, params.bandwidth, [&](int j) {
      const double w = weights[j];
      if (w > 0.0) {
        acc += w * (samples[j] - x);
        wsum += w;
      }
    });
  } else {
    const double inv_2h2 = 1.0 / (2.0 * params.bandwidth * params.bandwidth);
    grid.for_each_in_radius(x, 3.0 * params.bandwidth, [&](int j) {
      const double w = weights[j];
      if (w > 0.0) {
        const double g = w * std::exp(-(samples[j] - x).squaredNorm() * inv_2h2);
        acc += g * (samples[j] - x);
        wsum += g;
      }
    });
  }
  if (!(wsum > 0.0)) return false;  // no mass in reach: converged in place
  const Eigen::Vector3d shift = acc / wsum;
  x += shift;
  return shift.norm() >= params.eps;
}

}  // namespace

MeanShiftResult weighted_mean_shift(const std::vector<Eigen::Vector3d>& samples,
                                    const std::vector<double>& weights,
                                    const MeanShiftParams& params) {
  if (!(params.bandwidth > 0.0))
    throw ConfigError("mean_shift: bandwidth must be positive");
  if (samples.empty())
    throw EmptyInputError("mean_shift: no samples");
  if (weights.size() != samples.size())
    throw ValidationError("mean_shift: weight count mismatch");

  const int n = static_cast<int>(samples.size());
  const SpatialGrid grid(samples, params.bandwidth);

  std::vector<Eigen::Vector3d> modes(n);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d x = samples[i];
    for (int it = 0; it < params.max_iter; ++it) {
      if (!shift_step(samples, weights, grid, params, x)) break;
    }
    modes[i] = x;
  }

  // Merge modes of positive-weight seeds; the first-seen mode survives.
  MeanShiftResult out;
  const double merge_r = params.bandwidth * 0.5;
  for (int i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0)) continue;
    bool merged = false;
    for (const auto& c : out.centers) {
      if ((c - modes[i]).norm() <= merge_r) {
        merged = true;
        break;
      }
    }
    if (!merged) out.centers.push_back(modes[i]);
  }

  out.assignment.assign(n, -1);
  if (!out.centers.empty()) {
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d2 = (out.centers[0] - modes[i]).squaredNorm();
      for (std::size_t k = 1; k < out.centers.size(); ++k) {
        const double d2 = (out.centers[k] - modes[i]).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best = static_cast<int>(k);
        }
      }
      out.assignment[i] = best;
    }
  }
  return out;
}

MeanShiftResult mean_shift(const std::vector<Eigen::Vector3d>& samples,
                           double bandwidth, double eps, int max_iter) {
  MeanShiftParams params;
  params.bandwidth = bandwidth;
  params.eps = eps;
  params.max_iter = max_iter;
  return weighted_mean_shift(samples, std::vector<double>(samples.size(), 1.0),
                             params);
}

std::vector<InstanceHypothesis> cluster_instances(
    const std::vector<Eigen::Vector3d>& points, const PredictionField& pred,
    const VoteParams& params) {
  if (points.empty())
    throw EmptyInputError("cluster_instances: no points");
  if (static_cast<int>(points.size()) != pred.num_points())
    throw ValidationError("cluster_instances: point/prediction count mismatch");

  const int n = static_cast<int>(points.size());
  std::vector<Eigen::Vector3d> votes(n);
  std::vector<int> point_class(n);
  std::set<int> classes;
  for (int i = 0; i < n; ++i) {
    votes[i] = points[i] + pred.center(i);
    point_class[i] = pred.argmax_class(i);
    if (point_class[i] != 0) classes.insert(point_class[i]);
  }

  MeanShiftParams ms;
  ms.bandwidth = params.center_bandwidth;
  ms.eps = params.eps;
  ms.max_iter = params.max_iter;
  ms.kernel = params.kernel;

  std::vector<InstanceHypothesis> out;
  std::vector<double> weights(n);
  for (int c : classes) {
    for (int i = 0; i < n; ++i) weights[i] = point_class[i] == c ? 1.0 : 0.0;
    const MeanShiftResult res = weighted_mean_shift(votes, weights, ms);
    for (std::size_t k = 0; k < res.centers.size(); ++k) {
      InstanceHypothesis hyp;
      hyp.class_id = c;
      hyp.voted_center = res.centers[k];
      for (int i = 0; i < n; ++i) {
        if (weights[i] > 0.0 && res.assignment[i] == static_cast<int>(k))
          hyp.point_indices.push_back(i);
      }
      if (static_cast<int>(hyp.point_indices.size()) >= params.min_cluster_size)
        out.push_back(std::move(hyp));
    }
  }
  return out;
}

InstanceHypothesis vote_edge_points(const InstanceHypothesis& hyp,
                                    const std::vector<Eigen::Vector3d>& points,
                                    const PredictionField& pred,
                                    const VoteParams& params) {
  if (hyp.point_indices.empty())
    throw EmptyInputError("vote_edge_points: hypothesis has no points");

  const int m = pred.num_edge_points();
  InstanceHypothesis out = hyp;
  out.voted_edge_points.assign(m, Eigen::Vector3d::Zero());
  out.vote_support.assign(m, 0);

  std::vector<Eigen::Vector3d> candidates(hyp.point_indices.size());
  for (int j = 0; j < m; ++j) {
    for (std::size_t s = 0; s < hyp.point_indices.size(); ++s) {
      const int i = hyp.point_indices[s];
      candidates[s] = points[i] + pred.edge_offset(i, j);
    }
    MeanShiftParams ms;
    ms.bandwidth = params.edge_bandwidth;
    ms.eps = params.eps;
    ms.max_iter = params.max_iter;
    ms.kernel = params.kernel;
    const MeanShiftResult res = weighted_mean_shift(
        candidates, std::vector<double>(candidates.size(), 1.0), ms);

    std::vector<int> counts(res.centers.size(), 0);
    for (int a : res.assignment)
      if (a >= 0) ++counts[a];
    int best = 0;
    for (std::size_t k = 1; k < res.centers.size(); ++k)
      if (counts[k] > counts[best]) best = static_cast<int>(k);

    out.voted_edge_points[j] = res.centers[best];
    out.vote_support[j] = counts[best];
  }
  return out;
}

RigidTransform estimate_pose(const InstanceHypothesis& hyp,
                             const ObjectModel& model, bool use_vote_weights) {
  if (hyp.voted_edge_points.size() != model.edge_points.size())
    throw ValidationError("estimate_pose: edge point counts differ");
  if (use_vote_weights) {
    std::vector<double> w(hyp.vote_support.begin(), hyp.vote_support.end());
    return fit_rigid(model.edge_points, hyp.voted_edge_points, &w);
  }
  return fit_rigid(model.edge_points, hyp.voted_edge_points);
}

}  // namespace posekit
