#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "posekit/geometry.hpp"
#include "posekit/model.hpp"

namespace posekit {

// Per-point network outputs (or oracle stand-ins). Class confidence rows sum
// to 1; the last column is the background class. Offsets are meters.
struct PredictionField {
  Eigen::MatrixXd class_confidence;  // N x (num_classes + 1)
  Eigen::MatrixXd edge_offsets;      // N x 3M, column j*3+axis
  Eigen::MatrixXd center_offset;     // N x 3

  int num_points() const { return static_cast<int>(class_confidence.rows()); }
  int num_classes() const { return static_cast<int>(class_confidence.cols()) - 1; }
  int num_edge_points() const { return static_cast<int>(edge_offsets.cols()) / 3; }
  int background_column() const { return num_classes(); }

  Eigen::Vector3d edge_offset(int i, int j) const {
    return edge_offsets.row(i).segment<3>(3 * j).transpose();
  }
  Eigen::Vector3d center(int i) const { return center_offset.row(i).transpose(); }

  // Row argmax; ties resolve to the lowest column. Columns 0..num_classes-1
  // map to class ids 1..num_classes, the last column to background (class 0).
  int argmax_class(int i) const;

  void validate() const;  // throws ValidationError
};

// One detected object instance. point_indices index into the point/prediction
// arrays the hypothesis was built from.
struct InstanceHypothesis {
  int class_id = 0;
  std::vector<int> point_indices;
  Eigen::Vector3d voted_center = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> voted_edge_points;
  std::vector<int> vote_support;
};

// Groups points by predicted class, dropping background-argmax rows.
// Keyed by class id; index lists ascend.
std::map<int, std::vector<int>> filter_background(const PredictionField& pred);

enum class MeanShiftKernel { flat, gaussian };

struct MeanShiftParams {
  double bandwidth = 0.05;
  double eps = 1e-5;
  int max_iter = 100;
  MeanShiftKernel kernel = MeanShiftKernel::flat;
};

struct MeanShiftResult {
  std::vector<Eigen::Vector3d> centers;
  std::vector<int> assignment;  // per sample: center index, -1 if none
};

// Flat-kernel mean shift: every sample climbs to the mean of samples within
// bandwidth until the shift drops below eps; modes within bandwidth/2 merge.
MeanShiftResult mean_shift(const std::vector<Eigen::Vector3d>& samples,
                           double bandwidth, double eps = 1e-5,
                           int max_iter = 100);

// Weighted variant: kernel means use only samples with weight > 0, and only
// those seed surviving modes. Zero-weight samples still run trajectories and
// get assignments, so they cost time without influencing any result — this is
// what makes an unfiltered run bit-identical to a filtered one.
MeanShiftResult weighted_mean_shift(const std::vector<Eigen::Vector3d>& samples,
                                    const std::vector<double>& weights,
                                    const MeanShiftParams& params);

struct VoteParams {
  double center_bandwidth = 0.05;
  double edge_bandwidth = 0.03;
  int min_cluster_size = 30;
  double eps = 1e-5;
  int max_iter = 100;
  MeanShiftKernel kernel = MeanShiftKernel::flat;
  bool use_vote_weights = false;  // weight the pose fit by vote support
};

// Clusters center votes {p_i + dx_i} per predicted class. Rows whose argmax is
// another class (or background) carry zero weight in that class's pass.
// Hypotheses come back ordered by (class_id, cluster discovery order) with
// edge points unfilled.
std::vector<InstanceHypothesis> cluster_instances(
    const std::vector<Eigen::Vector3d>& points, const PredictionField& pred,
    const VoteParams& params);

// Per edge index j, clusters {p_i + of_i^j} over the hypothesis members and
// keeps the mode with the most votes.
InstanceHypothesis vote_edge_points(const InstanceHypothesis& hyp,
                                    const std::vector<Eigen::Vector3d>& points,
                                    const PredictionField& pred,
                                    const VoteParams& params);

// Least-squares fit of model edge points onto the voted scene edge points.
RigidTransform estimate_pose(const InstanceHypothesis& hyp,
                             const ObjectModel& model,
                             bool use_vote_weights = false);

}  // namespace posekit
