#pragma once

#include <Eigen/Core>
#include <vector>

#include "posekit/geometry.hpp"

namespace posekit {

// Background sentinel for class labels; instance labels use -1.
constexpr int kBackgroundClass = 0;

struct InstanceGt {
  int class_id = 0;
  int instance_id = 0;
  RigidTransform pose;
  int model_index = 0;
};

// A sampled scene with exact ground truth. Offsets satisfy, for every
// foreground point i of instance k with pose P and edge points ep_j:
//   point_i + gt_edge_offsets[i][j] == P(ep_j)
//   point_i + gt_center_offset[i]   == P(model centroid)
// Background rows carry zero offsets.
struct SceneSample {
  CameraIntrinsics intrinsics;
  PointCloud cloud;
  std::vector<int> class_label;
  std::vector<int> instance_label;
  std::vector<InstanceGt> instances;
  Eigen::MatrixXd gt_edge_offsets;   // N x 3M
  Eigen::MatrixXd gt_center_offset;  // N x 3
  Eigen::MatrixXd color;             // N x 3 in [0, 1]

  int num_points() const { return static_cast<int>(cloud.points.size()); }
  int num_edge_points() const {
    return static_cast<int>(gt_edge_offsets.cols()) / 3;
  }
  int num_classes() const {
    int nc = 0;
    for (const auto& inst : instances) nc = std::max(nc, inst.class_id);
    return nc;
  }
};

// New scene holding only the given point rows (ascending indices); instance
// table and intrinsics carry over.
SceneSample subset_scene(const SceneSample& scene, const std::vector<int>& rows);

}  // namespace posekit
