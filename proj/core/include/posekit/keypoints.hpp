#pragma once

#include <Eigen/Core>
#include <vector>

#include "posekit/model.hpp"

namespace posekit {

// Per-point feature activations, rows aligned with point_index.
struct FeatureMap {
  Eigen::MatrixXd values;       // N x C
  std::vector<int> point_index;  // row -> point cloud index, unique

  int count() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
  void validate() const;
};

struct KeypointSet {
  std::vector<int> indices;     // point indices (via FeatureMap::point_index)
  std::vector<int> win_counts;  // channels won, nonincreasing
};

// Dynamic keypoint selection: each feature channel is won by the row with the
// maximal activation (ties -> lowest row); rows are ranked by channels won.
// Secondary key is the row's value sum, tertiary the row index. Rows without
// a win only pad the output when fewer than k rows win any channel.
KeypointSet select_dynamic_keypoints(const FeatureMap& fm, int k);

// Greedy farthest point sampling, Euclidean metric. Each pick maximizes the
// minimum distance to the picked set; ties -> lowest index. k > |points|
// returns all indices.
std::vector<int> select_fps(const std::vector<Eigen::Vector3d>& points, int k,
                            int start);

// Curvature proxy: mean angular deviation of the PCA normal at each point
// from its k nearest neighbors' normals (angles between undirected lines),
// scaled by how extreme the point sits within its own neighborhood. The
// extremeness factor keeps feature-adjacent points with unstable normals
// from outranking the features themselves.
std::vector<double> normal_saliency(const std::vector<Eigen::Vector3d>& points,
                                    int k_neighbors = 20);

// FPS weighted by saliency: first pick maximizes saliency, later picks
// maximize saliency * min-distance-to-picked. Ties -> lowest index.
std::vector<int> select_salient_fps(const std::vector<Eigen::Vector3d>& points,
                                    const std::vector<double>& saliency, int m);

// Model edge-point selection: salient FPS over the vertex cloud.
std::vector<Eigen::Vector3d> select_edge_points(const ObjectModel& model, int m);

}  // namespace posekit
