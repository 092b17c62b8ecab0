#pragma once

#include <Eigen/Core>
#include <vector>

namespace posekit {

// Object mesh sampled as a vertex cloud, in the object frame.
struct ObjectModel {
  int class_id = 0;
  std::vector<Eigen::Vector3d> vertices;
  double diameter = 0.0;  // max pairwise vertex distance, meters
  bool symmetric = false;
  std::vector<Eigen::Vector3d> edge_points;  // selected distinctive points

  Eigen::Vector3d centroid() const;
  void validate() const;  // throws ValidationError
};

double max_pairwise_distance(const std::vector<Eigen::Vector3d>& pts);

}  // namespace posekit
