#include "posekit/scene.hpp"

#include "posekit/error.hpp"

namespace posekit {

SceneSample subset_scene(const SceneSample& scene, const std::vector<int>& rows) {
  SceneSample out;
  out.intrinsics = scene.intrinsics;
  out.instances = scene.instances;
  const int n = static_cast<int>(rows.size());
  out.class_label.resize(n);
  out.instance_label.resize(n);
  out.gt_edge_offsets.resize(n, scene.gt_edge_offsets.cols());
  out.gt_center_offset.resize(n, 3);
  out.color.resize(n, 3);
  out.cloud.points.reserve(n);
  const bool pixels = scene.cloud.has_pixels();
  if (pixels) out.cloud.source_pixel.reserve(n);
  for (int r = 0; r < n; ++r) {
    const int i = rows[r];
    if (i < 0 || i >= scene.num_points())
      throw ValidationError("subset_scene: row index out of range");
    out.cloud.points.push_back(scene.cloud.points[i]);
    if (pixels) out.cloud.source_pixel.push_back(scene.cloud.source_pixel[i]);
    out.class_label[r] = scene.class_label[i];
    out.instance_label[r] = scene.instance_label[i];
    out.gt_edge_offsets.row(r) = scene.gt_edge_offsets.row(i);
    out.gt_center_offset.row(r) = scene.gt_center_offset.row(i);
    out.color.row(r) = scene.color.row(i);
  }
  return out;
}

}  // namespace posekit
