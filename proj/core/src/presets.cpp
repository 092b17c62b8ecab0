#include "posekit/presets.hpp"

#include <Eigen/Geometry>

#include "posekit/random.hpp"

namespace posekit {

std::vector<SynthModel> standard_models(int m_edge, int vertex_count) {
  std::vector<SynthModel> out;
  out.push_back(make_model(ShapeKind::box, {0.20, 0.16, 0.12}, vertex_count,
                           m_edge, 11, 1));
  out.push_back(make_model(ShapeKind::sphere, {0.09, 0.0, 0.0}, vertex_count,
                           m_edge, 22, 2));
  out.push_back(make_model(ShapeKind::cylinder, {0.07, 0.20, 0.0}, vertex_count,
                           m_edge, 33, 3));
  out.push_back(make_model(ShapeKind::lshape, {0.20, 0.12, 0.20}, vertex_count,
                           m_edge, 44, 4));
  return out;
}

std::map<int, ObjectModel> model_map(const std::vector<SynthModel>& models) {
  std::map<int, ObjectModel> out;
  for (const auto& sm : models) out[sm.object.class_id] = sm.object;
  return out;
}

SceneSample standard_scene(std::uint64_t seed,
                           const std::vector<SynthModel>& models, int n_points,
                           const NoiseConfig& noise, DepthImage* depth_out,
                           const PlaneSpec& plane) {
  Rng rng(seed);
  const int k = static_cast<int>(models.size());
  std::vector<RigidTransform> poses(k);
  for (int i = 0; i < k; ++i) {
    Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    poses[i].rotation =
        Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
    const double slot = k == 1 ? 0.0 : -0.22 + 0.44 * i / (k - 1.0);
    poses[i].translation = Eigen::Vector3d(slot + rng.uniform(-0.03, 0.03),
                                           rng.uniform(-0.10, 0.10),
                                           rng.uniform(1.15, 1.45));
  }
  NoiseConfig scene_noise = noise;
  scene_noise.seed = seed ^ 0x9e3779b97f4a7c15ull;
  CameraIntrinsics intr;  // 640x480, f 600 defaults
  return render_scene(models, poses, intr, plane, scene_noise, n_points,
                      depth_out);
}

std::vector<SceneSample> standard_training_set(std::uint64_t seed, int count,
                                               int n_points, int m_edge) {
  std::vector<SynthModel> models = standard_models(m_edge);
  models.resize(2);  // box + sphere
  // finite backdrop patch: keeps the class balance learnable at desk scale
  PlaneSpec plane;
  plane.half_extent = 0.5;
  std::vector<SceneSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i)
    out.push_back(
        standard_scene(seed + 1000 * (i + 1), models, n_points, {}, nullptr, plane));
  return out;
}

}  // namespace posekit
