#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <vector>

#include "posekit/model.hpp"
#include "posekit/scene.hpp"
#include "posekit/voting.hpp"

namespace posekit {

enum class ShapeKind { box, cylinder, sphere, lshape };

// Canonical frames: box centered at the origin with full extents dims;
// sphere radius dims[0]; cylinder radius dims[0], height dims[1], z axis;
// lshape an L-section prism with overall extents dims.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::box;
  Eigen::Vector3d dims = Eigen::Vector3d(0.1, 0.1, 0.1);
};

struct SynthModel {
  ObjectModel object;
  ShapeSpec shape;
};

struct NoiseConfig {
  double depth_sigma = 0.0;     // meters, on the rendered depth
  double offset_sigma = 0.0;    // meters, on oracle offsets
  double label_flip_rate = 0.0;
  double dropout_rate = 0.0;    // pixel dropout before subsampling
  std::uint64_t seed = 0;

  void validate() const;
};

struct PlaneSpec {
  bool enabled = true;
  double depth = 2.0;  // meters in front of the camera
  // finite square patch |x|,|y| <= half_extent; infinity fills the frame
  double half_extent = std::numeric_limits<double>::infinity();
};

// Samples vertex_count vertices on the shape surface, measures the exact
// diameter, tags symmetry (sphere/cylinder), and selects m edge points.
SynthModel make_model(ShapeKind kind, const Eigen::Vector3d& dims,
                      int vertex_count, int m, std::uint64_t seed,
                      int class_id = 1);

// Ray-cast z-buffer render of the posed shapes over the background plane,
// backprojected and uniformly subsampled to n_points. Labels and offsets are
// exact; depth noise and dropout apply per NoiseConfig. Deterministic given
// the noise seed. When depth_out is set it receives the noisy depth map.
SceneSample render_scene(const std::vector<SynthModel>& models,
                         const std::vector<RigidTransform>& poses,
                         const CameraIntrinsics& intr, const PlaneSpec& plane,
                         const NoiseConfig& noise, int n_points = 12000,
                         DepthImage* depth_out = nullptr);

// Ground-truth predictions with controllable corruption: one-hot labels with
// a flipped fraction, offsets with isotropic Gaussian noise.
PredictionField oracle_predictions(const SceneSample& scene,
                                   const NoiseConfig& noise);

}  // namespace posekit
