#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace posekit {

using Eigen::Matrix3d;
using Eigen::Vector3d;

// Rigid body motion: x_camera = R * x_object + t. Units: meters.
struct RigidTransform {
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d translation = Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Vector3d apply(const Vector3d& x) const { return rotation * x + translation; }

  // R orthonormal with det +1, both within tol
  bool is_valid(double tol = 1e-9) const;
};

// compose(a, b) applies b first, then a
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& a);

std::vector<Vector3d> transform_points(const RigidTransform& pose,
                                       const std::vector<Vector3d>& pts);

// Geodesic distance between two rotations, radians.
double rotation_angle_between(const Matrix3d& a, const Matrix3d& b);

// Rotation about a unit axis by angle (radians).
Matrix3d axis_angle_rotation(const Vector3d& axis, double angle);

struct CameraIntrinsics {
  double fx = 600.0, fy = 600.0;
  double cx = 320.0, cy = 240.0;
  int width = 640, height = 480;

  void validate() const;  // throws ConfigError
};

// Row-major depth map in meters; 0 marks invalid pixels.
struct DepthImage {
  int width = 0, height = 0;
  std::vector<double> meters;  // width * height entries

  double at(int u, int v) const { return meters[static_cast<std::size_t>(v) * width + u]; }
  double& at(int u, int v) { return meters[static_cast<std::size_t>(v) * width + u]; }
};

struct PointCloud {
  std::vector<Vector3d> points;
  std::vector<Eigen::Vector2i> source_pixel;  // optional; same length when present

  std::size_t size() const { return points.size(); }
  bool has_pixels() const { return !source_pixel.empty(); }
};

// Pinhole backprojection. One point per pixel with depth > 0 (and mask true,
// when given): x = (u - cx) d / fx, y = (v - cy) d / fy, z = d.
PointCloud backproject(const DepthImage& depth, const CameraIntrinsics& intr,
                       const std::vector<std::uint8_t>* mask = nullptr);

// Least-squares rigid fit (Arun SVD with determinant correction): returns the
// (R, t) minimizing sum_j w_j |dst_j - (R src_j + t)|^2. Weights default to 1.
// Throws DegenerateCorrespondenceError for < 3 pairs or rank < 2 inputs.
RigidTransform fit_rigid(const std::vector<Vector3d>& src,
                         const std::vector<Vector3d>& dst,
                         const std::vector<double>* weights = nullptr);

}  // namespace posekit
