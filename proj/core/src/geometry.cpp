#include "posekit/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "posekit/error.hpp"

namespace posekit {

bool RigidTransform::is_valid(double tol) const {
  const Matrix3d err = rotation.transpose() * rotation - Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(rotation.determinant() - 1.0) > tol) return false;
  return translation.allFinite();
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

RigidTransform invert(const RigidTransform& a) {
  RigidTransform out;
  out.rotation = a.rotation.transpose();
  out.translation = -(out.rotation * a.translation);
  return out;
}

std::vector<Vector3d> transform_points(const RigidTransform& pose,
                                       const std::vector<Vector3d>& pts) {
  std::vector<Vector3d> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(pose.apply(p));
  return out;
}

double rotation_angle_between(const Matrix3d& a, const Matrix3d& b) {
  // |a - b|_F = 2 sqrt(2) sin(theta / 2); asin keeps precision near zero
  // where the acos-of-trace form floors out around 3e-8.
  const double s = (a - b).norm() / (2.0 * std::sqrt(2.0));
  return 2.0 * std::asin(std::min(1.0, s));
}

Matrix3d axis_angle_rotation(const Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw ConfigError("camera intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw ConfigError("camera intrinsics: image size must be positive");
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
    throw ConfigError("camera intrinsics: principal point outside image");
}

PointCloud backproject(const DepthImage& depth, const CameraIntrinsics& intr,
                       const std::vector<std::uint8_t>* mask) {
  intr.validate();
  if (depth.width != intr.width || depth.height != intr.height)
    throw ConfigError("backproject: depth dimensions do not match intrinsics");
  if (mask && mask->size() != depth.meters.size())
    throw ConfigError("backproject: mask size does not match depth image");

  PointCloud cloud;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * depth.width + u;
      const double d = depth.meters[idx];
      if (!(d > 0.0)) continue;
      if (mask && !(*mask)[idx]) continue;
      cloud.points.emplace_back((u - intr.cx) * d / intr.fx,
                                (v - intr.cy) * d / intr.fy, d);
      cloud.source_pixel.emplace_back(u, v);
    }
  }
  return cloud;
}

RigidTransform fit_rigid(const std::vector<Vector3d>& src,
                         const std::vector<Vector3d>& dst,
                         const std::vector<double>* weights) {
  const std::size_t n = src.size();
  if (n != dst.size())
    throw DegenerateCorrespondenceError("fit_rigid: point counts differ");
  if (n < 3)
    throw DegenerateCorrespondenceError("fit_rigid: need at least 3 pairs");
  if (weights && weights->size() != n)
    throw DegenerateCorrespondenceError("fit_rigid: weight count differs");

  double wsum = 0.0;
  Vector3d src_mean = Vector3d::Zero();
  Vector3d dst_mean = Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights ? (*weights)[i] : 1.0;
    if (w < 0.0)
      throw DegenerateCorrespondenceError("fit_rigid: negative weight");
    wsum += w;
    src_mean += w * src[i];
    dst_mean += w * dst[i];
  }
  if (!(wsum > 0.0))
    throw DegenerateCorrespondenceError("fit_rigid: all weights are zero");
  src_mean /= wsum;
  dst_mean /= wsum;

  Matrix3d h = Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights ? (*weights)[i] : 1.0;
    h += w * (src[i] - src_mean) * (dst[i] - dst_mean).transpose();
  }
  h /= wsum;  // weight-scale invariance

  Eigen::JacobiSVD<Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector3d s = svd.singularValues();
  // Rank < 2 (collinear or coincident correspondences) leaves the rotation
  // underdetermined.
  if (!(s(1) > 1e-13 * std::max(s(0), 1e-300)) || !(s(0) > 0.0))
    throw DegenerateCorrespondenceError(
        "fit_rigid: degenerate correspondences (rank < 2 after centering)");

  Matrix3d u = svd.matrixU();
  Matrix3d v = svd.matrixV();
  Matrix3d r = v * u.transpose();
  if (r.determinant() < 0.0) {
    v.col(2) *= -1.0;  // reflection case: flip the least-significant direction
    r = v * u.transpose();
  }

  RigidTransform out;
  out.rotation = r;
  out.translation = dst_mean - r * src_mean;
  return out;
}

}  // namespace posekit
