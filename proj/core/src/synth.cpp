#include "posekit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "posekit/error.hpp"
#include "posekit/keypoints.hpp"
#include "posekit/random.hpp"

namespace posekit {

void NoiseConfig::validate() const {
  if (depth_sigma < 0.0 || offset_sigma < 0.0)
    throw ConfigError("noise config: sigmas must be nonnegative");
  if (label_flip_rate < 0.0 || label_flip_rate > 1.0)
    throw ConfigError("noise config: label_flip_rate outside [0, 1]");
  if (dropout_rate < 0.0 || dropout_rate > 1.0)
    throw ConfigError("noise config: dropout_rate outside [0, 1]");
}

namespace {

using Eigen::Vector3d;

// ---- surface sampling -----------------------------------------------------

std::vector<Vector3d> dedupe(const std::vector<Vector3d>& pts) {
  struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key& o) const {
      return x == o.x && y == o.y && z == o.z;
    }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = 1469598103934665603ull;
      for (std::int64_t v : {k.x, k.y, k.z}) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ull;
      }
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_set<Key, KeyHash> seen;
  std::vector<Vector3d> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    const Key k{static_cast<std::int64_t>(std::llround(p.x() * 1e9)),
                static_cast<std::int64_t>(std::llround(p.y() * 1e9)),
                static_cast<std::int64_t>(std::llround(p.z() * 1e9))};
    if (seen.insert(k).second) out.push_back(p);
  }
  return out;
}

std::vector<Vector3d> box_face_grid(const Vector3d& half, int n) {
  std::vector<Vector3d> pts;
  pts.reserve(6 * static_cast<std::size_t>(n) * n);
  for (int axis = 0; axis < 3; ++axis) {
    for (double sign : {-1.0, 1.0}) {
      const int a1 = (axis + 1) % 3;
      const int a2 = (axis + 2) % 3;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double u = n == 1 ? 0.0 : -1.0 + 2.0 * i / (n - 1.0);
          const double v = n == 1 ? 0.0 : -1.0 + 2.0 * j / (n - 1.0);
          Vector3d p;
          p[axis] = sign * half[axis];
          p[a1] = u * half[a1];
          p[a2] = v * half[a2];
          pts.push_back(p);
        }
      }
    }
  }
  return dedupe(pts);
}

// Keeps protected indices, drops random others until exactly target remain.
std::vector<Vector3d> subsample_exact(const std::vector<Vector3d>& pts,
                                      int target,
                                      const std::vector<int>& protected_idx,
                                      Rng& rng) {
  const int n = static_cast<int>(pts.size());
  if (n <= target) return pts;
  std::vector<char> keep(n, 0);
  int kept = 0;
  for (int i : protected_idx) {
    if (kept == target) break;
    if (!keep[i]) {
      keep[i] = 1;
      ++kept;
    }
  }
  std::vector<int> rest;
  rest.reserve(n - kept);
  for (int i = 0; i < n; ++i)
    if (!keep[i]) rest.push_back(i);
  // partial Fisher-Yates over the unprotected indices
  const int need = target - kept;
  for (int i = 0; i < need; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.uniform_index(rest.size() - i));
    std::swap(rest[i], rest[j]);
    keep[rest[i]] = 1;
  }
  std::vector<Vector3d> out;
  out.reserve(target);
  for (int i = 0; i < n; ++i)
    if (keep[i]) out.push_back(pts[i]);
  return out;
}

std::vector<Vector3d> sample_box(const Vector3d& dims, int count, Rng& rng) {
  const Vector3d half = dims * 0.5;
  int n = std::max(2, static_cast<int>(std::ceil(std::sqrt(count / 6.0))) + 1);
  std::vector<Vector3d> pts = box_face_grid(half, n);
  while (static_cast<int>(pts.size()) < count) {
    ++n;
    pts = box_face_grid(half, n);
  }
  // corners always survive subsampling
  std::vector<int> corners;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const Vector3d a = pts[i].cwiseAbs() - half;
    if (a.cwiseAbs().maxCoeff() < 1e-12) corners.push_back(i);
  }
  return subsample_exact(pts, count, corners, rng);
}

std::vector<Vector3d> sample_sphere(double radius, int count) {
  std::vector<Vector3d> pts;
  pts.reserve(count);
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    pts.emplace_back(radius * rho * std::cos(phi), radius * rho * std::sin(phi),
                     radius * z);
  }
  return pts;
}

std::vector<Vector3d> sample_cylinder(double radius, double height, int count,
                                      Rng& rng) {
  const double side_area = 2.0 * M_PI * radius * height;
  const double cap_area = 2.0 * M_PI * radius * radius;
  const double side_frac = side_area / (side_area + cap_area);
  std::vector<Vector3d> pts;
  pts.reserve(count);
  while (static_cast<int>(pts.size()) < count) {
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    if (rng.uniform() < side_frac) {
      pts.emplace_back(radius * std::cos(theta), radius * std::sin(theta),
                       rng.uniform(-0.5 * height, 0.5 * height));
    } else {
      const double rho = radius * std::sqrt(rng.uniform());
      const double z = rng.bernoulli(0.5) ? 0.5 * height : -0.5 * height;
      pts.emplace_back(rho * std::cos(theta), rho * std::sin(theta), z);
    }
  }
  return pts;
}

struct Aabb {
  Vector3d lo, hi;
  bool contains_strict(const Vector3d& p, double eps) const {
    return p.x() > lo.x() + eps && p.x() < hi.x() - eps &&
           p.y() > lo.y() + eps && p.y() < hi.y() - eps &&
           p.z() > lo.z() + eps && p.z() < hi.z() - eps;
  }
};

// L-section prism as the union of a bottom slab and a half-width top slab.
void lshape_boxes(const Vector3d& dims, Aabb& a, Aabb& b) {
  const double ax = dims.x(), ay = dims.y(), az = dims.z();
  a = {Vector3d(-0.5 * ax, -0.5 * ay, -0.5 * az), Vector3d(0.5 * ax, 0.5 * ay, 0.0)};
  b = {Vector3d(-0.5 * ax, -0.5 * ay, 0.0), Vector3d(0.0, 0.5 * ay, 0.5 * az)};
}

Vector3d sample_aabb_surface(const Aabb& box, Rng& rng) {
  const Vector3d ext = box.hi - box.lo;
  const double areas[3] = {ext.y() * ext.z(), ext.x() * ext.z(),
                           ext.x() * ext.y()};
  const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
  double pick = rng.uniform() * total;
  int axis = 0;
  double sign = 1.0;
  for (int a = 0; a < 3; ++a) {
    for (double s : {-1.0, 1.0}) {
      if (pick < areas[a]) {
        axis = a;
        sign = s;
        goto done;
      }
      pick -= areas[a];
    }
  }
done:
  Vector3d p;
  p[axis] = sign > 0 ? box.hi[axis] : box.lo[axis];
  const int a1 = (axis + 1) % 3;
  const int a2 = (axis + 2) % 3;
  p[a1] = rng.uniform(box.lo[a1], box.hi[a1]);
  p[a2] = rng.uniform(box.lo[a2], box.hi[a2]);
  return p;
}

std::vector<Vector3d> sample_lshape(const Vector3d& dims, int count, Rng& rng) {
  Aabb a, b;
  lshape_boxes(dims, a, b);
  const auto area = [](const Aabb& box) {
    const Vector3d e = box.hi - box.lo;
    return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.x() * e.z());
  };
  const double frac_a = area(a) / (area(a) + area(b));
  std::vector<Vector3d> pts;
  pts.reserve(count);
  while (static_cast<int>(pts.size()) < count) {
    const bool from_a = rng.uniform() < frac_a;
    const Vector3d p = sample_aabb_surface(from_a ? a : b, rng);
    const Aabb& other = from_a ? b : a;
    if (other.contains_strict(p, 1e-12)) continue;  // interior of the union
    pts.push_back(p);
  }
  return pts;
}

// ---- ray casting ----------------------------------------------------------

constexpr double kNoHit = std::numeric_limits<double>::infinity();

double ray_aabb(const Vector3d& o, const Vector3d& d, const Aabb& box) {
  double tmin = 0.0, tmax = kNoHit;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-300) {
      if (o[a] < box.lo[a] || o[a] > box.hi[a]) return kNoHit;
      continue;
    }
    double t0 = (box.lo[a] - o[a]) / d[a];
    double t1 = (box.hi[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return kNoHit;
  }
  return tmin > 0.0 ? tmin : kNoHit;
}

double ray_sphere(const Vector3d& o, const Vector3d& d, double r) {
  const double a = d.squaredNorm();
  const double b = 2.0 * o.dot(d);
  const double c = o.squaredNorm() - r * r;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return kNoHit;
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / (2.0 * a);
  if (t0 > 0.0) return t0;
  const double t1 = (-b + sq) / (2.0 * a);
  return t1 > 0.0 ? t1 : kNoHit;
}

double ray_cylinder(const Vector3d& o, const Vector3d& d, double r, double h) {
  double best = kNoHit;
  const double half = 0.5 * h;
  // lateral surface
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-300) {
    const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
    const double c = o.x() * o.x() + o.y() * o.y() - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (t > 0.0 && t < best && std::abs(o.z() + t * d.z()) <= half)
          best = t;
      }
    }
  }
  // caps
  if (std::abs(d.z()) > 1e-300) {
    for (double zc : {-half, half}) {
      const double t = (zc - o.z()) / d.z();
      if (t > 0.0 && t < best) {
        const double x = o.x() + t * d.x();
        const double y = o.y() + t * d.y();
        if (x * x + y * y <= r * r) best = t;
      }
    }
  }
  return best;
}

double ray_shape(const Vector3d& o, const Vector3d& d, const ShapeSpec& shape) {
  switch (shape.kind) {
    case ShapeKind::box: {
      const Vector3d half = shape.dims * 0.5;
      return ray_aabb(o, d, Aabb{-half, half});
    }
    case ShapeKind::sphere:
      return ray_sphere(o, d, shape.dims.x());
    case ShapeKind::cylinder:
      return ray_cylinder(o, d, shape.dims.x(), shape.dims.y());
    case ShapeKind::lshape: {
      Aabb a, b;
      lshape_boxes(shape.dims, a, b);
      return std::min(ray_aabb(o, d, a), ray_aabb(o, d, b));
    }
  }
  return kNoHit;
}

// ---- procedural color -----------------------------------------------------

Vector3d hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = 6.0 * (h - std::floor(h));
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  return {r + m, g + m, b + m};
}

int shape_face_index(const ShapeSpec& shape, const Vector3d& p) {
  switch (shape.kind) {
    case ShapeKind::box: {
      const Vector3d half = shape.dims * 0.5;
      int axis = 0;
      double best = -1.0;
      for (int a = 0; a < 3; ++a) {
        const double r = std::abs(p[a]) / half[a];
        if (r > best) {
          best = r;
          axis = a;
        }
      }
      return 2 * axis + (p[axis] >= 0.0 ? 1 : 0);
    }
    case ShapeKind::sphere:
      return (p.x() >= 0 ? 1 : 0) | (p.y() >= 0 ? 2 : 0) | (p.z() >= 0 ? 4 : 0);
    case ShapeKind::cylinder: {
      const double half = 0.5 * shape.dims.y();
      if (std::abs(std::abs(p.z()) - half) < 1e-9 * std::max(1.0, half))
        return p.z() >= 0 ? 4 : 5;
      const double theta = std::atan2(p.y(), p.x()) + M_PI;
      return std::min(3, static_cast<int>(theta / (2.0 * M_PI) * 4.0));
    }
    case ShapeKind::lshape: {
      Aabb a, b;
      lshape_boxes(shape.dims, a, b);
      // nearest face of whichever box the point lies on
      const Vector3d ca = 0.5 * (a.lo + a.hi), cb = 0.5 * (b.lo + b.hi);
      const Vector3d ha = 0.5 * (a.hi - a.lo), hb = 0.5 * (b.hi - b.lo);
      const Vector3d ra = ((p - ca).cwiseAbs().array() / ha.array()).matrix();
      const Vector3d rb = ((p - cb).cwiseAbs().array() / hb.array()).matrix();
      const bool on_a = ra.maxCoeff() <= rb.maxCoeff();
      const Vector3d rel = on_a ? Vector3d(p - ca) : Vector3d(p - cb);
      const Vector3d r = on_a ? ra : rb;
      int axis = 0;
      r.maxCoeff(&axis);
      return (on_a ? 0 : 6) + 2 * axis + (rel[axis] >= 0.0 ? 1 : 0);
    }
  }
  return 0;
}

Vector3d object_color(int class_id, const ShapeSpec& shape, const Vector3d& p_obj) {
  const double hue = std::fmod(0.61803398875 * class_id, 1.0);
  const int face = shape_face_index(shape, p_obj);
  const double value = 0.45 + 0.05 * (face % 8);
  return hsv_to_rgb(hue, 0.65, value);
}

Vector3d plane_color(const Vector3d& p_world) {
  const long long ix = static_cast<long long>(std::floor(p_world.x() / 0.25));
  const long long iy = static_cast<long long>(std::floor(p_world.y() / 0.25));
  const double g = ((ix + iy) % 2 + 2) % 2 == 0 ? 0.35 : 0.55;
  return {g, g, g};
}

}  // namespace

// ---- models -----------------------------------------------------------------

SynthModel make_model(ShapeKind kind, const Eigen::Vector3d& dims,
                      int vertex_count, int m, std::uint64_t seed,
                      int class_id) {
  if (m < 3)
    throw ConfigError("make_model: m must be at least 3");
  if (vertex_count < std::max(m, 4))
    throw ConfigError("make_model: vertex_count must be >= max(m, 4)");
  const bool dims_ok = [&] {
    switch (kind) {
      case ShapeKind::sphere: return dims.x() > 0.0;
      case ShapeKind::cylinder: return dims.x() > 0.0 && dims.y() > 0.0;
      default: return dims.x() > 0.0 && dims.y() > 0.0 && dims.z() > 0.0;
    }
  }();
  if (!dims_ok)
    throw ConfigError("make_model: dimensions must be positive");

  Rng rng(seed);
  SynthModel out;
  out.shape = ShapeSpec{kind, dims};
  out.object.class_id = class_id;
  switch (kind) {
    case ShapeKind::box:
      out.object.vertices = sample_box(dims, vertex_count, rng);
      out.object.symmetric = false;
      break;
    case ShapeKind::sphere:
      out.object.vertices = sample_sphere(dims.x(), vertex_count);
      out.object.symmetric = true;
      break;
    case ShapeKind::cylinder:
      out.object.vertices = sample_cylinder(dims.x(), dims.y(), vertex_count, rng);
      out.object.symmetric = true;
      break;
    case ShapeKind::lshape:
      out.object.vertices = sample_lshape(dims, vertex_count, rng);
      out.object.symmetric = false;
      break;
  }
  out.object.diameter = max_pairwise_distance(out.object.vertices);
  out.object.edge_points = select_edge_points(out.object, m);
  return out;
}

// ---- rendering --------------------------------------------------------------

SceneSample render_scene(const std::vector<SynthModel>& models,
                         const std::vector<RigidTransform>& poses,
                         const CameraIntrinsics& intr, const PlaneSpec& plane,
                         const NoiseConfig& noise, int n_points,
                         DepthImage* depth_out) {
  intr.validate();
  noise.validate();
  if (models.size() != poses.size())
    throw ConfigError("render_scene: model/pose counts differ");
  if (n_points <= 0)
    throw ConfigError("render_scene: n_points must be positive");
  const int m_edges =
      models.empty() ? 0 : static_cast<int>(models[0].object.edge_points.size());
  for (const auto& sm : models) {
    if (static_cast<int>(sm.object.edge_points.size()) != m_edges)
      throw ConfigError("render_scene: models disagree on edge point count");
  }
  for (std::size_t k = 0; k < models.size(); ++k) {
    for (const auto& v : models[k].object.vertices) {
      if (poses[k].apply(v).z() <= 0.0)
        throw GeometryError("render_scene: object behind the camera");
    }
  }

  // per-instance rays in the object frame
  std::vector<RigidTransform> inv_poses;
  inv_poses.reserve(poses.size());
  for (const auto& p : poses) inv_poses.push_back(invert(p));

  DepthImage depth;
  depth.width = intr.width;
  depth.height = intr.height;
  depth.meters.assign(static_cast<std::size_t>(intr.width) * intr.height, 0.0);
  std::vector<int> pixel_instance(depth.meters.size(), -1);

  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      // direction scaled so the ray parameter equals camera-frame depth
      const Vector3d dir((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
      double best_t = kNoHit;
      if (plane.enabled) {
        const double px = dir.x() * plane.depth;
        const double py = dir.y() * plane.depth;
        if (std::abs(px) <= plane.half_extent && std::abs(py) <= plane.half_extent)
          best_t = plane.depth;
      }
      int best_inst = -1;
      for (std::size_t k = 0; k < models.size(); ++k) {
        const Vector3d o_obj = inv_poses[k].translation;
        const Vector3d d_obj = inv_poses[k].rotation * dir;
        const double t = ray_shape(o_obj, d_obj, models[k].shape);
        if (t < best_t) {
          best_t = t;
          best_inst = static_cast<int>(k);
        }
      }
      if (best_t == kNoHit) continue;
      const std::size_t idx = static_cast<std::size_t>(v) * intr.width + u;
      depth.meters[idx] = best_t;
      pixel_instance[idx] = best_inst;
    }
  }

  Rng rng(noise.seed);
  if (noise.depth_sigma > 0.0) {
    for (auto& d : depth.meters) {
      if (d > 0.0) d = std::max(1e-6, d + noise.depth_sigma * rng.normal());
    }
  }
  if (noise.dropout_rate > 0.0) {
    for (std::size_t i = 0; i < depth.meters.size(); ++i) {
      if (depth.meters[i] > 0.0 && rng.bernoulli(noise.dropout_rate)) {
        depth.meters[i] = 0.0;
        pixel_instance[i] = -1;
      }
    }
  }

  const PointCloud full = backproject(depth, intr);
  const int available = static_cast<int>(full.points.size());
  const int keep = std::min(n_points, available);
  std::vector<int> chosen(available);
  for (int i = 0; i < available; ++i) chosen[i] = i;
  for (int i = 0; i < keep; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.uniform_index(chosen.size() - i));
    std::swap(chosen[i], chosen[j]);
  }
  chosen.resize(keep);
  std::sort(chosen.begin(), chosen.end());

  SceneSample scene;
  scene.intrinsics = intr;
  scene.cloud.points.reserve(keep);
  scene.cloud.source_pixel.reserve(keep);
  scene.class_label.resize(keep);
  scene.instance_label.resize(keep);
  scene.color.resize(keep, 3);
  scene.gt_edge_offsets = Eigen::MatrixXd::Zero(keep, 3 * m_edges);
  scene.gt_center_offset = Eigen::MatrixXd::Zero(keep, 3);
  for (std::size_t k = 0; k < models.size(); ++k) {
    scene.instances.push_back(InstanceGt{models[k].object.class_id,
                                         static_cast<int>(k), poses[k],
                                         static_cast<int>(k)});
  }

  for (int s = 0; s < keep; ++s) {
    const int i = chosen[s];
    const Vector3d p = full.points[i];
    const Eigen::Vector2i px = full.source_pixel[i];
    const std::size_t idx =
        static_cast<std::size_t>(px.y()) * intr.width + px.x();
    const int inst = pixel_instance[idx];
    scene.cloud.points.push_back(p);
    scene.cloud.source_pixel.push_back(px);
    scene.instance_label[s] = inst;
    if (inst < 0) {
      scene.class_label[s] = kBackgroundClass;
      scene.color.row(s) = plane_color(p).transpose();
      continue;
    }
    const auto& sm = models[inst];
    const RigidTransform& pose = poses[inst];
    scene.class_label[s] = sm.object.class_id;
    scene.color.row(s) =
        object_color(sm.object.class_id, sm.shape, inv_poses[inst].apply(p))
            .transpose();
    for (int j = 0; j < m_edges; ++j) {
      const Vector3d target = pose.apply(sm.object.edge_points[j]);
      scene.gt_edge_offsets.row(s).segment<3>(3 * j) = (target - p).transpose();
    }
    scene.gt_center_offset.row(s) =
        (pose.apply(sm.object.centroid()) - p).transpose();
  }

  if (depth_out) *depth_out = std::move(depth);
  return scene;
}

// ---- oracle -----------------------------------------------------------------

PredictionField oracle_predictions(const SceneSample& scene,
                                   const NoiseConfig& noise) {
  noise.validate();
  const int n = scene.num_points();
  const int nc = std::max(1, scene.num_classes());
  const int m = scene.num_edge_points();
  if (n == 0)
    throw EmptyInputError("oracle_predictions: empty scene");

  PredictionField pred;
  pred.class_confidence = Eigen::MatrixXd::Zero(n, nc + 1);
  pred.edge_offsets = scene.gt_edge_offsets;
  pred.center_offset = scene.gt_center_offset;

  Rng rng(noise.seed);
  for (int i = 0; i < n; ++i) {
    // column nc is background; class c sits at column c - 1
    const int true_col =
        scene.class_label[i] == kBackgroundClass ? nc : scene.class_label[i] - 1;
    int col = true_col;
    if (noise.label_flip_rate > 0.0 && rng.bernoulli(noise.label_flip_rate)) {
      const int wrong = static_cast<int>(rng.uniform_index(nc));  // nc wrong cols
      col = wrong >= true_col ? wrong + 1 : wrong;
    }
    pred.class_confidence(i, col) = 1.0;
  }
  if (noise.offset_sigma > 0.0) {
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 3 * m; ++c)
        pred.edge_offsets(i, c) += noise.offset_sigma * rng.normal();
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c)
        pred.center_offset(i, c) += noise.offset_sigma * rng.normal();
  }
  return pred;
}

}  // namespace posekit
