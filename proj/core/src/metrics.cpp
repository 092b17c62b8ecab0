#include "posekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "posekit/error.hpp"
#include "posekit/spatial_grid.hpp"

namespace posekit {

double add_error(const RigidTransform& pred, const RigidTransform& gt,
                 const ObjectModel& model) {
  double sum = 0.0;
  for (const auto& x : model.vertices) sum += (pred.apply(x) - gt.apply(x)).norm();
  return sum / static_cast<double>(model.vertices.size());
}

double add_s_error_brute(const RigidTransform& pred, const RigidTransform& gt,
                         const ObjectModel& model) {
  const std::vector<Vector3d> p = transform_points(pred, model.vertices);
  const std::vector<Vector3d> g = transform_points(gt, model.vertices);
  double sum = 0.0;
  for (const auto& a : p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : g) best = std::min(best, (a - b).squaredNorm());
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(p.size());
}

double add_s_error(const RigidTransform& pred, const RigidTransform& gt,
                   const ObjectModel& model) {
  const std::vector<Vector3d> p = transform_points(pred, model.vertices);
  const std::vector<Vector3d> g = transform_points(gt, model.vertices);
  // Cell size on the order of the mean vertex spacing keeps buckets small.
  const double q = static_cast<double>(g.size());
  const double cell = std::max(model.diameter / std::max(1.0, std::cbrt(q)), 1e-9);
  const SpatialGrid grid(g, cell);
  double sum = 0.0;
  for (const auto& a : p) {
    const int j = grid.nearest(a);
    sum += (a - g[j]).norm();
  }
  return sum / static_cast<double>(p.size());
}

double add_of_error(const RigidTransform& pred, const RigidTransform& gt,
                    const ObjectModel& model) {
  return model.symmetric ? add_s_error(pred, gt, model)
                         : add_error(pred, gt, model);
}

double auc_percent(const std::vector<double>& distances, double max_threshold) {
  if (distances.empty())
    throw EmptyInputError("auc: no distances");
  if (!(max_threshold > 0.0))
    throw ConfigError("auc: max_threshold must be positive");
  // accuracy(t) = |{d < t}| / n integrates to sum max(0, T - d) / (n T)
  double acc = 0.0;
  for (double d : distances) acc += std::max(0.0, max_threshold - d);
  return 100.0 * acc /
         (max_threshold * static_cast<double>(distances.size()));
}

double add01d_rate_percent(const std::vector<double>& distances,
                           double diameter) {
  if (!(diameter > 0.0))
    throw ConfigError("add01d_rate: diameter must be positive");
  if (distances.empty()) return 0.0;
  const double threshold = 0.1 * diameter;
  std::size_t hits = 0;
  for (double d : distances)
    if (d < threshold) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(distances.size());
}

double miou_percent(const std::vector<int>& pred_labels,
                    const std::vector<int>& gt_labels,
                    const std::set<int>& classes) {
  if (pred_labels.size() != gt_labels.size())
    throw ValidationError("miou: label sequences differ in length");

  std::map<int, std::size_t> inter, pred_count, gt_count;
  for (std::size_t i = 0; i < pred_labels.size(); ++i) {
    ++pred_count[pred_labels[i]];
    ++gt_count[gt_labels[i]];
    if (pred_labels[i] == gt_labels[i]) ++inter[pred_labels[i]];
  }

  double acc = 0.0;
  int counted = 0;
  for (int c : classes) {
    const std::size_t pc = pred_count.count(c) ? pred_count[c] : 0;
    const std::size_t gc = gt_count.count(c) ? gt_count[c] : 0;
    const std::size_t in = inter.count(c) ? inter[c] : 0;
    const std::size_t un = pc + gc - in;
    if (un == 0) continue;  // class absent from both sides
    acc += static_cast<double>(in) / static_cast<double>(un);
    ++counted;
  }
  return counted == 0 ? 0.0 : 100.0 * acc / static_cast<double>(counted);
}

double keypoint_error(const std::vector<Eigen::Vector3d>& voted,
                      const std::vector<Eigen::Vector3d>& gt_points) {
  if (voted.size() != gt_points.size())
    throw ValidationError("keypoint_error: point counts differ");
  if (voted.empty())
    throw EmptyInputError("keypoint_error: no points");
  double sum = 0.0;
  for (std::size_t i = 0; i < voted.size(); ++i)
    sum += (voted[i] - gt_points[i]).norm();
  return sum / static_cast<double>(voted.size());
}

}  // namespace posekit
