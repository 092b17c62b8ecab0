#pragma once

#include <Eigen/Core>
#include <set>
#include <vector>

#include "posekit/geometry.hpp"
#include "posekit/model.hpp"

namespace posekit {

// Mean paired-vertex distance between the two posings of the model.
double add_error(const RigidTransform& pred, const RigidTransform& gt,
                 const ObjectModel& model);

// Closest-point variant for symmetric objects; grid-accelerated.
double add_s_error(const RigidTransform& pred, const RigidTransform& gt,
                   const ObjectModel& model);

// O(q^2) reference implementation kept as the oracle for the accelerated path.
double add_s_error_brute(const RigidTransform& pred, const RigidTransform& gt,
                         const ObjectModel& model);

// add_s_error for symmetric models, add_error otherwise.
double add_of_error(const RigidTransform& pred, const RigidTransform& gt,
                    const ObjectModel& model);

// Area under the accuracy-vs-threshold curve as a percentage, integrated
// exactly from the sorted-distance step function. accuracy(t) counts strict
// d < t.
double auc_percent(const std::vector<double>& distances,
                   double max_threshold = 0.10);

// Percentage of distances strictly below 10% of the diameter.
double add01d_rate_percent(const std::vector<double>& distances,
                           double diameter);

// Mean per-class intersection-over-union of point label sets, percent.
// Classes absent from both sides are excluded from the mean.
double miou_percent(const std::vector<int>& pred_labels,
                    const std::vector<int>& gt_labels,
                    const std::set<int>& classes);

// Mean Euclidean distance between matched voted/ground-truth edge points.
double keypoint_error(const std::vector<Eigen::Vector3d>& voted,
                      const std::vector<Eigen::Vector3d>& gt_points);

struct TimingBreakdown {
  double prediction_ms = 0.0;
  double pose_estimation_ms = 0.0;
  double total_ms = 0.0;
};

struct PerClassMetrics {
  int class_id = 0;
  double adds_auc = 0.0;      // AUC over ADD-S distances
  double add_s_auc = 0.0;     // AUC over ADD(S) distances
  double add01d_rate = 0.0;   // ADD(S) < 0.1 diameter, percent
  double kp_err_m = 0.0;      // mean voted edge point error, meters
};

struct EvalReport {
  std::vector<PerClassMetrics> per_class;
  PerClassMetrics all;  // class_id -1, mean over classes
  double miou = 0.0;
  TimingBreakdown timing;
};

}  // namespace posekit
