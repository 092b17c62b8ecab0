#pragma once

#include <Eigen/Core>
#include <vector>

namespace posekit {

enum class PointRole { keypoint, background, other };

// W(p_i): per-role loss weights plus the per-point role tags they apply to.
struct PointRoleWeights {
  double w_keypoint = 2.0;
  double w_background = 0.0;
  double w_others = 1.0;
  std::vector<PointRole> roles;  // one tag per point

  double weight(PointRole r) const {
    switch (r) {
      case PointRole::keypoint: return w_keypoint;
      case PointRole::background: return w_background;
      default: return w_others;
    }
  }
  double weight_of(int i) const { return weight(roles[i]); }
};

// Norm applied to each offset residual. l1 sums absolute components; l2 is
// the Euclidean length per 3-vector.
enum class OffsetNorm { l1, l2 };

struct LossValue {
  double value = 0.0;
  Eigen::MatrixXd gradient;  // same shape as the differentiated input
};

// (1/N) sum_i sum_j |of_i^j - of_i^j*| W(p_i) over N x 3M offset matrices.
LossValue edge_offset_loss(const Eigen::MatrixXd& pred,
                           const Eigen::MatrixXd& truth,
                           const PointRoleWeights& w,
                           OffsetNorm norm = OffsetNorm::l1);

// (1/N) sum_i |dx_i - dx_i*| W(p_i) over N x 3 matrices.
LossValue center_offset_loss(const Eigen::MatrixXd& pred,
                             const Eigen::MatrixXd& truth,
                             const PointRoleWeights& w,
                             OffsetNorm norm = OffsetNorm::l1);

// Mean focal loss -alpha (1 - q)^gamma log(q) with q the confidence assigned
// to the true class, clamped to [1e-12, 1]. labels hold true class columns.
LossValue focal_semantic_loss(const Eigen::MatrixXd& conf,
                              const std::vector<int>& label_columns,
                              double alpha = 0.25, double gamma = 2.0);

double multi_task_loss(double l_edge, double l_center, double l_sem,
                       const Eigen::Vector3d& lambdas = {3.0, 1.0, 1.0});

}  // namespace posekit
