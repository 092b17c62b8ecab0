#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "posekit/keypoints.hpp"
#include "posekit/losses.hpp"
#include "posekit/scene.hpp"
#include "posekit/voting.hpp"

namespace posekit {

// Two hidden layers of rectified units, three linear heads (semantic logits,
// edge offsets, center offset), plus input standardization constants.
struct MlpModel {
  Eigen::MatrixXd w1, w2;
  Eigen::RowVectorXd b1, b2;
  Eigen::MatrixXd w_sem, w_edge, w_center;
  Eigen::RowVectorXd b_sem, b_edge, b_center;
  Eigen::RowVectorXd feat_mean, feat_std;

  int feature_dim() const { return static_cast<int>(w1.rows()); }
  int hidden_dim() const { return static_cast<int>(w2.cols()); }
  int num_classes() const { return static_cast<int>(w_sem.cols()) - 1; }
  int num_edge_points() const { return static_cast<int>(w_edge.cols()) / 3; }
  std::size_t parameter_count() const;
  bool all_finite() const;
};

// Hand-crafted per-point features: coordinates relative to the scene
// centroid, local covariance eigenvalues (ascending, k nearest neighbors),
// and the synthetic color channels. C = 9.
FeatureMap featurize(const SceneSample& scene, int k_neighbors = 16);

struct ForwardResult {
  PredictionField pred;
  Eigen::MatrixXd hidden;  // last trunk activations, N x H
};

ForwardResult forward(const MlpModel& model, const Eigen::MatrixXd& features);

enum class KeypointSelector { dks, fps };

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  int epochs = 200;
  int batch_points = 0;  // 0 = every point of the scene each step
  std::uint64_t seed = 1;
  Eigen::Vector3d lambdas = Eigen::Vector3d(3.0, 1.0, 1.0);
  double w_keypoint = 2.0;
  double w_background = 0.0;
  double w_others = 1.0;
  int dks_k = 25;                  // 0 disables keypoint upweighting
  KeypointSelector selector = KeypointSelector::dks;
  int hidden = 64;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_history;  // per-epoch mean multi-task loss
};

// SGD with momentum on the multi-task loss. Keypoint roles are reselected
// from the current trunk features every step; ground-truth labels gate the
// foreground. Deterministic given cfg.seed. Throws TrainingDivergedError when
// the loss stops being finite.
TrainResult train(const std::vector<SceneSample>& scenes, const TrainConfig& cfg);

// Fixed targets for one scene, shared by the trainer and the gradient check.
struct TrainTargets {
  Eigen::MatrixXd edge_truth;    // N x 3M
  Eigen::MatrixXd center_truth;  // N x 3
  std::vector<int> label_columns;
  PointRoleWeights weights;
  Eigen::Vector3d lambdas = Eigen::Vector3d(3.0, 1.0, 1.0);
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
};

// Per-point roles: ground-truth background, per-instance keypoints selected
// on the given features (capped at k per frame), other foreground.
std::vector<PointRole> assign_roles(const std::vector<int>& class_labels,
                                    const std::vector<int>& instance_labels,
                                    const std::vector<Eigen::Vector3d>& points,
                                    const Eigen::MatrixXd& features, int k,
                                    KeypointSelector selector);

// Max relative error between analytic parameter gradients and central finite
// differences (h = 1e-5). Requires parameter_count() < 1e4.
double gradient_check(const MlpModel& model, const Eigen::MatrixXd& features,
                      const TrainTargets& targets);

}  // namespace posekit
