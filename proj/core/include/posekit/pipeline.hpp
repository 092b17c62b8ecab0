#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "posekit/metrics.hpp"
#include "posekit/predictor.hpp"
#include "posekit/scene.hpp"
#include "posekit/synth.hpp"
#include "posekit/voting.hpp"

namespace posekit {

struct PipelineConfig {
  int n_points = 12000;
  int m_edge_points = 8;
  int k_keypoints = 25;
  Eigen::Vector3d lambdas = Eigen::Vector3d(3.0, 1.0, 1.0);
  double w_keypoint = 2.0;
  double w_background = 0.0;
  double w_others = 1.0;
  double center_bandwidth = 0.05;
  double edge_bandwidth = 0.03;
  int min_cluster_size = 30;
  double ms_eps = 1e-5;
  int ms_max_iter = 100;
  bool filter_background = true;
  bool use_vote_weights = false;
  NoiseConfig noise;
  std::uint64_t seed = 1;
  double auc_max_threshold = 0.10;
  KeypointSelector selector = KeypointSelector::dks;
  int repeat = 20;

  VoteParams vote_params() const;
};

// Overrides fields from a flat key=value map; unknown keys raise ConfigError.
void apply_config(PipelineConfig& cfg,
                  const std::map<std::string, std::string>& kv);

struct InstanceEstimate {
  int class_id = 0;
  int matched_instance_id = -1;  // majority ground-truth instance, -1 if none
  RigidTransform pose;
  Eigen::Vector3d voted_center = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> voted_edge_points;
  std::vector<int> vote_support;
  std::vector<int> point_indices;  // scene point indices
};

struct EstimateResult {
  std::vector<InstanceEstimate> instances;
  TimingBreakdown timing;
  bool no_foreground = false;
};

// Background filtering (when enabled), center-vote clustering, edge-point
// voting, and the least-squares fit, per instance. The pose-estimation stage
// is timed with a monotonic clock; prediction_ms passes through into the
// breakdown.
EstimateResult run_estimate(const SceneSample& scene,
                            const PredictionField& pred,
                            const std::map<int, ObjectModel>& models,
                            const PipelineConfig& cfg,
                            double prediction_ms = 0.0);

// Aggregates metrics over scenes. Ground-truth instances without a matched
// estimate count as failures at the AUC max threshold. Timing is the
// per-field median over scenes.
EvalReport run_eval(const std::vector<SceneSample>& scenes,
                    const std::vector<std::vector<int>>& pred_labels,
                    const std::vector<EstimateResult>& estimates,
                    const std::map<int, ObjectModel>& models,
                    const PipelineConfig& cfg);

// Predicted class id per point (argmax; background drops to class 0).
std::vector<int> predicted_labels(const PredictionField& pred);

}  // namespace posekit
