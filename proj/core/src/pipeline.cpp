#include "posekit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "posekit/error.hpp"
#include "posekit/io.hpp"
#include "posekit/numeric.hpp"

namespace posekit {

VoteParams PipelineConfig::vote_params() const {
  VoteParams vp;
  vp.center_bandwidth = center_bandwidth;
  vp.edge_bandwidth = edge_bandwidth;
  vp.min_cluster_size = min_cluster_size;
  vp.eps = ms_eps;
  vp.max_iter = ms_max_iter;
  vp.use_vote_weights = use_vote_weights;
  return vp;
}

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::logic_error&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const ValidationError&) {
    throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
  }
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

PredictionField subset_prediction(const PredictionField& pred,
                                  const std::vector<int>& rows) {
  PredictionField out;
  out.class_confidence.resize(rows.size(), pred.class_confidence.cols());
  out.edge_offsets.resize(rows.size(), pred.edge_offsets.cols());
  out.center_offset.resize(rows.size(), pred.center_offset.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.class_confidence.row(r) = pred.class_confidence.row(rows[r]);
    out.edge_offsets.row(r) = pred.edge_offsets.row(rows[r]);
    out.center_offset.row(r) = pred.center_offset.row(rows[r]);
  }
  return out;
}

// Majority ground-truth instance among the member points; -1 when background
// dominates. Ties take the lower instance id.
int match_instance(const std::vector<int>& member_points,
                   const std::vector<int>& instance_labels) {
  std::map<int, int> counts;
  for (int i : member_points) ++counts[instance_labels[i]];
  int best_id = -1;
  int best_count = -1;
  for (const auto& [id, count] : counts) {
    if (count > best_count || (count == best_count && id < best_id)) {
      best_count = count;
      best_id = id;
    }
  }
  return best_id;
}

}  // namespace

void apply_config(PipelineConfig& cfg,
                  const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "n_points") cfg.n_points = parse_int(key, value);
    else if (key == "m_edge_points") cfg.m_edge_points = parse_int(key, value);
    else if (key == "k_keypoints") cfg.k_keypoints = parse_int(key, value);
    else if (key == "lambda_edge") cfg.lambdas(0) = parse_real(key, value);
    else if (key == "lambda_center") cfg.lambdas(1) = parse_real(key, value);
    else if (key == "lambda_semantic") cfg.lambdas(2) = parse_real(key, value);
    else if (key == "w_keypoint") cfg.w_keypoint = parse_real(key, value);
    else if (key == "w_background") cfg.w_background = parse_real(key, value);
    else if (key == "w_others") cfg.w_others = parse_real(key, value);
    else if (key == "center_bandwidth") cfg.center_bandwidth = parse_real(key, value);
    else if (key == "edge_bandwidth") cfg.edge_bandwidth = parse_real(key, value);
    else if (key == "min_cluster_size") cfg.min_cluster_size = parse_int(key, value);
    else if (key == "ms_eps") cfg.ms_eps = parse_real(key, value);
    else if (key == "ms_max_iter") cfg.ms_max_iter = parse_int(key, value);
    else if (key == "filter_background") cfg.filter_background = parse_bool(key, value);
    else if (key == "use_vote_weights") cfg.use_vote_weights = parse_bool(key, value);
    else if (key == "depth_sigma") cfg.noise.depth_sigma = parse_real(key, value);
    else if (key == "offset_sigma") cfg.noise.offset_sigma = parse_real(key, value);
    else if (key == "label_flip_rate") cfg.noise.label_flip_rate = parse_real(key, value);
    else if (key == "dropout_rate") cfg.noise.dropout_rate = parse_real(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "auc_max_threshold") cfg.auc_max_threshold = parse_real(key, value);
    else if (key == "repeat") cfg.repeat = parse_int(key, value);
    else if (key == "selector") {
      if (value == "dks") cfg.selector = KeypointSelector::dks;
      else if (value == "fps") cfg.selector = KeypointSelector::fps;
      else throw ConfigError("config key 'selector': expected dks or fps");
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
}

EstimateResult run_estimate(const SceneSample& scene,
                            const PredictionField& pred,
                            const std::map<int, ObjectModel>& models,
                            const PipelineConfig& cfg, double prediction_ms) {
  pred.validate();
  if (pred.num_points() != scene.num_points())
    throw ValidationError("run_estimate: prediction/scene point counts differ");

  EstimateResult out;
  out.timing.prediction_ms = prediction_ms;

  bool any_foreground = false;
  for (int i = 0; i < pred.num_points() && !any_foreground; ++i)
    any_foreground = pred.argmax_class(i) != 0;
  if (!any_foreground) {
    out.no_foreground = true;
    out.timing.total_ms = prediction_ms;
    return out;
  }

  const VoteParams vp = cfg.vote_params();
  const auto t0 = Clock::now();

  std::vector<InstanceHypothesis> hyps;
  std::vector<int> local_to_global;
  if (cfg.filter_background) {
    const auto fg = filter_background(pred);
    for (const auto& [cls, rows] : fg)
      local_to_global.insert(local_to_global.end(), rows.begin(), rows.end());
    std::sort(local_to_global.begin(), local_to_global.end());
    std::vector<Eigen::Vector3d> pts(local_to_global.size());
    for (std::size_t r = 0; r < local_to_global.size(); ++r)
      pts[r] = scene.cloud.points[local_to_global[r]];
    const PredictionField sub = subset_prediction(pred, local_to_global);
    hyps = cluster_instances(pts, sub, vp);
    for (auto& hyp : hyps) hyp = vote_edge_points(hyp, pts, sub, vp);
    for (auto& hyp : hyps)
      for (int& i : hyp.point_indices) i = local_to_global[i];
  } else {
    hyps = cluster_instances(scene.cloud.points, pred, vp);
    for (auto& hyp : hyps)
      hyp = vote_edge_points(hyp, scene.cloud.points, pred, vp);
  }

  for (const auto& hyp : hyps) {
    const auto it = models.find(hyp.class_id);
    if (it == models.end()) continue;  // class without a model file
    InstanceEstimate est;
    est.class_id = hyp.class_id;
    est.voted_center = hyp.voted_center;
    est.voted_edge_points = hyp.voted_edge_points;
    est.vote_support = hyp.vote_support;
    est.point_indices = hyp.point_indices;
    try {
      est.pose = estimate_pose(hyp, it->second, cfg.use_vote_weights);
    } catch (const DegenerateCorrespondenceError&) {
      continue;  // collapsed votes cannot constrain a pose
    }
    out.instances.push_back(std::move(est));
  }

  out.timing.pose_estimation_ms = ms_since(t0);
  out.timing.total_ms = prediction_ms + out.timing.pose_estimation_ms;

  for (auto& est : out.instances)
    est.matched_instance_id =
        match_instance(est.point_indices, scene.instance_label);
  return out;
}

std::vector<int> predicted_labels(const PredictionField& pred) {
  std::vector<int> out(pred.num_points());
  for (int i = 0; i < pred.num_points(); ++i) out[i] = pred.argmax_class(i);
  return out;
}

EvalReport run_eval(const std::vector<SceneSample>& scenes,
                    const std::vector<std::vector<int>>& pred_labels,
                    const std::vector<EstimateResult>& estimates,
                    const std::map<int, ObjectModel>& models,
                    const PipelineConfig& cfg) {
  if (scenes.size() != estimates.size() || scenes.size() != pred_labels.size())
    throw ValidationError("run_eval: scene/label/estimate counts differ");

  struct ClassAcc {
    std::vector<double> adds, addof, kp;
  };
  std::map<int, ClassAcc> acc;

  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const SceneSample& scene = scenes[s];
    for (const auto& gt : scene.instances) {
      const auto mit = models.find(gt.class_id);
      if (mit == models.end())
        throw ValidationError("run_eval: no model for class " +
                              std::to_string(gt.class_id));
      const ObjectModel& model = mit->second;
      const InstanceEstimate* best = nullptr;
      for (const auto& est : estimates[s].instances) {
        if (est.matched_instance_id != gt.instance_id) continue;
        if (!best || est.point_indices.size() > best->point_indices.size())
          best = &est;
      }
      ClassAcc& a = acc[gt.class_id];
      if (best) {
        a.adds.push_back(add_s_error(best->pose, gt.pose, model));
        a.addof.push_back(add_of_error(best->pose, gt.pose, model));
        a.kp.push_back(keypoint_error(
            best->voted_edge_points, transform_points(gt.pose, model.edge_points)));
      } else {
        // missed instance: maximum-distance failure
        a.adds.push_back(cfg.auc_max_threshold);
        a.addof.push_back(cfg.auc_max_threshold);
      }
    }
  }

  EvalReport report;
  PerClassMetrics mean_row;
  mean_row.class_id = -1;
  for (const auto& [cls, a] : acc) {
    PerClassMetrics m;
    m.class_id = cls;
    m.adds_auc = auc_percent(a.adds, cfg.auc_max_threshold);
    m.add_s_auc = auc_percent(a.addof, cfg.auc_max_threshold);
    m.add01d_rate = add01d_rate_percent(a.addof, models.at(cls).diameter);
    if (a.kp.empty()) {
      m.kp_err_m = cfg.auc_max_threshold;  // nothing voted for this class
    } else {
      double sum = 0.0;
      for (double v : a.kp) sum += v;
      m.kp_err_m = sum / static_cast<double>(a.kp.size());
    }
    mean_row.adds_auc += m.adds_auc;
    mean_row.add_s_auc += m.add_s_auc;
    mean_row.add01d_rate += m.add01d_rate;
    mean_row.kp_err_m += m.kp_err_m;
    report.per_class.push_back(m);
  }
  if (!report.per_class.empty()) {
    const double k = static_cast<double>(report.per_class.size());
    mean_row.adds_auc /= k;
    mean_row.add_s_auc /= k;
    mean_row.add01d_rate /= k;
    mean_row.kp_err_m /= k;
  }
  report.all = mean_row;

  // mIoU over all points of all scenes; background is an ordinary class
  std::vector<int> pred_all, gt_all;
  std::set<int> classes;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    if (pred_labels[s].size() != scenes[s].class_label.size())
      throw ValidationError("run_eval: label length mismatch");
    pred_all.insert(pred_all.end(), pred_labels[s].begin(), pred_labels[s].end());
    gt_all.insert(gt_all.end(), scenes[s].class_label.begin(),
                  scenes[s].class_label.end());
  }
  for (int c : pred_all) classes.insert(c);
  for (int c : gt_all) classes.insert(c);
  if (!gt_all.empty()) report.miou = miou_percent(pred_all, gt_all, classes);

  std::vector<double> pm, em, tm;
  for (const auto& est : estimates) {
    pm.push_back(est.timing.prediction_ms);
    em.push_back(est.timing.pose_estimation_ms);
    tm.push_back(est.timing.total_ms);
  }
  report.timing.prediction_ms = median(pm);
  report.timing.pose_estimation_ms = median(em);
  report.timing.total_ms = median(tm);
  return report;
}

}  // namespace posekit
