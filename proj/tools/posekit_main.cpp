#include <CLI11.hpp>

#include <Eigen/Geometry>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "posekit/bench.hpp"
#include "posekit/error.hpp"
#include "posekit/io.hpp"
#include "posekit/numeric.hpp"
#include "posekit/pipeline.hpp"
#include "posekit/presets.hpp"
#include "posekit/random.hpp"

namespace fs = std::filesystem;
using namespace posekit;

namespace {

// flag > config file > built-in default
struct ConfigLayer {
  std::string config_path;
  CLI::App* cmd = nullptr;

  void attach(CLI::App* app) {
    cmd = app;
    app->add_option("--config", config_path,
                    "flat key=value config file (flags take precedence)");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_path.empty()) apply_config(cfg, load_flat_config(config_path));
    return cfg;
  }

  bool given(const std::string& flag) const { return cmd->count(flag) > 0; }
};

std::vector<fs::path> scene_files(const std::string& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir))
    throw ConfigError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 11 && name.substr(name.size() - 11) == ".scene.json")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw ConfigError("no *.scene.json files in " + dir);
  return files;
}

int run_gen(const ConfigLayer& layer, int scenes, int objects,
            const std::string& out_dir, std::uint64_t seed, int n_points,
            int m_edge, double depth_sigma, double dropout) {
  PipelineConfig cfg = layer.resolve();
  if (layer.given("--seed")) cfg.seed = seed;
  if (layer.given("--n-points")) cfg.n_points = n_points;
  if (layer.given("--m-edge-points")) cfg.m_edge_points = m_edge;
  if (layer.given("--depth-sigma")) cfg.noise.depth_sigma = depth_sigma;
  if (layer.given("--dropout-rate")) cfg.noise.dropout_rate = dropout;

  auto models = standard_models(cfg.m_edge_points);
  if (objects < 1 || objects > static_cast<int>(models.size()))
    throw ConfigError("gen: --objects must be in 1.." +
                      std::to_string(models.size()));
  models.resize(objects);

  const fs::path root(out_dir);
  fs::create_directories(root / "models");
  fs::create_directories(root / "scenes");
  std::vector<std::string> model_refs;
  for (const auto& sm : models) {
    const std::string name =
        "model_" + std::to_string(sm.object.class_id) + ".model.json";
    save_model_json((root / "models" / name).string(), sm.object);
    model_refs.push_back("../models/" + name);
  }
  for (int s = 0; s < scenes; ++s) {
    NoiseConfig noise = cfg.noise;
    DepthImage depth;
    const SceneSample scene =
        standard_scene(cfg.seed + s, models, cfg.n_points, noise, &depth);
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d", s);
    save_scene_json((root / "scenes" / (std::string(name) + ".scene.json")).string(),
                    scene, model_refs);
    save_d16((root / "scenes" / (std::string(name) + ".d16")).string(), depth);
  }
  std::cout << "wrote " << scenes << " scenes and " << models.size()
            << " models under " << out_dir << "\n";
  return 0;
}

int run_keypoints(const ConfigLayer& layer, const std::string& scene_path,
                  int k, const std::string& selector_name,
                  const std::string& out_path) {
  PipelineConfig cfg = layer.resolve();
  if (layer.given("--k-keypoints")) cfg.k_keypoints = k;
  if (layer.given("--selector")) {
    if (selector_name == "dks") cfg.selector = KeypointSelector::dks;
    else if (selector_name == "fps") cfg.selector = KeypointSelector::fps;
    else throw ConfigError("--selector: expected dks or fps");
  }

  const SceneSample scene = load_scene_json(scene_path);
  const FeatureMap fm = featurize(scene);

  // ground-truth foreground rows feed the selector
  std::vector<int> fg;
  for (int i = 0; i < scene.num_points(); ++i)
    if (scene.class_label[i] != kBackgroundClass) fg.push_back(i);
  if (fg.empty())
    throw ValidationError("keypoints: scene has no foreground points");

  std::ofstream out(out_path);
  if (!out)
    throw ConfigError("cannot open for writing: " + out_path);
  out << "rank,point_index,win_count,x,y,z\n";
  if (cfg.selector == KeypointSelector::dks) {
    FeatureMap sub;
    sub.values.resize(fg.size(), fm.values.cols());
    sub.point_index = fg;
    for (std::size_t r = 0; r < fg.size(); ++r)
      sub.values.row(r) = fm.values.row(fg[r]);
    const KeypointSet ks = select_dynamic_keypoints(sub, cfg.k_keypoints);
    for (std::size_t r = 0; r < ks.indices.size(); ++r) {
      const auto& p = scene.cloud.points[ks.indices[r]];
      out << r << "," << ks.indices[r] << "," << ks.win_counts[r] << ","
          << format_g17(p.x()) << "," << format_g17(p.y()) << ","
          << format_g17(p.z()) << "\n";
    }
  } else {
    std::vector<Eigen::Vector3d> pts(fg.size());
    for (std::size_t r = 0; r < fg.size(); ++r) pts[r] = scene.cloud.points[fg[r]];
    const auto picked = select_fps(pts, cfg.k_keypoints, 0);
    for (std::size_t r = 0; r < picked.size(); ++r) {
      const int idx = fg[picked[r]];
      const auto& p = scene.cloud.points[idx];
      out << r << "," << idx << ",0," << format_g17(p.x()) << ","
          << format_g17(p.y()) << "," << format_g17(p.z()) << "\n";
    }
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

struct LoadedScenes {
  std::vector<SceneSample> scenes;
  std::map<int, ObjectModel> models;
};

LoadedScenes load_all(const std::string& dir) {
  LoadedScenes out;
  for (const auto& path : scene_files(dir)) {
    std::vector<ObjectModel> models;
    out.scenes.push_back(load_scene_json(path.string(), &models));
    for (const auto& m : models) out.models[m.class_id] = m;
  }
  return out;
}

int run_estimate_cmd(const ConfigLayer& layer, const std::string& in_dir,
                     const std::string& out_dir, const std::string& checkpoint,
                     std::uint64_t seed, double offset_sigma, double flip_rate,
                     bool no_filter, int repeat) {
  PipelineConfig cfg = layer.resolve();
  if (layer.given("--seed")) cfg.seed = seed;
  if (layer.given("--offset-sigma")) cfg.noise.offset_sigma = offset_sigma;
  if (layer.given("--label-flip-rate")) cfg.noise.label_flip_rate = flip_rate;
  if (layer.given("--repeat")) cfg.repeat = repeat;
  if (no_filter) cfg.filter_background = false;

  const LoadedScenes data = load_all(in_dir);
  MlpModel net;
  const bool use_net = !checkpoint.empty();
  if (use_net) net = load_checkpoint(checkpoint);

  const fs::path root(out_dir);
  fs::create_directories(root);
  std::vector<PoseRecord> pose_rows;
  std::ofstream votes((root / "votes.csv").string());
  votes << "scene_id,instance_id,class_id,edge_index,x,y,z,support\n";
  std::ofstream labels((root / "labels.csv").string());
  labels << "scene_id,point_index,class_id\n";
  std::vector<double> pred_ms, pe_ms, total_ms;

  for (std::size_t s = 0; s < data.scenes.size(); ++s) {
    const SceneSample& scene = data.scenes[s];

    const auto t0 = std::chrono::steady_clock::now();
    PredictionField pred;
    if (use_net) {
      const FeatureMap fm = featurize(scene);
      pred = forward(net, fm.values).pred;
    } else {
      NoiseConfig noise = cfg.noise;
      noise.seed = cfg.seed + 7919 * (s + 1);
      pred = oracle_predictions(scene, noise);
    }
    const double prediction_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - t0)
            .count();

    EstimateResult est;
    std::vector<double> runs;
    const int reps = std::max(1, cfg.repeat);
    for (int r = 0; r < reps; ++r) {
      est = run_estimate(scene, pred, data.models, cfg, prediction_ms);
      runs.push_back(est.timing.pose_estimation_ms);
    }
    est.timing.pose_estimation_ms = median(runs);
    est.timing.total_ms = prediction_ms + est.timing.pose_estimation_ms;
    if (est.no_foreground)
      std::cerr << "warning: scene " << s << " has no foreground points\n";

    // one estimate per matched ground-truth instance (largest support wins)
    std::map<int, const InstanceEstimate*> best;
    for (const auto& e : est.instances) {
      if (e.matched_instance_id < 0) {
        std::cerr << "warning: scene " << s
                  << ": dropping unmatched hypothesis of class " << e.class_id
                  << "\n";
        continue;
      }
      auto it = best.find(e.matched_instance_id);
      if (it == best.end() ||
          e.point_indices.size() > it->second->point_indices.size())
        best[e.matched_instance_id] = &e;
    }
    for (const auto& [inst_id, e] : best) {
      pose_rows.push_back(PoseRecord{static_cast<int>(s), inst_id, e->class_id,
                                     e->pose});
      for (std::size_t j = 0; j < e->voted_edge_points.size(); ++j) {
        const auto& v = e->voted_edge_points[j];
        votes << s << "," << inst_id << "," << e->class_id << "," << j << ","
              << format_g17(v.x()) << "," << format_g17(v.y()) << ","
              << format_g17(v.z()) << "," << e->vote_support[j] << "\n";
      }
    }
    for (int i = 0; i < pred.num_points(); ++i)
      labels << s << "," << i << "," << pred.argmax_class(i) << "\n";

    pred_ms.push_back(prediction_ms);
    pe_ms.push_back(est.timing.pose_estimation_ms);
    total_ms.push_back(est.timing.total_ms);
  }

  save_pose_csv((root / "poses.csv").string(), pose_rows);
  TimingBreakdown timing;
  timing.prediction_ms = median(pred_ms);
  timing.pose_estimation_ms = median(pe_ms);
  timing.total_ms = median(total_ms);
  save_timing_csv((root / "timing.csv").string(), timing);
  std::cout << "wrote estimates for " << data.scenes.size() << " scenes to "
            << out_dir << "\n";
  return 0;
}

int run_eval_cmd(const ConfigLayer& layer, const std::string& in_dir,
                 const std::string& est_dir, const std::string& out_dir) {
  const PipelineConfig cfg = layer.resolve();
  const LoadedScenes data = load_all(in_dir);
  const fs::path est(est_dir);

  const auto pose_rows = load_pose_csv((est / "poses.csv").string());

  // votes.csv -> per (scene, instance) edge points
  struct VoteRow {
    std::vector<Eigen::Vector3d> points;
    std::vector<int> support;
  };
  std::map<std::pair<int, int>, VoteRow> votes;
  {
    std::ifstream in((est / "votes.csv").string());
    if (!in)
      throw ConfigError("cannot open " + (est / "votes.csv").string());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string field;
      std::vector<std::string> f;
      while (std::getline(ss, field, ',')) f.push_back(field);
      if (f.size() != 8)
        throw ValidationError("votes.csv: malformed row");
      const auto key = std::make_pair(static_cast<int>(parse_double(f[0])),
                                      static_cast<int>(parse_double(f[1])));
      auto& row = votes[key];
      const int j = static_cast<int>(parse_double(f[3]));
      if (static_cast<int>(row.points.size()) <= j) {
        row.points.resize(j + 1, Eigen::Vector3d::Zero());
        row.support.resize(j + 1, 0);
      }
      row.points[j] =
          Eigen::Vector3d(parse_double(f[4]), parse_double(f[5]), parse_double(f[6]));
      row.support[j] = static_cast<int>(parse_double(f[7]));
    }
  }

  // labels.csv -> per-scene predicted labels
  std::vector<std::vector<int>> labels(data.scenes.size());
  for (std::size_t s = 0; s < data.scenes.size(); ++s)
    labels[s].assign(data.scenes[s].num_points(), kBackgroundClass);
  {
    std::ifstream in((est / "labels.csv").string());
    if (!in)
      throw ConfigError("cannot open " + (est / "labels.csv").string());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string field;
      std::vector<std::string> f;
      while (std::getline(ss, field, ',')) f.push_back(field);
      if (f.size() != 3)
        throw ValidationError("labels.csv: malformed row");
      const int s = static_cast<int>(parse_double(f[0]));
      const int i = static_cast<int>(parse_double(f[1]));
      if (s < 0 || s >= static_cast<int>(labels.size()) || i < 0 ||
          i >= static_cast<int>(labels[s].size()))
        throw ValidationError("labels.csv: index out of range");
      labels[s][i] = static_cast<int>(parse_double(f[2]));
    }
  }

  std::vector<EstimateResult> estimates(data.scenes.size());
  for (const auto& row : pose_rows) {
    if (row.scene_id < 0 || row.scene_id >= static_cast<int>(estimates.size()))
      throw ValidationError("poses.csv: scene_id out of range");
    InstanceEstimate e;
    e.class_id = row.class_id;
    e.matched_instance_id = row.instance_id;
    e.pose = row.pose;
    const auto it = votes.find({row.scene_id, row.instance_id});
    if (it != votes.end()) {
      e.voted_edge_points = it->second.points;
      e.vote_support = it->second.support;
    }
    estimates[row.scene_id].instances.push_back(std::move(e));
  }
  // carry the measured timing through the report
  {
    std::ifstream in((est / "timing.csv").string());
    if (in) {
      std::string line;
      std::getline(in, line);
      TimingBreakdown t;
      while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string stage, value;
        std::getline(ss, stage, ',');
        std::getline(ss, value, ',');
        if (stage == "prediction") t.prediction_ms = parse_double(value);
        if (stage == "pose_estimation") t.pose_estimation_ms = parse_double(value);
        if (stage == "total") t.total_ms = parse_double(value);
      }
      for (auto& e : estimates) e.timing = t;
    }
  }

  const EvalReport report =
      run_eval(data.scenes, labels, estimates, data.models, cfg);
  const fs::path root(out_dir);
  fs::create_directories(root);
  save_eval_csv((root / "eval.csv").string(), report);
  save_timing_csv((root / "timing.csv").string(), report.timing);
  save_summary_csv((root / "summary.csv").string(), report);
  std::cout << "wrote eval report to " << out_dir << " (mean ADD(S) AUC "
            << report.all.add_s_auc << ", mIoU " << report.miou << ")\n";
  return 0;
}

int run_train(const ConfigLayer& layer, bool standard,
              const std::string& scenes_dir, const std::string& out_dir,
              int epochs, std::uint64_t seed, const std::string& selector_name,
              int dks_k, int train_points, int train_scenes) {
  PipelineConfig cfg = layer.resolve();
  if (layer.given("--seed")) cfg.seed = seed;
  if (layer.given("--k-keypoints")) cfg.k_keypoints = dks_k;

  TrainConfig tc;
  tc.epochs = epochs;
  tc.seed = cfg.seed;
  tc.dks_k = cfg.k_keypoints;
  tc.lambdas = cfg.lambdas;
  tc.w_keypoint = cfg.w_keypoint;
  tc.w_background = cfg.w_background;
  tc.w_others = cfg.w_others;
  if (layer.given("--selector") || !selector_name.empty()) {
    if (selector_name == "dks") tc.selector = KeypointSelector::dks;
    else if (selector_name == "fps") tc.selector = KeypointSelector::fps;
    else throw ConfigError("--selector: expected dks or fps");
  }

  std::vector<SceneSample> scenes;
  if (standard) {
    scenes = standard_training_set(tc.seed, train_scenes, train_points);
  } else {
    if (scenes_dir.empty())
      throw ConfigError("train-toy: need --standard or --scenes DIR");
    scenes = load_all(scenes_dir).scenes;
  }

  const TrainResult result = train(scenes, tc);

  const fs::path root(out_dir);
  fs::create_directories(root);
  save_checkpoint((root / "model.ckpt").string(), result.model);
  save_loss_history_csv((root / "loss_history.csv").string(),
                        result.loss_history);

  // held-out evaluation on freshly seeded scenes from the same generator
  std::vector<SynthModel> models = standard_models();
  models.resize(2);
  std::vector<int> pred_all, gt_all;
  std::set<int> classes;
  for (int s = 0; s < 2; ++s) {
    const SceneSample held =
        standard_scene(tc.seed + 777000 + s, models, train_points);
    const FeatureMap fm = featurize(held);
    const ForwardResult fwd = forward(result.model, fm.values);
    const auto pl = predicted_labels(fwd.pred);
    pred_all.insert(pred_all.end(), pl.begin(), pl.end());
    gt_all.insert(gt_all.end(), held.class_label.begin(), held.class_label.end());
  }
  for (int c : pred_all) classes.insert(c);
  for (int c : gt_all) classes.insert(c);
  const double miou = miou_percent(pred_all, gt_all, classes);

  std::ofstream report((root / "training_report.txt").string());
  report << "epochs: " << result.loss_history.size() << "\n";
  report << "first_epoch_loss: " << format_g17(result.loss_history.front())
         << "\n";
  report << "final_epoch_loss: " << format_g17(result.loss_history.back())
         << "\n";
  report << "held_out_miou_pct: " << format_g17(miou) << "\n";
  std::cout << "trained " << result.loss_history.size() << " epochs; loss "
            << result.loss_history.front() << " -> "
            << result.loss_history.back() << "; held-out mIoU " << miou
            << "\n";
  return 0;
}

int run_bench_cmd(const ConfigLayer& layer, const std::string& suite_path,
                  const std::string& out_dir) {
  const PipelineConfig cfg = layer.resolve();
  const BenchSuite suite = load_bench_suite(suite_path);
  run_bench(suite, cfg, out_dir);
  std::cout << "bench sweep '" << suite.sweep << "' written to " << out_dir
            << "\n";
  return 0;
}

// quick oracle-equivalence suites; exit nonzero on the first failure
int run_selfcheck() {
  int failures = 0;
  const auto check = [&](const char* name, bool ok) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };
  Rng rng(2024);

  {  // rigid fit on random exact correspondences
    bool ok = true;
    for (int t = 0; t < 200 && ok; ++t) {
      std::vector<Eigen::Vector3d> src(8);
      for (auto& p : src)
        p = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1),
                            rng.uniform(-1, 1));
      Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
      q.normalize();
      RigidTransform truth;
      truth.rotation =
          Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
      truth.translation = Eigen::Vector3d(0.3, -0.2, 1.0);
      const RigidTransform fit = fit_rigid(src, transform_points(truth, src));
      ok = rotation_angle_between(fit.rotation, truth.rotation) < 1e-8 &&
           (fit.translation - truth.translation).norm() < 1e-9;
    }
    check("rigid fit recovers exact poses", ok);
  }
  {  // accelerated closest-point distance equals brute force
    bool ok = true;
    for (int t = 0; t < 200 && ok; ++t) {
      ObjectModel model;
      model.class_id = 1;
      for (int i = 0; i < 40; ++i)
        model.vertices.emplace_back(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                    rng.uniform(-0.1, 0.1));
      model.diameter = max_pairwise_distance(model.vertices);
      RigidTransform a, b;
      a.translation = Eigen::Vector3d(rng.uniform(-0.02, 0.02), 0, 0);
      b.rotation = axis_angle_rotation(Eigen::Vector3d::UnitY(),
                                       rng.uniform(0, 0.5));
      ok = std::abs(add_s_error(a, b, model) - add_s_error_brute(a, b, model)) <
           1e-9;
    }
    check("accelerated ADD-S equals brute force", ok);
  }
  {  // area under the accuracy curve: closed forms
    const bool ok = auc_percent({0.05}, 0.1) == 50.0 &&
                    auc_percent({0.0, 0.0}, 0.1) == 100.0 &&
                    auc_percent({0.5}, 0.1) == 0.0;
    check("AUC step-function integral", ok);
  }
  {  // dynamic keypoint selection worked examples
    FeatureMap fm;
    fm.values.resize(3, 2);
    fm.values << 5, 0, 1, 9, 2, 2;
    fm.point_index = {0, 1, 2};
    const KeypointSet ks = select_dynamic_keypoints(fm, 2);
    const bool ok = ks.indices.size() == 2 && ks.indices[0] == 1 &&
                    ks.indices[1] == 0 && ks.win_counts[0] == 1;
    check("dynamic keypoint tally", ok);
  }
  {  // farthest point sampling on collinear points
    const std::vector<Eigen::Vector3d> line = {
        {0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {5, 0, 0}};
    check("farthest point sampling", select_fps(line, 3, 0) ==
                                         std::vector<int>({0, 3, 2}));
  }
  {  // mean shift two-blob resolution
    std::vector<Eigen::Vector3d> samples;
    for (int i = 0; i < 50; ++i)
      samples.emplace_back(rng.normal(0, 0.01), rng.normal(0, 0.01), 1.0);
    for (int i = 0; i < 50; ++i)
      samples.emplace_back(1.0 + rng.normal(0, 0.01), rng.normal(0, 0.01), 1.0);
    const MeanShiftResult r = mean_shift(samples, 0.05);
    check("mean shift resolves two blobs", r.centers.size() == 2);
  }
  {  // end-to-end zero noise identity
    const auto models = standard_models(8, 300);
    const auto by_class = model_map(models);
    PipelineConfig cfg;
    cfg.n_points = 4000;
    bool ok = true;
    for (int s = 0; s < 3 && ok; ++s) {
      const SceneSample scene = standard_scene(9000 + s, models, cfg.n_points);
      const PredictionField pred = oracle_predictions(scene, NoiseConfig{});
      const EstimateResult est = run_estimate(scene, pred, by_class, cfg);
      ok = est.instances.size() == scene.instances.size();
      for (const auto& gt : scene.instances) {
        const InstanceEstimate* found = nullptr;
        for (const auto& e : est.instances)
          if (e.matched_instance_id == gt.instance_id) found = &e;
        ok = ok && found &&
             add_error(found->pose, gt.pose, by_class.at(gt.class_id)) < 1e-6;
      }
    }
    check("zero-noise pipeline identity", ok);
  }
  {  // scene generation determinism
    const auto models = standard_models(8, 300);
    NoiseConfig noise;
    noise.depth_sigma = 0.002;
    noise.seed = 5;
    const SceneSample a = standard_scene(31, models, 2000, noise);
    const SceneSample b = standard_scene(31, models, 2000, noise);
    bool ok = a.num_points() == b.num_points();
    for (int i = 0; ok && i < a.num_points(); ++i)
      ok = a.cloud.points[i] == b.cloud.points[i];
    check("scene generation determinism", ok);
  }
  {  // weighted losses: background annihilation
    Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(2, 3);
    Eigen::MatrixXd pred = truth;
    pred(0, 0) = 1e9;
    PointRoleWeights w;
    w.roles = {PointRole::background, PointRole::other};
    check("background weight annihilates",
          edge_offset_loss(pred, truth, w).value == 0.0);
  }
  std::cout << (failures == 0 ? "selfcheck passed\n" : "selfcheck FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"posekit: synthetic 6DoF pose estimation pipeline toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate synthetic scenes and models");
  ConfigLayer gen_layer;
  gen_layer.attach(gen);
  int gen_scenes = 4, gen_objects = 4, gen_n_points = 12000, gen_m = 8;
  std::uint64_t gen_seed = 1;
  double gen_depth_sigma = 0.0, gen_dropout = 0.0;
  std::string gen_out = "out";
  gen->add_option("--scenes", gen_scenes, "number of scenes");
  gen->add_option("--objects", gen_objects, "objects per scene (1-4)");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "base seed");
  gen->add_option("--n-points", gen_n_points, "points per scene");
  gen->add_option("--m-edge-points", gen_m, "edge points per model");
  gen->add_option("--depth-sigma", gen_depth_sigma, "depth noise (m)");
  gen->add_option("--dropout-rate", gen_dropout, "pixel dropout rate");

  // keypoints
  auto* kp = app.add_subcommand("keypoints", "select keypoints on a scene");
  ConfigLayer kp_layer;
  kp_layer.attach(kp);
  std::string kp_scene, kp_out = "keypoints.csv", kp_selector = "dks";
  int kp_k = 25;
  kp->add_option("--scene", kp_scene, "scene json file")->required();
  kp->add_option("--k-keypoints", kp_k, "keypoint count");
  kp->add_option("--selector", kp_selector, "dks or fps");
  kp->add_option("--out", kp_out, "output csv");

  // estimate
  auto* est = app.add_subcommand("estimate", "estimate poses for scenes");
  ConfigLayer est_layer;
  est_layer.attach(est);
  std::string est_in, est_out = "estimates", est_ckpt;
  std::uint64_t est_seed = 1;
  double est_sigma = 0.0, est_flip = 0.0;
  bool est_no_filter = false;
  int est_repeat = 20;
  est->add_option("--in", est_in, "directory with *.scene.json")->required();
  est->add_option("--out", est_out, "output directory");
  est->add_option("--checkpoint", est_ckpt,
                  "trained model checkpoint (default: oracle predictions)");
  est->add_option("--seed", est_seed, "noise seed base");
  est->add_option("--offset-sigma", est_sigma, "oracle offset noise (m)");
  est->add_option("--label-flip-rate", est_flip, "oracle label corruption");
  est->add_flag("--no-filter-background", est_no_filter,
                "keep background points in the voting stage");
  est->add_option("--repeat", est_repeat, "timing repetitions per scene");

  // eval
  auto* ev = app.add_subcommand("eval", "score estimates against ground truth");
  ConfigLayer ev_layer;
  ev_layer.attach(ev);
  std::string ev_in, ev_est = "estimates", ev_out = "eval";
  ev->add_option("--in", ev_in, "directory with *.scene.json")->required();
  ev->add_option("--estimates", ev_est, "estimate bundle directory");
  ev->add_option("--out", ev_out, "output directory");

  // train-toy
  auto* tr = app.add_subcommand("train-toy", "train the toy predictor");
  ConfigLayer tr_layer;
  tr_layer.attach(tr);
  bool tr_standard = false;
  std::string tr_scenes_dir, tr_out = "toy", tr_selector;
  int tr_epochs = 200, tr_k = 25, tr_points = 1200, tr_nscenes = 6;
  std::uint64_t tr_seed = 1;
  tr->add_flag("--standard", tr_standard, "use the built-in training corpus");
  tr->add_option("--scenes", tr_scenes_dir, "directory with training scenes");
  tr->add_option("--out", tr_out, "output directory");
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--seed", tr_seed, "training seed");
  tr->add_option("--selector", tr_selector, "dks or fps keypoint roles");
  tr->add_option("--k-keypoints", tr_k, "keypoints per frame (0 disables)");
  tr->add_option("--train-points", tr_points, "points per training scene");
  tr->add_option("--train-scenes", tr_nscenes, "scenes in the standard corpus");

  // bench
  auto* be = app.add_subcommand("bench", "run a sweep suite");
  ConfigLayer be_layer;
  be_layer.attach(be);
  std::string be_suite, be_out = "bench";
  be->add_option("--suite", be_suite, "suite file")->required();
  be->add_option("--out", be_out, "output directory");

  // selfcheck
  app.add_subcommand("selfcheck", "run the quick oracle-equivalence suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return run_gen(gen_layer, gen_scenes, gen_objects, gen_out, gen_seed,
                     gen_n_points, gen_m, gen_depth_sigma, gen_dropout);
    if (kp->parsed())
      return run_keypoints(kp_layer, kp_scene, kp_k, kp_selector, kp_out);
    if (est->parsed())
      return run_estimate_cmd(est_layer, est_in, est_out, est_ckpt, est_seed,
                              est_sigma, est_flip, est_no_filter, est_repeat);
    if (ev->parsed()) return run_eval_cmd(ev_layer, ev_in, ev_est, ev_out);
    if (tr->parsed())
      return run_train(tr_layer, tr_standard, tr_scenes_dir, tr_out, tr_epochs,
                       tr_seed, tr_selector, tr_k, tr_points, tr_nscenes);
    if (be->parsed()) return run_bench_cmd(be_layer, be_suite, be_out);
    return run_selfcheck();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
