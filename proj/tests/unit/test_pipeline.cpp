#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "posekit/bench.hpp"
#include "posekit/error.hpp"
#include "posekit/io.hpp"
#include "posekit/pipeline.hpp"
#include "posekit/presets.hpp"
#include "posekit/random.hpp"

using namespace posekit;

TEST_CASE("zero-noise scenes recover every pose essentially exactly") {
  const auto models = standard_models(8, 400);
  const auto by_class = model_map(models);
  PipelineConfig cfg;
  cfg.n_points = 6000;
  for (int s = 0; s < 3; ++s) {
    const SceneSample scene = standard_scene(100 + s, models, cfg.n_points);
    const PredictionField pred = oracle_predictions(scene, NoiseConfig{});
    const EstimateResult est = run_estimate(scene, pred, by_class, cfg);
    REQUIRE(est.instances.size() == scene.instances.size());
    for (const auto& gt : scene.instances) {
      const InstanceEstimate* found = nullptr;
      for (const auto& e : est.instances)
        if (e.matched_instance_id == gt.instance_id) found = &e;
      REQUIRE(found != nullptr);
      CHECK(add_error(found->pose, gt.pose, by_class.at(gt.class_id)) < 1e-6);
    }
  }
}

TEST_CASE("background filtering changes timing, never results") {
  const auto models = standard_models(8, 300);
  const auto by_class = model_map(models);
  PipelineConfig on, off;
  on.n_points = off.n_points = 4000;
  off.filter_background = false;

  for (int s = 0; s < 3; ++s) {
    const SceneSample scene = standard_scene(500 + s, models, on.n_points);
    NoiseConfig noise;
    noise.offset_sigma = 0.004;
    noise.label_flip_rate = 0.02;
    noise.seed = 900 + s;
    const PredictionField pred = oracle_predictions(scene, noise);

    const EstimateResult a = run_estimate(scene, pred, by_class, on);
    const EstimateResult b = run_estimate(scene, pred, by_class, off);
    REQUIRE(a.instances.size() == b.instances.size());
    for (std::size_t k = 0; k < a.instances.size(); ++k) {
      CHECK(a.instances[k].class_id == b.instances[k].class_id);
      CHECK(a.instances[k].point_indices == b.instances[k].point_indices);
      CHECK(a.instances[k].pose.rotation == b.instances[k].pose.rotation);
      CHECK(a.instances[k].pose.translation == b.instances[k].pose.translation);
      CHECK(a.instances[k].vote_support == b.instances[k].vote_support);
      REQUIRE(a.instances[k].voted_edge_points.size() ==
              b.instances[k].voted_edge_points.size());
      for (std::size_t j = 0; j < a.instances[k].voted_edge_points.size(); ++j)
        CHECK(a.instances[k].voted_edge_points[j] ==
              b.instances[k].voted_edge_points[j]);
    }
  }
}

TEST_CASE("all-background predictions give an empty result with a warning") {
  const auto models = standard_models(8, 300);
  const auto by_class = model_map(models);
  const SceneSample scene = standard_scene(600, models, 2000);
  PredictionField pred;
  const int n = scene.num_points();
  const int nc = scene.num_classes();
  pred.class_confidence = Eigen::MatrixXd::Zero(n, nc + 1);
  pred.class_confidence.col(nc).setOnes();  // everything background
  pred.edge_offsets = Eigen::MatrixXd::Zero(n, 3 * scene.num_edge_points());
  pred.center_offset = Eigen::MatrixXd::Zero(n, 3);

  PipelineConfig cfg;
  const EstimateResult est = run_estimate(scene, pred, by_class, cfg);
  CHECK(est.no_foreground);
  CHECK(est.instances.empty());
}

TEST_CASE("run_eval worked examples") {
  const auto models = standard_models(8, 300);
  const auto by_class = model_map(models);
  PipelineConfig cfg;
  cfg.n_points = 3000;
  const SceneSample scene = standard_scene(700, models, cfg.n_points);
  const PredictionField pred = oracle_predictions(scene, NoiseConfig{});
  const EstimateResult est = run_estimate(scene, pred, by_class, cfg);

  SUBCASE("perfect poses score 100 in every AUC column") {
    const EvalReport report =
        run_eval({scene}, {predicted_labels(pred)}, {est}, by_class, cfg);
    for (const auto& row : report.per_class) {
      CHECK(std::abs(row.adds_auc - 100.0) < 1e-9);
      CHECK(std::abs(row.add_s_auc - 100.0) < 1e-9);
      CHECK(row.add01d_rate == 100.0);
      CHECK(row.kp_err_m < 1e-9);
    }
    CHECK(std::abs(report.miou - 100.0) < 1e-12);
  }

  SUBCASE("missing poses score zero via the max-distance rule") {
    EstimateResult empty;
    const EvalReport report =
        run_eval({scene}, {predicted_labels(pred)}, {empty}, by_class, cfg);
    for (const auto& row : report.per_class) {
      CHECK(row.adds_auc == 0.0);
      CHECK(row.add_s_auc == 0.0);
      CHECK(row.add01d_rate == 0.0);
    }
  }

  SUBCASE("controlled translation errors match the step integral") {
    // shift each estimate by a known offset; ADD == |offset| exactly
    EstimateResult shifted = est;
    std::vector<double> dists;
    for (std::size_t k = 0; k < shifted.instances.size(); ++k) {
      const double d = 0.02 * (k + 1);
      shifted.instances[k].pose.translation.x() += d;
    }
    const EvalReport report =
        run_eval({scene}, {predicted_labels(pred)}, {shifted}, by_class, cfg);
    // every class holds one instance; ADD(S) for asymmetric classes equals
    // the injected shift, so AUC = 100 (1 - d / 0.1)
    for (const auto& row : report.per_class) {
      if (by_class.at(row.class_id).symmetric) continue;
      int rank = 0;
      for (std::size_t k = 0; k < shifted.instances.size(); ++k)
        if (shifted.instances[k].class_id == row.class_id)
          rank = static_cast<int>(k);
      const double d = 0.02 * (rank + 1);
      CHECK(row.add_s_auc ==
            doctest::Approx(100.0 * (1.0 - d / 0.1)).epsilon(1e-6));
    }
  }
}

TEST_CASE("apply_config parses and rejects keys") {
  PipelineConfig cfg;
  apply_config(cfg, {{"n_points", "2000"},
                     {"offset_sigma", "0.005"},
                     {"filter_background", "false"},
                     {"selector", "fps"},
                     {"lambda_edge", "2.5"}});
  CHECK(cfg.n_points == 2000);
  CHECK(cfg.noise.offset_sigma == 0.005);
  CHECK_FALSE(cfg.filter_background);
  CHECK(cfg.selector == KeypointSelector::fps);
  CHECK(cfg.lambdas(0) == 2.5);

  CHECK_THROWS_WITH_AS(apply_config(cfg, {{"n_pointz", "2"}}),
                       "unknown config key: n_pointz", ConfigError);
  CHECK_THROWS_AS(apply_config(cfg, {{"n_points", "abc"}}), ConfigError);
}

TEST_CASE("bench suite loading validates fields") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "posekit_bench_cfg";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "ok.suite");
    out << "sweep = offset_sigma\nvalues = 0,0.005,0.02\nscenes = 3\n";
  }
  const BenchSuite suite = load_bench_suite((dir / "ok.suite").string());
  CHECK(suite.sweep == "offset_sigma");
  CHECK(suite.values == std::vector<double>{0, 0.005, 0.02});
  CHECK(suite.scenes == 3);

  {
    std::ofstream out(dir / "bad_field.suite");
    out << "sweep = offset_sigma\nvalues = 0\nbananas = 7\n";
  }
  CHECK_THROWS_WITH_AS(load_bench_suite((dir / "bad_field.suite").string()),
                       "bench suite: unknown field 'bananas'", ConfigError);
  {
    std::ofstream out(dir / "bad_sweep.suite");
    out << "sweep = sideways\n";
  }
  CHECK_THROWS_AS(load_bench_suite((dir / "bad_sweep.suite").string()),
                  ConfigError);
  {
    std::ofstream out(dir / "no_values.suite");
    out << "sweep = offset_sigma\n";
  }
  CHECK_THROWS_AS(load_bench_suite((dir / "no_values.suite").string()),
                  ConfigError);
  fs::remove_all(dir);
}
