#include "posekit/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "posekit/error.hpp"
#include "posekit/io.hpp"
#include "posekit/numeric.hpp"
#include "posekit/presets.hpp"
#include "posekit/random.hpp"

namespace posekit {

namespace {

std::vector<double> parse_values(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_double(item));
  }
  return out;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw ConfigError("cannot open for writing: " + path.string());
  return out;
}

struct SceneBatchStats {
  std::vector<double> addof;   // per instance
  std::vector<double> kp_err;  // per instance
  double rate01d = 0.0;        // pooled, per-instance diameters
};

// Oracle pipeline accuracy over a seeded scene batch.
SceneBatchStats run_batch(const std::vector<SynthModel>& models,
                          const PipelineConfig& cfg, int scenes, int n_points,
                          std::uint64_t seed, double offset_sigma) {
  SceneBatchStats stats;
  const auto by_class = model_map(models);
  int hits = 0, total = 0;
  for (int s = 0; s < scenes; ++s) {
    const SceneSample scene = standard_scene(seed + s, models, n_points);
    NoiseConfig noise;
    noise.offset_sigma = offset_sigma;
    noise.seed = seed + 7919 * (s + 1);
    const PredictionField pred = oracle_predictions(scene, noise);
    const EstimateResult est = run_estimate(scene, pred, by_class, cfg);
    for (const auto& gt : scene.instances) {
      const ObjectModel& model = by_class.at(gt.class_id);
      const InstanceEstimate* best = nullptr;
      for (const auto& e : est.instances)
        if (e.matched_instance_id == gt.instance_id &&
            (!best || e.point_indices.size() > best->point_indices.size()))
          best = &e;
      ++total;
      if (!best) {
        stats.addof.push_back(cfg.auc_max_threshold);
        continue;
      }
      const double d = add_of_error(best->pose, gt.pose, model);
      stats.addof.push_back(d);
      stats.kp_err.push_back(keypoint_error(
          best->voted_edge_points, transform_points(gt.pose, model.edge_points)));
      if (d < 0.1 * model.diameter) ++hits;
    }
  }
  stats.rate01d = total == 0 ? 0.0 : 100.0 * hits / total;
  return stats;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Trains on the standard corpus with the given selection settings, then
// reports voted keypoint error and mIoU on held-out scenes.
struct TrainedEval {
  double median_kp_err = 0.0;
  double miou = 0.0;
  double final_loss = 0.0;
};

TrainedEval train_and_eval(const BenchSuite& suite, const PipelineConfig& base,
                           KeypointSelector selector, int dks_k) {
  TrainConfig tc;
  tc.epochs = suite.train_epochs;
  tc.seed = suite.seed;
  tc.dks_k = dks_k;
  tc.selector = selector;
  tc.lambdas = base.lambdas;
  tc.w_keypoint = base.w_keypoint;
  tc.w_background = base.w_background;
  tc.w_others = base.w_others;
  const std::vector<SceneSample> train_scenes =
      standard_training_set(suite.seed, suite.train_scenes, suite.train_points,
                            base.m_edge_points);
  const TrainResult tr = train(train_scenes, tc);

  std::vector<SynthModel> models = standard_models(base.m_edge_points);
  models.resize(2);
  const auto by_class = model_map(models);
  std::vector<double> kp;
  std::vector<int> pred_all, gt_all;
  std::set<int> classes;
  for (int s = 0; s < suite.eval_scenes; ++s) {
    const SceneSample scene = standard_scene(suite.seed + 500000 + s, models,
                                             suite.train_points);
    const FeatureMap fm = featurize(scene);
    const ForwardResult fwd = forward(tr.model, fm.values);
    PipelineConfig cfg = base;
    cfg.min_cluster_size = std::min(cfg.min_cluster_size, 10);
    const EstimateResult est = run_estimate(scene, fwd.pred, by_class, cfg);
    for (const auto& gt : scene.instances) {
      const InstanceEstimate* best = nullptr;
      for (const auto& e : est.instances)
        if (e.matched_instance_id == gt.instance_id &&
            (!best || e.point_indices.size() > best->point_indices.size()))
          best = &e;
      if (best)
        kp.push_back(keypoint_error(
            best->voted_edge_points,
            transform_points(gt.pose, by_class.at(gt.class_id).edge_points)));
    }
    const std::vector<int> pl = predicted_labels(fwd.pred);
    pred_all.insert(pred_all.end(), pl.begin(), pl.end());
    gt_all.insert(gt_all.end(), scene.class_label.begin(),
                  scene.class_label.end());
  }
  for (int c : pred_all) classes.insert(c);
  for (int c : gt_all) classes.insert(c);

  TrainedEval out;
  out.median_kp_err = kp.empty() ? -1.0 : median(kp);
  out.miou = gt_all.empty() ? 0.0 : miou_percent(pred_all, gt_all, classes);
  out.final_loss = tr.loss_history.back();
  return out;
}

void bench_offset_sigma(const BenchSuite& suite, const PipelineConfig& base,
                        const std::filesystem::path& dir) {
  auto csv = open_csv(dir / "offset_sigma.csv");
  csv << "offset_sigma,median_add_of,mean_add_of,add01d_rate,median_kp_err\n";
  const std::vector<SynthModel> models = standard_models(base.m_edge_points);
  std::vector<double> xs, ys;
  for (double sigma : suite.values) {
    const SceneBatchStats st = run_batch(models, base, suite.scenes,
                                         suite.n_points, suite.seed, sigma);
    csv << format_g17(sigma) << "," << format_g17(median(st.addof)) << ","
        << format_g17(mean_of(st.addof)) << "," << format_g17(st.rate01d)
        << "," << format_g17(median(st.kp_err)) << "\n";
    xs.push_back(sigma);
    ys.push_back(median(st.addof));
  }
  write_line_plot_svg((dir / "offset_sigma.svg").string(),
                      "pose error vs offset noise", "offset sigma (m)",
                      "median ADD(S) (m)", xs, ys);
}

void bench_m_edge_points(const BenchSuite& suite, const PipelineConfig& base,
                         const std::filesystem::path& dir) {
  auto csv = open_csv(dir / "m_edge_points.csv");
  csv << "m_edge_points,median_add_of,mean_add_of,add01d_rate,median_kp_err\n";
  std::vector<double> xs, ys;
  for (double mv : suite.values) {
    const int m = static_cast<int>(mv);
    if (m < 3)
      throw ConfigError("bench suite: m_edge_points values must be >= 3");
    const std::vector<SynthModel> models = standard_models(m);
    const SceneBatchStats st =
        run_batch(models, base, suite.scenes, suite.n_points, suite.seed,
                  base.noise.offset_sigma);
    csv << m << "," << format_g17(median(st.addof)) << ","
        << format_g17(mean_of(st.addof)) << "," << format_g17(st.rate01d)
        << "," << format_g17(median(st.kp_err)) << "\n";
    xs.push_back(m);
    ys.push_back(median(st.addof));
  }
  write_line_plot_svg((dir / "m_edge_points.svg").string(),
                      "pose error vs edge point count", "M",
                      "median ADD(S) (m)", xs, ys);
}

void bench_filter(const BenchSuite& suite, const PipelineConfig& base,
                  const std::filesystem::path& dir) {
  const std::vector<SynthModel> models = standard_models(base.m_edge_points);
  const auto by_class = model_map(models);
  std::vector<double> filtered_ms, unfiltered_ms;
  bool identical = true;
  for (int s = 0; s < suite.scenes; ++s) {
    const SceneSample scene =
        standard_scene(suite.seed + s, models, suite.n_points);
    NoiseConfig noise = base.noise;
    noise.seed = suite.seed + 7919 * (s + 1);
    const PredictionField pred = oracle_predictions(scene, noise);

    PipelineConfig on = base, off = base;
    on.filter_background = true;
    off.filter_background = false;
    std::vector<double> ta, tb;
    EstimateResult ra, rb;
    for (int r = 0; r < suite.repeat; ++r) {
      ra = run_estimate(scene, pred, by_class, on);
      ta.push_back(ra.timing.pose_estimation_ms);
      rb = run_estimate(scene, pred, by_class, off);
      tb.push_back(rb.timing.pose_estimation_ms);
    }
    filtered_ms.push_back(median(ta));
    unfiltered_ms.push_back(median(tb));
    if (ra.instances.size() != rb.instances.size()) {
      identical = false;
    } else {
      for (std::size_t k = 0; k < ra.instances.size(); ++k) {
        if (ra.instances[k].pose.rotation != rb.instances[k].pose.rotation ||
            ra.instances[k].pose.translation != rb.instances[k].pose.translation)
          identical = false;
      }
    }
  }
  auto csv = open_csv(dir / "filter.csv");
  csv << "mode,median_pose_estimation_ms,poses_identical\n";
  csv << "filtered," << format_g17(median(filtered_ms)) << ","
      << (identical ? "true" : "false") << "\n";
  csv << "unfiltered," << format_g17(median(unfiltered_ms)) << ","
      << (identical ? "true" : "false") << "\n";
}

void bench_selector(const BenchSuite& suite, const PipelineConfig& base,
                    const std::filesystem::path& dir) {
  auto csv = open_csv(dir / "selector.csv");
  csv << "selector,k,median_kp_err,miou,final_loss\n";
  const int k = base.k_keypoints;
  const TrainedEval dks = train_and_eval(suite, base, KeypointSelector::dks, k);
  const TrainedEval fps = train_and_eval(suite, base, KeypointSelector::fps, k);
  csv << "dks," << k << "," << format_g17(dks.median_kp_err) << ","
      << format_g17(dks.miou) << "," << format_g17(dks.final_loss) << "\n";
  csv << "fps," << k << "," << format_g17(fps.median_kp_err) << ","
      << format_g17(fps.miou) << "," << format_g17(fps.final_loss) << "\n";
}

void bench_k_keypoints(const BenchSuite& suite, const PipelineConfig& base,
                       const std::filesystem::path& dir) {
  auto csv = open_csv(dir / "k_keypoints.csv");
  csv << "k,median_kp_err,miou,final_loss\n";
  for (double kv : suite.values) {
    const int k = static_cast<int>(kv);
    const TrainedEval r = train_and_eval(suite, base, KeypointSelector::dks, k);
    csv << k << "," << format_g17(r.median_kp_err) << "," << format_g17(r.miou)
        << "," << format_g17(r.final_loss) << "\n";
  }
}

}  // namespace

BenchSuite load_bench_suite(const std::string& path) {
  const auto kv = load_flat_config(path);
  BenchSuite suite;
  bool have_sweep = false;
  for (const auto& [key, value] : kv) {
    if (key == "sweep") {
      suite.sweep = value;
      have_sweep = true;
    } else if (key == "values") {
      suite.values = parse_values(value);
    } else if (key == "scenes") {
      suite.scenes = static_cast<int>(parse_double(value));
    } else if (key == "n_points") {
      suite.n_points = static_cast<int>(parse_double(value));
    } else if (key == "seed") {
      suite.seed = static_cast<std::uint64_t>(parse_double(value));
    } else if (key == "repeat") {
      suite.repeat = static_cast<int>(parse_double(value));
    } else if (key == "train_epochs") {
      suite.train_epochs = static_cast<int>(parse_double(value));
    } else if (key == "train_scenes") {
      suite.train_scenes = static_cast<int>(parse_double(value));
    } else if (key == "train_points") {
      suite.train_points = static_cast<int>(parse_double(value));
    } else if (key == "eval_scenes") {
      suite.eval_scenes = static_cast<int>(parse_double(value));
    } else {
      throw ConfigError("bench suite: unknown field '" + key + "'");
    }
  }
  if (!have_sweep)
    throw ConfigError("bench suite: missing field 'sweep'");
  const bool known = suite.sweep == "offset_sigma" ||
                     suite.sweep == "m_edge_points" || suite.sweep == "filter" ||
                     suite.sweep == "selector" || suite.sweep == "k_keypoints";
  if (!known)
    throw ConfigError("bench suite: field 'sweep' has unknown value '" +
                      suite.sweep + "'");
  const bool needs_values = suite.sweep == "offset_sigma" ||
                            suite.sweep == "m_edge_points" ||
                            suite.sweep == "k_keypoints";
  if (needs_values && suite.values.empty())
    throw ConfigError("bench suite: field 'values' required for sweep '" +
                      suite.sweep + "'");
  return suite;
}

void run_bench(const BenchSuite& suite, const PipelineConfig& base,
               const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  if (suite.sweep == "offset_sigma") bench_offset_sigma(suite, base, dir);
  else if (suite.sweep == "m_edge_points") bench_m_edge_points(suite, base, dir);
  else if (suite.sweep == "filter") bench_filter(suite, base, dir);
  else if (suite.sweep == "selector") bench_selector(suite, base, dir);
  else if (suite.sweep == "k_keypoints") bench_k_keypoints(suite, base, dir);
}

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<double>& xs,
                         const std::vector<double>& ys) {
  std::ofstream out(path);
  if (!out)
    throw ConfigError("cannot open for writing: " + path);
  const double w = 640, h = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!xs.empty()) {
    xmin = *std::min_element(xs.begin(), xs.end());
    xmax = *std::max_element(xs.begin(), xs.end());
    ymin = *std::min_element(ys.begin(), ys.end());
    ymax = *std::max_element(ys.begin(), ys.end());
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
  }
  const auto sx = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
  };
  const auto sy = [&](double y) {
    return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);
  };
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  out << "<desc>data table (" << x_label << "," << y_label << ")\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << format_g17(xs[i]) << "," << format_g17(ys[i]) << "\n";
  out << "</desc>\n";
  out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" "
         "font-size=\"15\" font-family=\"sans-serif\">" << title << "</text>\n";
  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-size=\"12\" "
         "font-family=\"sans-serif\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\""
         " transform=\"rotate(-90 16 " << (mt + h - mb) / 2 << ")\">"
      << y_label << "</text>\n";
  // range labels
  out << "<text x=\"" << ml << "\" y=\"" << h - mb + 16
      << "\" font-size=\"11\" font-family=\"sans-serif\">" << num(xmin)
      << "</text>\n";
  out << "<text x=\"" << w - mr << "\" y=\"" << h - mb + 16
      << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
      << num(xmax) << "</text>\n";
  out << "<text x=\"" << ml - 6 << "\" y=\"" << h - mb
      << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
      << num(ymin) << "</text>\n";
  out << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4
      << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
      << num(ymax) << "</text>\n";
  if (!xs.empty()) {
    out << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" "
           "points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(xs[i]), sy(ys[i]));
      out << buf;
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.2f", sx(xs[i]));
      out << "<circle cx=\"" << buf << "\" cy=\"";
      std::snprintf(buf, sizeof(buf), "%.2f", sy(ys[i]));
      out << buf << "\" r=\"3\" fill=\"#1f6fb2\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace posekit
