#include "posekit/predictor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

#include "posekit/error.hpp"
#include "posekit/numeric.hpp"
#include "posekit/random.hpp"

namespace posekit {

std::size_t MlpModel::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + w2.size() + w_sem.size() +
                                  w_edge.size() + w_center.size() + b1.size() +
                                  b2.size() + b_sem.size() + b_edge.size() +
                                  b_center.size());
}

bool MlpModel::all_finite() const {
  return w1.allFinite() && w2.allFinite() && w_sem.allFinite() &&
         w_edge.allFinite() && w_center.allFinite() && b1.allFinite() &&
         b2.allFinite() && b_sem.allFinite() && b_edge.allFinite() &&
         b_center.allFinite();
}

FeatureMap featurize(const SceneSample& scene, int k_neighbors) {
  const int n = scene.num_points();
  if (n == 0)
    throw EmptyInputError("featurize: empty scene");

  FeatureMap fm;
  fm.values.resize(n, 9);
  fm.point_index.resize(n);

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : scene.cloud.points) centroid += p;
  centroid /= static_cast<double>(n);

  const int k = std::min(k_neighbors, n - 1);
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    fm.point_index[i] = i;
    fm.values.block<1, 3>(i, 0) =
        (scene.cloud.points[i] - centroid).transpose();

    Eigen::Vector3d eig = Eigen::Vector3d::Zero();
    if (k > 0) {
      for (int j = 0; j < n; ++j)
        dist[j] = {(scene.cloud.points[j] - scene.cloud.points[i]).squaredNorm(), j};
      dist[i].first = std::numeric_limits<double>::infinity();
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      Eigen::Vector3d mean = scene.cloud.points[i];
      for (int m = 0; m < k; ++m) mean += scene.cloud.points[dist[m].second];
      mean /= static_cast<double>(k + 1);
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      Eigen::Vector3d d = scene.cloud.points[i] - mean;
      cov += d * d.transpose();
      for (int m = 0; m < k; ++m) {
        d = scene.cloud.points[dist[m].second] - mean;
        cov += d * d.transpose();
      }
      cov /= static_cast<double>(k + 1);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
      eig = es.eigenvalues();  // ascending
    }
    fm.values.block<1, 3>(i, 3) = eig.transpose();
    fm.values.block<1, 3>(i, 6) = scene.color.row(i);
  }
  return fm;
}

namespace {

Eigen::MatrixXd standardized(const MlpModel& model,
                             const Eigen::MatrixXd& features) {
  Eigen::MatrixXd x = features.rowwise() - model.feat_mean;
  for (int c = 0; c < x.cols(); ++c) x.col(c) /= model.feat_std(c);
  return x;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

struct Activations {
  Eigen::MatrixXd xn, z1, h1, z2, h2, logits, conf, edge, center;
};

void forward_internal(const MlpModel& m, const Eigen::MatrixXd& features,
                      Activations& a) {
  if (features.cols() != m.feature_dim())
    throw ConfigError("forward: feature dimension does not match model");
  a.xn = standardized(m, features);
  a.z1 = (a.xn * m.w1).rowwise() + m.b1;
  a.h1 = a.z1.cwiseMax(0.0);
  a.z2 = (a.h1 * m.w2).rowwise() + m.b2;
  a.h2 = a.z2.cwiseMax(0.0);
  a.logits = (a.h2 * m.w_sem).rowwise() + m.b_sem;
  a.conf = softmax_rows(a.logits);
  a.edge = (a.h2 * m.w_edge).rowwise() + m.b_edge;
  a.center = (a.h2 * m.w_center).rowwise() + m.b_center;
}

struct Grads {
  Eigen::MatrixXd w1, w2, w_sem, w_edge, w_center;
  Eigen::RowVectorXd b1, b2, b_sem, b_edge, b_center;

  static Grads zeros_like(const MlpModel& m) {
    Grads g;
    g.w1 = Eigen::MatrixXd::Zero(m.w1.rows(), m.w1.cols());
    g.w2 = Eigen::MatrixXd::Zero(m.w2.rows(), m.w2.cols());
    g.w_sem = Eigen::MatrixXd::Zero(m.w_sem.rows(), m.w_sem.cols());
    g.w_edge = Eigen::MatrixXd::Zero(m.w_edge.rows(), m.w_edge.cols());
    g.w_center = Eigen::MatrixXd::Zero(m.w_center.rows(), m.w_center.cols());
    g.b1 = Eigen::RowVectorXd::Zero(m.b1.size());
    g.b2 = Eigen::RowVectorXd::Zero(m.b2.size());
    g.b_sem = Eigen::RowVectorXd::Zero(m.b_sem.size());
    g.b_edge = Eigen::RowVectorXd::Zero(m.b_edge.size());
    g.b_center = Eigen::RowVectorXd::Zero(m.b_center.size());
    return g;
  }
};

template <typename Fn>
void for_each_param(MlpModel& m, Grads& g, Fn&& fn) {
  const auto mat = [&](Eigen::MatrixXd& a, Eigen::MatrixXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) fn(a.data()[i], b.data()[i]);
  };
  const auto vec = [&](Eigen::RowVectorXd& a, Eigen::RowVectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) fn(a.data()[i], b.data()[i]);
  };
  mat(m.w1, g.w1);
  mat(m.w2, g.w2);
  mat(m.w_sem, g.w_sem);
  mat(m.w_edge, g.w_edge);
  mat(m.w_center, g.w_center);
  vec(m.b1, g.b1);
  vec(m.b2, g.b2);
  vec(m.b_sem, g.b_sem);
  vec(m.b_edge, g.b_edge);
  vec(m.b_center, g.b_center);
}

// Multi-task loss and, when grads is set, its analytic parameter gradients.
double loss_and_grads(const MlpModel& m, const Eigen::MatrixXd& features,
                      const TrainTargets& t, Grads* grads) {
  Activations a;
  forward_internal(m, features, a);

  const LossValue le = edge_offset_loss(a.edge, t.edge_truth, t.weights);
  const LossValue lc = center_offset_loss(a.center, t.center_truth, t.weights);
  const LossValue ls =
      focal_semantic_loss(a.conf, t.label_columns, t.focal_alpha, t.focal_gamma);
  const double total =
      multi_task_loss(le.value, lc.value, ls.value, t.lambdas);
  if (!grads) return total;

  const Eigen::MatrixXd d_edge = t.lambdas(0) * le.gradient;
  const Eigen::MatrixXd d_center = t.lambdas(1) * lc.gradient;
  const Eigen::MatrixXd d_conf = t.lambdas(2) * ls.gradient;

  // softmax backward: dL/dz = p .* (g - (g . p))
  Eigen::MatrixXd d_logits(d_conf.rows(), d_conf.cols());
  for (int i = 0; i < d_conf.rows(); ++i) {
    const double dot = d_conf.row(i).dot(a.conf.row(i));
    d_logits.row(i) =
        a.conf.row(i).cwiseProduct((d_conf.row(i).array() - dot).matrix());
  }

  grads->w_sem = a.h2.transpose() * d_logits;
  grads->b_sem = d_logits.colwise().sum();
  grads->w_edge = a.h2.transpose() * d_edge;
  grads->b_edge = d_edge.colwise().sum();
  grads->w_center = a.h2.transpose() * d_center;
  grads->b_center = d_center.colwise().sum();

  Eigen::MatrixXd d_h2 = d_logits * m.w_sem.transpose() +
                         d_edge * m.w_edge.transpose() +
                         d_center * m.w_center.transpose();
  const Eigen::MatrixXd d_z2 =
      d_h2.cwiseProduct((a.z2.array() > 0.0).cast<double>().matrix());
  grads->w2 = a.h1.transpose() * d_z2;
  grads->b2 = d_z2.colwise().sum();

  const Eigen::MatrixXd d_h1 = d_z2 * m.w2.transpose();
  const Eigen::MatrixXd d_z1 =
      d_h1.cwiseProduct((a.z1.array() > 0.0).cast<double>().matrix());
  grads->w1 = a.xn.transpose() * d_z1;
  grads->b1 = d_z1.colwise().sum();
  return total;
}

MlpModel init_model(int feature_dim, int hidden, int num_classes, int m_edge,
                    Rng& rng) {
  MlpModel m;
  const auto he_uniform = [&](int rows, int cols) {
    Eigen::MatrixXd w(rows, cols);
    const double limit = std::sqrt(6.0 / rows);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform(-limit, limit);
    return w;
  };
  m.w1 = he_uniform(feature_dim, hidden);
  m.w2 = he_uniform(hidden, hidden);
  m.w_sem = he_uniform(hidden, num_classes + 1);
  m.w_edge = he_uniform(hidden, 3 * m_edge);
  m.w_center = he_uniform(hidden, 3);
  m.b1 = Eigen::RowVectorXd::Zero(hidden);
  m.b2 = Eigen::RowVectorXd::Zero(hidden);
  m.b_sem = Eigen::RowVectorXd::Zero(num_classes + 1);
  m.b_edge = Eigen::RowVectorXd::Zero(3 * m_edge);
  m.b_center = Eigen::RowVectorXd::Zero(3);
  m.feat_mean = Eigen::RowVectorXd::Zero(feature_dim);
  m.feat_std = Eigen::RowVectorXd::Ones(feature_dim);
  return m;
}

}  // namespace

ForwardResult forward(const MlpModel& model, const Eigen::MatrixXd& features) {
  Activations a;
  forward_internal(model, features, a);
  ForwardResult out;
  out.pred.class_confidence = std::move(a.conf);
  out.pred.edge_offsets = std::move(a.edge);
  out.pred.center_offset = std::move(a.center);
  out.hidden = std::move(a.h2);
  return out;
}

std::vector<PointRole> assign_roles(const std::vector<int>& class_labels,
                                    const std::vector<int>& instance_labels,
                                    const std::vector<Eigen::Vector3d>& points,
                                    const Eigen::MatrixXd& features, int k,
                                    KeypointSelector selector) {
  const int n = static_cast<int>(class_labels.size());
  std::vector<PointRole> roles(n, PointRole::other);
  std::map<int, std::vector<int>> instance_rows;
  for (int i = 0; i < n; ++i) {
    if (class_labels[i] == kBackgroundClass) {
      roles[i] = PointRole::background;
    } else {
      instance_rows[instance_labels[i]].push_back(i);
    }
  }
  if (k <= 0 || instance_rows.empty()) return roles;

  // split the per-frame budget across instances, earlier ids rounding up
  const int n_inst = static_cast<int>(instance_rows.size());
  const int base = k / n_inst;
  int extra = k % n_inst;
  for (const auto& [inst, rows] : instance_rows) {
    int want = base + (extra > 0 ? 1 : 0);
    if (extra > 0) --extra;
    want = std::min<int>(want, static_cast<int>(rows.size()));
    if (want <= 0) continue;
    if (selector == KeypointSelector::dks) {
      FeatureMap fm;
      fm.values.resize(rows.size(), features.cols());
      fm.point_index = rows;
      for (std::size_t r = 0; r < rows.size(); ++r)
        fm.values.row(r) = features.row(rows[r]);
      const KeypointSet ks = select_dynamic_keypoints(fm, want);
      for (int idx : ks.indices) roles[idx] = PointRole::keypoint;
    } else {
      std::vector<Eigen::Vector3d> pts(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) pts[r] = points[rows[r]];
      for (int local : select_fps(pts, want, 0))
        roles[rows[local]] = PointRole::keypoint;
    }
  }
  return roles;
}

TrainResult train(const std::vector<SceneSample>& scenes,
                  const TrainConfig& cfg) {
  if (scenes.empty())
    throw EmptyInputError("train: no scenes");
  if (cfg.learning_rate < 0.0)
    throw ConfigError("train: learning_rate must be nonnegative");
  if (cfg.epochs < 1)
    throw ConfigError("train: epochs must be at least 1");

  int num_classes = 0;
  const int m_edge = scenes[0].num_edge_points();
  for (const auto& s : scenes) {
    num_classes = std::max(num_classes, s.num_classes());
    if (s.num_edge_points() != m_edge)
      throw ConfigError("train: scenes disagree on edge point count");
  }
  if (num_classes == 0)
    throw ConfigError("train: no foreground classes in training scenes");

  std::vector<FeatureMap> features;
  features.reserve(scenes.size());
  for (const auto& s : scenes) features.push_back(featurize(s));

  Rng rng(cfg.seed);
  MlpModel model =
      init_model(static_cast<int>(features[0].values.cols()), cfg.hidden,
                 num_classes, m_edge, rng);

  // standardization over the pooled training features
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(model.feature_dim());
  std::size_t total_rows = 0;
  for (const auto& f : features) {
    mean += f.values.colwise().sum();
    total_rows += static_cast<std::size_t>(f.values.rows());
  }
  mean /= static_cast<double>(total_rows);
  Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(model.feature_dim());
  for (const auto& f : features)
    var += (f.values.rowwise() - mean).array().square().colwise().sum().matrix();
  var /= static_cast<double>(total_rows);
  model.feat_mean = mean;
  model.feat_std = var.array().sqrt().max(1e-9).matrix();

  Grads velocity = Grads::zeros_like(model);
  Grads grads = Grads::zeros_like(model);

  TrainResult out;
  out.loss_history.reserve(cfg.epochs);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    KahanSum epoch_loss;
    int steps = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      const SceneSample& scene = scenes[s];
      const int n = scene.num_points();

      std::vector<int> rows(n);
      for (int i = 0; i < n; ++i) rows[i] = i;
      if (cfg.batch_points > 0 && cfg.batch_points < n) {
        for (int i = 0; i < cfg.batch_points; ++i) {
          const std::size_t j =
              i + static_cast<std::size_t>(rng.uniform_index(rows.size() - i));
          std::swap(rows[i], rows[j]);
        }
        rows.resize(cfg.batch_points);
        std::sort(rows.begin(), rows.end());
      }
      const int nb = static_cast<int>(rows.size());

      Eigen::MatrixXd x(nb, features[s].values.cols());
      TrainTargets t;
      t.edge_truth.resize(nb, 3 * m_edge);
      t.center_truth.resize(nb, 3);
      t.label_columns.resize(nb);
      std::vector<int> cls(nb), inst(nb);
      std::vector<Eigen::Vector3d> pts(nb);
      for (int r = 0; r < nb; ++r) {
        const int i = rows[r];
        x.row(r) = features[s].values.row(i);
        t.edge_truth.row(r) = scene.gt_edge_offsets.row(i);
        t.center_truth.row(r) = scene.gt_center_offset.row(i);
        cls[r] = scene.class_label[i];
        inst[r] = scene.instance_label[i];
        pts[r] = scene.cloud.points[i];
        t.label_columns[r] =
            cls[r] == kBackgroundClass ? num_classes : cls[r] - 1;
      }
      t.lambdas = cfg.lambdas;
      t.focal_alpha = cfg.focal_alpha;
      t.focal_gamma = cfg.focal_gamma;
      t.weights.w_keypoint = cfg.w_keypoint;
      t.weights.w_background = cfg.w_background;
      t.weights.w_others = cfg.w_others;

      // roles from the current trunk features ("dynamic" reselection)
      Activations a;
      forward_internal(model, x, a);
      t.weights.roles =
          assign_roles(cls, inst, pts, a.h2, cfg.dks_k, cfg.selector);

      const double loss = loss_and_grads(model, x, t, &grads);
      if (!std::isfinite(loss))
        throw TrainingDivergedError(
            epoch, "train: loss diverged at epoch " + std::to_string(epoch));
      // momentum SGD
      const double lr = cfg.learning_rate;
      const double mu = cfg.momentum;
      auto update = [&](Eigen::MatrixXd& p, Eigen::MatrixXd& v,
                        const Eigen::MatrixXd& g) {
        v = mu * v - lr * g;
        p += v;
      };
      auto update_vec = [&](Eigen::RowVectorXd& p, Eigen::RowVectorXd& v,
                            const Eigen::RowVectorXd& g) {
        v = mu * v - lr * g;
        p += v;
      };
      update(model.w1, velocity.w1, grads.w1);
      update(model.w2, velocity.w2, grads.w2);
      update(model.w_sem, velocity.w_sem, grads.w_sem);
      update(model.w_edge, velocity.w_edge, grads.w_edge);
      update(model.w_center, velocity.w_center, grads.w_center);
      update_vec(model.b1, velocity.b1, grads.b1);
      update_vec(model.b2, velocity.b2, grads.b2);
      update_vec(model.b_sem, velocity.b_sem, grads.b_sem);
      update_vec(model.b_edge, velocity.b_edge, grads.b_edge);
      update_vec(model.b_center, velocity.b_center, grads.b_center);

      if (!model.all_finite())
        throw TrainingDivergedError(
            epoch, "train: parameters diverged at epoch " + std::to_string(epoch));
      epoch_loss.add(loss);
      ++steps;
    }
    out.loss_history.push_back(epoch_loss.value() / std::max(1, steps));
  }
  out.model = std::move(model);
  return out;
}

double gradient_check(const MlpModel& model, const Eigen::MatrixXd& features,
                      const TrainTargets& targets) {
  if (model.parameter_count() >= 10000)
    throw ConfigError("gradient_check: model too large");

  MlpModel m = model;
  Grads analytic = Grads::zeros_like(m);
  loss_and_grads(m, features, targets, &analytic);

  const double h = 1e-5;
  double worst = 0.0;
  for_each_param(m, analytic, [&](double& p, double& g) {
    const double saved = p;
    p = saved + h;
    const double up = loss_and_grads(m, features, targets, nullptr);
    p = saved - h;
    const double down = loss_and_grads(m, features, targets, nullptr);
    p = saved;
    const double fd = (up - down) / (2.0 * h);
    // the floor keeps roundoff noise in near-zero gradients from dominating
    const double scale = std::max({std::abs(fd), std::abs(g), 1e-6});
    worst = std::max(worst, std::abs(fd - g) / scale);
  });
  return worst;
}

}  // namespace posekit
