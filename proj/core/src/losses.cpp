#include "posekit/losses.hpp"

#include <cmath>

#include "posekit/error.hpp"
#include "posekit/numeric.hpp"

namespace posekit {

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

LossValue weighted_offset_loss(const Eigen::MatrixXd& pred,
                               const Eigen::MatrixXd& truth,
                               const PointRoleWeights& w, OffsetNorm norm) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw ConfigError("offset loss: prediction/truth shapes differ");
  if (pred.rows() == 0)
    throw ConfigError("offset loss: no points");
  if (static_cast<std::size_t>(pred.rows()) != w.roles.size())
    throw ConfigError("offset loss: role count does not match points");
  if (pred.cols() % 3 != 0)
    throw ConfigError("offset loss: column count must be a multiple of 3");

  const int n = static_cast<int>(pred.rows());
  const double inv_n = 1.0 / static_cast<double>(n);
  LossValue out;
  out.gradient = Eigen::MatrixXd::Zero(pred.rows(), pred.cols());
  KahanSum total;
  for (int i = 0; i < n; ++i) {
    const double wi = w.weight_of(i);
    if (norm == OffsetNorm::l1) {
      double row = 0.0;
      for (int c = 0; c < pred.cols(); ++c) {
        const double e = pred(i, c) - truth(i, c);
        row += std::abs(e);
        out.gradient(i, c) = inv_n * wi * sign_of(e);
      }
      total.add(wi * row);
    } else {
      for (int c = 0; c < pred.cols(); c += 3) {
        const Eigen::Vector3d e = pred.row(i).segment<3>(c) - truth.row(i).segment<3>(c);
        const double len = e.norm();
        total.add(wi * len);
        if (len > 0.0)
          out.gradient.row(i).segment<3>(c) = (inv_n * wi / len) * e;
      }
    }
  }
  out.value = total.value() * inv_n;
  return out;
}

}  // namespace

LossValue edge_offset_loss(const Eigen::MatrixXd& pred,
                           const Eigen::MatrixXd& truth,
                           const PointRoleWeights& w, OffsetNorm norm) {
  return weighted_offset_loss(pred, truth, w, norm);
}

LossValue center_offset_loss(const Eigen::MatrixXd& pred,
                             const Eigen::MatrixXd& truth,
                             const PointRoleWeights& w, OffsetNorm norm) {
  if (pred.cols() != 3)
    throw ConfigError("center_offset_loss: expected N x 3 offsets");
  return weighted_offset_loss(pred, truth, w, norm);
}

LossValue focal_semantic_loss(const Eigen::MatrixXd& conf,
                              const std::vector<int>& label_columns,
                              double alpha, double gamma) {
  const int n = static_cast<int>(conf.rows());
  if (n == 0)
    throw ValidationError("focal_semantic_loss: no points");
  if (static_cast<std::size_t>(n) != label_columns.size())
    throw ValidationError("focal_semantic_loss: label count mismatch");
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < conf.cols(); ++c) {
      const double v = conf(i, c);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError("focal_semantic_loss: invalid probability row");
      sum += v;
    }
    // loose enough that finite-difference probes of a valid row still pass
    if (std::abs(sum - 1.0) > 1e-3)
      throw ValidationError("focal_semantic_loss: probability row does not sum to 1");
    if (label_columns[i] < 0 || label_columns[i] >= conf.cols())
      throw ValidationError("focal_semantic_loss: label column out of range");
  }

  constexpr double kQMin = 1e-12;
  const double inv_n = 1.0 / static_cast<double>(n);
  LossValue out;
  out.gradient = Eigen::MatrixXd::Zero(conf.rows(), conf.cols());
  KahanSum total;
  for (int i = 0; i < n; ++i) {
    const int t = label_columns[i];
    const double q_raw = conf(i, t);
    const double q = std::min(1.0, std::max(kQMin, q_raw));
    const double one_minus = 1.0 - q;
    total.add(-alpha * std::pow(one_minus, gamma) * std::log(q));
    if (q_raw > kQMin && q_raw < 1.0) {
      // d/dq [-a (1-q)^g log q] = a g (1-q)^(g-1) log q - a (1-q)^g / q
      const double pow_gm1 = gamma == 0.0 ? 0.0 : std::pow(one_minus, gamma - 1.0);
      const double dq = alpha * gamma * pow_gm1 * std::log(q) -
                        alpha * std::pow(one_minus, gamma) / q;
      out.gradient(i, t) = inv_n * dq;
    }
  }
  out.value = total.value() * inv_n;
  return out;
}

double multi_task_loss(double l_edge, double l_center, double l_sem,
                       const Eigen::Vector3d& lambdas) {
  return lambdas(0) * l_edge + lambdas(1) * l_center + lambdas(2) * l_sem;
}

}  // namespace posekit
