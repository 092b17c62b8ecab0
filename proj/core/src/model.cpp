#include "posekit/model.hpp"

#include <cmath>

#include "posekit/error.hpp"

namespace posekit {

Eigen::Vector3d ObjectModel::centroid() const {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& v : vertices) c += v;
  return vertices.empty() ? c : Eigen::Vector3d(c / static_cast<double>(vertices.size()));
}

void ObjectModel::validate() const {
  if (vertices.size() < 4)
    throw ValidationError("object model: needs at least 4 vertices");
  if (!(diameter > 0.0))
    throw ValidationError("object model: diameter must be positive");
  const double actual = max_pairwise_distance(vertices);
  if (std::abs(actual - diameter) > 1e-9)
    throw ValidationError("object model: stored diameter does not match vertices");
}

double max_pairwise_distance(const std::vector<Eigen::Vector3d>& pts) {
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::max(best, (pts[i] - pts[j]).norm());
  return best;
}

}  // namespace posekit
