#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

namespace posekit {

// Uniform hash grid over a fixed point set. Radius visits enumerate cells in
// lexicographic order and bucket members in ascending index order, so the
// visit sequence is a deterministic function of the point geometry alone.
class SpatialGrid {
 public:
  SpatialGrid(const std::vector<Eigen::Vector3d>& points, double cell_size)
      : points_(points), cell_(cell_size > 0.0 ? cell_size : 1.0) {
    buckets_.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Cell c = key_of(points[i]);
      buckets_[c].push_back(static_cast<int>(i));
      lo_.x = std::min(lo_.x, c.x);
      lo_.y = std::min(lo_.y, c.y);
      lo_.z = std::min(lo_.z, c.z);
      hi_.x = std::max(hi_.x, c.x);
      hi_.y = std::max(hi_.y, c.y);
      hi_.z = std::max(hi_.z, c.z);
    }
  }

  // Visits every index i with |points[i] - q| <= radius.
  template <typename Visitor>
  void for_each_in_radius(const Eigen::Vector3d& q, double radius,
                          Visitor&& visit) const {
    const double r2 = radius * radius;
    const Cell lo = key_of(q - Eigen::Vector3d::Constant(radius));
    const Cell hi = key_of(q + Eigen::Vector3d::Constant(radius));
    for (std::int64_t x = std::max(lo.x, lo_.x); x <= std::min(hi.x, hi_.x); ++x)
      for (std::int64_t y = std::max(lo.y, lo_.y); y <= std::min(hi.y, hi_.y); ++y)
        for (std::int64_t z = std::max(lo.z, lo_.z); z <= std::min(hi.z, hi_.z); ++z) {
          const auto it = buckets_.find(Cell{x, y, z});
          if (it == buckets_.end()) continue;
          for (int i : it->second) {
            if ((points_[i] - q).squaredNorm() <= r2) visit(i);
          }
        }
  }

  // Index of a nearest point to q (deterministic visit order on ties).
  // Returns -1 on an empty grid.
  int nearest(const Eigen::Vector3d& q) const {
    if (points_.empty()) return -1;
    const Cell c0 = key_of(q);
    const std::int64_t ring_first = chebyshev_to_box(c0);
    const std::int64_t ring_last = chebyshev_to_far_corner(c0);
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::int64_t ring = ring_first; ring <= ring_last; ++ring) {
      // A point in a cell at Chebyshev ring r is at least (r - 1) * cell away.
      if (best >= 0) {
        const double bound = (static_cast<double>(ring) - 1.0) * cell_;
        if (bound > 0.0 && bound * bound > best_d2) break;
      }
      visit_ring(c0, ring, [&](const Cell& c) {
        const auto it = buckets_.find(c);
        if (it == buckets_.end()) return;
        for (int i : it->second) {
          const double d2 = (points_[i] - q).squaredNorm();
          if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
          }
        }
      });
    }
    return best;
  }

 private:
  struct Cell {
    std::int64_t x = 0, y = 0, z = 0;
    bool operator==(const Cell& o) const {
      return x == o.x && y == o.y && z == o.z;
    }
  };
  struct CellHash {
    std::size_t operator()(const Cell& c) const {
      std::uint64_t h = 1469598103934665603ull;
      for (std::int64_t v : {c.x, c.y, c.z}) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ull;
      }
      return static_cast<std::size_t>(h);
    }
  };

  Cell key_of(const Eigen::Vector3d& p) const {
    return Cell{static_cast<std::int64_t>(std::floor(p.x() / cell_)),
                static_cast<std::int64_t>(std::floor(p.y() / cell_)),
                static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }

  static std::int64_t axis_gap(std::int64_t v, std::int64_t lo, std::int64_t hi) {
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0;
  }

  // Chebyshev distance from cell c to the occupied bounding box.
  std::int64_t chebyshev_to_box(const Cell& c) const {
    return std::max({axis_gap(c.x, lo_.x, hi_.x), axis_gap(c.y, lo_.y, hi_.y),
                     axis_gap(c.z, lo_.z, hi_.z)});
  }

  std::int64_t chebyshev_to_far_corner(const Cell& c) const {
    const std::int64_t dx = std::max(std::abs(c.x - lo_.x), std::abs(c.x - hi_.x));
    const std::int64_t dy = std::max(std::abs(c.y - lo_.y), std::abs(c.y - hi_.y));
    const std::int64_t dz = std::max(std::abs(c.z - lo_.z), std::abs(c.z - hi_.z));
    return std::max({dx, dy, dz});
  }

  template <typename F>
  void visit_ring(const Cell& c0, std::int64_t ring, F&& f) const {
    if (ring == 0) {
      f(c0);
      return;
    }
    for (std::int64_t dx = -ring; dx <= ring; ++dx)
      for (std::int64_t dy = -ring; dy <= ring; ++dy)
        for (std::int64_t dz = -ring; dz <= ring; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring)
            continue;
          f(Cell{c0.x + dx, c0.y + dy, c0.z + dz});
        }
  }

  const std::vector<Eigen::Vector3d>& points_;
  double cell_;
  std::unordered_map<Cell, std::vector<int>, CellHash> buckets_;
  Cell lo_{std::numeric_limits<std::int64_t>::max(),
           std::numeric_limits<std::int64_t>::max(),
           std::numeric_limits<std::int64_t>::max()};
  Cell hi_{std::numeric_limits<std::int64_t>::min(),
           std::numeric_limits<std::int64_t>::min(),
           std::numeric_limits<std::int64_t>::min()};
};

}  // namespace posekit
