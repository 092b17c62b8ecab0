#include <benchmark/benchmark.h>

#include <Eigen/Geometry>

#include "posekit/keypoints.hpp"
#include "posekit/metrics.hpp"
#include "posekit/presets.hpp"
#include "posekit/random.hpp"
#include "posekit/voting.hpp"

using namespace posekit;

namespace {

FeatureMap random_feature_map(int n, int c, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMap fm;
  fm.values.resize(n, c);
  fm.point_index.resize(n);
  for (int i = 0; i < n; ++i) {
    fm.point_index[i] = i;
    for (int j = 0; j < c; ++j) fm.values(i, j) = rng.uniform(-1, 1);
  }
  return fm;
}

void bm_dynamic_keypoints(benchmark::State& state) {
  const FeatureMap fm = random_feature_map(12000, 128, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(select_dynamic_keypoints(fm, 25));
}
BENCHMARK(bm_dynamic_keypoints)->Unit(benchmark::kMillisecond);

void bm_fps(benchmark::State& state) {
  Rng rng(9);
  std::vector<Eigen::Vector3d> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts)
    p = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  for (auto _ : state)
    benchmark::DoNotOptimize(select_fps(pts, 25, 0));
}
BENCHMARK(bm_fps)->Arg(2000)->Arg(12000)->Unit(benchmark::kMillisecond);

void bm_fit_rigid(benchmark::State& state) {
  Rng rng(11);
  std::vector<Eigen::Vector3d> src(8), dst(8);
  Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  RigidTransform pose;
  pose.rotation = Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
  pose.translation = Eigen::Vector3d(0.1, 0.2, 1.0);
  for (auto& p : src)
    p = Eigen::Vector3d(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                        rng.uniform(-0.1, 0.1));
  dst = transform_points(pose, src);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_rigid(src, dst));
}
BENCHMARK(bm_fit_rigid);

void bm_mean_shift(benchmark::State& state) {
  Rng rng(13);
  std::vector<Eigen::Vector3d> votes;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < state.range(0) / 3; ++i)
      votes.emplace_back(0.4 * k + rng.normal(0, 0.005), rng.normal(0, 0.005),
                         1.0 + rng.normal(0, 0.005));
  for (auto _ : state)
    benchmark::DoNotOptimize(mean_shift(votes, 0.05));
}
BENCHMARK(bm_mean_shift)->Arg(600)->Arg(6000)->Unit(benchmark::kMillisecond);

void bm_add_s(benchmark::State& state) {
  const auto models = standard_models(8, static_cast<int>(state.range(0)));
  RigidTransform a, b;
  a.translation = Eigen::Vector3d(0.01, 0, 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(add_s_error(a, b, models[0].object));
}
BENCHMARK(bm_add_s)->Arg(600)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
