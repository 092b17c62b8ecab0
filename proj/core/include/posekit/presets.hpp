#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "posekit/synth.hpp"

namespace posekit {

// Fixed desk-scale object set: box (class 1), sphere (2), cylinder (3),
// lshape (4). All diameters are 0.15 m or larger.
std::vector<SynthModel> standard_models(int m_edge = 8, int vertex_count = 600);

std::map<int, ObjectModel> model_map(const std::vector<SynthModel>& models);

// One seeded scene over the given models: slotted lateral placement with
// jitter, random orientations, depths around 1.3 m, plane backdrop at 2 m.
SceneSample standard_scene(std::uint64_t seed,
                           const std::vector<SynthModel>& models, int n_points,
                           const NoiseConfig& noise = {},
                           DepthImage* depth_out = nullptr,
                           const PlaneSpec& plane = {});

// Training corpus: box + sphere scenes, distinguishable by color and
// geometry. Seeds derive from the base seed, one per scene.
std::vector<SceneSample> standard_training_set(std::uint64_t seed, int count,
                                               int n_points, int m_edge = 8);

}  // namespace posekit
