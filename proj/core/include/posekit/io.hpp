#pragma once

#include <map>
#include <string>
#include <vector>

#include "posekit/geometry.hpp"
#include "posekit/metrics.hpp"
#include "posekit/model.hpp"
#include "posekit/predictor.hpp"
#include "posekit/scene.hpp"

namespace posekit {

// Shortest decimal string that round-trips the double (17 significant digits).
std::string format_g17(double v);
double parse_double(const std::string& s);

// .d16 depth files: 8-byte header (u32le width, u32le height) then row-major
// u16le millimeters. Meters round to the nearest millimeter on save.
void save_d16(const std::string& path, const DepthImage& depth);
DepthImage load_d16(const std::string& path);

// Object model JSON; numbers stored as decimal strings for byte-stable files.
void save_model_json(const std::string& path, const ObjectModel& model);
ObjectModel load_model_json(const std::string& path);

// Scene JSON: intrinsics, per-point records, instance table (12-value pose,
// row-major R then t), model file references. Offsets are recomputed from the
// instance poses and model edge points on load.
void save_scene_json(const std::string& path, const SceneSample& scene,
                     const std::vector<std::string>& model_paths);
SceneSample load_scene_json(const std::string& path,
                            std::vector<ObjectModel>* models_out = nullptr);

// Model checkpoint: magic "PKNET001", little-endian u32 dims, f64 parameters.
void save_checkpoint(const std::string& path, const MlpModel& model);
MlpModel load_checkpoint(const std::string& path);

void save_loss_history_csv(const std::string& path,
                           const std::vector<double>& history);

struct PoseRecord {
  int scene_id = 0;
  int instance_id = 0;
  int class_id = 0;
  RigidTransform pose;
};

void save_pose_csv(const std::string& path, const std::vector<PoseRecord>& rows);
std::vector<PoseRecord> load_pose_csv(const std::string& path);

void save_eval_csv(const std::string& path, const EvalReport& report);
void save_timing_csv(const std::string& path, const TimingBreakdown& timing);
void save_summary_csv(const std::string& path, const EvalReport& report);

// Flat key=value config files ('#' comments, blank lines ignored).
std::map<std::string, std::string> load_flat_config(const std::string& path);

}  // namespace posekit
