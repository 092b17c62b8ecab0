#pragma once

#include <string>
#include <vector>

#include "posekit/pipeline.hpp"

namespace posekit {

// One sweep per suite file. Accuracy outputs are deterministic given seeds;
// timing columns depend on the machine.
struct BenchSuite {
  std::string sweep;           // offset_sigma | m_edge_points | filter |
                               // selector | k_keypoints
  std::vector<double> values;  // sweep values where applicable
  int scenes = 20;
  int n_points = 4000;
  std::uint64_t seed = 1;
  int repeat = 5;        // timing repetitions (filter sweep)
  int train_epochs = 30;  // training-based sweeps
  int train_scenes = 4;
  int train_points = 800;
  int eval_scenes = 2;
};

BenchSuite load_bench_suite(const std::string& path);

// Writes <sweep>.csv (plus .svg for curve sweeps) into out_dir.
void run_bench(const BenchSuite& suite, const PipelineConfig& base,
               const std::string& out_dir);

// Minimal standalone line plot with the data table embedded in a desc block.
void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<double>& xs,
                         const std::vector<double>& ys);

}  // namespace posekit
