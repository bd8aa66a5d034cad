#pragma once

#include <string>

namespace semslam {

/// Runtime settings, loadable from a flat `key = value` file. Unknown keys
/// are rejected so typos fail loudly.
struct PipelineConfig {
  int keyframe_interval = 4;     // T: every T-th frame becomes a keyframe
  int min_obs = 10;              // observations required to initialize
  double min_bbox_area = 400.0;  // px^2, smaller detections are discarded
  int min_descriptors = 8;       // detections with fewer features dropped
  double theta_assoc = 0.0;      // minimum association score
  double sigma_px = 4.0;         // semantic factor noise (pixels)
  double sigma_odo_rot = 0.01;   // odometry factor noise (radians)
  double sigma_odo_trans = 0.01; // odometry factor noise (meters)
  int lm_max_iterations = 25;
  double lm_initial_lambda = 1e-4;
  bool ba_enabled = true;
  bool ba_sync = false;          // deterministic single-thread mapping
};

PipelineConfig load_config(const std::string& path);

/// Parses the `key = value` text form directly (used by load_config).
PipelineConfig parse_config(const std::string& text);

std::string config_to_string(const PipelineConfig& config);

}  // namespace semslam
