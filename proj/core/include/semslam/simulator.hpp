#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semslam/geometry.hpp"
#include "semslam/map.hpp"

namespace semslam {

/// Ground-truth object id for false detections.
inline constexpr std::int64_t kClutter = -1;

struct OrbitTrajectory {
  double radius = 1.5;       // meters from the scene center
  double height = 1.0;       // camera height above the scene plane
  int frames = 120;
  double start_deg = 0.0;
  double arc_deg = 360.0;    // swept angle over the whole sequence
  Eigen::Vector3d target = Eigen::Vector3d::Zero();  // look-at point
};

struct SceneSpec {
  struct ObjectSpec {
    int class_id = 0;
    Ellipsoid shape;
  };

  std::string name;
  std::vector<ObjectSpec> objects;
  std::optional<OrbitTrajectory> orbit;  // either orbit or waypoints
  std::vector<Pose> waypoints;
  CameraIntrinsics intrinsics{500.0, 500.0, 320.0, 240.0, 640, 480};

  double bbox_sigma_px = 0.0;
  double dropout_prob = 0.0;
  double confusion_prob = 0.0;
  double descriptor_flip_prob = 0.0;
  double clutter_rate = 0.0;
  double odometry_sigma_rot = 0.0;    // radians per frame step
  double odometry_sigma_trans = 0.0;  // meters per frame step
  int descriptors_per_detection = 32;
  std::uint64_t seed = 1;

  int frame_count() const {
    return orbit ? orbit->frames : static_cast<int>(waypoints.size());
  }
};

struct Detection {
  SemanticMeasurement measurement;
  std::int64_t gt_object = kClutter;
};

struct FrameRecord {
  std::int64_t frame = -1;
  Pose true_pose;
  /// Measured relative pose from the previous frame (identity at frame 0).
  Pose odometry;
  std::vector<Detection> detections;
};

struct Dataset {
  SceneSpec spec;
  /// Fixed appearance signature per object; detections carry noisy copies.
  std::vector<std::vector<BinaryDescriptor>> signatures;
  std::vector<FrameRecord> frames;
};

/// True iff the object center is in front of the camera and the projected
/// conic has a nonempty clipped bounding box.
bool visible(const Ellipsoid& e, const Pose& pose, const CameraIntrinsics& k);

/// Camera poses of the spec trajectory (deterministic, no noise).
std::vector<Pose> trajectory_poses(const SceneSpec& spec);

/// Generates the full dataset: exact boxes plus the configured noise,
/// dropout, class confusion, descriptor bit flips, and odometry
/// perturbations. Deterministic per (spec, seed). Throws EmptyScene.
Dataset generate(const SceneSpec& spec);

/// Named benchmark scenes: `desk-easy`, `desk-hard`, and the single-object
/// `init-study` base used by the initialization success study.
std::map<std::string, SceneSpec> standard_benchmarks();

/// One initialization-study trial world: a randomized ellipsoid observed
/// from a fixed camera arc, bounding-box noise only.
SceneSpec init_study_trial(std::uint64_t seed, int observations = 20,
                           double bbox_sigma_px = 1.0);

}  // namespace semslam
