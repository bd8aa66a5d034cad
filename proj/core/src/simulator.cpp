#include "semslam/simulator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>

#include "semslam/rng.hpp"

namespace semslam {

bool visible(const Ellipsoid& e, const Pose& pose,
             const CameraIntrinsics& k) {
  if (pose.apply(e.center).z() <= 0.0) return false;
  try {
    (void)conic_to_bbox(
        project_quadric(projection_matrix(pose, k), quadric_from_ellipsoid(e)),
        ImageBounds{static_cast<double>(k.width),
                    static_cast<double>(k.height)});
  } catch (const Error&) {
    return false;
  }
  return true;
}

namespace {

Pose look_at(const Eigen::Vector3d& camera_position,
             const Eigen::Vector3d& target) {
  const Eigen::Vector3d up(0.0, 0.0, 1.0);
  Eigen::Vector3d z = (target - camera_position).normalized();
  Eigen::Vector3d x = up.cross(z);
  if (x.norm() < 1e-9) {
    // Looking straight up or down; pick an arbitrary horizontal x.
    x = Eigen::Vector3d(1.0, 0.0, 0.0);
  }
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Pose pose;
  pose.rotation.row(0) = x.transpose();
  pose.rotation.row(1) = y.transpose();
  pose.rotation.row(2) = z.transpose();
  pose.translation = -pose.rotation * camera_position;
  return pose;
}

BinaryDescriptor random_descriptor(Rng& rng) {
  BinaryDescriptor d;
  for (auto& w : d.words) w = rng.next_u64();
  return d;
}

double mean_signature_distance(const std::vector<BinaryDescriptor>& a,
                               const std::vector<BinaryDescriptor>& b) {
  double sum = 0.0;
  for (const auto& da : a) {
    for (const auto& db : b) {
      sum += hamming(da, db);
    }
  }
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

std::vector<std::vector<BinaryDescriptor>> draw_signatures(
    const SceneSpec& spec, Rng& rng) {
  std::vector<std::vector<BinaryDescriptor>> signatures;
  for (std::size_t obj = 0; obj < spec.objects.size(); ++obj) {
    std::vector<BinaryDescriptor> sig;
    // Rejection sampling keeps distinct objects at least 64 bits apart in
    // mean Hamming distance.
    for (int attempt = 0; attempt < 100; ++attempt) {
      sig.clear();
      for (int i = 0; i < spec.descriptors_per_detection; ++i) {
        sig.push_back(random_descriptor(rng));
      }
      bool separated = true;
      for (const auto& other : signatures) {
        if (mean_signature_distance(sig, other) < 64.0) {
          separated = false;
          break;
        }
      }
      if (separated) break;
    }
    signatures.push_back(std::move(sig));
  }
  return signatures;
}

BBox perturb_bbox(const BBox& clean, double sigma, const CameraIntrinsics& k,
                  Rng& rng) {
  BBox b = clean;
  if (sigma > 0.0) {
    b.xmin += rng.gauss(sigma);
    b.ymin += rng.gauss(sigma);
    b.xmax += rng.gauss(sigma);
    b.ymax += rng.gauss(sigma);
  }
  if (b.xmin > b.xmax) std::swap(b.xmin, b.xmax);
  if (b.ymin > b.ymax) std::swap(b.ymin, b.ymax);
  b.xmin = std::clamp(b.xmin, 0.0, static_cast<double>(k.width));
  b.xmax = std::clamp(b.xmax, 0.0, static_cast<double>(k.width));
  b.ymin = std::clamp(b.ymin, 0.0, static_cast<double>(k.height));
  b.ymax = std::clamp(b.ymax, 0.0, static_cast<double>(k.height));
  // Keep a minimum 2 px extent inside the image.
  const auto widen = [](double& lo, double& hi, double limit) {
    if (hi - lo >= 2.0) return;
    const double c = std::clamp(0.5 * (lo + hi), 1.0, limit - 1.0);
    lo = c - 1.0;
    hi = c + 1.0;
  };
  widen(b.xmin, b.xmax, static_cast<double>(k.width));
  widen(b.ymin, b.ymax, static_cast<double>(k.height));
  return b;
}

}  // namespace

std::vector<Pose> trajectory_poses(const SceneSpec& spec) {
  if (!spec.orbit) return spec.waypoints;
  const OrbitTrajectory& orbit = *spec.orbit;
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(orbit.frames));
  for (int i = 0; i < orbit.frames; ++i) {
    const double angle =
        (orbit.start_deg +
         orbit.arc_deg * static_cast<double>(i) /
             static_cast<double>(std::max(orbit.frames, 1))) *
        M_PI / 180.0;
    const Eigen::Vector3d position(orbit.radius * std::cos(angle),
                                   orbit.radius * std::sin(angle),
                                   orbit.height);
    poses.push_back(look_at(position, orbit.target));
  }
  return poses;
}

Dataset generate(const SceneSpec& spec) {
  if (spec.objects.empty()) {
    throw EmptyScene("scene has no objects");
  }
  const std::vector<Pose> poses = trajectory_poses(spec);
  if (poses.size() < 2) {
    throw DataError("trajectory needs at least two frames");
  }

  std::set<int> class_set;
  for (const auto& obj : spec.objects) class_set.insert(obj.class_id);
  const std::vector<int> classes(class_set.begin(), class_set.end());

  Rng rng(spec.seed);
  Dataset data;
  data.spec = spec;
  data.signatures = draw_signatures(spec, rng);

  const ImageBounds bounds{static_cast<double>(spec.intrinsics.width),
                           static_cast<double>(spec.intrinsics.height)};

  for (std::size_t i = 0; i < poses.size(); ++i) {
    FrameRecord frame;
    frame.frame = static_cast<std::int64_t>(i);
    frame.true_pose = poses[i];
    if (i == 0) {
      frame.odometry = Pose::identity();
    } else {
      const Pose relative = poses[i] * poses[i - 1].inverse();
      if (spec.odometry_sigma_rot > 0.0 || spec.odometry_sigma_trans > 0.0) {
        Eigen::Matrix<double, 6, 1> noise;
        for (int d = 0; d < 3; ++d) noise[d] = rng.gauss(spec.odometry_sigma_rot);
        for (int d = 3; d < 6; ++d) noise[d] = rng.gauss(spec.odometry_sigma_trans);
        frame.odometry = retract_pose(relative, noise);
      } else {
        frame.odometry = relative;
      }
    }

    for (std::size_t obj = 0; obj < spec.objects.size(); ++obj) {
      const auto& object = spec.objects[obj];
      if (!visible(object.shape, poses[i], spec.intrinsics)) continue;
      if (spec.dropout_prob > 0.0 && rng.bernoulli(spec.dropout_prob)) {
        continue;
      }
      const BBox clean = conic_to_bbox(
          project_quadric(projection_matrix(poses[i], spec.intrinsics),
                          quadric_from_ellipsoid(object.shape)),
          bounds);

      Detection det;
      det.gt_object = static_cast<std::int64_t>(obj);
      det.measurement.bbox =
          perturb_bbox(clean, spec.bbox_sigma_px, spec.intrinsics, rng);
      det.measurement.class_id = object.class_id;
      if (spec.confusion_prob > 0.0 && classes.size() > 1 &&
          rng.bernoulli(spec.confusion_prob)) {
        // Relabel uniformly among the other classes.
        std::vector<int> others;
        for (const int c : classes) {
          if (c != object.class_id) others.push_back(c);
        }
        det.measurement.class_id =
            others[rng.uniform_index(others.size())];
      }
      det.measurement.score = rng.uniform(0.5, 1.0);
      det.measurement.descriptors = data.signatures[obj];
      if (spec.descriptor_flip_prob > 0.0) {
        for (auto& d : det.measurement.descriptors) {
          for (int bit = 0; bit < BinaryDescriptor::kBits; ++bit) {
            if (rng.bernoulli(spec.descriptor_flip_prob)) d.flip_bit(bit);
          }
        }
      }
      frame.detections.push_back(std::move(det));
    }

    if (spec.clutter_rate > 0.0 && rng.bernoulli(spec.clutter_rate)) {
      Detection det;
      det.gt_object = kClutter;
      const double w = rng.uniform(25.0, 120.0);
      const double h = rng.uniform(25.0, 120.0);
      const double x = rng.uniform(0.0, spec.intrinsics.width - w);
      const double y = rng.uniform(0.0, spec.intrinsics.height - h);
      det.measurement.bbox = {x, y, x + w, y + h};
      det.measurement.class_id = classes[rng.uniform_index(classes.size())];
      det.measurement.score = rng.uniform(0.5, 1.0);
      for (int i2 = 0; i2 < spec.descriptors_per_detection; ++i2) {
        det.measurement.descriptors.push_back(random_descriptor(rng));
      }
      frame.detections.push_back(std::move(det));
    }

    data.frames.push_back(std::move(frame));
  }
  return data;
}

namespace {

Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Vector3d axis(rng.gauss(), rng.gauss(), rng.gauss());
  if (axis.norm() < 1e-12) axis = Eigen::Vector3d::UnitZ();
  axis.normalize();
  return so3_exp(axis * rng.uniform(0.0, M_PI));
}

std::vector<SceneSpec::ObjectSpec> desk_objects(int count, int classes,
                                                std::uint64_t world_seed) {
  Rng rng(world_seed);
  std::vector<SceneSpec::ObjectSpec> objects;
  for (int i = 0; i < count; ++i) {
    SceneSpec::ObjectSpec obj;
    obj.class_id = i % classes;
    // Rejected draws keep the desk objects separated; gating and
    // association should fail from noise, not from overlapping truth.
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      const double radius = rng.uniform(0.0, 0.55);
      obj.shape.center = Eigen::Vector3d(radius * std::cos(angle),
                                         radius * std::sin(angle),
                                         rng.uniform(0.05, 0.30));
      bool separated = true;
      for (const auto& other : objects) {
        if ((other.shape.center - obj.shape.center).norm() < 0.28) {
          separated = false;
          break;
        }
      }
      if (separated) break;
    }
    obj.shape.semi_axes = Eigen::Vector3d(
        rng.uniform(0.05, 0.13), rng.uniform(0.05, 0.13),
        rng.uniform(0.05, 0.13));
    obj.shape.rotation = random_rotation(rng);
    objects.push_back(obj);
  }
  return objects;
}

}  // namespace

std::map<std::string, SceneSpec> standard_benchmarks() {
  std::map<std::string, SceneSpec> presets;

  {
    SceneSpec easy;
    easy.name = "desk-easy";
    easy.objects = desk_objects(8, 3, 42);
    easy.orbit = OrbitTrajectory{1.6, 1.0, 120, 0.0, 360.0,
                                 Eigen::Vector3d(0.0, 0.0, 0.15)};
    easy.bbox_sigma_px = 1.0;
    easy.dropout_prob = 0.05;
    easy.confusion_prob = 0.0;
    easy.descriptor_flip_prob = 0.02;
    easy.odometry_sigma_rot = 0.002;
    easy.odometry_sigma_trans = 0.002;
    easy.seed = 1;
    presets.emplace(easy.name, easy);
  }
  {
    SceneSpec hard;
    hard.name = "desk-hard";
    hard.objects = desk_objects(12, 4, 43);
    hard.orbit = OrbitTrajectory{1.6, 1.0, 240, 0.0, 360.0,
                                 Eigen::Vector3d(0.0, 0.0, 0.15)};
    hard.bbox_sigma_px = 2.0;
    hard.dropout_prob = 0.15;
    hard.confusion_prob = 0.05;
    hard.descriptor_flip_prob = 0.05;
    hard.odometry_sigma_rot = 0.004;
    hard.odometry_sigma_trans = 0.004;
    hard.seed = 1;
    presets.emplace(hard.name, hard);
  }
  presets.emplace("init-study", init_study_trial(0));
  return presets;
}

SceneSpec init_study_trial(std::uint64_t seed, int observations,
                           double bbox_sigma_px) {
  SceneSpec spec;
  spec.name = "init-study";
  spec.seed = seed;

  // The world is a deterministic function of the trial seed; the noise
  // stream inside generate() reuses the same seed.
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  SceneSpec::ObjectSpec obj;
  obj.class_id = 0;
  obj.shape.center = Eigen::Vector3d(rng.uniform(-0.15, 0.15),
                                     rng.uniform(-0.15, 0.15),
                                     rng.uniform(0.0, 0.25));
  obj.shape.semi_axes = Eigen::Vector3d(rng.uniform(0.09, 0.22),
                                        rng.uniform(0.09, 0.22),
                                        rng.uniform(0.09, 0.22));
  obj.shape.rotation = random_rotation(rng);
  spec.objects.push_back(obj);

  // 9 degree steps, matching the keyframe spacing of the desk scenes:
  // 5 observations span 36 degrees of parallax, 10 span 81.
  spec.orbit = OrbitTrajectory{1.7, 0.5, observations, 0.0,
                               9.0 * observations,
                               Eigen::Vector3d::Zero()};
  spec.bbox_sigma_px = bbox_sigma_px;
  return spec;
}

}  // namespace semslam
