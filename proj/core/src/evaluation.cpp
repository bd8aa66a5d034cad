#include "semslam/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "semslam/association.hpp"
#include "semslam/simulator.hpp"

namespace semslam {

IdCorrespondence da_accuracy(const std::vector<std::int64_t>& gt,
                             const std::vector<std::int64_t>& assigned) {
  if (gt.size() != assigned.size()) {
    throw DataError("da_accuracy needs aligned id sequences");
  }
  IdCorrespondence c;

  std::map<std::int64_t, std::size_t> gt_index, as_index;
  std::int64_t labeled = 0, labeled_and_assigned = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] >= 0) {
      ++labeled;
      if (assigned[i] >= 0) ++labeled_and_assigned;
    }
    if (gt[i] < 0 || assigned[i] < 0) continue;
    if (gt_index.emplace(gt[i], gt_index.size()).second) {
      c.gt_ids.push_back(gt[i]);
    }
    if (as_index.emplace(assigned[i], as_index.size()).second) {
      c.assigned_ids.push_back(assigned[i]);
    }
  }
  if (gt_index.empty()) {
    throw EmptyOverlap("no measurement carries both a ground-truth and an "
                       "assigned id");
  }

  c.rewards.assign(c.gt_ids.size(),
                   std::vector<std::int64_t>(c.assigned_ids.size(), 0));
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] < 0 || assigned[i] < 0) continue;
    c.rewards[gt_index[gt[i]]][as_index[assigned[i]]] += 1;
    c.r_max += 1;
  }

  std::vector<std::vector<bool>> allowed(
      c.gt_ids.size(), std::vector<bool>(c.assigned_ids.size(), true));
  const Assignment match = max_weight_matching(c.rewards, allowed);
  for (std::size_t r = 0; r < c.gt_ids.size(); ++r) {
    const int col = match.row_to_col[r];
    if (col < 0) continue;
    c.matching.emplace_back(c.gt_ids[r],
                            c.assigned_ids[static_cast<std::size_t>(col)]);
    c.r_da += c.rewards[r][static_cast<std::size_t>(col)];
  }
  c.accuracy =
      static_cast<double>(c.r_da) / static_cast<double>(c.r_max);
  c.coverage = labeled > 0 ? static_cast<double>(labeled_and_assigned) /
                                 static_cast<double>(labeled)
                           : 0.0;
  return c;
}

ReprojectionStats reprojection_error(const MapDatabase& map) {
  ReprojectionStats stats;
  double sum = 0.0;
  bool any_initialized = false;
  for (const auto& [obj_id, obj] : map.objects()) {
    if (!obj.ellipsoid) continue;
    any_initialized = true;
    const DualQuadric q = quadric_from_ellipsoid(*obj.ellipsoid);
    for (const KeyframeId kf_id : obj.keyframes) {
      const SemanticKeyframe& kf = map.keyframe(kf_id);
      const Matrix34 p = projection_matrix(kf.pose, kf.intrinsics);
      for (std::size_t m = 0; m < kf.associated_object.size(); ++m) {
        if (kf.associated_object[m] != obj_id) continue;
        try {
          const BBox predicted = conic_to_bbox(
              project_quadric(p, q),
              ImageBounds{static_cast<double>(kf.intrinsics.width),
                          static_cast<double>(kf.intrinsics.height)});
          sum += (predicted.vector() - kf.measurements[m].bbox.vector())
                     .cwiseAbs()
                     .mean();
          stats.pairs += 1;
        } catch (const Error&) {
          stats.skipped += 1;
        }
      }
    }
  }
  if (!any_initialized) {
    throw NoInitializedObjects("map has no initialized objects");
  }
  stats.mean_error_px =
      stats.pairs > 0 ? sum / static_cast<double>(stats.pairs)
                      : std::numeric_limits<double>::infinity();
  return stats;
}

namespace {

/// Angle subtended at the object center between the first and the last
/// camera position.
double parallax_degrees(const Eigen::Vector3d& center,
                        const std::vector<Pose>& poses) {
  const Eigen::Vector3d a =
      (poses.front().camera_center() - center).normalized();
  const Eigen::Vector3d b =
      (poses.back().camera_center() - center).normalized();
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0)) * 180.0 / M_PI;
}

double max_axis_relative_error(Eigen::Vector3d estimated,
                               Eigen::Vector3d truth) {
  std::sort(estimated.data(), estimated.data() + 3);
  std::sort(truth.data(), truth.data() + 3);
  double err = 0.0;
  for (int i = 0; i < 3; ++i) {
    err = std::max(err, std::abs(estimated[i] - truth[i]) / truth[i]);
  }
  return err;
}

}  // namespace

InitStudyResult run_init_study(const std::vector<int>& counts, int trials,
                               double bbox_sigma_px, std::uint64_t seed0) {
  InitStudyResult result;
  const int max_count = *std::max_element(counts.begin(), counts.end());
  std::map<int, InitStudyCell> cells;
  for (const int count : counts) {
    cells[count] = InitStudyCell{count, 0, 0, 0};
  }

  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(t);
    const SceneSpec spec = init_study_trial(seed, max_count, bbox_sigma_px);
    const Dataset data = generate(spec);
    const Ellipsoid& truth = spec.objects[0].shape;

    ObservationSet all;
    std::vector<Pose> poses;
    for (const FrameRecord& frame : data.frames) {
      for (const Detection& det : frame.detections) {
        if (det.gt_object != 0) continue;
        all.push_back(
            {frame.true_pose, spec.intrinsics, det.measurement.bbox});
        poses.push_back(frame.true_pose);
      }
    }

    for (const int count : counts) {
      if (static_cast<int>(all.size()) < count) continue;
      const ObservationSet obs(all.begin(), all.begin() + count);
      const std::vector<Pose> obs_poses(poses.begin(), poses.begin() + count);

      InitTrial trial;
      trial.seed = seed;
      trial.count = count;
      trial.parallax_deg = parallax_degrees(truth.center, obs_poses);
      double depth = 0.0;
      for (const Pose& pose : obs_poses) {
        depth += (pose.camera_center() - truth.center).norm();
      }
      trial.depth = depth / static_cast<double>(obs_poses.size());

      InitializerOptions opts;
      opts.min_obs = count;

      const InitializationResult qp = initialize_object(obs, opts);
      trial.qp_ok = qp.ok;
      if (qp.ok) {
        trial.qp_center_error =
            (qp.ellipsoid->center - truth.center).norm();
        trial.qp_axes_rel_error =
            max_axis_relative_error(qp.ellipsoid->semi_axes, truth.semi_axes);
      }

      try {
        const AssembledSystem system = assemble_system(obs, opts);
        const Vector9 q = svd_init(system.a);
        trial.svd_ok = validate_quadric(q, obs, opts).ok;
      } catch (const Error&) {
        trial.svd_ok = false;
      }

      InitStudyCell& cell = cells[count];
      cell.trials += 1;
      cell.qp_successes += trial.qp_ok ? 1 : 0;
      cell.svd_successes += trial.svd_ok ? 1 : 0;
      result.trials.push_back(trial);
    }
  }
  for (const auto& [count, cell] : cells) result.cells.push_back(cell);
  return result;
}

std::string init_success_csv(const InitStudyResult& result) {
  for (const InitStudyCell& cell : result.cells) {
    if (cell.trials < 30) {
      throw DataError("init success curve needs at least 30 trials per cell");
    }
  }
  std::ostringstream out;
  out << "method,count,successes,trials,rate\n";
  const auto rate = [](int successes, int trials) {
    std::ostringstream s;
    s.precision(6);
    s << std::fixed
      << static_cast<double>(successes) / static_cast<double>(trials);
    return s.str();
  };
  for (const InitStudyCell& cell : result.cells) {
    out << "Quadratic," << cell.count << ',' << cell.qp_successes << ','
        << cell.trials << ',' << rate(cell.qp_successes, cell.trials) << '\n';
  }
  for (const InitStudyCell& cell : result.cells) {
    out << "SVD," << cell.count << ',' << cell.svd_successes << ','
        << cell.trials << ',' << rate(cell.svd_successes, cell.trials) << '\n';
  }
  return out.str();
}

std::string da_accuracy_csv(const IdCorrespondence& c) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "r_da,r_max,accuracy,coverage\n";
  out << c.r_da << ',' << c.r_max << ',' << c.accuracy << ',' << c.coverage
      << '\n';
  return out.str();
}

std::string reprojection_csv(const ReprojectionStats& s) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "mean_error_px,pairs,skipped\n";
  out << s.mean_error_px << ',' << s.pairs << ',' << s.skipped << '\n';
  return out.str();
}

}  // namespace semslam
