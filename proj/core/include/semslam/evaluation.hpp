#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semslam/initializer.hpp"
#include "semslam/map.hpp"

namespace semslam {

/// Correspondence between ground-truth object ids and algorithm-assigned
/// ids, found by maximum-weight bipartite matching over the co-occurrence
/// counts. Measurements lacking an id on either side do not enter r_max.
struct IdCorrespondence {
  std::vector<std::int64_t> gt_ids;        // row labels
  std::vector<std::int64_t> assigned_ids;  // column labels
  std::vector<std::vector<std::int64_t>> rewards;  // r(i, j) counts
  std::vector<std::pair<std::int64_t, std::int64_t>> matching;
  std::int64_t r_da = 0;
  std::int64_t r_max = 0;
  double accuracy = 0.0;  // r_da / r_max
  /// Fraction of ground-truth-labeled measurements the algorithm assigned
  /// at all; reported so that unassigned-heavy runs are visible.
  double coverage = 0.0;
};

/// gt and assigned are aligned per measurement; -1 means no id. Throws
/// EmptyOverlap when no measurement carries both ids.
IdCorrespondence da_accuracy(const std::vector<std::int64_t>& gt,
                             const std::vector<std::int64_t>& assigned);

struct ReprojectionStats {
  double mean_error_px = 0.0;  // mean |coordinate delta| per object-frame
  int pairs = 0;               // (object, observing keyframe) pairs scored
  int skipped = 0;             // pairs whose prediction had no valid box
};

/// Mean absolute bounding-box coordinate error between the boxes predicted
/// from the map and the measured boxes stored in the keyframes. Throws
/// NoInitializedObjects when the map has no initialized object.
ReprojectionStats reprojection_error(const MapDatabase& map);

struct InitTrial {
  std::uint64_t seed = 0;
  int count = 0;
  bool qp_ok = false;
  bool svd_ok = false;
  double qp_center_error = 0.0;   // meters, valid when qp_ok
  double qp_axes_rel_error = 0.0; // max relative semi-axis error (sorted)
  double parallax_deg = 0.0;
  double depth = 0.0;             // mean camera-to-object distance
};

struct InitStudyCell {
  int count = 0;
  int qp_successes = 0;
  int svd_successes = 0;
  int trials = 0;
};

struct InitStudyResult {
  std::vector<InitTrial> trials;
  std::vector<InitStudyCell> cells;  // one per observation count
};

/// Runs the initialization study: per seed, one randomized world observed
/// from a camera arc; both initializers run on the observation prefixes
/// given by `counts` and success is decided by validate_quadric.
InitStudyResult run_init_study(const std::vector<int>& counts, int trials,
                               double bbox_sigma_px = 1.0,
                               std::uint64_t seed0 = 0);

/// `method,count,successes,trials,rate` table. Requires >= 30 trials per
/// cell.
std::string init_success_csv(const InitStudyResult& result);

std::string da_accuracy_csv(const IdCorrespondence& c);
std::string reprojection_csv(const ReprojectionStats& s);

}  // namespace semslam
