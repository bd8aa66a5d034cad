#pragma once

#include <cstdint>
#include <vector>

#include "semslam/geometry.hpp"
#include "semslam/map.hpp"

namespace semslam {

/// Why an object passed the geometric gate.
enum class GateCase {
  kCenterInBox,  // initialized object, quadric center projects into the box
  kEpipolar,     // uninitialized object, epipolar line crosses the box
};

struct CandidateGate {
  std::size_t measurement_index = 0;
  std::vector<ObjectId> candidates;
  std::vector<GateCase> reasons;  // aligned with candidates
};

/// Scores for the measurements of one class against their gated candidate
/// objects. Entries where present(k, j) is false were gated out and can
/// never be assigned.
struct ScoreMatrix {
  std::vector<std::size_t> measurement_indices;  // rows
  std::vector<ObjectId> object_ids;              // columns
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<bool>> present;

  std::size_t rows() const { return measurement_indices.size(); }
  std::size_t cols() const { return object_ids.size(); }
};

struct Assignment {
  /// Column index per row, -1 when unassigned.
  std::vector<int> row_to_col;
  double objective = 0.0;
};

/// Exact maximum-weight bipartite matching over nonnegative integer
/// weights with forbidden edges; rows and columns are matched at most
/// once and leaving either side unmatched is allowed.
Assignment max_weight_matching(
    const std::vector<std::vector<std::int64_t>>& weights,
    const std::vector<std::vector<bool>>& allowed);

/// Geometric gate for one measurement: candidates share the measurement
/// class and pass either the center-in-box or the epipolar-line check.
CandidateGate gate_candidates(const SemanticMeasurement& z,
                              std::size_t measurement_index,
                              const Pose& frame_pose,
                              const CameraIntrinsics& k,
                              const MapDatabase& map);

/// Appearance scores c_kj = max over the object's keyframes of the L1
/// similarity between the stored BoW and the measurement BoW.
ScoreMatrix score_matrix(const std::vector<std::size_t>& measurement_indices,
                         const std::vector<BowVector>& measurement_bows,
                         const std::vector<CandidateGate>& gates,
                         const MapDatabase& map);

/// Optimal assignment of the score matrix. Scores are scaled by 1e6 and
/// rounded to integers before the exact solve; ties between equal-value
/// assignments are broken toward low (measurement index, object id).
/// Edges below min_score are treated as absent.
Assignment solve_assignment(const ScoreMatrix& m, double min_score = 0.0);

struct FrameAssociation {
  std::vector<ObjectId> assigned;      // per measurement, kNoObject if none
  std::vector<double> score;           // score of the chosen edge, else 0
  std::vector<bool> had_candidates;    // gate produced at least one object
};

/// Full frame-to-map association: per-class gating, scoring, and optimal
/// assignment. The map is read-only during the call.
FrameAssociation associate_frame(
    const std::vector<SemanticMeasurement>& measurements,
    const std::vector<BowVector>& bows, const Pose& frame_pose,
    const CameraIntrinsics& k, const MapDatabase& map,
    double min_score = 0.0);

}  // namespace semslam
