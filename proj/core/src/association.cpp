#include "semslam/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace semslam {

namespace {

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

/// Jonker-Volgenant style shortest augmenting path solver for the square
/// min-cost perfect matching problem. Integer potentials keep the
/// arithmetic exact.
std::vector<int> solve_square_min_cost(
    const std::vector<std::vector<std::int64_t>>& cost) {
  const int n = static_cast<int>(cost.size());
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> col_to_row(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    col_to_row[0] = i;
    int j0 = 0;
    std::vector<std::int64_t> min_slack(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = col_to_row[j0];
      std::int64_t delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < min_slack[j]) {
          min_slack[j] = cur;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[col_to_row[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_to_row[j0] != 0);
    do {
      const int j1 = way[j0];
      col_to_row[j0] = col_to_row[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (col_to_row[j] > 0) row_to_col[col_to_row[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment max_weight_matching(
    const std::vector<std::vector<std::int64_t>>& weights,
    const std::vector<std::vector<bool>>& allowed) {
  const int rows = static_cast<int>(weights.size());
  const int cols = rows > 0 ? static_cast<int>(weights[0].size()) : 0;
  Assignment out;
  out.row_to_col.assign(rows, -1);
  if (rows == 0 || cols == 0) return out;

  // Pad to a square problem where every real row and column also has a
  // zero-cost dummy partner; a maximum partial matching then corresponds
  // to a minimum-cost perfect matching. Forbidden edges get a positive
  // cost, which the optimum provably avoids.
  const int n = rows + cols;
  std::vector<std::vector<std::int64_t>> cost(
      n, std::vector<std::int64_t>(n, 0));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      cost[r][c] = allowed[r][c] ? -weights[r][c] : 1;
    }
  }
  const std::vector<int> match = solve_square_min_cost(cost);
  for (int r = 0; r < rows; ++r) {
    const int c = match[r];
    if (c >= 0 && c < cols && allowed[r][c]) {
      out.row_to_col[r] = c;
      out.objective += static_cast<double>(weights[r][c]);
    }
  }
  return out;
}

CandidateGate gate_candidates(const SemanticMeasurement& z,
                              std::size_t measurement_index,
                              const Pose& frame_pose,
                              const CameraIntrinsics& k,
                              const MapDatabase& map) {
  CandidateGate gate;
  gate.measurement_index = measurement_index;
  const Matrix34 p = projection_matrix(frame_pose, k);
  for (const auto& [id, obj] : map.objects()) {
    if (obj.class_id != z.class_id) continue;
    if (obj.ellipsoid) {
      const auto [pixel, depth] = project_point(p, obj.ellipsoid->center);
      if (depth <= 0.0) continue;  // center behind the camera
      if (!z.bbox.contains(pixel)) continue;
      gate.candidates.push_back(id);
      gate.reasons.push_back(GateCase::kCenterInBox);
    } else {
      const auto latest = map.latest_observation(id);
      if (!latest) continue;
      const SemanticKeyframe& kf = map.keyframe(latest->keyframe);
      const Eigen::Vector2d center =
          kf.measurements[latest->measurement_index].bbox.center();
      bool passes = true;
      try {
        const Eigen::Vector3d line =
            epipolar_line(kf.pose, frame_pose, k, center);
        passes = line_intersects_bbox(line, z.bbox);
      } catch (const DegenerateBaseline&) {
        // No baseline, no epipolar evidence either way; keep the candidate.
        passes = true;
      }
      if (!passes) continue;
      gate.candidates.push_back(id);
      gate.reasons.push_back(GateCase::kEpipolar);
    }
  }
  return gate;
}

ScoreMatrix score_matrix(const std::vector<std::size_t>& measurement_indices,
                         const std::vector<BowVector>& measurement_bows,
                         const std::vector<CandidateGate>& gates,
                         const MapDatabase& map) {
  ScoreMatrix m;
  m.measurement_indices = measurement_indices;

  for (const auto& gate : gates) {
    for (const ObjectId id : gate.candidates) {
      if (std::find(m.object_ids.begin(), m.object_ids.end(), id) ==
          m.object_ids.end()) {
        m.object_ids.push_back(id);
      }
    }
  }
  std::sort(m.object_ids.begin(), m.object_ids.end());

  m.scores.assign(m.rows(), std::vector<double>(m.cols(), 0.0));
  m.present.assign(m.rows(), std::vector<bool>(m.cols(), false));

  for (std::size_t r = 0; r < m.rows(); ++r) {
    const CandidateGate& gate = gates[r];
    const BowVector& zbow = measurement_bows[m.measurement_indices[r]];
    for (const ObjectId id : gate.candidates) {
      const std::size_t c = static_cast<std::size_t>(
          std::lower_bound(m.object_ids.begin(), m.object_ids.end(), id) -
          m.object_ids.begin());
      double best = 0.0;
      const MapObject& obj = map.object(id);
      for (const KeyframeId kf_id : obj.keyframes) {
        const SemanticKeyframe& kf = map.keyframe(kf_id);
        for (std::size_t i = 0; i < kf.associated_object.size(); ++i) {
          if (kf.associated_object[i] != id) continue;
          try {
            best = std::max(best, l1_score(kf.bow[i], zbow));
          } catch (const ZeroVector&) {
            // An empty BoW on either side carries no appearance evidence.
          }
        }
      }
      m.scores[r][c] = best;
      m.present[r][c] = true;
    }
  }
  return m;
}

namespace {

/// Optimal matching value over the still-active rows and columns.
std::int64_t matching_value(const std::vector<std::vector<std::int64_t>>& w,
                            const std::vector<std::vector<bool>>& allowed,
                            const std::vector<std::size_t>& rows,
                            const std::vector<std::size_t>& cols) {
  if (rows.empty() || cols.empty()) return 0;
  std::vector<std::vector<std::int64_t>> sub_w(
      rows.size(), std::vector<std::int64_t>(cols.size(), 0));
  std::vector<std::vector<bool>> sub_allowed(
      rows.size(), std::vector<bool>(cols.size(), false));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      sub_w[r][c] = w[rows[r]][cols[c]];
      sub_allowed[r][c] = allowed[rows[r]][cols[c]];
    }
  }
  return static_cast<std::int64_t>(
      std::llround(max_weight_matching(sub_w, sub_allowed).objective));
}

}  // namespace

Assignment solve_assignment(const ScoreMatrix& m, double min_score) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  Assignment out;
  out.row_to_col.assign(rows, -1);
  if (rows == 0 || cols == 0) return out;

  // Integerize at 1e-6 granularity for the exact solve.
  std::vector<std::vector<std::int64_t>> weights(
      rows, std::vector<std::int64_t>(cols, 0));
  std::vector<std::vector<bool>> allowed(rows,
                                         std::vector<bool>(cols, false));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (!m.present[r][c] || m.scores[r][c] < min_score) continue;
      weights[r][c] = std::llround(m.scores[r][c] * 1e6);
      allowed[r][c] = true;
    }
  }

  // Fix assignments greedily in (measurement index, object id) order while
  // preserving the optimal value, so ties resolve lexicographically.
  std::vector<std::size_t> active_rows(rows), active_cols(cols);
  for (std::size_t r = 0; r < rows; ++r) active_rows[r] = r;
  for (std::size_t c = 0; c < cols; ++c) active_cols[c] = c;
  std::int64_t target = matching_value(weights, allowed, active_rows,
                                       active_cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::size_t> rest_rows(active_rows.begin() + 1,
                                       active_rows.end());
    int chosen = -1;
    for (std::size_t ci = 0; ci < active_cols.size(); ++ci) {
      const std::size_t c = active_cols[ci];
      if (!allowed[r][c]) continue;
      std::vector<std::size_t> rest_cols = active_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(ci));
      const std::int64_t value =
          weights[r][c] + matching_value(weights, allowed, rest_rows,
                                         rest_cols);
      if (value == target) {
        chosen = static_cast<int>(c);
        target -= weights[r][c];
        active_cols = std::move(rest_cols);
        break;
      }
    }
    out.row_to_col[r] = chosen;
    active_rows = std::move(rest_rows);
  }

  for (std::size_t r = 0; r < rows; ++r) {
    if (out.row_to_col[r] >= 0) {
      out.objective += m.scores[r][static_cast<std::size_t>(out.row_to_col[r])];
    }
  }
  return out;
}

FrameAssociation associate_frame(
    const std::vector<SemanticMeasurement>& measurements,
    const std::vector<BowVector>& bows, const Pose& frame_pose,
    const CameraIntrinsics& k, const MapDatabase& map, double min_score) {
  FrameAssociation result;
  result.assigned.assign(measurements.size(), kNoObject);
  result.score.assign(measurements.size(), 0.0);
  result.had_candidates.assign(measurements.size(), false);

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    by_class[measurements[i].class_id].push_back(i);
  }

  for (const auto& [class_id, indices] : by_class) {
    std::vector<CandidateGate> gates;
    gates.reserve(indices.size());
    for (const std::size_t i : indices) {
      gates.push_back(
          gate_candidates(measurements[i], i, frame_pose, k, map));
      result.had_candidates[i] = !gates.back().candidates.empty();
    }
    const ScoreMatrix m = score_matrix(indices, bows, gates, map);
    const Assignment assignment = solve_assignment(m, min_score);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const int c = assignment.row_to_col[r];
      if (c < 0) continue;
      const std::size_t meas = m.measurement_indices[r];
      result.assigned[meas] = m.object_ids[static_cast<std::size_t>(c)];
      result.score[meas] = m.scores[r][static_cast<std::size_t>(c)];
    }
  }
  return result;
}

}  // namespace semslam
