#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semslam/association.hpp"
#include "semslam/simulator.hpp"
#include "semslam/vocabulary.hpp"
#include "semslam/pipeline.hpp"
#include "test_util.hpp"

using namespace semslam;
using namespace semslam::testing;

namespace {

ScoreMatrix make_matrix(const std::vector<std::vector<double>>& scores,
                        const std::vector<std::vector<bool>>& present) {
  ScoreMatrix m;
  m.scores = scores;
  m.present = present;
  for (std::size_t r = 0; r < scores.size(); ++r) {
    m.measurement_indices.push_back(r);
  }
  for (std::size_t c = 0; scores.size() && c < scores[0].size(); ++c) {
    m.object_ids.push_back(static_cast<ObjectId>(c));
  }
  return m;
}

std::vector<std::vector<bool>> all_present(std::size_t rows,
                                           std::size_t cols) {
  return std::vector<std::vector<bool>>(rows,
                                        std::vector<bool>(cols, true));
}

/// Map with one keyframe observing the listed objects at their boxes;
/// objects carry an ellipsoid only when provided.
struct TinyMap {
  MapDatabase map;
  KeyframeId kf;
};

TinyMap tiny_map(const Pose& kf_pose, const CameraIntrinsics& k,
                 const std::vector<int>& classes,
                 const std::vector<BBox>& boxes,
                 const std::vector<BowVector>& bows,
                 const std::vector<std::optional<Ellipsoid>>& shapes) {
  TinyMap t;
  SemanticKeyframe kf;
  kf.frame_index = 0;
  kf.pose = kf_pose;
  kf.intrinsics = k;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    SemanticMeasurement m;
    m.bbox = boxes[i];
    m.class_id = classes[i];
    m.score = 0.9;
    kf.measurements.push_back(m);
    kf.bow.push_back(bows[i]);
    kf.associated_object.push_back(kNoObject);
  }
  t.kf = t.map.insert_keyframe(std::move(kf));
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const ObjectId id = t.map.create_object(classes[i]);
    t.map.object(id).ellipsoid = shapes[i];
    t.map.link(t.kf, i, id);
  }
  return t;
}

}  // namespace

TEST_CASE("single edge assignment") {
  const ScoreMatrix m = make_matrix({{0.8}}, all_present(1, 1));
  const Assignment a = solve_assignment(m);
  CHECK(a.row_to_col[0] == 0);
  CHECK(a.objective == doctest::Approx(0.8));
}

TEST_CASE("coupled assignment beats greedy") {
  const ScoreMatrix m =
      make_matrix({{0.9, 0.6}, {0.8, 0.1}}, all_present(2, 2));
  const Assignment a = solve_assignment(m);
  CHECK(a.row_to_col[0] == 1);
  CHECK(a.row_to_col[1] == 0);
  CHECK(a.objective == doctest::Approx(1.4));
}

TEST_CASE("empty matrix") {
  const Assignment a = solve_assignment(make_matrix({}, {}));
  CHECK(a.row_to_col.empty());
  CHECK(a.objective == 0.0);
}

TEST_CASE("assignment matches brute force on random instances") {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 1 + rng.uniform_index(6);
    const std::size_t cols = 1 + rng.uniform_index(7);
    std::vector<std::vector<double>> scores(rows,
                                            std::vector<double>(cols, 0.0));
    std::vector<std::vector<bool>> present(rows,
                                           std::vector<bool>(cols, false));
    for (auto& row : present) {
      for (std::size_t c = 0; c < cols; ++c) {
        row[c] = rng.bernoulli(0.7);
      }
    }
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        // Scores on the 1e-6 grid so integerization is exact.
        scores[r][c] =
            static_cast<double>(rng.uniform_index(1000001)) * 1e-6;
      }
    }
    const ScoreMatrix m = make_matrix(scores, present);
    const Assignment a = solve_assignment(m);

    // Constraints: each row and column used at most once.
    std::vector<int> col_use(cols, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      if (a.row_to_col[r] >= 0) {
        CHECK(present[r][static_cast<std::size_t>(a.row_to_col[r])]);
        col_use[static_cast<std::size_t>(a.row_to_col[r])] += 1;
      }
    }
    for (const int use : col_use) CHECK(use <= 1);

    // Exact optimality in the integer domain.
    std::int64_t got = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (a.row_to_col[r] >= 0) {
        got += std::llround(
            scores[r][static_cast<std::size_t>(a.row_to_col[r])] * 1e6);
      }
    }
    std::vector<std::vector<double>> int_scores = scores;
    for (auto& row : int_scores) {
      for (auto& v : row) v = static_cast<double>(std::llround(v * 1e6));
    }
    const double best = brute_force_matching(int_scores, present);
    CHECK(static_cast<double>(got) == best);
  }
}

TEST_CASE("score scaling preserves the optimal assignment set") {
  Rng rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + rng.uniform_index(5);
    const std::size_t cols = 1 + rng.uniform_index(5);
    std::vector<std::vector<double>> scores(rows,
                                            std::vector<double>(cols, 0.0));
    for (auto& row : scores) {
      // A coarse grid keeps integerized ties identical across scales.
      for (auto& v : row) v = static_cast<double>(rng.uniform_index(1000)) * 1e-3;
    }
    const auto present = all_present(rows, cols);
    std::vector<std::vector<double>> halved = scores;
    for (auto& row : halved) {
      for (auto& v : row) v *= 0.5;
    }
    const Assignment a = solve_assignment(make_matrix(scores, present));
    const Assignment b = solve_assignment(make_matrix(halved, present));
    CHECK(a.row_to_col == b.row_to_col);
  }
}

TEST_CASE("ties break toward low measurement and object indices") {
  const ScoreMatrix m =
      make_matrix({{0.5, 0.5}, {0.5, 0.5}}, all_present(2, 2));
  const Assignment a = solve_assignment(m);
  CHECK(a.row_to_col[0] == 0);
  CHECK(a.row_to_col[1] == 1);
  // Score-zero edges may still be assigned under the default threshold.
  const Assignment z =
      solve_assignment(make_matrix({{0.0}}, all_present(1, 1)));
  CHECK(z.row_to_col[0] == 0);
  // But not below an explicit threshold.
  const Assignment t =
      solve_assignment(make_matrix({{0.1}}, all_present(1, 1)), 0.2);
  CHECK(t.row_to_col[0] == -1);
}

TEST_CASE("gating by class and center projection") {
  const CameraIntrinsics k = vga_intrinsics();
  Ellipsoid shape;
  shape.center = Eigen::Vector3d(0, 0, 0);
  shape.semi_axes = Eigen::Vector3d(0.2, 0.2, 0.2);
  const Pose kf_pose = look_at_pose({2.0, 0.0, 0.5}, shape.center);

  BowVector bow{{0, 1.0}};
  TinyMap t = tiny_map(kf_pose, k, {3}, {{300, 220, 340, 260}}, {bow},
                       {shape});

  const Pose frame_pose = look_at_pose({1.9, 0.3, 0.5}, shape.center);
  SemanticMeasurement z;
  z.bbox = conic_to_bbox(
      project_quadric(projection_matrix(frame_pose, k),
                      quadric_from_ellipsoid(shape)),
      ImageBounds{640, 480});
  z.class_id = 3;

  // Same class, center projects inside the box: candidate.
  CandidateGate gate = gate_candidates(z, 0, frame_pose, k, t.map);
  REQUIRE(gate.candidates.size() == 1);
  CHECK(gate.reasons[0] == GateCase::kCenterInBox);

  // Different class: excluded regardless of geometry.
  z.class_id = 4;
  CHECK(gate_candidates(z, 0, frame_pose, k, t.map).candidates.empty());

  // Same class but the box is far from the projected center: excluded.
  z.class_id = 3;
  const auto [center_px, depth] = project_point(
      projection_matrix(frame_pose, k), shape.center);
  BBox far_box{center_px.x() + 50, center_px.y() + 50, center_px.x() + 90,
               center_px.y() + 90};
  z.bbox = far_box;
  CHECK(gate_candidates(z, 0, frame_pose, k, t.map).candidates.empty());

  // Behind the camera: excluded.
  const Pose behind = look_at_pose({2.0, 0.0, 0.5}, {4.0, 0.0, 0.5});
  z.bbox = {300, 220, 340, 260};
  CHECK(gate_candidates(z, 0, behind, k, t.map).candidates.empty());
}

TEST_CASE("epipolar gating for uninitialized objects") {
  const CameraIntrinsics k = vga_intrinsics();
  const Eigen::Vector3d target(0, 0, 0.2);
  const Pose kf_pose = look_at_pose({2.0, 0.0, 0.8}, target);

  Ellipsoid shape;
  shape.center = target;
  shape.semi_axes = Eigen::Vector3d(0.15, 0.15, 0.15);
  const BBox kf_box = conic_to_bbox(
      project_quadric(projection_matrix(kf_pose, k),
                      quadric_from_ellipsoid(shape)),
      ImageBounds{640, 480});

  TinyMap t = tiny_map(kf_pose, k, {1}, {kf_box}, {BowVector{{0, 1.0}}},
                       {std::nullopt});

  const Pose frame_pose = look_at_pose({1.7, 1.0, 0.8}, target);
  SemanticMeasurement z;
  z.class_id = 1;
  z.bbox = conic_to_bbox(
      project_quadric(projection_matrix(frame_pose, k),
                      quadric_from_ellipsoid(shape)),
      ImageBounds{640, 480});
  const CandidateGate gate = gate_candidates(z, 0, frame_pose, k, t.map);
  REQUIRE(gate.candidates.size() == 1);
  CHECK(gate.reasons[0] == GateCase::kEpipolar);

  // A box far from the epipolar line fails the gate.
  SemanticMeasurement elsewhere;
  elsewhere.class_id = 1;
  elsewhere.bbox = {10, 10, 40, 40};
  CHECK(gate_candidates(elsewhere, 0, frame_pose, k, t.map)
            .candidates.empty());
}

TEST_CASE("score matrix takes the maximum over stored keyframes") {
  const CameraIntrinsics k = vga_intrinsics();
  Ellipsoid shape;
  shape.center = Eigen::Vector3d(0, 0, 0);
  shape.semi_axes = Eigen::Vector3d(0.2, 0.2, 0.2);

  // One object seen in two keyframes with different appearance vectors.
  MapDatabase map;
  const ObjectId obj = map.create_object(2);
  map.object(obj).ellipsoid = shape;
  const auto add_kf = [&](const Pose& pose, const BowVector& bow) {
    SemanticKeyframe kf;
    kf.pose = pose;
    kf.intrinsics = k;
    SemanticMeasurement m;
    m.class_id = 2;
    m.bbox = {300, 220, 340, 260};
    kf.measurements.push_back(m);
    kf.bow.push_back(bow);
    kf.associated_object.push_back(kNoObject);
    const KeyframeId id = map.insert_keyframe(std::move(kf));
    map.link(id, 0, obj);
  };
  // Against z = {w0: 1}, a stored vector {w0: p, w1: 1-p} scores p.
  add_kf(look_at_pose({2, 0, 0.5}, shape.center),
         BowVector{{0, 0.3}, {1, 0.7}});
  add_kf(look_at_pose({1.8, 0.6, 0.5}, shape.center),
         BowVector{{0, 0.7}, {1, 0.3}});

  CandidateGate gate;
  gate.measurement_index = 0;
  gate.candidates = {obj};
  gate.reasons = {GateCase::kCenterInBox};
  const std::vector<BowVector> z_bows{BowVector{{0, 1.0}}};
  const ScoreMatrix m = score_matrix({0}, z_bows, {gate}, map);
  REQUIRE(m.rows() == 1);
  REQUIRE(m.cols() == 1);
  CHECK(m.scores[0][0] == doctest::Approx(0.7));

  // Identical stored BoW scores 1.
  add_kf(look_at_pose({1.6, -0.9, 0.5}, shape.center), BowVector{{0, 2.0}});
  const ScoreMatrix m2 = score_matrix({0}, z_bows, {gate}, map);
  CHECK(m2.scores[0][0] == doctest::Approx(1.0));
}

TEST_CASE("associate_frame with an empty map returns NONE") {
  const CameraIntrinsics k = vga_intrinsics();
  MapDatabase map;
  std::vector<SemanticMeasurement> ms(3);
  for (auto& m : ms) {
    m.bbox = {100, 100, 200, 200};
    m.class_id = 0;
  }
  const std::vector<BowVector> bows(3, BowVector{{0, 1.0}});
  const FrameAssociation fa =
      associate_frame(ms, bows, Pose::identity(), k, map);
  for (const ObjectId id : fa.assigned) CHECK(id == kNoObject);
  for (const bool had : fa.had_candidates) CHECK_FALSE(had);
}

TEST_CASE("geometry separates same-class objects with equal appearance") {
  const CameraIntrinsics k = vga_intrinsics();
  Ellipsoid left, right;
  left.center = Eigen::Vector3d(0.0, -0.5, 0.2);
  right.center = Eigen::Vector3d(0.0, 0.5, 0.2);
  left.semi_axes = right.semi_axes = Eigen::Vector3d(0.12, 0.12, 0.12);

  const Pose kf_pose = look_at_pose({2.2, 0.0, 0.7}, {0.0, 0.0, 0.2});
  const BowVector same_bow{{0, 1.0}, {3, 2.0}};

  const auto box_of = [&](const Ellipsoid& e, const Pose& pose) {
    return conic_to_bbox(project_quadric(projection_matrix(pose, k),
                                         quadric_from_ellipsoid(e)),
                         ImageBounds{640, 480});
  };
  TinyMap t = tiny_map(kf_pose, k, {5, 5},
                       {box_of(left, kf_pose), box_of(right, kf_pose)},
                       {same_bow, same_bow}, {left, right});

  const Pose frame_pose = look_at_pose({2.1, 0.4, 0.7}, {0.0, 0.0, 0.2});
  std::vector<SemanticMeasurement> ms(2);
  ms[0].class_id = ms[1].class_id = 5;
  ms[0].bbox = box_of(left, frame_pose);
  ms[1].bbox = box_of(right, frame_pose);
  const std::vector<BowVector> bows{same_bow, same_bow};

  const FrameAssociation fa =
      associate_frame(ms, bows, frame_pose, k, t.map);
  // Objects were registered in measurement order: 0 -> left, 1 -> right.
  CHECK(fa.assigned[0] == 0);
  CHECK(fa.assigned[1] == 1);
}

TEST_CASE("classes are independent in frame association") {
  const CameraIntrinsics k = vga_intrinsics();
  Ellipsoid a, b, c;
  a.center = Eigen::Vector3d(0.0, -0.5, 0.2);
  b.center = Eigen::Vector3d(0.0, 0.5, 0.2);
  c.center = Eigen::Vector3d(0.0, 0.0, 0.4);
  a.semi_axes = b.semi_axes = c.semi_axes = Eigen::Vector3d(0.1, 0.1, 0.1);

  const Pose kf_pose = look_at_pose({2.2, 0.0, 0.7}, {0.0, 0.0, 0.2});
  const auto box_of = [&](const Ellipsoid& e, const Pose& pose) {
    return conic_to_bbox(project_quadric(projection_matrix(pose, k),
                                         quadric_from_ellipsoid(e)),
                         ImageBounds{640, 480});
  };
  // Classes: objects 0 and 1 are class 7, object 2 is class 8.
  TinyMap t = tiny_map(
      kf_pose, k, {7, 7, 8},
      {box_of(a, kf_pose), box_of(b, kf_pose), box_of(c, kf_pose)},
      {BowVector{{0, 1.0}}, BowVector{{1, 1.0}}, BowVector{{2, 1.0}}},
      {a, b, c});

  const Pose frame_pose = look_at_pose({2.1, 0.3, 0.7}, {0.0, 0.0, 0.2});
  std::vector<SemanticMeasurement> ms(3);
  ms[0].class_id = 7;
  ms[0].bbox = box_of(a, frame_pose);
  ms[1].class_id = 7;
  ms[1].bbox = box_of(b, frame_pose);
  ms[2].class_id = 8;
  ms[2].bbox = box_of(c, frame_pose);
  const std::vector<BowVector> bows{BowVector{{0, 1.0}}, BowVector{{1, 1.0}},
                                    BowVector{{2, 1.0}}};
  const FrameAssociation base =
      associate_frame(ms, bows, frame_pose, k, t.map);

  // Swap the two class-7 measurements; the class-8 assignment must not move.
  std::vector<SemanticMeasurement> swapped{ms[1], ms[0], ms[2]};
  const std::vector<BowVector> swapped_bows{bows[1], bows[0], bows[2]};
  const FrameAssociation permuted =
      associate_frame(swapped, swapped_bows, frame_pose, k, t.map);
  CHECK(permuted.assigned[2] == base.assigned[2]);
  CHECK(permuted.assigned[0] == base.assigned[1]);
  CHECK(permuted.assigned[1] == base.assigned[0]);
}

TEST_CASE("true pairs outscore false pairs under descriptor noise") {
  // Simulated scene: per-object descriptor signatures with 5% bit flips.
  SceneSpec spec;
  spec.name = "assoc-stat";
  spec.seed = 77;
  for (int i = 0; i < 4; ++i) {
    SceneSpec::ObjectSpec obj;
    obj.class_id = 0;
    obj.shape.center =
        Eigen::Vector3d(0.4 * std::cos(i * 1.57), 0.4 * std::sin(i * 1.57), 0.15);
    obj.shape.semi_axes = Eigen::Vector3d(0.1, 0.1, 0.1);
    spec.objects.push_back(obj);
  }
  spec.orbit = OrbitTrajectory{1.8, 0.9, 40, 0.0, 120.0,
                               Eigen::Vector3d(0, 0, 0.15)};
  spec.descriptor_flip_prob = 0.05;
  const Dataset data = generate(spec);

  std::vector<VocabularyTree::Document> docs = vocabulary_documents(data, 0);
  REQUIRE(docs.size() == 4);
  const VocabularyTree tree = VocabularyTree::build(docs, 5, 3, 1, 0);

  // BoW of each object's first and last sighting.
  std::map<std::int64_t, std::vector<BowVector>> sightings;
  for (const FrameRecord& frame : data.frames) {
    for (const Detection& det : frame.detections) {
      sightings[det.gt_object].push_back(
          tree.transform(det.measurement.descriptors));
    }
  }
  double true_sum = 0.0, false_sum = 0.0;
  int true_n = 0, false_n = 0;
  for (const auto& [a, va] : sightings) {
    for (const auto& [b, vb] : sightings) {
      const double s = l1_score(va.front(), vb.back());
      if (a == b) {
        true_sum += s;
        ++true_n;
      } else {
        false_sum += s;
        ++false_n;
      }
    }
  }
  CHECK(true_sum / true_n > false_sum / false_n);
  CHECK(true_sum / true_n > 0.5);
}
