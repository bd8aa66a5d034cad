#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "semslam/evaluation.hpp"
#include "semslam/simulator.hpp"
#include "test_util.hpp"

using namespace semslam;
using namespace semslam::testing;

TEST_CASE("identical assignments score accuracy one") {
  const std::vector<std::int64_t> gt{0, 1, 2, 0, 1, 2, 2};
  const IdCorrespondence c = da_accuracy(gt, gt);
  CHECK(c.accuracy == doctest::Approx(1.0));
  CHECK(c.r_max == 7);
  CHECK(c.r_da == 7);
  CHECK(c.coverage == doctest::Approx(1.0));
}

TEST_CASE("single-image reward table") {
  // One image, book 8 on the left got algorithm id 2; the book with
  // algorithm id 5 is a different ground-truth object.
  const std::vector<std::int64_t> gt{8, 9};
  const std::vector<std::int64_t> assigned{2, 5};
  const IdCorrespondence c = da_accuracy(gt, assigned);
  const auto reward = [&](std::int64_t g, std::int64_t a) {
    for (std::size_t r = 0; r < c.gt_ids.size(); ++r) {
      for (std::size_t col = 0; col < c.assigned_ids.size(); ++col) {
        if (c.gt_ids[r] == g && c.assigned_ids[col] == a) {
          return c.rewards[r][col];
        }
      }
    }
    return std::int64_t{0};
  };
  CHECK(reward(8, 2) == 1);
  CHECK(reward(8, 5) == 0);
  CHECK(c.accuracy == doctest::Approx(1.0));
}

TEST_CASE("relabelings do not change the accuracy") {
  Rng rng(3);
  std::vector<std::int64_t> gt, assigned;
  for (int i = 0; i < 500; ++i) {
    const std::int64_t id = static_cast<std::int64_t>(rng.uniform_index(9));
    gt.push_back(id);
    // Imperfect assignment with some noise.
    assigned.push_back(rng.bernoulli(0.12)
                           ? static_cast<std::int64_t>(rng.uniform_index(9))
                           : id);
  }
  const double base = da_accuracy(gt, assigned).accuracy;

  // Bijective relabeling of the assigned ids.
  std::vector<std::int64_t> permuted = assigned;
  for (auto& id : permuted) id = (4 * id + 5) % 9 + 100;
  CHECK(da_accuracy(gt, permuted).accuracy == doctest::Approx(base));

  // And of the ground-truth ids.
  std::vector<std::int64_t> gt_permuted = gt;
  for (auto& id : gt_permuted) id = (5 * id + 2) % 9 + 40;
  CHECK(da_accuracy(gt_permuted, assigned).accuracy == doctest::Approx(base));
}

TEST_CASE("dropping one correct pair lowers the reward by one") {
  std::vector<std::int64_t> gt{0, 0, 1, 1, 2, 2, 2};
  const IdCorrespondence before = da_accuracy(gt, gt);
  std::vector<std::int64_t> assigned = gt;
  assigned[4] = -1;  // unassigned, leaves r_max as well
  const IdCorrespondence after = da_accuracy(gt, assigned);
  CHECK(after.r_da == before.r_da - 1);
  CHECK(after.r_max == before.r_max - 1);
  CHECK(after.coverage < 1.0);
}

TEST_CASE("measurements lacking either id are excluded") {
  const std::vector<std::int64_t> gt{0, 1, -1, 2};
  const std::vector<std::int64_t> assigned{5, -1, 7, 6};
  const IdCorrespondence c = da_accuracy(gt, assigned);
  CHECK(c.r_max == 2);  // only positions 0 and 3 carry both ids
  CHECK(c.accuracy == doctest::Approx(1.0));
  CHECK(c.coverage == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("empty overlap throws") {
  CHECK_THROWS_AS((void)da_accuracy({-1, 0}, {1, -1}), EmptyOverlap);
}

namespace {

/// Map with one initialized object observed from two keyframes, measured
/// boxes shifted by `shift` pixels from the exact prediction.
MapDatabase reprojection_fixture(double shift) {
  MapDatabase map;
  const CameraIntrinsics k = vga_intrinsics();
  Ellipsoid e;
  e.center = Eigen::Vector3d(0, 0, 0.2);
  e.semi_axes = Eigen::Vector3d(0.15, 0.12, 0.1);
  const ObjectId obj = map.create_object(0);
  map.object(obj).ellipsoid = e;

  for (int i = 0; i < 2; ++i) {
    const Pose pose =
        look_at_pose({2.0 - 0.3 * i, 0.5 * i, 0.8}, e.center);
    BBox box = conic_to_bbox(
        project_quadric(projection_matrix(pose, k), quadric_from_ellipsoid(e)),
        ImageBounds{640, 480});
    box.xmin += shift;
    box.xmax += shift;
    box.ymin += shift;
    box.ymax += shift;
    SemanticKeyframe kf;
    kf.pose = pose;
    kf.intrinsics = k;
    SemanticMeasurement m;
    m.class_id = 0;
    m.bbox = box;
    kf.measurements.push_back(m);
    kf.bow.push_back({});
    kf.associated_object.push_back(kNoObject);
    const KeyframeId id = map.insert_keyframe(std::move(kf));
    map.link(id, 0, obj);
  }
  return map;
}

}  // namespace

TEST_CASE("reprojection error at the truth is zero") {
  const ReprojectionStats stats = reprojection_error(reprojection_fixture(0));
  CHECK(stats.pairs == 2);
  CHECK(stats.mean_error_px < 1e-3);
}

TEST_CASE("uniform shift moves the metric by exactly that much") {
  const ReprojectionStats stats =
      reprojection_error(reprojection_fixture(10.0));
  CHECK(stats.mean_error_px == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("no initialized objects throws") {
  MapDatabase map;
  map.create_object(0);
  CHECK_THROWS_AS((void)reprojection_error(map), NoInitializedObjects);
}

TEST_CASE("noiseless init study succeeds everywhere") {
  const InitStudyResult r = run_init_study({10}, 30, 0.0, 500);
  REQUIRE(r.cells.size() == 1);
  CHECK(r.cells[0].trials == 30);
  CHECK(r.cells[0].qp_successes == 30);
  CHECK(r.cells[0].svd_successes == 30);
  for (const InitTrial& t : r.trials) {
    CHECK(t.parallax_deg >= 10.0);
    CHECK(t.qp_center_error < 1e-3);
  }
  const std::string csv = init_success_csv(r);
  CHECK(csv.find("Quadratic,10,30,30,1.000000") != std::string::npos);
  CHECK(csv.find("SVD,10,30,30,1.000000") != std::string::npos);
}

TEST_CASE("init study curve needs 30 trials per cell") {
  const InitStudyResult r = run_init_study({10}, 5, 0.0, 900);
  CHECK_THROWS_AS((void)init_success_csv(r), DataError);
}
