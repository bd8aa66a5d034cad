#include <benchmark/benchmark.h>

#include "semslam/geometry.hpp"
#include "semslam/rng.hpp"

using namespace semslam;

namespace {

Pose camera_pose() {
  Pose pose;
  pose.rotation = so3_exp({0.1, -0.2, 0.05});
  pose.translation = Eigen::Vector3d(0.2, -1.8, 0.9);
  return pose;
}

Ellipsoid sample_object() {
  Ellipsoid e;
  e.center = Eigen::Vector3d(0.1, 0.0, 4.0);
  e.semi_axes = Eigen::Vector3d(0.15, 0.1, 0.2);
  e.rotation = so3_exp({0.3, 0.1, -0.4});
  return e;
}

void bm_project_and_box(benchmark::State& state) {
  const CameraIntrinsics k{500, 500, 320, 240, 640, 480};
  const Matrix34 p = projection_matrix(camera_pose(), k);
  const DualQuadric q = quadric_from_ellipsoid(sample_object());
  for (auto _ : state) {
    benchmark::DoNotOptimize(conic_to_bbox(project_quadric(p, q)));
  }
}
BENCHMARK(bm_project_and_box);

void bm_quadric_round_trip(benchmark::State& state) {
  const Ellipsoid e = sample_object();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ellipsoid_from_quadric(quadric_from_ellipsoid(e)));
  }
}
BENCHMARK(bm_quadric_round_trip);

void bm_tangent_planes(benchmark::State& state) {
  const CameraIntrinsics k{500, 500, 320, 240, 640, 480};
  const Matrix34 p = projection_matrix(camera_pose(), k);
  const BBox box{220, 160, 420, 330};
  for (auto _ : state) {
    benchmark::DoNotOptimize(tangent_planes_from_bbox(box, p));
  }
}
BENCHMARK(bm_tangent_planes);

void bm_epipolar_line(benchmark::State& state) {
  const CameraIntrinsics k{500, 500, 320, 240, 640, 480};
  const Pose a = camera_pose();
  Pose b = a;
  b.translation += Eigen::Vector3d(0.3, 0.0, 0.0);
  const Eigen::Vector2d pixel(331.0, 208.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(epipolar_line(a, b, k, pixel));
  }
}
BENCHMARK(bm_epipolar_line);

}  // namespace

BENCHMARK_MAIN();
