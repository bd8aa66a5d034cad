#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "semslam/bundle_adjustment.hpp"
#include "semslam/rng.hpp"

using namespace semslam;

namespace {

Pose look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target) {
  const Eigen::Vector3d up(0.0, 0.0, 1.0);
  const Eigen::Vector3d z = (target - position).normalized();
  const Eigen::Vector3d x = up.cross(z).normalized();
  Pose pose;
  pose.rotation.row(0) = x.transpose();
  pose.rotation.row(1) = z.cross(x).transpose();
  pose.rotation.row(2) = z.transpose();
  pose.translation = -pose.rotation * position;
  return pose;
}

/// Desk-sized graph: `keyframes` poses on an orbit, `objects` ellipsoids.
BundleProblem desk_graph(int keyframes, int objects, std::uint64_t seed) {
  Rng rng(seed);
  BundleProblem problem;
  const CameraIntrinsics k{500, 500, 320, 240, 640, 480};
  for (int o = 0; o < objects; ++o) {
    Ellipsoid e;
    const double angle = 2.0 * M_PI * o / objects;
    e.center = Eigen::Vector3d(0.45 * std::cos(angle),
                               0.45 * std::sin(angle), 0.15);
    e.semi_axes = Eigen::Vector3d(0.1, 0.12, 0.09);
    e.rotation = so3_exp({rng.gauss(0.5), rng.gauss(0.5), rng.gauss(0.5)});
    problem.initial.objects.push_back(e);
  }
  std::vector<Pose> truth;
  for (int i = 0; i < keyframes; ++i) {
    const double angle = 9.0 * i * M_PI / 180.0;
    truth.push_back(look_at({1.8 * std::cos(angle), 1.8 * std::sin(angle),
                             0.9},
                            {0.0, 0.0, 0.15}));
    problem.intrinsics.push_back(k);
  }
  for (int i = 0; i + 1 < keyframes; ++i) {
    OdometryFactor f;
    f.from = i;
    f.to = i + 1;
    f.measured = truth[i + 1] * truth[i].inverse();
    f.covariance = Eigen::Matrix<double, 6, 6>::Identity() * 1e-4;
    problem.odometry.push_back(f);
  }
  for (int i = 0; i < keyframes; ++i) {
    for (int o = 0; o < objects; ++o) {
      SemanticFactor f;
      f.keyframe = i;
      f.object = o;
      try {
        BBox box = conic_to_bbox(
            project_quadric(
                projection_matrix(truth[i], k),
                quadric_from_ellipsoid(problem.initial.objects[o])),
            ImageBounds{640, 480});
        box.xmin += rng.gauss(2.0);
        box.xmax += rng.gauss(2.0);
        box.ymin += rng.gauss(2.0);
        box.ymax += rng.gauss(2.0);
        f.measured = box;
      } catch (const Error&) {
        continue;
      }
      f.covariance = Eigen::Matrix4d::Identity() * 4.0;
      problem.semantic.push_back(f);
    }
  }
  problem.initial.poses = truth;
  for (std::size_t i = 1; i < problem.initial.poses.size(); ++i) {
    Eigen::Matrix<double, 6, 1> delta;
    for (int d = 0; d < 6; ++d) delta[d] = rng.gauss(0.01);
    problem.initial.poses[i] = retract_pose(problem.initial.poses[i], delta);
  }
  return problem;
}

void bm_linearize(benchmark::State& state) {
  const BundleProblem problem = desk_graph(static_cast<int>(state.range(0)),
                                           static_cast<int>(state.range(1)),
                                           11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(linearize(problem, problem.initial));
  }
}
BENCHMARK(bm_linearize)->Args({10, 5})->Args({20, 10});

void bm_optimize(benchmark::State& state) {
  const BundleProblem problem = desk_graph(static_cast<int>(state.range(0)),
                                           static_cast<int>(state.range(1)),
                                           13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimize(problem));
  }
}
BENCHMARK(bm_optimize)->Unit(benchmark::kMillisecond)
    ->Args({10, 5})
    ->Args({20, 10});

void bm_total_cost(benchmark::State& state) {
  const BundleProblem problem = desk_graph(20, 10, 17);
  for (auto _ : state) {
    benchmark::DoNotOptimize(total_cost(problem, problem.initial));
  }
}
BENCHMARK(bm_total_cost);

}  // namespace

BENCHMARK_MAIN();
