// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// any criterion fails. Criteria share generated datasets where possible.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "semslam/association.hpp"
#include "semslam/bundle_adjustment.hpp"
#include "semslam/evaluation.hpp"
#include "semslam/initializer.hpp"
#include "semslam/io.hpp"
#include "semslam/pipeline.hpp"
#include "semslam/simulator.hpp"
#include "test_util.hpp"

using namespace semslam;
using namespace semslam::testing;

namespace {

namespace fs = std::filesystem;

double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::map<int, VocabularyTree> train_vocabularies(const Dataset& data) {
  std::map<int, VocabularyTree> trees;
  std::set<int> classes;
  for (const auto& obj : data.spec.objects) classes.insert(obj.class_id);
  for (const int c : classes) {
    trees.emplace(c, VocabularyTree::build(vocabulary_documents(data, c), 5,
                                           5, 7, c));
  }
  return trees;
}

/// Artifacts shared between criteria, built lazily.
struct Artifacts {
  fs::path root;
  Dataset desk_easy;
  Dataset desk_hard;
  std::map<int, VocabularyTree> easy_vocabs;
  std::map<int, VocabularyTree> hard_vocabs;
  InitStudyResult study;          // 1 px noise, counts {5, 10, 15, 20}
  double study_seconds = 0.0;

  Artifacts() {
    root = fs::temp_directory_path() / "semslam_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    desk_easy = generate(standard_benchmarks().at("desk-easy"));
    desk_hard = generate(standard_benchmarks().at("desk-hard"));
    easy_vocabs = train_vocabularies(desk_easy);
    hard_vocabs = train_vocabularies(desk_hard);

    const auto start = std::chrono::steady_clock::now();
    study = run_init_study({5, 10, 15, 20}, 100, 1.0, 0);
    study_seconds = seconds_since(start);
  }
  ~Artifacts() { fs::remove_all(root); }
};

// 1. Assignment optimality against the enumeration oracle, < 5 s.
bool criterion_assignment(Artifacts&, std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 1 + rng.uniform_index(7);
    const std::size_t cols = 1 + rng.uniform_index(7);
    std::vector<std::vector<double>> scores(rows,
                                            std::vector<double>(cols, 0.0));
    std::vector<std::vector<bool>> present(rows,
                                           std::vector<bool>(cols, false));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        present[r][c] = rng.bernoulli(0.65);
        scores[r][c] =
            static_cast<double>(rng.uniform_index(1000001)) * 1e-6;
      }
    }
    ScoreMatrix m;
    m.scores = scores;
    m.present = present;
    for (std::size_t r = 0; r < rows; ++r) m.measurement_indices.push_back(r);
    for (std::size_t c = 0; c < cols; ++c) {
      m.object_ids.push_back(static_cast<ObjectId>(c));
    }
    const Assignment a = solve_assignment(m);

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
    const double oracle = brute_force_matching(int_scores, present);
    if (static_cast<double>(got) != oracle) {
      detail = "objective mismatch on trial " + std::to_string(trial);
      return false;
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream out;
  out.precision(2);
  out << std::fixed << "1000 instances exact, " << elapsed << " s";
  detail = out.str();
  return elapsed < 5.0;
}

// 2. Tangency round trip through projection and box extraction.
bool criterion_tangency(Artifacts&, std::string& detail) {
  Rng rng(99);
  int checked = 0;
  double worst = 0.0;
  for (int i = 0; i < 400 && checked < 100; ++i) {
    const Ellipsoid e = random_ellipsoid(rng);
    const Pose pose = random_viewing_pose(rng, e);
    const DualQuadric q = quadric_from_ellipsoid(e);
    const Matrix34 p = projection_matrix(pose, vga_intrinsics());
    BBox box;
    try {
      box = conic_to_bbox(project_quadric(p, q));
    } catch (const NotAnEllipse&) {
      continue;
    }
    const double scale = q.matrix().norm();
    for (const Plane& plane : tangent_planes_from_bbox(box, p)) {
      const Plane unit = plane / plane.norm();
      worst = std::max(worst, std::abs(tangency_residual(unit, q)) / scale);
    }
    ++checked;
  }
  std::ostringstream out;
  out << checked << " cases, worst normalized residual " << worst;
  detail = out.str();
  return checked == 100 && worst <= 1e-6;
}

// 3. 2 * objective + B11 reproduces the stacked residual norm.
bool criterion_qp_identity(Artifacts&, std::string& detail) {
  Rng rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const SceneSpec spec = init_study_trial(400 + trial, 12, 1.0);
    const Dataset data = generate(spec);
    ObservationSet obs;
    for (const FrameRecord& frame : data.frames) {
      for (const Detection& det : frame.detections) {
        obs.push_back({frame.true_pose, spec.intrinsics,
                       det.measurement.bbox});
      }
    }
    if (obs.size() < 10) continue;
    const AssembledSystem sys = assemble_system(obs);
    for (int i = 0; i < 50; ++i) {
      Vector9 q;
      for (int d = 0; d < 9; ++d) q[d] = rng.gauss() * 4.0;
      Vector10 qh;
      qh << q, -1.0;
      const double lhs = 2.0 * sys.qp.objective(q) + sys.qp.b11;
      const double rhs = (sys.a * qh).squaredNorm();
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(rhs, 1e-300));
    }
  }
  std::ostringstream out;
  out << "worst relative error " << worst;
  detail = out.str();
  return worst <= 1e-9;
}

// 4. Initializer recovery, noiseless and under 1 px noise.
bool criterion_recovery(Artifacts& a, std::string& detail) {
  const InitStudyResult noiseless = run_init_study({10, 15, 20}, 40, 0.0, 1000);
  double worst_center = 0.0, worst_axes = 0.0;
  for (const InitTrial& t : noiseless.trials) {
    if (t.parallax_deg < 10.0) continue;
    if (!t.qp_ok) {
      detail = "noiseless trial failed (seed " + std::to_string(t.seed) +
               ", count " + std::to_string(t.count) + ")";
      return false;
    }
    worst_center = std::max(worst_center, t.qp_center_error);
    worst_axes = std::max(worst_axes, t.qp_axes_rel_error);
  }

  int noisy_close = 0, noisy_total = 0;
  for (const InitTrial& t : a.study.trials) {
    if (t.count != 10) continue;
    ++noisy_total;
    if (t.qp_ok && t.qp_center_error < 0.05 * t.depth) ++noisy_close;
  }
  std::ostringstream out;
  out << "noiseless worst center " << worst_center << " m, axes "
      << worst_axes << "; noisy " << noisy_close << "/" << noisy_total
      << " within 5% depth";
  detail = out.str();
  return worst_center <= 1e-3 && worst_axes <= 1e-2 &&
         noisy_total == 100 && noisy_close >= 90;
}

// 5. Success-rate ordering: Quadratic >= SVD, both non-decreasing.
bool criterion_ordering(Artifacts& a, std::string& detail) {
  std::ostringstream out;
  bool ok = true;
  int prev_qp = -1, prev_svd = -1;
  for (const InitStudyCell& cell : a.study.cells) {
    if (cell.trials != 100) ok = false;
    if (cell.qp_successes < cell.svd_successes) ok = false;
    if (cell.qp_successes < prev_qp || cell.svd_successes < prev_svd) {
      ok = false;
    }
    prev_qp = cell.qp_successes;
    prev_svd = cell.svd_successes;
    out << "n=" << cell.count << " QP " << cell.qp_successes << "% SVD "
        << cell.svd_successes << "%; ";
  }
  out.precision(2);
  out << std::fixed << a.study_seconds << " s";
  detail = out.str();
  return ok && a.study_seconds < 60.0;
}

// 6. Bundle adjustment at least halves the reprojection error on desk-hard.
bool criterion_ba_improvement(Artifacts& a, std::string& detail) {
  PipelineConfig config;
  config.ba_sync = true;
  config.sigma_px = 2.0;
  config.sigma_odo_rot = 0.004;
  config.sigma_odo_trans = 0.004;

  PipelineConfig no_ba = config;
  no_ba.ba_enabled = false;
  (void)run_dataset(a.desk_hard, a.hard_vocabs, no_ba,
                    (a.root / "hard_init").string());
  (void)run_dataset(a.desk_hard, a.hard_vocabs, config,
                    (a.root / "hard_ba").string());

  const ReprojectionStats init_stats =
      reprojection_error(load_map((a.root / "hard_init/map.json").string()));
  const ReprojectionStats ba_stats =
      reprojection_error(load_map((a.root / "hard_ba/map.json").string()));

  std::ostringstream out;
  out.precision(2);
  out << std::fixed << init_stats.mean_error_px << " px -> "
      << ba_stats.mean_error_px << " px";
  detail = out.str();
  return ba_stats.mean_error_px <= 0.5 * init_stats.mean_error_px;
}

// 7. Association accuracy on both desk benchmarks.
bool criterion_association(Artifacts& a, std::string& detail) {
  PipelineConfig config;
  config.ba_sync = true;

  const auto evaluate = [&](const Dataset& data,
                            const std::map<int, VocabularyTree>& vocabs,
                            const std::string& out_dir) {
    (void)run_dataset(data, vocabs, config, out_dir);
    const auto log = load_association_log(out_dir + "/associations.csv");
    std::vector<std::int64_t> gt_ids, assigned_ids;
    std::size_t log_at = 0;
    for (const FrameRecord& frame : data.frames) {
      for (std::size_t d = 0; d < frame.detections.size(); ++d, ++log_at) {
        gt_ids.push_back(frame.detections[d].gt_object);
        assigned_ids.push_back(log[log_at].assigned);
      }
    }
    return da_accuracy(gt_ids, assigned_ids);
  };

  const IdCorrespondence easy =
      evaluate(a.desk_easy, a.easy_vocabs, (a.root / "easy").string());
  const IdCorrespondence hard =
      evaluate(a.desk_hard, a.hard_vocabs, (a.root / "hard").string());

  std::ostringstream out;
  out.precision(4);
  out << std::fixed << "desk-easy " << easy.accuracy << " (coverage "
      << easy.coverage << "), desk-hard " << hard.accuracy;
  detail = out.str();
  return easy.accuracy >= 0.95 && easy.coverage >= 0.90 &&
         hard.accuracy >= 0.85;
}

// 8. Assembled Jacobians against central finite differences.
bool criterion_gradients(Artifacts&, std::string& detail) {
  Rng rng(555);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    // Small random world and a random state around it.
    BundleProblem problem;
    BaState truth;
    const CameraIntrinsics k = vga_intrinsics();
    const int keyframes = 3;
    for (int o = 0; o < 2; ++o) {
      Ellipsoid e;
      e.center = Eigen::Vector3d(rng.uniform(-0.4, 0.4),
                                 rng.uniform(-0.4, 0.4),
                                 rng.uniform(0.0, 0.3));
      e.semi_axes = Eigen::Vector3d(rng.uniform(0.08, 0.2),
                                    rng.uniform(0.08, 0.2),
                                    rng.uniform(0.08, 0.2));
      e.rotation = random_rotation(rng);
      truth.objects.push_back(e);
    }
    for (int i = 0; i < keyframes; ++i) {
      const double angle = (10.0 + 14.0 * i) * M_PI / 180.0;
      truth.poses.push_back(look_at_pose(
          {2.0 * std::cos(angle), 2.0 * std::sin(angle), 0.8},
          {0.0, 0.0, 0.15}));
      problem.intrinsics.push_back(k);
    }
    for (int i = 0; i + 1 < keyframes; ++i) {
      OdometryFactor f;
      f.from = i;
      f.to = i + 1;
      f.measured = truth.poses[i + 1] * truth.poses[i].inverse();
      f.covariance = Eigen::Matrix<double, 6, 6>::Identity() * 1e-4;
      problem.odometry.push_back(f);
    }
    for (int i = 0; i < keyframes; ++i) {
      for (int o = 0; o < 2; ++o) {
        SemanticFactor f;
        f.keyframe = i;
        f.object = o;
        try {
          BBox box = conic_to_bbox(
              project_quadric(projection_matrix(truth.poses[i], k),
                              quadric_from_ellipsoid(truth.objects[o])),
              ImageBounds{640, 480});
          box.xmin += rng.gauss(1.0);
          box.ymin += rng.gauss(1.0);
          box.xmax += rng.gauss(1.0);
          box.ymax += rng.gauss(1.0);
          f.measured = box;
        } catch (const Error&) {
          continue;
        }
        f.covariance = Eigen::Matrix4d::Identity() * 4.0;
        problem.semantic.push_back(f);
      }
    }
    problem.initial = truth;

    BaState state = truth;
    for (std::size_t i = 1; i < state.poses.size(); ++i) {
      Eigen::Matrix<double, 6, 1> delta;
      for (int d = 0; d < 6; ++d) delta[d] = rng.gauss(0.01);
      state.poses[i] = retract_pose(state.poses[i], delta);
    }
    for (auto& e : state.objects) {
      e.center += Eigen::Vector3d(rng.gauss(0.02), rng.gauss(0.02),
                                  rng.gauss(0.02));
    }

    const LinearizedSystem sys = linearize(problem, state);
    const auto stack = [&](const BaState& s) {
      Eigen::VectorXd r(sys.residual.size());
      int row = 0;
      for (const OdometryFactor& f : problem.odometry) {
        const Eigen::Matrix<double, 6, 6> w =
            Eigen::LLT<Eigen::Matrix<double, 6, 6>>(f.covariance)
                .matrixL()
                .solve(Eigen::Matrix<double, 6, 6>::Identity());
        r.segment<6>(row) = w * odometry_residual(s.poses[f.from],
                                                  s.poses[f.to], f.measured);
        row += 6;
      }
      for (const SemanticFactor& f : problem.semantic) {
        const Eigen::Matrix4d w =
            Eigen::LLT<Eigen::Matrix4d>(f.covariance).matrixL().solve(
                Eigen::Matrix4d::Identity());
        r.segment<4>(row) = w * semantic_residual(
                                    s.poses[f.keyframe],
                                    problem.intrinsics[f.keyframe],
                                    s.objects[f.object], f.measured);
        row += 4;
      }
      return r;
    };

    const int n = static_cast<int>(sys.jacobian.cols());
    for (int col = 0; col < n; ++col) {
      Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
      const double step = 1e-5;
      delta[col] = step;
      const Eigen::VectorXd plus = stack(retract_state(state, delta));
      delta[col] = -step;
      const Eigen::VectorXd minus = stack(retract_state(state, delta));
      const Eigen::VectorXd fd = (plus - minus) / (2.0 * step);
      const double scale = std::max(fd.norm(), sys.jacobian.col(col).norm());
      if (scale < 1e-10) continue;
      worst = std::max(worst, (fd - sys.jacobian.col(col)).norm() / scale);
    }
  }
  std::ostringstream out;
  out << "50 states, worst relative column error " << worst;
  detail = out.str();
  return worst <= 1e-4;
}

// 9. Byte-identical synchronous runs.
bool criterion_determinism(Artifacts& a, std::string& detail) {
  PipelineConfig config;
  config.ba_sync = true;
  (void)run_dataset(a.desk_easy, a.easy_vocabs, config,
                    (a.root / "det_a").string());
  (void)run_dataset(a.desk_easy, a.easy_vocabs, config,
                    (a.root / "det_b").string());
  for (const std::string file :
       {"map.json", "associations.csv", "ba_reports.csv"}) {
    if (read_file((a.root / "det_a" / file).string()) !=
        read_file((a.root / "det_b" / file).string())) {
      detail = file + " differs between identical runs";
      return false;
    }
  }
  detail = "map.json, associations.csv, ba_reports.csv byte-identical";
  return true;
}

// 10. Bundle adjustment throughput on a 20-keyframe / 10-object graph.
bool criterion_throughput(Artifacts&, std::string& detail) {
  Rng rng(777);
  BundleProblem problem;
  BaState truth;
  const CameraIntrinsics k = vga_intrinsics();
  for (int o = 0; o < 10; ++o) {
    Ellipsoid e;
    e.center = Eigen::Vector3d(0.45 * std::cos(0.63 * o),
                               0.45 * std::sin(0.63 * o),
                               0.1 + 0.02 * o);
    e.semi_axes = Eigen::Vector3d(0.1, 0.12, 0.09);
    e.rotation = random_rotation(rng);
    truth.objects.push_back(e);
  }
  for (int i = 0; i < 20; ++i) {
    const double angle = 9.0 * i * M_PI / 180.0;
    truth.poses.push_back(look_at_pose(
        {1.8 * std::cos(angle), 1.8 * std::sin(angle), 0.9},
        {0.0, 0.0, 0.15}));
    problem.intrinsics.push_back(k);
  }
  for (int i = 0; i + 1 < 20; ++i) {
    OdometryFactor f;
    f.from = i;
    f.to = i + 1;
    f.measured = truth.poses[i + 1] * truth.poses[i].inverse();
    Eigen::Matrix<double, 6, 1> noise;
    for (int d = 0; d < 3; ++d) noise[d] = rng.gauss(0.004);
    for (int d = 3; d < 6; ++d) noise[d] = rng.gauss(0.004);
    f.measured = retract_pose(f.measured, noise);
    f.covariance = Eigen::Matrix<double, 6, 6>::Identity() * 1.6e-5;
    problem.odometry.push_back(f);
  }
  int factors = 0;
  for (int i = 0; i < 20; ++i) {
    for (int o = 0; o < 10; ++o) {
      SemanticFactor f;
      f.keyframe = i;
      f.object = o;
      try {
        BBox box = conic_to_bbox(
            project_quadric(projection_matrix(truth.poses[i], k),
                            quadric_from_ellipsoid(truth.objects[o])),
            ImageBounds{640, 480});
        box.xmin += rng.gauss(2.0);
        box.ymin += rng.gauss(2.0);
        box.xmax += rng.gauss(2.0);
        box.ymax += rng.gauss(2.0);
        f.measured = box;
      } catch (const Error&) {
        continue;
      }
      f.covariance = Eigen::Matrix4d::Identity() * 4.0;
      problem.semantic.push_back(f);
      ++factors;
    }
  }
  problem.initial = truth;
  for (std::size_t i = 1; i < problem.initial.poses.size(); ++i) {
    Eigen::Matrix<double, 6, 1> delta;
    for (int d = 0; d < 6; ++d) delta[d] = rng.gauss(0.01);
    problem.initial.poses[i] =
        retract_pose(problem.initial.poses[i], delta);
  }

  const auto start = std::chrono::steady_clock::now();
  const BaResult result = optimize(problem);
  const double elapsed = seconds_since(start);
  std::ostringstream out;
  out.precision(3);
  out << std::fixed << factors << " semantic factors, "
      << result.report.iterations.size() << " iterations, " << elapsed
      << " s";
  detail = out.str();
  return elapsed < 1.0;
}

}  // namespace

int main() {
  Artifacts artifacts;

  struct Criterion {
    int id;
    const char* name;
    std::function<bool(Artifacts&, std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "assignment optimality vs enumeration", criterion_assignment},
      {2, "tangent-plane round trip", criterion_tangency},
      {3, "QP objective identity", criterion_qp_identity},
      {4, "initializer recovery", criterion_recovery},
      {5, "Quadratic vs SVD success ordering", criterion_ordering},
      {6, "bundle adjustment improvement", criterion_ba_improvement},
      {7, "association accuracy", criterion_association},
      {8, "Jacobian gradient checks", criterion_gradients},
      {9, "synchronous run determinism", criterion_determinism},
      {10, "bundle adjustment throughput", criterion_throughput},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(artifacts, detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL",
                criterion.id, criterion.name, detail.empty() ? "" : " -- ",
                detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
