// Command line front end: dataset simulation, vocabulary training, SLAM
// runs, evaluation, and the initialization benchmark.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "semslam/evaluation.hpp"
#include "semslam/initializer.hpp"
#include "semslam/io.hpp"
#include "semslam/pipeline.hpp"
#include "semslam/simulator.hpp"

namespace {

using namespace semslam;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

SceneSpec resolve_spec(const std::string& name_or_path) {
  const auto presets = standard_benchmarks();
  const auto it = presets.find(name_or_path);
  if (it != presets.end()) return it->second;
  if (!std::filesystem::exists(name_or_path)) {
    throw DataError("no preset or spec file named '" + name_or_path + "'");
  }
  // A spec file is a scene.json without frames.
  std::ifstream in(name_or_path, std::ios::binary);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid spec file: ") + e.what());
  }
  // Reuse the dataset loader by round-tripping through a scene document.
  const auto tmp =
      std::filesystem::temp_directory_path() / "semslam_spec_probe";
  std::filesystem::create_directories(tmp);
  {
    std::ofstream scene(tmp / "scene.json", std::ios::binary);
    nlohmann::ordered_json doc;
    doc["format"] = "semslam-scene-v1";
    doc["spec"] = j.contains("spec") ? j.at("spec") : j;
    doc["signatures"] = nlohmann::json::array();
    scene << doc.dump();
  }
  {
    std::ofstream frames(tmp / "frames.jsonl", std::ios::binary);
  }
  const SceneSpec spec = load_dataset(tmp.string()).spec;
  std::filesystem::remove_all(tmp);
  return spec;
}

std::map<int, VocabularyTree> load_vocabulary_dir(const std::string& dir,
                                                  const Dataset& data) {
  std::set<int> classes;
  for (const auto& obj : data.spec.objects) classes.insert(obj.class_id);
  std::map<int, VocabularyTree> trees;
  for (const int c : classes) {
    const std::string path =
        dir + "/vocab_class_" + std::to_string(c) + ".json";
    if (!std::filesystem::exists(path)) {
      throw DataError("missing vocabulary file " + path);
    }
    trees.emplace(c, VocabularyTree::load(path));
  }
  return trees;
}

int cmd_simulate(const std::string& spec_arg, const std::string& out,
                 std::optional<std::uint64_t> seed) {
  SceneSpec spec = resolve_spec(spec_arg);
  if (seed) spec.seed = *seed;
  const Dataset data = generate(spec);
  save_dataset(out, data);
  int detections = 0;
  for (const auto& frame : data.frames) {
    detections += static_cast<int>(frame.detections.size());
  }
  std::cout << "simulated " << data.frames.size() << " frames, " << detections
            << " detections -> " << out << "\n";
  return kExitOk;
}

int cmd_vocab(const std::string& dataset_dir, int class_id, int k, int levels,
              std::uint64_t seed, const std::string& out) {
  const Dataset data = load_dataset(dataset_dir);
  const auto documents = vocabulary_documents(data, class_id);
  if (documents.empty()) {
    throw DataError("dataset has no objects of class " +
                    std::to_string(class_id));
  }
  const VocabularyTree tree =
      VocabularyTree::build(documents, k, levels, seed, class_id);
  tree.save(out);
  std::cout << "trained vocabulary: class " << class_id << ", "
            << tree.word_count() << " words, " << documents.size()
            << " documents -> " << out << "\n";
  return kExitOk;
}

int cmd_run(const std::string& dataset_dir, const std::string& vocab_dir,
            const std::string& config_path, const std::string& out,
            bool ba_sync, bool no_ba) {
  const Dataset data = load_dataset(dataset_dir);
  PipelineConfig config;
  if (!config_path.empty()) config = load_config(config_path);
  if (ba_sync) config.ba_sync = true;
  if (no_ba) config.ba_enabled = false;
  const auto vocabularies = load_vocabulary_dir(vocab_dir, data);
  const RunSummary summary = run_dataset(data, vocabularies, config, out);
  std::cout << "processed " << summary.frames << " frames ("
            << summary.keyframes << " keyframes), map has " << summary.objects
            << " objects (" << summary.initialized_objects
            << " initialized) -> " << out << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& run_dir, const std::string& dataset_dir,
             const std::string& out) {
  const Dataset data = load_dataset(dataset_dir);
  const auto log = load_association_log(run_dir + "/associations.csv");

  // Join the log with the ground-truth ids by (frame, measurement index).
  std::map<std::pair<std::int64_t, int>, std::int64_t> gt;
  for (const FrameRecord& frame : data.frames) {
    for (std::size_t d = 0; d < frame.detections.size(); ++d) {
      gt[{frame.frame, static_cast<int>(d)}] =
          frame.detections[d].gt_object;
    }
  }
  std::vector<std::int64_t> gt_ids, assigned_ids;
  for (const AssociationLogRow& row : log) {
    const auto it = gt.find({row.frame, row.measurement});
    if (it == gt.end()) {
      throw DataError("association log references unknown measurement");
    }
    gt_ids.push_back(it->second);
    assigned_ids.push_back(row.assigned);
  }

  std::filesystem::create_directories(out);
  const IdCorrespondence c = da_accuracy(gt_ids, assigned_ids);
  {
    std::ofstream f(out + "/da_accuracy.csv", std::ios::binary);
    f << da_accuracy_csv(c);
  }
  const MapDatabase map = load_map(run_dir + "/map.json");
  const ReprojectionStats stats = reprojection_error(map);
  {
    std::ofstream f(out + "/reproj.csv", std::ios::binary);
    f << reprojection_csv(stats);
  }
  std::cout << "da accuracy " << c.accuracy << " (" << c.r_da << "/"
            << c.r_max << "), coverage " << c.coverage
            << ", mean reprojection error " << stats.mean_error_px
            << " px -> " << out << "\n";
  return kExitOk;
}

int cmd_bench_init(int trials, const std::vector<int>& counts, double sigma,
                   std::uint64_t seed, const std::string& out,
                   const std::string& dump_dir) {
  const InitStudyResult result = run_init_study(counts, trials, sigma, seed);
  {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw IoError("cannot write " + out);
    f << init_success_csv(result);
  }
  for (const InitStudyCell& cell : result.cells) {
    std::cout << "count " << cell.count << ": Quadratic "
              << cell.qp_successes << "/" << cell.trials << ", SVD "
              << cell.svd_successes << "/" << cell.trials << "\n";
  }

  if (!dump_dir.empty()) {
    // Per-trial JSON diagnostics: linear system, constraint rows, and the
    // KKT residuals of the quadratic program.
    std::filesystem::create_directories(dump_dir);
    const int max_count = *std::max_element(counts.begin(), counts.end());
    for (const int count : counts) {
      const SceneSpec spec = init_study_trial(seed, max_count, sigma);
      const Dataset data = generate(spec);
      ObservationSet obs;
      for (const FrameRecord& frame : data.frames) {
        for (const Detection& det : frame.detections) {
          if (det.gt_object == 0) {
            obs.push_back(
                {frame.true_pose, spec.intrinsics, det.measurement.bbox});
          }
        }
      }
      if (static_cast<int>(obs.size()) < count) continue;
      obs.resize(static_cast<std::size_t>(count));
      InitializerOptions opts;
      opts.min_obs = count;
      AssembledSystem system = assemble_system(obs, opts);
      const ConstraintRows rows = build_constraints(obs, opts.eps_w);
      system.qp.constraint_g = rows.g;
      system.qp.constraint_h = rows.h;
      QpSolution diag;
      nlohmann::ordered_json j;
      try {
        const Vector9 q = solve_quadric_qp(system.qp, &diag);
        j["solution"] = std::vector<double>(q.data(), q.data() + 9);
        j["kkt"] = {{"stationarity", diag.stationarity},
                    {"feasibility", diag.feasibility},
                    {"complementarity", diag.complementarity}};
      } catch (const Error& e) {
        j["failure"] = e.what();
      }
      nlohmann::ordered_json a_rows = nlohmann::ordered_json::array();
      for (Eigen::Index r = 0; r < system.a.rows(); ++r) {
        a_rows.push_back(std::vector<double>(
            system.a.row(r).data(), system.a.row(r).data() + 10));
      }
      j["a"] = std::move(a_rows);
      nlohmann::ordered_json g_rows = nlohmann::ordered_json::array();
      for (Eigen::Index r = 0; r < rows.g.rows(); ++r) {
        std::vector<double> row(9);
        for (int c2 = 0; c2 < 9; ++c2) row[static_cast<std::size_t>(c2)] = rows.g(r, c2);
        g_rows.push_back(
            nlohmann::ordered_json{{"g", row}, {"h", rows.h[r]}});
      }
      j["constraints"] = std::move(g_rows);
      std::ofstream f(dump_dir + "/init_seed" + std::to_string(seed) +
                          "_count" + std::to_string(count) + ".json",
                      std::ios::binary);
      f << j.dump(1, '\t') << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-level semantic SLAM laboratory"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic dataset from a preset or spec file");
  std::string sim_spec, sim_out;
  std::uint64_t sim_seed = 0;
  bool sim_seed_set = false;
  simulate->add_option("--spec", sim_spec, "Preset name or scene spec file")
      ->required();
  simulate->add_option("--out", sim_out, "Output dataset directory")
      ->required();
  simulate->add_option("--seed", sim_seed, "Noise seed override")
      ->each([&](const std::string&) { sim_seed_set = true; });

  // vocab
  auto* vocab = app.add_subcommand(
      "vocab", "Train a per-class vocabulary tree from a dataset");
  std::string vocab_dataset, vocab_out;
  int vocab_class = 0, vocab_k = 5, vocab_levels = 5;
  std::uint64_t vocab_seed = 1;
  vocab->add_option("--train", vocab_dataset, "Training dataset directory")
      ->required();
  vocab->add_option("--class", vocab_class, "Object class id")->required();
  vocab->add_option("--k", vocab_k, "Branching factor");
  vocab->add_option("--levels", vocab_levels, "Tree depth");
  vocab->add_option("--seed", vocab_seed, "Clustering seed");
  vocab->add_option("--out", vocab_out, "Output vocabulary file")->required();

  // run
  auto* run = app.add_subcommand("run", "Run the SLAM pipeline on a dataset");
  std::string run_dataset_dir, run_vocab_dir, run_config, run_out;
  bool run_ba_sync = false, run_no_ba = false;
  run->add_option("--dataset", run_dataset_dir, "Dataset directory")
      ->required();
  run->add_option("--vocab-dir", run_vocab_dir,
                  "Directory with vocab_class_<id>.json files")
      ->required();
  run->add_option("--config", run_config, "Flat key = value config file");
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_flag("--ba-sync", run_ba_sync,
                "Run mapping synchronously (deterministic)");
  run->add_flag("--no-ba", run_no_ba, "Disable bundle adjustment");

  // eval
  auto* eval = app.add_subcommand(
      "eval", "Score a run against dataset ground truth");
  std::string eval_run, eval_dataset, eval_out;
  eval->add_option("--run", eval_run, "Run output directory")->required();
  eval->add_option("--dataset", eval_dataset, "Dataset directory")
      ->required();
  eval->add_option("--out", eval_out, "Metrics output directory")->required();

  // bench-init
  auto* bench = app.add_subcommand(
      "bench-init", "Initialization success study (Quadratic vs SVD)");
  int bench_trials = 100;
  std::vector<int> bench_counts{5, 10, 15, 20};
  double bench_sigma = 1.0;
  std::uint64_t bench_seed = 0;
  std::string bench_out, bench_dump;
  bench->add_option("--trials", bench_trials, "Trials per cell");
  bench->add_option("--counts", bench_counts, "Observation counts")
      ->delimiter(',');
  bench->add_option("--sigma", bench_sigma, "Bounding box noise (px)");
  bench->add_option("--seed", bench_seed, "First trial seed");
  bench->add_option("--out", bench_out, "Output CSV path")->required();
  bench->add_option("--dump-dir", bench_dump,
                    "Dump per-trial solver diagnostics as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      return cmd_simulate(sim_spec, sim_out,
                          sim_seed_set
                              ? std::optional<std::uint64_t>(sim_seed)
                              : std::nullopt);
    }
    if (vocab->parsed()) {
      return cmd_vocab(vocab_dataset, vocab_class, vocab_k, vocab_levels,
                       vocab_seed, vocab_out);
    }
    if (run->parsed()) {
      return cmd_run(run_dataset_dir, run_vocab_dir, run_config, run_out,
                     run_ba_sync, run_no_ba);
    }
    if (eval->parsed()) {
      return cmd_eval(eval_run, eval_dataset, eval_out);
    }
    if (bench->parsed()) {
      return cmd_bench_init(bench_trials, bench_counts, bench_sigma,
                            bench_seed, bench_out, bench_dump);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
