#include "semslam/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "semslam/initializer.hpp"

namespace semslam {

SlamPipeline::SlamPipeline(PipelineConfig config, CameraIntrinsics intrinsics,
                           std::map<int, VocabularyTree> vocabularies)
    : config_(std::move(config)),
      intrinsics_(intrinsics),
      vocabularies_(std::move(vocabularies)) {
  if (!config_.ba_sync) {
    worker_ = std::thread([this] { mapping_worker(); });
  }
}

SlamPipeline::~SlamPipeline() {
  try {
    finish();
  } catch (...) {
  }
}

void SlamPipeline::set_ba_iteration_hook(std::function<void(int)> hook) {
  ba_iteration_hook_ = std::move(hook);
}

FrameResult SlamPipeline::process_frame(const FrameInput& input) {
  if (input.frame_index <= last_frame_index_) {
    throw OutOfOrderFrame("frame " + std::to_string(input.frame_index) +
                          " arrived after frame " +
                          std::to_string(last_frame_index_));
  }
  last_frame_index_ = input.frame_index;

  FrameResult result;
  result.frame_index = input.frame_index;
  const std::size_t n = input.measurements.size();
  result.assigned.assign(n, kNoObject);
  result.scores.assign(n, 0.0);
  result.filtered.assign(n, false);

  // Pose from the odometry chain, re-anchored at the latest keyframe so
  // bundle adjustment corrections feed back into tracking.
  accumulated_odometry_ = input.odometry * accumulated_odometry_;

  std::vector<std::size_t> kept;
  std::vector<SemanticMeasurement> measurements;
  std::vector<BowVector> bows;
  for (std::size_t i = 0; i < n; ++i) {
    const SemanticMeasurement& m = input.measurements[i];
    if (m.bbox.area() < config_.min_bbox_area ||
        static_cast<int>(m.descriptors.size()) < config_.min_descriptors) {
      result.filtered[i] = true;
      continue;
    }
    const auto vocab = vocabularies_.find(m.class_id);
    if (vocab == vocabularies_.end()) {
      throw DataError("no vocabulary for class " +
                      std::to_string(m.class_id));
    }
    kept.push_back(i);
    measurements.push_back(m);
    bows.push_back(m.descriptors.empty() ? BowVector{}
                                         : vocab->second.transform(m.descriptors));
  }

  FrameAssociation association;
  {
    std::shared_lock lock(map_mutex_);
    if (anchor_keyframe_ >= 0 &&
        map_.keyframes().count(anchor_keyframe_) > 0) {
      anchor_pose_ = map_.keyframe(anchor_keyframe_).pose;
    }
    result.pose_estimate = accumulated_odometry_ * anchor_pose_;
    association = associate_frame(measurements, bows, result.pose_estimate,
                                  intrinsics_, map_, config_.theta_assoc);
  }
  for (std::size_t j = 0; j < kept.size(); ++j) {
    result.assigned[kept[j]] = association.assigned[j];
    result.scores[kept[j]] = association.score[j];
  }
  for (std::size_t i = 0; i < n; ++i) {
    log_.push_back({input.frame_index, static_cast<int>(i),
                    result.assigned[i], result.scores[i]});
  }

  result.is_keyframe = keyframe_policy(input.frame_index, config_);
  if (result.is_keyframe) {
    KeyframeTask task;
    task.keyframe.frame_index = input.frame_index;
    task.keyframe.pose = result.pose_estimate;
    task.keyframe.intrinsics = intrinsics_;
    task.keyframe.measurements = std::move(measurements);
    task.keyframe.bow = std::move(bows);
    task.associations.assign(kept.size(), kNoObject);
    task.spawn.assign(kept.size(), false);
    for (std::size_t j = 0; j < kept.size(); ++j) {
      task.associations[j] = association.assigned[j];
      // A measurement spawns a new object only when it also failed gating
      // against every same-class object; a lost assignment does not.
      task.spawn[j] = association.assigned[j] == kNoObject &&
                      !association.had_candidates[j];
    }
    task.odometry_from_previous = accumulated_odometry_;

    anchor_pose_ = result.pose_estimate;
    anchor_keyframe_ = keyframe_counter_++;
    accumulated_odometry_ = Pose::identity();

    if (config_.ba_sync) {
      handle_keyframe_task(task);
      run_bundle_adjustment();
    } else {
      enqueue(std::move(task));
    }
  }
  return result;
}

void SlamPipeline::enqueue(KeyframeTask task) {
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(std::move(task));
    // The arrival signal: a running bundle adjustment stops at the next
    // iteration boundary so the new keyframe is processed promptly.
    cancel_ba_.store(true);
  }
  queue_cv_.notify_one();
}

void SlamPipeline::mapping_worker() {
  while (true) {
    KeyframeTask task;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
      if (queue_.empty()) return;  // stop, nothing pending
      task = std::move(queue_.front());
      queue_.pop_front();
      worker_busy_ = true;
    }
    handle_keyframe_task(task);
    {
      // Only clear the cancel signal when no newer keyframe is waiting.
      std::lock_guard lock(queue_mutex_);
      if (queue_.empty()) cancel_ba_.store(false);
    }
    run_bundle_adjustment();
    {
      std::lock_guard lock(queue_mutex_);
      worker_busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

void SlamPipeline::finish() {
  if (config_.ba_sync) return;
  if (!worker_.joinable()) return;
  {
    std::unique_lock lock(queue_mutex_);
    idle_cv_.wait(lock, [this] { return queue_.empty() && !worker_busy_; });
    stop_ = true;
  }
  queue_cv_.notify_all();
  worker_.join();
}

void SlamPipeline::handle_keyframe_task(const KeyframeTask& task) {
  std::unique_lock lock(map_mutex_);
  SemanticKeyframe kf = task.keyframe;
  const KeyframeId kf_id = map_.insert_keyframe(std::move(kf));
  keyframe_odometry_[kf_id] = task.odometry_from_previous;

  for (std::size_t m = 0; m < task.associations.size(); ++m) {
    if (task.associations[m] != kNoObject) {
      map_.link(kf_id, m, task.associations[m]);
    } else if (task.spawn[m]) {
      const ObjectId id = map_.create_object(
          task.keyframe.measurements[m].class_id);
      map_.link(kf_id, m, id);
    }
  }
  if (const auto violation = map_.audit()) {
    throw Error("map integrity violated: " + *violation);
  }

  InitializerOptions opts;
  opts.min_obs = config_.min_obs;
  for (auto& [id, obj] : map_.objects()) {
    if (obj.ellipsoid || obj.observation_count < config_.min_obs) continue;
    const ObservationSet obs = observations_for(map_, id);
    const InitializationResult init = initialize_object(obs, opts);
    init_records_.push_back({kf_id, id, init.ok, init.failure});
    if (init.ok) obj.ellipsoid = init.ellipsoid;
  }
}

void SlamPipeline::run_bundle_adjustment() {
  if (!config_.ba_enabled) return;

  BundleProblem problem;
  std::vector<KeyframeId> kf_ids;
  std::vector<ObjectId> object_ids;
  {
    std::shared_lock lock(map_mutex_);
    for (const auto& [id, obj] : map_.objects()) {
      if (obj.ellipsoid) object_ids.push_back(id);
    }
    if (object_ids.empty()) return;

    std::map<ObjectId, int> object_slot;
    for (std::size_t i = 0; i < object_ids.size(); ++i) {
      object_slot[object_ids[i]] = static_cast<int>(i);
      problem.initial.objects.push_back(
          *map_.object(object_ids[i]).ellipsoid);
    }
    std::map<KeyframeId, int> kf_slot;
    for (const auto& [id, kf] : map_.keyframes()) {
      kf_slot[id] = static_cast<int>(kf_ids.size());
      kf_ids.push_back(id);
      problem.initial.poses.push_back(kf.pose);
      problem.intrinsics.push_back(kf.intrinsics);
    }

    Eigen::Matrix<double, 6, 6> odo_cov =
        Eigen::Matrix<double, 6, 6>::Identity();
    odo_cov.topLeftCorner<3, 3>() *=
        config_.sigma_odo_rot * config_.sigma_odo_rot;
    odo_cov.bottomRightCorner<3, 3>() *=
        config_.sigma_odo_trans * config_.sigma_odo_trans;
    for (std::size_t i = 1; i < kf_ids.size(); ++i) {
      OdometryFactor f;
      f.from = static_cast<int>(i - 1);
      f.to = static_cast<int>(i);
      f.measured = keyframe_odometry_.at(kf_ids[i]);
      f.covariance = odo_cov;
      problem.odometry.push_back(f);
    }

    const Eigen::Matrix4d sem_cov = Eigen::Matrix4d::Identity() *
                                    (config_.sigma_px * config_.sigma_px);
    for (const auto& [id, kf] : map_.keyframes()) {
      for (std::size_t m = 0; m < kf.associated_object.size(); ++m) {
        const ObjectId obj = kf.associated_object[m];
        if (obj == kNoObject || !object_slot.count(obj)) continue;
        SemanticFactor f;
        f.keyframe = kf_slot[id];
        f.object = object_slot[obj];
        f.measured = kf.measurements[m].bbox;
        f.covariance = sem_cov;
        problem.semantic.push_back(f);
      }
    }
  }
  if (problem.semantic.empty() && problem.odometry.empty()) return;

  BaOptions opts;
  opts.max_iterations = config_.lm_max_iterations;
  opts.initial_lambda = config_.lm_initial_lambda;
  opts.iteration_hook = ba_iteration_hook_;
  const BaResult ba =
      optimize(problem, opts, config_.ba_sync ? nullptr : &cancel_ba_);

  {
    std::unique_lock lock(map_mutex_);
    for (std::size_t i = 0; i < kf_ids.size(); ++i) {
      map_.keyframe(kf_ids[i]).pose = ba.state.poses[i];
    }
    for (std::size_t i = 0; i < object_ids.size(); ++i) {
      map_.object(object_ids[i]).ellipsoid = ba.state.objects[i];
    }
    ba_records_.push_back({kf_ids.back(), ba.report});
  }
}

MapDatabase SlamPipeline::snapshot_map() const {
  std::shared_lock lock(map_mutex_);
  return map_;
}

std::vector<AssociationLogRow> SlamPipeline::association_log() const {
  return log_;
}

std::vector<BaRecord> SlamPipeline::ba_records() const {
  std::shared_lock lock(map_mutex_);
  return ba_records_;
}

std::vector<InitRecord> SlamPipeline::init_records() const {
  std::shared_lock lock(map_mutex_);
  return init_records_;
}

std::vector<VocabularyTree::Document> vocabulary_documents(const Dataset& data,
                                                           int class_id) {
  std::map<std::int64_t, VocabularyTree::Document> by_object;
  for (const FrameRecord& frame : data.frames) {
    for (const Detection& det : frame.detections) {
      if (det.gt_object == kClutter) continue;
      const auto& object =
          data.spec.objects[static_cast<std::size_t>(det.gt_object)];
      if (object.class_id != class_id) continue;
      auto& doc = by_object[det.gt_object];
      doc.insert(doc.end(), det.measurement.descriptors.begin(),
                 det.measurement.descriptors.end());
    }
  }
  std::vector<VocabularyTree::Document> documents;
  for (auto& [id, doc] : by_object) documents.push_back(std::move(doc));
  return documents;
}

RunSummary run_dataset(const Dataset& data,
                       const std::map<int, VocabularyTree>& vocabularies,
                       const PipelineConfig& config,
                       const std::string& out_dir) {
  std::set<int> classes;
  for (const auto& obj : data.spec.objects) classes.insert(obj.class_id);
  for (const int c : classes) {
    if (!vocabularies.count(c)) {
      throw DataError("missing vocabulary for class " + std::to_string(c));
    }
  }

  SlamPipeline pipeline(config, data.spec.intrinsics, vocabularies);
  RunSummary summary;
  for (const FrameRecord& frame : data.frames) {
    FrameInput input;
    input.frame_index = frame.frame;
    input.odometry = frame.odometry;
    for (const Detection& det : frame.detections) {
      input.measurements.push_back(det.measurement);
    }
    const FrameResult result = pipeline.process_frame(input);
    summary.frames += 1;
    summary.keyframes += result.is_keyframe ? 1 : 0;
  }
  pipeline.finish();

  const MapDatabase map = pipeline.snapshot_map();
  summary.objects = static_cast<int>(map.objects().size());
  for (const auto& [id, obj] : map.objects()) {
    summary.initialized_objects += obj.ellipsoid ? 1 : 0;
  }

  std::filesystem::create_directories(out_dir);
  save_map(out_dir + "/map.json", map);
  save_association_log(out_dir + "/associations.csv",
                       pipeline.association_log());
  {
    std::ofstream out(out_dir + "/ba_reports.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + out_dir + "/ba_reports.csv");
    out << "keyframe,initial_cost,final_cost,iterations,skipped,cancelled,"
           "termination\n";
    char buf[64];
    for (const BaRecord& record : pipeline.ba_records()) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g",
                    record.report.initial_cost, record.report.final_cost);
      out << record.keyframe << ',' << buf << ','
          << record.report.iterations.size() << ','
          << record.report.skipped_factors << ','
          << (record.report.cancelled ? 1 : 0) << ','
          << record.report.termination << '\n';
    }
  }
  return summary;
}

}  // namespace semslam
