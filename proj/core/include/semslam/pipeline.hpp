#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "semslam/association.hpp"
#include "semslam/bundle_adjustment.hpp"
#include "semslam/config.hpp"
#include "semslam/io.hpp"
#include "semslam/map.hpp"
#include "semslam/simulator.hpp"
#include "semslam/vocabulary.hpp"

namespace semslam {

/// Every T-th frame (counting from 0) becomes a semantic keyframe.
inline bool keyframe_policy(std::int64_t frame_index,
                            const PipelineConfig& config) {
  return frame_index % config.keyframe_interval == 0;
}

struct FrameInput {
  std::int64_t frame_index = 0;
  /// Measured relative pose from the previous frame (identity at frame 0).
  Pose odometry;
  std::vector<SemanticMeasurement> measurements;
};

struct FrameResult {
  std::int64_t frame_index = 0;
  Pose pose_estimate;
  std::vector<ObjectId> assigned;  // aligned with input measurements
  std::vector<double> scores;
  std::vector<bool> filtered;
  bool is_keyframe = false;
};

struct BaRecord {
  KeyframeId keyframe = -1;
  BaReport report;
};

struct InitRecord {
  KeyframeId keyframe = -1;
  ObjectId object = -1;
  bool ok = false;
  std::string failure;
};

/// Frame-processing front end plus the mapping worker (initialization and
/// bundle adjustment). With config.ba_sync everything runs on the calling
/// thread and the whole run is deterministic; otherwise mapping runs on a
/// background worker and a keyframe arriving mid-optimization cancels the
/// running bundle adjustment, mirroring the two-thread layout.
class SlamPipeline {
 public:
  SlamPipeline(PipelineConfig config, CameraIntrinsics intrinsics,
               std::map<int, VocabularyTree> vocabularies);
  ~SlamPipeline();

  SlamPipeline(const SlamPipeline&) = delete;
  SlamPipeline& operator=(const SlamPipeline&) = delete;

  /// Frames must arrive in strictly increasing index order.
  FrameResult process_frame(const FrameInput& input);

  /// Drains pending mapping work; must be called before reading results in
  /// asynchronous mode.
  void finish();

  MapDatabase snapshot_map() const;
  std::vector<AssociationLogRow> association_log() const;
  std::vector<BaRecord> ba_records() const;
  std::vector<InitRecord> init_records() const;

  /// Test instrumentation: invoked after every bundle adjustment iteration.
  void set_ba_iteration_hook(std::function<void(int)> hook);

 private:
  struct KeyframeTask {
    SemanticKeyframe keyframe;
    std::vector<ObjectId> associations;  // aligned with keyframe.measurements
    std::vector<bool> spawn;             // create a new object here
    Pose odometry_from_previous;         // raw relative pose between keyframes
  };

  void mapping_worker();
  void enqueue(KeyframeTask task);
  void handle_keyframe_task(const KeyframeTask& task);
  void run_bundle_adjustment();

  PipelineConfig config_;
  CameraIntrinsics intrinsics_;
  std::map<int, VocabularyTree> vocabularies_;

  mutable std::shared_mutex map_mutex_;
  MapDatabase map_;
  std::map<KeyframeId, Pose> keyframe_odometry_;  // relative to previous kf
  std::vector<BaRecord> ba_records_;
  std::vector<InitRecord> init_records_;

  // Tracking state (front-end thread only).
  std::int64_t last_frame_index_ = -1;
  Pose anchor_pose_;                 // pose of the anchor keyframe at creation
  KeyframeId anchor_keyframe_ = -1;  // refined pose read from the map
  Pose accumulated_odometry_;        // product of increments since the anchor
  KeyframeId keyframe_counter_ = 0;

  std::vector<AssociationLogRow> log_;

  // Mapping worker state (asynchronous mode).
  std::thread worker_;
  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<KeyframeTask> queue_;
  bool stop_ = false;
  bool worker_busy_ = false;
  std::atomic<bool> cancel_ba_{false};
  std::function<void(int)> ba_iteration_hook_;
};

struct RunSummary {
  int frames = 0;
  int keyframes = 0;
  int objects = 0;
  int initialized_objects = 0;
};

/// Feeds a dataset through the pipeline and writes `map.json`,
/// `associations.csv`, and `ba_reports.csv` into out_dir. Requires a
/// vocabulary for every object class of the scene.
RunSummary run_dataset(const Dataset& data,
                       const std::map<int, VocabularyTree>& vocabularies,
                       const PipelineConfig& config,
                       const std::string& out_dir);

/// Groups the dataset's descriptors into one training document per object
/// instance of the class.
std::vector<VocabularyTree::Document> vocabulary_documents(const Dataset& data,
                                                           int class_id);

}  // namespace semslam
