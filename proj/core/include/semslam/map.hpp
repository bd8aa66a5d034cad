#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semslam/geometry.hpp"
#include "semslam/vocabulary.hpp"

namespace semslam {

using ObjectId = std::int64_t;
using KeyframeId = std::int64_t;
inline constexpr ObjectId kNoObject = -1;

/// One detector output: bounding box, class label, detection score, and
/// the binary descriptors extracted inside the box.
struct SemanticMeasurement {
  BBox bbox;
  int class_id = 0;
  double score = 0.0;
  std::vector<BinaryDescriptor> descriptors;
};

/// Landmark record. The ellipsoid is absent until initialization succeeds.
struct MapObject {
  ObjectId id = kNoObject;
  int class_id = 0;
  std::optional<Ellipsoid> ellipsoid;
  std::vector<KeyframeId> keyframes;  // observing keyframes, in order
  int observation_count = 0;
};

/// Keyframe record: pose, intrinsics, the measurements taken on the frame
/// (associated or not), their BoW vectors, and the per-measurement object
/// links (kNoObject when unassociated).
struct SemanticKeyframe {
  KeyframeId id = -1;
  std::int64_t frame_index = -1;
  Pose pose;
  CameraIntrinsics intrinsics;
  std::vector<SemanticMeasurement> measurements;
  std::vector<BowVector> bow;              // aligned with measurements
  std::vector<ObjectId> associated_object; // aligned with measurements

  std::vector<ObjectId> observed_objects() const;
};

class MapDatabase {
 public:
  ObjectId create_object(int class_id);
  KeyframeId insert_keyframe(SemanticKeyframe kf);

  /// Records that measurement `measurement_index` of keyframe `kf` observes
  /// `object`, updating both sides of the correspondence.
  void link(KeyframeId kf, std::size_t measurement_index, ObjectId object);

  bool has_object(ObjectId id) const { return objects_.count(id) > 0; }
  MapObject& object(ObjectId id) { return objects_.at(id); }
  const MapObject& object(ObjectId id) const { return objects_.at(id); }
  SemanticKeyframe& keyframe(KeyframeId id) { return keyframes_.at(id); }
  const SemanticKeyframe& keyframe(KeyframeId id) const {
    return keyframes_.at(id);
  }

  const std::map<ObjectId, MapObject>& objects() const { return objects_; }
  const std::map<KeyframeId, SemanticKeyframe>& keyframes() const {
    return keyframes_;
  }
  std::map<ObjectId, MapObject>& objects() { return objects_; }
  std::map<KeyframeId, SemanticKeyframe>& keyframes() { return keyframes_; }

  /// The measurement of `object` in its most recent observing keyframe.
  struct LatestObservation {
    KeyframeId keyframe;
    std::size_t measurement_index;
  };
  std::optional<LatestObservation> latest_observation(ObjectId object) const;

  /// Verifies referential integrity in both directions and the
  /// observation-count bookkeeping. Returns a description of the first
  /// violation, or nullopt when consistent.
  std::optional<std::string> audit() const;

  ObjectId next_object_id() const { return next_object_id_; }
  KeyframeId next_keyframe_id() const { return next_keyframe_id_; }
  void set_counters(ObjectId next_object, KeyframeId next_keyframe) {
    next_object_id_ = next_object;
    next_keyframe_id_ = next_keyframe;
  }

 private:
  std::map<ObjectId, MapObject> objects_;
  std::map<KeyframeId, SemanticKeyframe> keyframes_;
  ObjectId next_object_id_ = 0;
  KeyframeId next_keyframe_id_ = 0;
};

}  // namespace semslam
