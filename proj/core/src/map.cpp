#include "semslam/map.hpp"

#include <algorithm>
#include <sstream>

namespace semslam {

std::vector<ObjectId> SemanticKeyframe::observed_objects() const {
  std::vector<ObjectId> out;
  for (const ObjectId id : associated_object) {
    if (id != kNoObject &&
        std::find(out.begin(), out.end(), id) == out.end()) {
      out.push_back(id);
    }
  }
  return out;
}

ObjectId MapDatabase::create_object(int class_id) {
  MapObject obj;
  obj.id = next_object_id_++;
  obj.class_id = class_id;
  objects_.emplace(obj.id, obj);
  return obj.id;
}

KeyframeId MapDatabase::insert_keyframe(SemanticKeyframe kf) {
  kf.id = next_keyframe_id_++;
  if (kf.associated_object.size() != kf.measurements.size()) {
    kf.associated_object.assign(kf.measurements.size(), kNoObject);
  }
  if (kf.bow.size() != kf.measurements.size()) {
    kf.bow.resize(kf.measurements.size());
  }
  const KeyframeId id = kf.id;
  keyframes_.emplace(id, std::move(kf));
  return id;
}

void MapDatabase::link(KeyframeId kf_id, std::size_t measurement_index,
                       ObjectId object_id) {
  SemanticKeyframe& kf = keyframes_.at(kf_id);
  MapObject& obj = objects_.at(object_id);
  kf.associated_object.at(measurement_index) = object_id;
  if (std::find(obj.keyframes.begin(), obj.keyframes.end(), kf_id) ==
      obj.keyframes.end()) {
    obj.keyframes.push_back(kf_id);
  }
  obj.observation_count += 1;
}

std::optional<MapDatabase::LatestObservation> MapDatabase::latest_observation(
    ObjectId object_id) const {
  const auto it = objects_.find(object_id);
  if (it == objects_.end() || it->second.keyframes.empty()) {
    return std::nullopt;
  }
  const KeyframeId kf_id = it->second.keyframes.back();
  const SemanticKeyframe& kf = keyframes_.at(kf_id);
  for (std::size_t m = kf.associated_object.size(); m-- > 0;) {
    if (kf.associated_object[m] == object_id) {
      return LatestObservation{kf_id, m};
    }
  }
  return std::nullopt;
}

std::optional<std::string> MapDatabase::audit() const {
  for (const auto& [kf_id, kf] : keyframes_) {
    if (kf.bow.size() != kf.measurements.size() ||
        kf.associated_object.size() != kf.measurements.size()) {
      return "keyframe " + std::to_string(kf_id) + " has misaligned arrays";
    }
    for (const ObjectId obj_id : kf.associated_object) {
      if (obj_id == kNoObject) continue;
      const auto it = objects_.find(obj_id);
      if (it == objects_.end()) {
        return "keyframe " + std::to_string(kf_id) +
               " references unknown object " + std::to_string(obj_id);
      }
      const auto& kfs = it->second.keyframes;
      if (std::find(kfs.begin(), kfs.end(), kf_id) == kfs.end()) {
        return "object " + std::to_string(obj_id) +
               " does not list keyframe " + std::to_string(kf_id);
      }
    }
  }
  for (const auto& [obj_id, obj] : objects_) {
    int measured = 0;
    for (const KeyframeId kf_id : obj.keyframes) {
      const auto it = keyframes_.find(kf_id);
      if (it == keyframes_.end()) {
        return "object " + std::to_string(obj_id) +
               " references unknown keyframe " + std::to_string(kf_id);
      }
      const auto& assoc = it->second.associated_object;
      const int here = static_cast<int>(
          std::count(assoc.begin(), assoc.end(), obj_id));
      if (here == 0) {
        return "keyframe " + std::to_string(kf_id) +
               " does not observe object " + std::to_string(obj_id);
      }
      measured += here;
    }
    if (measured != obj.observation_count) {
      std::ostringstream msg;
      msg << "object " << obj_id << " observation count "
          << obj.observation_count << " != linked measurements " << measured;
      return msg.str();
    }
  }
  return std::nullopt;
}

}  // namespace semslam
