#include <fstream>

#include <json.hpp>

#include "json_util.hpp"
#include "semslam/io.hpp"

namespace semslam {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json bow_to_json(const BowVector& v) {
  ordered_json j = ordered_json::array();
  for (const auto& [word, weight] : v) {
    j.push_back(ordered_json::array({word, weight}));
  }
  return j;
}

BowVector bow_from_json(const json& j) {
  BowVector v;
  for (const auto& entry : j) {
    if (!entry.is_array() || entry.size() != 2) {
      throw DataError("malformed BoW entry");
    }
    v[entry[0].get<std::uint32_t>()] = entry[1].get<double>();
  }
  return v;
}

}  // namespace

void save_map(const std::string& path, const MapDatabase& map) {
  ordered_json j;
  j["format"] = "semslam-map-v1";
  j["next_object_id"] = map.next_object_id();
  j["next_keyframe_id"] = map.next_keyframe_id();

  ordered_json objects = ordered_json::array();
  for (const auto& [id, obj] : map.objects()) {
    ordered_json o;
    o["id"] = obj.id;
    o["class"] = obj.class_id;
    if (obj.ellipsoid) {
      o["ellipsoid"] = detail::ellipsoid_to_json(*obj.ellipsoid);
    }
    o["keyframes"] = obj.keyframes;
    o["observations"] = obj.observation_count;
    objects.push_back(std::move(o));
  }
  j["objects"] = std::move(objects);

  ordered_json keyframes = ordered_json::array();
  for (const auto& [id, kf] : map.keyframes()) {
    ordered_json k;
    k["id"] = kf.id;
    k["frame"] = kf.frame_index;
    k["pose"] = detail::pose_to_json(kf.pose);
    k["intrinsics"] = detail::intrinsics_to_json(kf.intrinsics);
    ordered_json ms = ordered_json::array();
    for (std::size_t m = 0; m < kf.measurements.size(); ++m) {
      const SemanticMeasurement& meas = kf.measurements[m];
      ordered_json mj;
      mj["bbox"] = std::vector<double>{meas.bbox.xmin, meas.bbox.ymin,
                                       meas.bbox.xmax, meas.bbox.ymax};
      mj["class"] = meas.class_id;
      mj["score"] = meas.score;
      mj["bow"] = bow_to_json(kf.bow[m]);
      mj["object"] = kf.associated_object[m];
      ms.push_back(std::move(mj));
    }
    k["measurements"] = std::move(ms);
    keyframes.push_back(std::move(k));
  }
  j["keyframes"] = std::move(keyframes);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(1, '\t') << '\n';
}

MapDatabase load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid map file: ") + e.what());
  }
  if (j.value("format", "") != std::string("semslam-map-v1")) {
    throw SchemaMismatch("unsupported map format in " + path);
  }

  MapDatabase map;
  for (const auto& o : j.at("objects")) {
    MapObject obj;
    obj.id = o.at("id").get<ObjectId>();
    obj.class_id = o.at("class").get<int>();
    if (o.contains("ellipsoid")) {
      obj.ellipsoid = detail::ellipsoid_from_json(o.at("ellipsoid"));
    }
    obj.keyframes = o.at("keyframes").get<std::vector<KeyframeId>>();
    obj.observation_count = o.at("observations").get<int>();
    map.objects().emplace(obj.id, std::move(obj));
  }
  for (const auto& k : j.at("keyframes")) {
    SemanticKeyframe kf;
    kf.id = k.at("id").get<KeyframeId>();
    kf.frame_index = k.at("frame").get<std::int64_t>();
    kf.pose = detail::pose_from_json(k.at("pose"));
    kf.intrinsics = detail::intrinsics_from_json(k.at("intrinsics"));
    for (const auto& mj : k.at("measurements")) {
      SemanticMeasurement meas;
      const auto box = mj.at("bbox").get<std::vector<double>>();
      if (box.size() != 4) throw DataError("malformed bbox");
      meas.bbox = {box[0], box[1], box[2], box[3]};
      meas.class_id = mj.at("class").get<int>();
      meas.score = mj.at("score").get<double>();
      kf.measurements.push_back(std::move(meas));
      kf.bow.push_back(bow_from_json(mj.at("bow")));
      kf.associated_object.push_back(mj.at("object").get<ObjectId>());
    }
    map.keyframes().emplace(kf.id, std::move(kf));
  }
  map.set_counters(j.at("next_object_id").get<ObjectId>(),
                   j.at("next_keyframe_id").get<KeyframeId>());
  return map;
}

}  // namespace semslam
