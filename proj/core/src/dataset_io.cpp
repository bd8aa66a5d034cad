#include "semslam/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "json_util.hpp"

namespace semslam {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

using detail::ellipsoid_from_json;
using detail::ellipsoid_to_json;
using detail::intrinsics_from_json;
using detail::intrinsics_to_json;
using detail::pose_from_json;
using detail::pose_to_json;

ordered_json spec_to_json(const SceneSpec& spec) {
  ordered_json j;
  j["name"] = spec.name;
  j["seed"] = spec.seed;
  j["intrinsics"] = intrinsics_to_json(spec.intrinsics);
  if (spec.orbit) {
    ordered_json o;
    o["radius"] = spec.orbit->radius;
    o["height"] = spec.orbit->height;
    o["frames"] = spec.orbit->frames;
    o["start_deg"] = spec.orbit->start_deg;
    o["arc_deg"] = spec.orbit->arc_deg;
    o["target"] = std::vector<double>{spec.orbit->target.x(),
                                      spec.orbit->target.y(),
                                      spec.orbit->target.z()};
    j["orbit"] = std::move(o);
  } else {
    ordered_json w = ordered_json::array();
    for (const Pose& pose : spec.waypoints) w.push_back(pose_to_json(pose));
    j["waypoints"] = std::move(w);
  }
  ordered_json noise;
  noise["bbox_sigma_px"] = spec.bbox_sigma_px;
  noise["dropout_prob"] = spec.dropout_prob;
  noise["confusion_prob"] = spec.confusion_prob;
  noise["descriptor_flip_prob"] = spec.descriptor_flip_prob;
  noise["clutter_rate"] = spec.clutter_rate;
  noise["odometry_sigma_rot"] = spec.odometry_sigma_rot;
  noise["odometry_sigma_trans"] = spec.odometry_sigma_trans;
  j["noise"] = std::move(noise);
  j["descriptors_per_detection"] = spec.descriptors_per_detection;
  ordered_json objs = ordered_json::array();
  for (const auto& obj : spec.objects) {
    ordered_json o;
    o["class"] = obj.class_id;
    o["shape"] = ellipsoid_to_json(obj.shape);
    objs.push_back(std::move(o));
  }
  j["objects"] = std::move(objs);
  return j;
}

SceneSpec spec_from_json(const json& j) {
  SceneSpec spec;
  spec.name = j.value("name", "");
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  if (j.contains("orbit")) {
    const auto& o = j.at("orbit");
    OrbitTrajectory orbit;
    orbit.radius = o.at("radius").get<double>();
    orbit.height = o.at("height").get<double>();
    orbit.frames = o.at("frames").get<int>();
    orbit.start_deg = o.at("start_deg").get<double>();
    orbit.arc_deg = o.at("arc_deg").get<double>();
    const auto t = o.at("target").get<std::vector<double>>();
    if (t.size() != 3) throw DataError("malformed orbit target");
    orbit.target = Eigen::Vector3d(t[0], t[1], t[2]);
    spec.orbit = orbit;
  } else {
    for (const auto& w : j.at("waypoints")) {
      spec.waypoints.push_back(pose_from_json(w));
    }
  }
  const auto& noise = j.at("noise");
  spec.bbox_sigma_px = noise.at("bbox_sigma_px").get<double>();
  spec.dropout_prob = noise.at("dropout_prob").get<double>();
  spec.confusion_prob = noise.at("confusion_prob").get<double>();
  spec.descriptor_flip_prob = noise.at("descriptor_flip_prob").get<double>();
  spec.clutter_rate = noise.at("clutter_rate").get<double>();
  spec.odometry_sigma_rot = noise.at("odometry_sigma_rot").get<double>();
  spec.odometry_sigma_trans = noise.at("odometry_sigma_trans").get<double>();
  spec.descriptors_per_detection = j.at("descriptors_per_detection").get<int>();
  for (const auto& o : j.at("objects")) {
    SceneSpec::ObjectSpec obj;
    obj.class_id = o.at("class").get<int>();
    obj.shape = ellipsoid_from_json(o.at("shape"));
    spec.objects.push_back(obj);
  }
  return spec;
}

}  // namespace

void save_dataset(const std::string& dir, const Dataset& data) {
  std::filesystem::create_directories(dir);

  ordered_json scene;
  scene["format"] = "semslam-scene-v1";
  scene["spec"] = spec_to_json(data.spec);
  ordered_json sigs = ordered_json::array();
  for (const auto& sig : data.signatures) {
    ordered_json s = ordered_json::array();
    for (const auto& d : sig) s.push_back(d.to_hex());
    sigs.push_back(std::move(s));
  }
  scene["signatures"] = std::move(sigs);
  {
    std::ofstream out(dir + "/scene.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + dir + "/scene.json");
    out << scene.dump(1, '\t') << '\n';
  }

  std::ofstream out(dir + "/frames.jsonl", std::ios::binary);
  if (!out) throw IoError("cannot write " + dir + "/frames.jsonl");
  for (const FrameRecord& frame : data.frames) {
    ordered_json j;
    j["frame"] = frame.frame;
    j["pose"] = pose_to_json(frame.true_pose);
    j["odometry"] = pose_to_json(frame.odometry);
    ordered_json dets = ordered_json::array();
    for (const Detection& det : frame.detections) {
      ordered_json d;
      d["bbox"] = std::vector<double>{
          det.measurement.bbox.xmin, det.measurement.bbox.ymin,
          det.measurement.bbox.xmax, det.measurement.bbox.ymax};
      d["class"] = det.measurement.class_id;
      d["score"] = det.measurement.score;
      ordered_json descs = ordered_json::array();
      for (const auto& desc : det.measurement.descriptors) {
        descs.push_back(desc.to_hex());
      }
      d["descriptors"] = std::move(descs);
      d["gt"] = det.gt_object;
      dets.push_back(std::move(d));
    }
    j["detections"] = std::move(dets);
    out << j.dump() << '\n';
  }
}

Dataset load_dataset(const std::string& dir) {
  Dataset data;
  {
    std::ifstream in(dir + "/scene.json", std::ios::binary);
    if (!in) throw IoError("cannot open " + dir + "/scene.json");
    json scene;
    try {
      in >> scene;
    } catch (const json::exception& e) {
      throw DataError(std::string("invalid scene.json: ") + e.what());
    }
    if (scene.value("format", "") != std::string("semslam-scene-v1")) {
      throw SchemaMismatch("unsupported scene format in " + dir);
    }
    data.spec = spec_from_json(scene.at("spec"));
    for (const auto& sig : scene.at("signatures")) {
      std::vector<BinaryDescriptor> s;
      for (const auto& hex : sig) {
        s.push_back(BinaryDescriptor::from_hex(hex.get<std::string>()));
      }
      data.signatures.push_back(std::move(s));
    }
  }

  std::ifstream in(dir + "/frames.jsonl", std::ios::binary);
  if (!in) throw IoError("cannot open " + dir + "/frames.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(std::string("invalid frame record: ") + e.what());
    }
    FrameRecord frame;
    frame.frame = j.at("frame").get<std::int64_t>();
    frame.true_pose = pose_from_json(j.at("pose"));
    frame.odometry = pose_from_json(j.at("odometry"));
    for (const auto& d : j.at("detections")) {
      Detection det;
      const auto box = d.at("bbox").get<std::vector<double>>();
      if (box.size() != 4) throw DataError("malformed bbox");
      det.measurement.bbox = {box[0], box[1], box[2], box[3]};
      if (!det.measurement.bbox.valid()) throw DataError("degenerate bbox");
      det.measurement.class_id = d.at("class").get<int>();
      det.measurement.score = d.at("score").get<double>();
      for (const auto& hex : d.at("descriptors")) {
        det.measurement.descriptors.push_back(
            BinaryDescriptor::from_hex(hex.get<std::string>()));
      }
      det.gt_object = d.at("gt").get<std::int64_t>();
      frame.detections.push_back(std::move(det));
    }
    data.frames.push_back(std::move(frame));
  }
  return data;
}

void save_association_log(const std::string& path,
                          const std::vector<AssociationLogRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "frame,measurement,assigned,score\n";
  char buf[32];
  for (const AssociationLogRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", row.score);
    out << row.frame << ',' << row.measurement << ',' << row.assigned << ','
        << buf << '\n';
  }
}

std::vector<AssociationLogRow> load_association_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<AssociationLogRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    AssociationLogRow row;
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    row.frame = std::stoll(field);
    std::getline(ss, field, ',');
    row.measurement = std::stoi(field);
    std::getline(ss, field, ',');
    row.assigned = std::stoll(field);
    std::getline(ss, field, ',');
    row.score = std::stod(field);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace semslam
