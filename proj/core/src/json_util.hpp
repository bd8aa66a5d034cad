#pragma once

// Internal JSON helpers shared by the IO translation units; not installed.

#include <json.hpp>

#include "semslam/errors.hpp"
#include "semslam/geometry.hpp"
#include "semslam/se3.hpp"

namespace semslam::detail {

inline nlohmann::ordered_json pose_to_json(const Pose& pose) {
  nlohmann::ordered_json j;
  std::vector<double> r(9);
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      r[static_cast<std::size_t>(3 * i + k)] = pose.rotation(i, k);
    }
  }
  j["r"] = r;
  j["t"] = std::vector<double>{pose.translation.x(), pose.translation.y(),
                               pose.translation.z()};
  return j;
}

inline Pose pose_from_json(const nlohmann::json& j) {
  Pose pose;
  const auto r = j.at("r").get<std::vector<double>>();
  const auto t = j.at("t").get<std::vector<double>>();
  if (r.size() != 9 || t.size() != 3) throw DataError("malformed pose");
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      pose.rotation(i, k) = r[static_cast<std::size_t>(3 * i + k)];
    }
    pose.translation[i] = t[static_cast<std::size_t>(i)];
  }
  if (!pose.is_orthonormal(1e-6)) {
    throw DataError("pose rotation is not orthonormal");
  }
  return pose;
}

inline nlohmann::ordered_json ellipsoid_to_json(const Ellipsoid& e) {
  nlohmann::ordered_json j;
  std::vector<double> r(9);
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      r[static_cast<std::size_t>(3 * i + k)] = e.rotation(i, k);
    }
  }
  j["r"] = r;
  j["center"] = std::vector<double>{e.center.x(), e.center.y(), e.center.z()};
  j["axes"] = std::vector<double>{e.semi_axes.x(), e.semi_axes.y(),
                                  e.semi_axes.z()};
  return j;
}

inline Ellipsoid ellipsoid_from_json(const nlohmann::json& j) {
  Ellipsoid e;
  const auto r = j.at("r").get<std::vector<double>>();
  const auto c = j.at("center").get<std::vector<double>>();
  const auto a = j.at("axes").get<std::vector<double>>();
  if (r.size() != 9 || c.size() != 3 || a.size() != 3) {
    throw DataError("malformed ellipsoid");
  }
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      e.rotation(i, k) = r[static_cast<std::size_t>(3 * i + k)];
    }
    e.center[i] = c[static_cast<std::size_t>(i)];
    e.semi_axes[i] = a[static_cast<std::size_t>(i)];
  }
  return e;
}

inline nlohmann::ordered_json intrinsics_to_json(const CameraIntrinsics& k) {
  nlohmann::ordered_json j;
  j["fx"] = k.fx;
  j["fy"] = k.fy;
  j["cx"] = k.cx;
  j["cy"] = k.cy;
  j["width"] = k.width;
  j["height"] = k.height;
  return j;
}

inline CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  if (!k.valid()) throw DataError("invalid camera intrinsics");
  return k;
}

}  // namespace semslam::detail
