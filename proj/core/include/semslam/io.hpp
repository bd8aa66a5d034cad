#pragma once

#include <string>
#include <vector>

#include "semslam/map.hpp"
#include "semslam/simulator.hpp"

namespace semslam {

/// Dataset directory layout: `scene.json` holds the spec and ground-truth
/// world, `frames.jsonl` one FrameRecord per line.
void save_dataset(const std::string& dir, const Dataset& data);
Dataset load_dataset(const std::string& dir);

/// Map snapshot as a single JSON document, schema `semslam-map-v1`.
/// Doubles round-trip exactly, so save -> load -> save is byte-identical.
void save_map(const std::string& path, const MapDatabase& map);
MapDatabase load_map(const std::string& path);

/// Per-measurement association log row (one per measurement per frame).
struct AssociationLogRow {
  std::int64_t frame = 0;
  int measurement = 0;
  ObjectId assigned = kNoObject;
  double score = 0.0;
};

void save_association_log(const std::string& path,
                          const std::vector<AssociationLogRow>& rows);
std::vector<AssociationLogRow> load_association_log(const std::string& path);

}  // namespace semslam
