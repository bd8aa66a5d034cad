#include "semslam/config.hpp"

#include <fstream>
#include <sstream>

#include "semslam/errors.hpp"

namespace semslam {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw DataError("config key '" + key + "' expects a boolean, got '" + v +
                  "'");
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) +
                      " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "T") {
        c.keyframe_interval = std::stoi(value);
      } else if (key == "min_obs") {
        c.min_obs = std::stoi(value);
      } else if (key == "min_bbox_area") {
        c.min_bbox_area = std::stod(value);
      } else if (key == "min_descriptors") {
        c.min_descriptors = std::stoi(value);
      } else if (key == "theta_assoc") {
        c.theta_assoc = std::stod(value);
      } else if (key == "sigma_px") {
        c.sigma_px = std::stod(value);
      } else if (key == "sigma_odo_rot") {
        c.sigma_odo_rot = std::stod(value);
      } else if (key == "sigma_odo_trans") {
        c.sigma_odo_trans = std::stod(value);
      } else if (key == "lm_max_iters") {
        c.lm_max_iterations = std::stoi(value);
      } else if (key == "lm_lambda0") {
        c.lm_initial_lambda = std::stod(value);
      } else if (key == "ba_enabled") {
        c.ba_enabled = parse_bool(value, key);
      } else if (key == "ba_sync") {
        c.ba_sync = parse_bool(value, key);
      } else {
        throw DataError("unknown config key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw DataError("config key '" + key + "' has invalid value '" + value +
                      "'");
    }
  }
  if (c.keyframe_interval < 1) throw DataError("T must be >= 1");
  if (c.min_obs < 1) throw DataError("min_obs must be >= 1");
  if (c.sigma_px <= 0 || c.sigma_odo_rot <= 0 || c.sigma_odo_trans <= 0) {
    throw DataError("noise sigmas must be positive");
  }
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_string(const PipelineConfig& c) {
  std::ostringstream out;
  out << "T = " << c.keyframe_interval << '\n';
  out << "min_obs = " << c.min_obs << '\n';
  out << "min_bbox_area = " << c.min_bbox_area << '\n';
  out << "min_descriptors = " << c.min_descriptors << '\n';
  out << "theta_assoc = " << c.theta_assoc << '\n';
  out << "sigma_px = " << c.sigma_px << '\n';
  out << "sigma_odo_rot = " << c.sigma_odo_rot << '\n';
  out << "sigma_odo_trans = " << c.sigma_odo_trans << '\n';
  out << "lm_max_iters = " << c.lm_max_iterations << '\n';
  out << "lm_lambda0 = " << c.lm_initial_lambda << '\n';
  out << "ba_enabled = " << (c.ba_enabled ? "true" : "false") << '\n';
  out << "ba_sync = " << (c.ba_sync ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace semslam
