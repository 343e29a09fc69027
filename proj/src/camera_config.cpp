// Copyright 2026 The wildcensus Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <set>
#include <sstream>

#include "wildcensus/geometry.hpp"

namespace wildcensus {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& value, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw ValidationError("camera config: '" + value + "' is not a number", line);
  }
  return v;
}

void finish_section(CameraRegistry& out, const std::string& name, const CameraIntrinsicsd& intr,
                    const std::set<std::string>& seen, std::size_t line) {
  if (name.empty()) return;
  if (seen.size() != 5) {
    throw ValidationError("camera config: section [" + name + "] is missing keys", line);
  }
  try {
    validate(intr);
  } catch (const InvalidInput& e) {
    throw ValidationError("camera config: section [" + name + "]: " + e.what(), line);
  }
  out[name] = intr;
}

}  // namespace

CameraRegistry parse_camera_config(std::istream& in) {
  CameraRegistry out;
  std::string section;
  CameraIntrinsicsd intr;
  std::set<std::string> seen;
  std::size_t section_line = 0;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cut = raw.find_first_of("#;");
    const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError("camera config: malformed section header", line_no);
      finish_section(out, section, intr, seen, section_line);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ValidationError("camera config: empty section name", line_no);
      if (out.count(section)) throw ValidationError("camera config: duplicate section [" + section + "]", line_no);
      intr = {};
      seen.clear();
      section_line = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("camera config: expected key = value", line_no);
    if (section.empty()) throw ValidationError("camera config: key outside a section", line_no);
    const std::string key = trim(line.substr(0, eq));
    const double v = parse_number(trim(line.substr(eq + 1)), line_no);
    if (key == "sensor_width_mm") {
      intr.sensor_width_mm = v;
    } else if (key == "sensor_height_mm") {
      intr.sensor_height_mm = v;
    } else if (key == "focal_mm") {
      intr.focal_length_mm = v;
    } else if (key == "image_width_px" || key == "image_height_px") {
      if (v != std::floor(v)) throw ValidationError("camera config: " + key + " must be an integer", line_no);
      (key == "image_width_px" ? intr.image_width_px : intr.image_height_px) = static_cast<int>(v);
    } else {
      throw ValidationError("camera config: unknown key '" + key + "'", line_no);
    }
    seen.insert(key);
  }
  finish_section(out, section, intr, seen, section_line);
  return out;
}

CameraRegistry load_camera_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open camera config '" + path + "'");
  return parse_camera_config(in);
}

const CameraRegistry& default_cameras() {
  // DJI Phantom 4 Pro: 1" 20 MP sensor, 8.8 mm (24 mm equivalent) lens.
  // Manufacturer specifications; the diagonal FOV works out to 84 degrees.
  static const CameraRegistry cameras = {
      {"phantom4pro", CameraIntrinsicsd{13.2, 8.8, 8.8, 5472, 3648}},
  };
  return cameras;
}

const CameraIntrinsicsd& find_camera(const CameraRegistry& cameras, const std::string& camera_id) {
  const auto it = cameras.find(camera_id);
  if (it == cameras.end()) throw ValidationError("unknown camera_id '" + camera_id + "'");
  return it->second;
}

}  // namespace wildcensus
