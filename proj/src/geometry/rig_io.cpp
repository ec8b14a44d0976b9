//  Copyright (c) 2026 The mvattn Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mvattn/error.hpp"
#include "mvattn/geometry.hpp"

namespace mvattn::geometry {

using nlohmann::json;

std::string rig_to_json(const CanonicalRig& rig) {
  json views = json::array();
  for (const CameraModel& v : rig.views()) {
    json jv{{"kind", to_string(v.kind)},
            {"azimuth_deg", normalize_azimuth(v.azimuth_deg)},
            {"elevation_deg", v.elevation_deg}};
    if (v.kind == CameraKind::perspective) jv["focal_mm"] = v.focal_mm;
    jv["distance"] = v.distance;
    views.push_back(std::move(jv));
  }
  json doc{{"reference_azimuth_deg", rig.reference_azimuth_deg()},
           {"ortho_scale", rig.ortho_scale()},
           {"views", std::move(views)}};
  return doc.dump(2) + "\n";
}

CanonicalRig rig_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("rig file is not valid JSON: ") + e.what());
  }
  try {
    const double beta = doc.at("reference_azimuth_deg").get<double>();
    const double scale = doc.at("ortho_scale").get<double>();
    std::vector<CameraModel> views;
    for (const json& jv : doc.at("views")) {
      CameraModel cam;
      cam.kind = camera_kind_from_string(jv.at("kind").get<std::string>());
      cam.azimuth_deg = jv.at("azimuth_deg").get<double>();
      cam.elevation_deg = jv.at("elevation_deg").get<double>();
      if (jv.contains("distance")) cam.distance = jv.at("distance").get<double>();
      if (cam.kind == CameraKind::perspective) {
        cam.focal_mm = jv.at("focal_mm").get<double>();
      } else {
        cam.ortho_scale = scale;
      }
      views.push_back(cam);
    }
    return CanonicalRig::from_views(beta, scale, std::move(views));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed rig file: ") + e.what());
  }
}

void save_rig(const CanonicalRig& rig, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << rig_to_json(rig);
  if (!out) throw IoError("failed writing '" + path + "'");
}

CanonicalRig load_rig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return rig_from_json(ss.str());
}

}  // namespace mvattn::geometry
