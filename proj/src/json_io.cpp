#include "gpmm/json_io.hpp"

#include <fstream>

#include <json.hpp>

#include "gpmm/error.hpp"

namespace gpmm {

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open JSON file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

Vec3 parse_triple(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3)
    throw Error(path + ": expected a [x,y,z] triple");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

LandmarkSet load_landmarks(const std::string& path) {
  const nlohmann::json j = load_json(path);
  if (!j.is_array()) throw Error(path + ": expected a JSON array of landmarks");
  LandmarkSet set;
  for (const auto& item : j) {
    if (!item.contains("id") || !item.contains("coordinates"))
      throw Error(path + ": landmark entries need 'id' and 'coordinates'");
    try {
      set.add(item["id"].get<std::string>(), parse_triple(item["coordinates"], path));
    } catch (const Error& e) {
      throw Error(path + ": " + e.what());
    }
  }
  return set;
}

void save_landmarks(const LandmarkSet& landmarks, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& entry : landmarks.entries) {
    j.push_back({{"id", entry.id},
                 {"coordinates", {entry.point[0], entry.point[1], entry.point[2]}}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  out << j.dump(2) << "\n";
}

Polyline3 load_polyline(const std::string& path) {
  const nlohmann::json j = load_json(path);
  if (!j.is_array()) throw Error(path + ": expected a JSON array of [x,y,z] triples");
  Polyline3 line;
  for (const auto& item : j) line.push_back(parse_triple(item, path));
  if (line.size() < 2) throw Error(path + ": polyline needs at least 2 points");
  return line;
}

void save_polyline(const Polyline3& line, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const Vec3& p : line) j.push_back({p[0], p[1], p[2]});
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  out << j.dump(2) << "\n";
}

namespace {

IndicatorMapData parse_indicator(const nlohmann::json& j, const std::string& path) {
  if (!j.contains("level") || !j.contains("weights"))
    throw Error(path + ": indicator maps need 'level' and 'weights'");
  IndicatorMapData data;
  data.level = j["level"].get<int>();
  const auto& w = j["weights"];
  if (!w.is_array()) throw Error(path + ": 'weights' must be an array");
  data.weights.resize(static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double value = w[i].get<double>();
    data.weights[static_cast<Eigen::Index>(i)] = std::min(1.0, std::max(0.0, value));
  }
  return data;
}

}  // namespace

std::vector<IndicatorMapData> load_indicator_maps(const std::string& path) {
  const nlohmann::json j = load_json(path);
  std::vector<IndicatorMapData> maps;
  if (j.is_array()) {
    for (const auto& item : j) maps.push_back(parse_indicator(item, path));
  } else {
    maps.push_back(parse_indicator(j, path));
  }
  return maps;
}

}  // namespace gpmm
