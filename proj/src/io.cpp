#include "cfal/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cfal {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

namespace {

Eigen::VectorXd vector_from(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw std::invalid_argument(std::string("missing array '") + key + "'");
  }
  const auto values = j[key].get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string world_to_json(const FiniteWorld& world, const HypothesisClass& cls) {
  json j;
  j["mass"] = to_std(world.mass());
  j["label_prob"] = to_std(world.label_prob());
  j["q0"] = to_std(world.q0());
  json rows = json::array();
  for (Index h = 0; h < cls.size(); ++h) {
    std::vector<int> row(static_cast<std::size_t>(cls.instances()));
    for (Index x = 0; x < cls.instances(); ++x) row[static_cast<std::size_t>(x)] = cls.predict(h, x);
    rows.push_back(row);
  }
  j["hypotheses"] = rows;
  return j.dump(2);
}

ParsedWorld world_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("world JSON: ") + e.what());
  }
  FiniteWorld world(vector_from(j, "mass"), vector_from(j, "label_prob"), vector_from(j, "q0"));
  if (!j.contains("hypotheses") || !j["hypotheses"].is_array()) {
    throw std::invalid_argument("missing array 'hypotheses'");
  }
  const auto rows = j["hypotheses"].get<std::vector<std::vector<int>>>();
  if (rows.empty()) throw std::invalid_argument("hypothesis class is empty");
  LabelTable table(static_cast<Index>(rows.size()), world.size());
  for (std::size_t h = 0; h < rows.size(); ++h) {
    if (static_cast<Index>(rows[h].size()) != world.size()) {
      throw std::invalid_argument("hypothesis length does not match the world");
    }
    for (std::size_t x = 0; x < rows[h].size(); ++x)
      table(static_cast<Index>(h), static_cast<Index>(x)) = rows[h][x];
  }
  return {std::move(world), HypothesisClass(std::move(table))};
}

std::string samples_to_csv(const std::vector<Sample>& samples) {
  std::string out = "epoch,x,z,y\n";
  for (const auto& s : samples) {
    out += std::to_string(s.epoch) + ',' + std::to_string(s.x) + ',' + (s.z ? "1" : "0") + ',';
    if (s.z) out += std::to_string(s.y);
    out += '\n';
  }
  return out;
}

std::vector<Sample> samples_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Sample> out;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("epoch", 0) == 0) continue;
    }
    std::istringstream row(line);
    std::string f[4];
    for (int i = 0; i < 4; ++i) std::getline(row, f[i], ',');
    Sample s;
    try {
      s.epoch = std::stoi(f[0]);
      s.x = std::stol(f[1]);
      s.z = std::stoi(f[2]) != 0;
      s.y = f[3].empty() ? 0 : std::stoi(f[3]);
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed sample row '" + line + "'");
    }
    if (s.z != (s.y != 0) || (s.z && std::abs(s.y) != 1)) {
      throw std::invalid_argument("label must be +-1 exactly when z = 1: '" + line + "'");
    }
    out.push_back(s);
  }
  return out;
}

std::string weights_to_json(const Eigen::VectorXd& weights) {
  return json{{"weights", to_std(weights)}}.dump();
}

Eigen::VectorXd weights_from_json(const std::string& text) {
  return vector_from(json::parse(text), "weights");
}

}  // namespace cfal
