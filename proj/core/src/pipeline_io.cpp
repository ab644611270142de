// Copyright 2026 The Filmflow Authors
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

#include "filmflow/pipeline_io.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

#include "filmflow/error.hpp"
#include "film_preset_document.hpp"

namespace filmflow {

namespace {

std::string scalar_text(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number() || value.is_boolean()) return value.dump();
  throw Error(ErrorCode::kInvalidPipeline, "param values must be scalars");
}

// YAML has no schema, so scalars are typed by shape: integers and booleans
// become JSON numbers/booleans, everything else a string.
nlohmann::json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar: {
      const std::string& text = node.Scalar();
      if (node.Tag() == "!") return text;  // quoted
      std::int64_t integer = 0;
      if (YAML::convert<std::int64_t>::decode(node, integer) &&
          text.find_first_not_of("+-0123456789") == std::string::npos) {
        return integer;
      }
      if (text == "true" || text == "false") return text == "true";
      return text;
    }
    case YAML::NodeType::Sequence: {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& item : node) out.push_back(yaml_to_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      nlohmann::json out = nlohmann::json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return out;
    }
  }
  return nullptr;
}

}  // namespace

void to_json(nlohmann::json& j, const PipelineDef& def) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : def.events) {
    nlohmann::json item = {{"id", e.id},
                           {"role", e.role},
                           {"params", e.params},
                           {"deps", e.dependencies}};
    if (e.duration) item["duration"] = *e.duration;
    events.push_back(std::move(item));
  }
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : def.emotion_rules) {
    rules.push_back({{"keyword", r.keyword}, {"emotion", r.emotion}});
  }
  j = {{"name", def.name}, {"events", events}, {"emotion_rules", rules}};
}

void from_json(const nlohmann::json& j, PipelineDef& def) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidPipeline, "pipeline must be an object");
  if (!j.contains("events") || !j.at("events").is_array()) {
    throw Error(ErrorCode::kInvalidPipeline, "pipeline needs an events list");
  }
  def = {};
  def.name = j.value("name", std::string{});
  for (const auto& item : j.at("events")) {
    if (!item.is_object() || !item.contains("id")) {
      throw Error(ErrorCode::kInvalidPipeline, "every event needs an id");
    }
    EventSpec e;
    e.id = scalar_text(item.at("id"));
    e.role = item.value("role", std::string{});
    if (auto it = item.find("params"); it != item.end() && !it->is_null()) {
      if (!it->is_object()) throw Error(ErrorCode::kInvalidPipeline, "params must be a map");
      for (const auto& [key, value] : it->items()) e.params[key] = scalar_text(value);
    }
    if (auto it = item.find("deps"); it != item.end() && !it->is_null()) {
      if (!it->is_array()) throw Error(ErrorCode::kInvalidPipeline, "deps must be a list");
      for (const auto& dep : *it) e.dependencies.insert(scalar_text(dep));
    }
    if (auto it = item.find("duration"); it != item.end() && !it->is_null()) {
      if (!it->is_number_integer()) {
        throw Error(ErrorCode::kInvalidPipeline,
                    "duration of '" + e.id + "' must be an integer");
      }
      e.duration = it->get<Ticks>();
    }
    def.events.push_back(std::move(e));
  }
  if (auto it = j.find("emotion_rules"); it != j.end() && !it->is_null()) {
    for (const auto& r : *it) {
      def.emotion_rules.push_back(
          {r.at("keyword").get<std::string>(), r.at("emotion").get<std::string>()});
    }
  }
}

PipelineDef parse_pipeline_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidPipeline, std::string("malformed JSON: ") + e.what());
  }
  try {
    return doc.get<PipelineDef>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidPipeline, e.what());
  }
}

PipelineDef parse_pipeline_yaml(std::string_view text) {
  YAML::Node node;
  try {
    node = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kInvalidPipeline, std::string("malformed YAML: ") + e.what());
  }
  try {
    return yaml_to_json(node).get<PipelineDef>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidPipeline, e.what());
  }
}

PipelineDef load_pipeline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto ext = path.extension().string();
  if (ext == ".yaml" || ext == ".yml") return parse_pipeline_yaml(buffer.str());
  return parse_pipeline_json(buffer.str());
}

std::string_view film_preset_document() { return kFilmPresetDocument; }

}  // namespace filmflow
