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

#pragma once

#include <filesystem>
#include <string_view>

#include <nlohmann/json.hpp>

#include "filmflow/graph.hpp"

namespace filmflow {

// Pipeline definition files come in two spellings of the same document:
// JSON (*.json) and YAML (*.yaml, *.yml).
//
//   name: film
//   emotion_rules: [{keyword: dare, emotion: anger}]
//   events:
//     - {id: script, role: scriptwriter, params: {scenes: "3"}, deps: [], duration: 10}
//
// Param values may be written as scalars of any type; they are stored as
// strings.
PipelineDef load_pipeline(const std::filesystem::path& path);
PipelineDef parse_pipeline_json(std::string_view text);
PipelineDef parse_pipeline_yaml(std::string_view text);

void to_json(nlohmann::json& j, const PipelineDef& def);
void from_json(const nlohmann::json& j, PipelineDef& def);

// The bundled film-production preset, as shipped in presets/film.json.
std::string_view film_preset_document();

}  // namespace filmflow
