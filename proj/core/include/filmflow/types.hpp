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

#include <cstdint>
#include <map>
#include <string>

namespace filmflow {

// Event identifiers are short string tokens ("script", "dialogue", ...).
using EventId = std::string;

// Time on the run clock. Virtual runs count abstract ticks; wall-clock runs
// count milliseconds since run start.
using Ticks = std::int64_t;

using Params = std::map<std::string, std::string>;
using DurationMap = std::map<EventId, Ticks>;

inline constexpr std::uint64_t kDefaultSeed = 42;

}  // namespace filmflow
