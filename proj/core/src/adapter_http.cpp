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

#include <httplib.h>

#include <cstdlib>
#include <regex>

#include "filmflow/crew.hpp"
#include "filmflow/error.hpp"

namespace filmflow {

Transport http_transport(const EndpointConfig& endpoint) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch match;
  if (!std::regex_match(endpoint.address, match, kUrl)) {
    throw Error(ErrorCode::kInvalidParams, "bad adapter endpoint '" + endpoint.address + "'");
  }
  std::string base = match[1].str();
  std::string path = match[2].matched ? match[2].str() : "/";
  std::string token;
  if (!endpoint.credentials_ref.empty()) {
    if (const char* value = std::getenv(endpoint.credentials_ref.c_str())) token = value;
  }
  return [base, path, token](const nlohmann::json& request) {
    httplib::Client client(base);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    auto res = client.Post(path, headers, request.dump(), "application/json");
    if (!res) {
      throw AdapterError("no response from " + base + ": " + httplib::to_string(res.error()), true);
    }
    if (res->status >= 500) {
      throw AdapterError("service returned " + std::to_string(res->status), true);
    }
    auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded()) throw AdapterError("service returned malformed JSON", false);
    if (res->status >= 400 && !body.contains("error")) {
      throw AdapterError("service returned " + std::to_string(res->status), false);
    }
    return body;
  };
}

}  // namespace filmflow
