// Copyright 2026 The weakbox3d Authors
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

#include <string>
#include <vector>

#include "weakbox3d/fitter.hpp"
#include "weakbox3d/pointcloud.hpp"

namespace weakbox3d {

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Throws ParseError on lines without '='.
std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin);

double parse_double(const KeyValue& kv, const std::string& origin);
long long parse_int(const KeyValue& kv, const std::string& origin);
bool parse_bool(const KeyValue& kv, const std::string& origin);

/// Every tunable of the extract + fit pipeline.
struct PipelineConfig {
  ExtractConfig extract;
  FitConfig fit;
  std::uint64_t seed = 0;
};

/// Applies `key = value` settings on top of `cfg`. Unknown keys throw ParseError.
/// Class dimensions use `dims.<Class> = h,w,l`.
void apply_config(PipelineConfig& cfg, const std::vector<KeyValue>& kvs, const std::string& origin);

/// Round-trippable `key = value` rendering of the merged configuration.
std::string format_config(const PipelineConfig& cfg);

}  // namespace weakbox3d
