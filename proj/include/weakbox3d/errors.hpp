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

#include <stdexcept>
#include <string>
#include <string_view>

namespace weakbox3d {

/// Why an object produced no pseudo-label. Never fatal for a frame.
enum class SkipReason {
  kEmptyFrustum,
  kAllNoise,
  kTooFewPoints,
  kNoDims,
  kDegenerateOrientation,
  kInvalidDetection,
};

constexpr std::string_view to_string(SkipReason r) {
  switch (r) {
    case SkipReason::kEmptyFrustum: return "empty-frustum";
    case SkipReason::kAllNoise: return "all-noise";
    case SkipReason::kTooFewPoints: return "too-few-points";
    case SkipReason::kNoDims: return "no-dims";
    case SkipReason::kDegenerateOrientation: return "degenerate-orientation";
    case SkipReason::kInvalidDetection: return "invalid-detection";
  }
  return "unknown";
}

class SkipError : public std::runtime_error {
 public:
  SkipError(SkipReason reason, const std::string& what)
      : std::runtime_error(what), reason_(reason) {}
  SkipReason reason() const { return reason_; }

 private:
  SkipReason reason_;
};

/// Malformed input files; carries the offending line when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, int line, const std::string& what)
      : std::runtime_error(path + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " +
                           what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace weakbox3d
