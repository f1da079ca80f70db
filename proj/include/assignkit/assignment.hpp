// Copyright 2026 The assignkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "assignkit/error.hpp"

namespace assignkit {

// Per-prediction label. Non-negative values index a ground truth.
using Label = std::int32_t;
inline constexpr Label kBackground = -1;
// Excluded from both positive and background losses (crowd overlap).
inline constexpr Label kIgnore = -2;

inline bool IsPositive(Label l) { return l >= 0; }

/// One label per prediction.
struct Assignment {
  std::vector<Label> labels;

  Assignment() = default;
  explicit Assignment(std::size_t num_predictions)
      : labels(num_predictions, kBackground) {}
  explicit Assignment(std::vector<Label> l) : labels(std::move(l)) {}

  std::size_t size() const { return labels.size(); }
  Label operator[](std::size_t i) const { return labels[i]; }
  Label& operator[](std::size_t i) { return labels[i]; }

  std::size_t NumPositives() const {
    std::size_t n = 0;
    for (Label l : labels) n += IsPositive(l) ? 1 : 0;
    return n;
  }

  // Positives per ground truth index.
  std::vector<std::int64_t> CountsPerGt(std::size_t num_gts) const {
    std::vector<std::int64_t> counts(num_gts, 0);
    for (Label l : labels) {
      if (IsPositive(l)) {
        if (static_cast<std::size_t>(l) >= num_gts) {
          throw InvalidArgument("label " + std::to_string(l) +
                                " out of range for " +
                                std::to_string(num_gts) + " ground truths");
        }
        ++counts[static_cast<std::size_t>(l)];
      }
    }
    return counts;
  }

  // Throws unless every label is background, ignore, or a gt index below
  // `num_gts`.
  void Validate(std::size_t num_gts) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const Label l = labels[i];
      if (l == kBackground || l == kIgnore) continue;
      if (l < 0 || static_cast<std::size_t>(l) >= num_gts) {
        throw InvalidArgument("invalid assignment: prediction " +
                              std::to_string(i) + " has label " +
                              std::to_string(l) + " with " +
                              std::to_string(num_gts) + " ground truths");
      }
    }
  }

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

}  // namespace assignkit
