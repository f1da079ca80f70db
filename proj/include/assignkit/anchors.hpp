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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "assignkit/error.hpp"
#include "assignkit/geometry.hpp"

namespace assignkit {

struct FeatureLevel {
  int index = 0;   // 0 is the coarsest level and carries the largest boxes.
  int stride = 0;  // px
};

/// Image size plus the feature pyramid the initial boxes are laid out on.
struct AnchorGridSpec {
  double image_width = 0.0;
  double image_height = 0.0;
  std::vector<FeatureLevel> levels;

  // Four levels, l = 0..3 on strides 64, 32, 16, 8.
  static AnchorGridSpec Default(double width, double height) {
    return {width, height, {{0, 64}, {1, 32}, {2, 16}, {3, 8}}};
  }

  // Pairs strides with level indices 0, 1, ... from coarsest to finest.
  static AnchorGridSpec FromStrides(double width, double height,
                                    std::vector<int> strides) {
    std::sort(strides.begin(), strides.end(), std::greater<>());
    AnchorGridSpec spec{width, height, {}};
    for (std::size_t i = 0; i < strides.size(); ++i) {
      spec.levels.push_back({static_cast<int>(i), strides[i]});
    }
    return spec;
  }

  void Validate() const {
    if (!(image_width > 0.0) || !(image_height > 0.0) ||
        !std::isfinite(image_width) || !std::isfinite(image_height)) {
      throw InvalidArgument("anchor grid needs a positive image size");
    }
    if (levels.empty()) throw InvalidArgument("anchor grid needs at least one level");
    std::set<int> indices;
    std::set<int> strides;
    for (const FeatureLevel& level : levels) {
      if (level.stride <= 0) throw InvalidArgument("stride must be positive");
      if (level.index < 0) throw InvalidArgument("level index must be >= 0");
      if (!indices.insert(level.index).second) {
        throw InvalidArgument("duplicate level index");
      }
      if (!strides.insert(level.stride).second) {
        throw InvalidArgument("duplicate stride");
      }
    }
  }

  std::int64_t cols(const FeatureLevel& level) const {
    return static_cast<std::int64_t>(std::ceil(image_width / level.stride));
  }
  std::int64_t rows(const FeatureLevel& level) const {
    return static_cast<std::int64_t>(std::ceil(image_height / level.stride));
  }

  std::int64_t AnchorCount() const {
    std::int64_t n = 0;
    for (const FeatureLevel& level : levels) n += rows(level) * cols(level);
    return n;
  }
};

struct Anchor {
  Box box;
  int level = 0;
  std::int64_t row = 0;
  std::int64_t col = 0;
  double center_x = 0.0;
  double center_y = 0.0;
};

/// Constant-size initial boxes, one per grid cell per level. A level-l box
/// is 0.1 * 2^-l of the image in each dimension and is centered on its
/// cell. Boxes are not clipped to the image.
inline std::vector<Anchor> GenerateInitialBoxes(const AnchorGridSpec& spec) {
  spec.Validate();
  std::vector<Anchor> anchors;
  anchors.reserve(static_cast<std::size_t>(spec.AnchorCount()));
  for (const FeatureLevel& level : spec.levels) {
    const double scale = 0.1 * std::ldexp(1.0, -level.index);
    const double w = scale * spec.image_width;
    const double h = scale * spec.image_height;
    const std::int64_t rows = spec.rows(level);
    const std::int64_t cols = spec.cols(level);
    for (std::int64_t r = 0; r < rows; ++r) {
      const double cy = (static_cast<double>(r) + 0.5) * level.stride;
      for (std::int64_t c = 0; c < cols; ++c) {
        const double cx = (static_cast<double>(c) + 0.5) * level.stride;
        Anchor a;
        a.box = {cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0};
        a.level = level.index;
        a.row = r;
        a.col = c;
        a.center_x = cx;
        a.center_y = cy;
        anchors.push_back(a);
      }
    }
  }
  return anchors;
}

inline std::vector<Box> AnchorBoxes(const std::vector<Anchor>& anchors) {
  std::vector<Box> boxes;
  boxes.reserve(anchors.size());
  for (const Anchor& a : anchors) boxes.push_back(a.box);
  return boxes;
}

}  // namespace assignkit
