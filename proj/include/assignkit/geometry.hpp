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
#include <span>
#include <sstream>
#include <string>

#include "assignkit/error.hpp"
#include "assignkit/matrix.hpp"

namespace assignkit {

/// Axis-aligned rectangle in absolute pixel coordinates, corner form.
///
/// Zero-area boxes are valid; inverted or non-finite boxes are not. Use
/// `Box::Make` (or `Box::FromXYWH`) to get a validated box; aggregate
/// initialization skips the check, which the hot loops rely on.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  static Box Make(double x1, double y1, double x2, double y2) {
    Box b{x1, y1, x2, y2};
    b.Validate();
    return b;
  }

  // COCO style (x, y, width, height).
  static Box FromXYWH(double x, double y, double w, double h) {
    return Make(x, y, x + w, y + h);
  }

  static Box FromCenter(double cx, double cy, double w, double h) {
    return Make(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0);
  }

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }

  bool valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2) && x1 <= x2 && y1 <= y2;
  }

  void Validate() const {
    if (!valid()) throw InvalidArgument("invalid box " + ToString());
  }

  Box Translated(double dx, double dy) const {
    return {x1 + dx, y1 + dy, x2 + dx, y2 + dy};
  }

  // Clip to [0, width] x [0, height]. The result may have zero area.
  Box Clipped(double width, double height) const {
    const double cx1 = std::clamp(x1, 0.0, width);
    const double cy1 = std::clamp(y1, 0.0, height);
    return {cx1, cy1, std::clamp(x2, cx1, width), std::clamp(y2, cy1, height)};
  }

  std::string ToString() const {
    std::ostringstream os;
    os << "(" << x1 << ", " << y1 << ", " << x2 << ", " << y2 << ")";
    return os.str();
  }

  friend bool operator==(const Box&, const Box&) = default;
};

inline double IntersectionArea(const Box& a, const Box& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

// Smallest box containing both inputs.
inline Box EnclosingBox(const Box& a, const Box& b) {
  return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
          std::max(a.y2, b.y2)};
}

/// Intersection over union in [0, 1]. Returns 0 when the union is empty,
/// which covers the case of two zero-area boxes.
inline double Iou(const Box& a, const Box& b) {
  const double inter = IntersectionArea(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

/// Generalized IoU in [-1, 1]: IoU minus the fraction of the enclosing box
/// not covered by the union. Throws `Undefined` when both boxes have zero
/// area.
inline double Giou(const Box& a, const Box& b) {
  const double inter = IntersectionArea(a, b);
  const double uni = a.area() + b.area() - inter;
  if (a.area() <= 0.0 && b.area() <= 0.0) {
    throw Undefined("giou of two zero-area boxes " + a.ToString() + " and " +
                    b.ToString());
  }
  const double hull = EnclosingBox(a, b).area();
  return inter / uni - (hull - uni) / hull;
}

// Entry (i, j) is Iou(a[i], b[j]).
inline MatrixD PairwiseIou(std::span<const Box> a, std::span<const Box> b) {
  MatrixD out(a.size(), b.size());
  std::vector<double> area_b(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) area_b[j] = b[j].area();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Box& ai = a[i];
    const double area_a = ai.area();
    auto row = out.row(i);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double inter = IntersectionArea(ai, b[j]);
      const double uni = area_a + area_b[j] - inter;
      row[j] = uni <= 0.0 ? 0.0 : inter / uni;
    }
  }
  return out;
}

}  // namespace assignkit
