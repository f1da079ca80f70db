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
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "assignkit/error.hpp"
#include "assignkit/geometry.hpp"

namespace assignkit {

struct ScoredBox {
  Box box;
  double score = 0.0;
  int class_id = 0;
  std::optional<int> level;
};

namespace detail {

// Indices ordered by descending score, ascending index on ties.
inline std::vector<std::size_t> ScoreOrder(std::span<const ScoredBox> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].score > dets[b].score;
                   });
  return order;
}

// Largest center offset, as a multiple of the box's own extent, at which
// another box can still have IoU > t with it. The overlap width is at most
// (w_a + w_b) / 2 - |dx| and must exceed t * max(w_a, w_b); maximizing over
// w_b gives (1 - t) * w_a for t >= 1/2 and (1/t - 1) / 2 * w_a below.
inline double CenterReach(double t) {
  return t >= 0.5 ? 1.0 - t : 0.5 * (1.0 / t - 1.0);
}

// Uniform grid of boxes bucketed by center, stored row-major so that a
// horizontal run of cells is one contiguous range of `members()`.
class CenterGrid {
 public:
  CenterGrid(const std::vector<double>& cx, const std::vector<double>& cy, double cell) {
    const std::size_t n = cx.size();
    if (n == 0) return;
    const auto [min_x, max_x] = std::minmax_element(cx.begin(), cx.end());
    const auto [min_y, max_y] = std::minmax_element(cy.begin(), cy.end());
    const double span_x = *max_x - *min_x;
    const double span_y = *max_y - *min_y;
    if (!std::isfinite(span_x) || !std::isfinite(span_y)) return;
    origin_x_ = *min_x;
    origin_y_ = *min_y;
    cell_ = std::max(cell, 1e-9);
    const double max_cells = 4.0 * static_cast<double>(n) + 16.0;
    while ((span_x / cell_ + 1.0) * (span_y / cell_ + 1.0) > max_cells) cell_ *= 2.0;
    cols_ = static_cast<std::size_t>(span_x / cell_) + 1;
    rows_ = static_cast<std::size_t>(span_y / cell_) + 1;

    std::vector<std::size_t> cell_of(n);
    start_.assign(cols_ * rows_ + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      cell_of[i] = Row(cy[i]) * cols_ + Col(cx[i]);
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    members_.resize(n);
    for (std::size_t i = 0; i < n; ++i) members_[fill[cell_of[i]]++] = i;
    usable_ = true;
  }

  bool usable() const { return usable_; }
  const std::vector<std::size_t>& members() const { return members_; }

  // Calls fn(first, last) for each run of `members()` covering every center
  // within [x0, x1] x [y0, y1].
  template <typename F>
  void ForEachRange(double x0, double y0, double x1, double y1, F&& fn) const {
    const std::size_t c0 = Col(x0);
    const std::size_t c1 = Col(x1);
    for (std::size_t row = Row(y0), r1 = Row(y1); row <= r1; ++row) {
      fn(start_[row * cols_ + c0], start_[row * cols_ + c1 + 1]);
    }
  }

 private:
  static std::size_t Bin(double v, double origin, double cell, std::size_t count) {
    const double c = std::floor((v - origin) / cell);
    if (!(c > 0.0)) return 0;
    if (c >= static_cast<double>(count - 1)) return count - 1;
    return static_cast<std::size_t>(c);
  }
  std::size_t Col(double x) const { return Bin(x, origin_x_, cell_, cols_); }
  std::size_t Row(double y) const { return Bin(y, origin_y_, cell_, rows_); }

  bool usable_ = false;
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  double cell_ = 1.0;
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> members_;
};

inline void CheckScores(std::span<const ScoredBox> dets) {
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!std::isfinite(dets[i].score)) {
      throw InvalidArgument("detection " + std::to_string(i) +
                            " has a non-finite score");
    }
  }
}

}  // namespace detail

/// Greedy non-maximum suppression. Walks boxes by descending score (lower
/// index first on ties), keeps each surviving box and suppresses every
/// remaining box whose IoU with it is strictly above `iou_threshold`. When
/// `class_aware` is set only boxes of the same class suppress each other.
///
/// Returns the kept indices in descending score order.
inline std::vector<std::size_t> Nms(std::span<const ScoredBox> dets,
                                    double iou_threshold, bool class_aware) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw InvalidArgument("nms threshold must lie in (0, 1]");
  }
  detail::CheckScores(dets);
  const std::vector<std::size_t> order = detail::ScoreOrder(dets);
  const std::size_t n = order.size();

  // Structure of arrays in score order keeps the inner loop tight.
  std::vector<double> x1(n), y1(n), x2(n), y2(n), area(n);
  std::vector<int> cls(n);
  for (std::size_t r = 0; r < n; ++r) {
    const ScoredBox& d = dets[order[r]];
    x1[r] = d.box.x1;
    y1[r] = d.box.y1;
    x2[r] = d.box.x2;
    y2[r] = d.box.y2;
    area[r] = d.box.area();
    cls[r] = d.class_id;
  }

  std::vector<char> suppressed(n, 0);
  std::vector<std::size_t> keep;
  auto overlaps = [iou_threshold](double ax1, double ay1, double ax2, double ay2, double aarea,
                                  double bx1, double by1, double bx2, double by2, double barea) {
    const double w = std::min(ax2, bx2) - std::max(ax1, bx1);
    if (w <= 0.0) return false;
    const double h = std::min(ay2, by2) - std::max(ay1, by1);
    if (h <= 0.0) return false;
    const double inter = w * h;
    const double uni = aarea + barea - inter;
    return uni > 0.0 && inter / uni > iou_threshold;
  };
  auto try_suppress = [&](std::size_t r, std::size_t s) {
    if (suppressed[s]) return;
    if (class_aware && cls[s] != cls[r]) return;
    if (overlaps(x1[r], y1[r], x2[r], y2[r], area[r], x1[s], y1[s], x2[s], y2[s], area[s])) {
      suppressed[s] = 1;
    }
  };

  const bool small = n < 256;
  std::vector<double> cx(n), cy(n), side(n);
  for (std::size_t r = 0; r < n && !small; ++r) {
    cx[r] = 0.5 * (x1[r] + x2[r]);
    cy[r] = 0.5 * (y1[r] + y2[r]);
    side[r] = std::max(x2[r] - x1[r], y2[r] - y1[r]);
  }
  const double reach = detail::CenterReach(iou_threshold) * (1.0 + 1e-6);
  double cell = 1.0;
  if (!small) {
    std::vector<double> sorted = side;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2),
                     sorted.end());
    cell = std::max(sorted[n / 2] * reach, 1e-6);
  }
  const detail::CenterGrid grid = small ? detail::CenterGrid({}, {}, 1.0)
                                        : detail::CenterGrid(cx, cy, cell);
  if (!grid.usable()) {
    for (std::size_t r = 0; r < n; ++r) {
      if (suppressed[r]) continue;
      keep.push_back(order[r]);
      for (std::size_t s = r + 1; s < n; ++s) try_suppress(r, s);
    }
    return keep;
  }

  // Coordinates copied into grid order so each window scan is contiguous.
  const std::vector<std::size_t>& members = grid.members();
  std::vector<double> gx1(n), gy1(n), gx2(n), gy2(n), garea(n);
  std::vector<int> gcls(n);
  for (std::size_t m = 0; m < n; ++m) {
    const std::size_t s = members[m];
    gx1[m] = x1[s];
    gy1[m] = y1[s];
    gx2[m] = x2[s];
    gy2[m] = y2[s];
    garea[m] = area[s];
    gcls[m] = cls[s];
  }

  for (std::size_t r = 0; r < n; ++r) {
    if (suppressed[r]) continue;
    keep.push_back(order[r]);
    const double rx1 = x1[r], ry1 = y1[r], rx2 = x2[r], ry2 = y2[r], rarea = area[r];
    const int rcls = cls[r];
    const double dx = (rx2 - rx1) * reach + 1e-9 * (1.0 + std::abs(cx[r]));
    const double dy = (ry2 - ry1) * reach + 1e-9 * (1.0 + std::abs(cy[r]));
    // Branch-free body: a non-positive width or height gives inter = 0 and
    // the ratio (0 or NaN) never exceeds the threshold.
    grid.ForEachRange(cx[r] - dx, cy[r] - dy, cx[r] + dx, cy[r] + dy,
                      [&](std::size_t first, std::size_t last) {
      for (std::size_t m = first; m < last; ++m) {
        const double w = std::max(0.0, std::min(rx2, gx2[m]) - std::max(rx1, gx1[m]));
        const double h = std::max(0.0, std::min(ry2, gy2[m]) - std::max(ry1, gy1[m]));
        const double inter = w * h;
        const double uni = rarea + garea[m] - inter;
        if ((inter / uni > iou_threshold) & (!class_aware | (gcls[m] == rcls))) {
          const std::size_t s = members[m];
          if (s > r) suppressed[s] = 1;
        }
      }
    });
  }
  return keep;
}

/// Highest-scoring `k` detections, per feature level when `per_level` is
/// set (detections without a level form their own group) and globally
/// otherwise. Returns indices into `dets` in descending score order.
inline std::vector<std::size_t> TopkIndices(std::span<const ScoredBox> dets,
                                            std::size_t k, bool per_level) {
  if (k < 1) throw InvalidArgument("top-k needs k >= 1");
  detail::CheckScores(dets);
  const std::vector<std::size_t> order = detail::ScoreOrder(dets);
  std::vector<std::size_t> out;
  if (!per_level) {
    out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(
                                                  std::min(k, order.size())));
    return out;
  }
  std::map<std::optional<int>, std::size_t> taken;
  for (std::size_t idx : order) {
    std::size_t& count = taken[dets[idx].level];
    if (count < k) {
      ++count;
      out.push_back(idx);
    }
  }
  return out;
}

inline std::vector<ScoredBox> TopkPrefilter(std::span<const ScoredBox> dets,
                                            std::size_t k, bool per_level) {
  std::vector<ScoredBox> out;
  for (std::size_t idx : TopkIndices(dets, k, per_level)) out.push_back(dets[idx]);
  return out;
}

}  // namespace assignkit
