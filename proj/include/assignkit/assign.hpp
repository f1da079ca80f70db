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
#include <iterator>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "assignkit/assignment.hpp"
#include "assignkit/cost.hpp"
#include "assignkit/error.hpp"
#include "assignkit/geometry.hpp"

namespace assignkit {

// How the per-gt cap and the foreground-ratio subsampling compose.
enum class SampleOrder {
  kBalanceThenSample,
  kSampleThenBalance,
};

/// Hyperparameters of the overlap-based one-to-many assignment.
struct AssignConfig {
  double tau = 0.6;
  // Maximum positives per ground truth; nullopt means unbounded.
  std::optional<int> balance_k;
  // Fraction of predictions that may stay positive; nullopt disables it.
  std::optional<double> fg_ratio;
  bool fallback_enabled = true;
  std::uint64_t seed = 0;
  SampleOrder order = SampleOrder::kBalanceThenSample;

  // Proposal stage over the fixed initial boxes.
  static AssignConfig FirstStage() {
    AssignConfig c;
    c.tau = 0.7;
    c.fg_ratio = 0.5;
    return c;
  }

  // Query stage over the proposals kept after NMS.
  static AssignConfig SecondStage() {
    AssignConfig c;
    c.tau = 0.6;
    c.balance_k = 4;
    c.fg_ratio = 0.25;
    return c;
  }

  void Validate() const {
    if (!(tau > 0.0 && tau <= 1.0)) {
      throw InvalidArgument("tau must lie in (0, 1], got " + std::to_string(tau));
    }
    if (balance_k && *balance_k < 1) {
      throw InvalidArgument("balance_k must be >= 1");
    }
    if (fg_ratio && !(*fg_ratio > 0.0 && *fg_ratio <= 1.0)) {
      throw InvalidArgument("fg_ratio must lie in (0, 1]");
    }
  }
};

namespace detail {

// Boxes are ranked per ground truth by descending IoU, then ascending index.
// Returns the rank-`n` key (1-based) so that box i is in the top n iff
// (-iou_i, i) <= key. With fewer than n boxes every box qualifies.
inline std::pair<double, std::size_t> TopNKey(const MatrixD& ious,
                                              std::size_t gt, std::size_t n) {
  const std::size_t m = ious.rows();
  if (n >= m) return {std::numeric_limits<double>::infinity(), m};
  std::vector<std::pair<double, std::size_t>> keys(m);
  for (std::size_t i = 0; i < m; ++i) keys[i] = {-ious(i, gt), i};
  std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n - 1),
                   keys.end());
  return keys[n - 1];
}

inline Assignment AssignByOverlap(std::span<const Box> boxes,
                                  std::span<const GroundTruth> gts,
                                  double tau, std::optional<int> cap,
                                  bool fallback) {
  std::vector<std::size_t> target_ids;
  std::vector<Box> targets;
  std::vector<Box> crowds;
  for (std::size_t k = 0; k < gts.size(); ++k) {
    if (gts[k].is_crowd) {
      crowds.push_back(gts[k].box);
    } else {
      target_ids.push_back(k);
      targets.push_back(gts[k].box);
    }
  }

  const std::size_t m = boxes.size();
  const std::size_t kt = targets.size();
  Assignment out(m);
  const MatrixD ious = PairwiseIou(boxes, targets);

  // Best ground truth per box, lowest index on ties.
  std::vector<std::size_t> best_gt(m, 0);
  std::vector<double> best_iou(m, -1.0);
  for (std::size_t i = 0; i < m && kt > 0; ++i) {
    const auto row = ious.row(i);
    for (std::size_t k = 0; k < kt; ++k) {
      if (row[k] > best_iou[i]) {
        best_iou[i] = row[k];
        best_gt[i] = k;
      }
    }
  }

  // Closest box per ground truth, lowest index on ties.
  std::vector<std::size_t> closest(kt, 0);
  std::vector<double> closest_iou(kt, -1.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = ious.row(i);
    for (std::size_t k = 0; k < kt; ++k) {
      if (row[k] > closest_iou[k]) {
        closest_iou[k] = row[k];
        closest[k] = i;
      }
    }
  }

  std::vector<std::pair<double, std::size_t>> top_key;
  if (cap) {
    top_key.reserve(kt);
    for (std::size_t k = 0; k < kt; ++k) {
      top_key.push_back(TopNKey(ious, k, static_cast<std::size_t>(*cap)));
    }
  }

  const MatrixD crowd_ious =
      crowds.empty() ? MatrixD() : PairwiseIou(boxes, crowds);

  for (std::size_t i = 0; i < m; ++i) {
    if (kt > 0) {
      const std::size_t k = best_gt[i];
      const double iou = best_iou[i];
      bool positive = iou >= tau;
      if (positive && cap) {
        positive = std::pair<double, std::size_t>{-iou, i} <= top_key[k];
      }
      if (!positive && fallback && closest[k] == i && iou > 0.0) {
        positive = true;
      }
      if (positive) {
        out[i] = static_cast<Label>(target_ids[k]);
        continue;
      }
    }
    for (std::size_t c = 0; c < crowds.size(); ++c) {
      if (crowd_ious(i, c) >= tau) {
        out[i] = kIgnore;
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Labels each box with its highest-overlap ground truth when that IoU
/// reaches `cfg.tau`. With the fallback enabled, the box closest to a
/// ground truth (highest IoU, lowest index on ties) is also kept when that
/// ground truth is its own best match, even below `tau`. Several boxes may
/// share a ground truth.
///
/// Crowd ground truths are never targets. A box that is not positive and
/// overlaps a crowd region with IoU >= tau is labeled kIgnore.
inline Assignment IouAssign(std::span<const Box> boxes,
                            std::span<const GroundTruth> gts,
                            const AssignConfig& cfg) {
  cfg.Validate();
  return detail::AssignByOverlap(boxes, gts, cfg.tau, std::nullopt,
                                 cfg.fallback_enabled);
}

/// IouAssign with a per-ground-truth dynamic threshold max(tau, mu_k), mu_k
/// being the n-th highest IoU any box has with ground truth k
/// (n = cfg.balance_k). Boxes tied at mu_k are admitted by ascending index,
/// so no ground truth ever receives more than n positives. Unbounded
/// balance_k reduces to IouAssign.
inline Assignment BalancedIouAssign(std::span<const Box> boxes,
                                    std::span<const GroundTruth> gts,
                                    const AssignConfig& cfg) {
  cfg.Validate();
  return detail::AssignByOverlap(boxes, gts, cfg.tau, cfg.balance_k,
                                 cfg.fallback_enabled);
}

// Largest number of positives kept out of `n` predictions at ratio gamma.
inline std::size_t ForegroundCap(std::size_t n, double gamma) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * gamma + 1e-9));
}

/// Keeps a uniformly random subset of floor(N * gamma) positives when there
/// are more than that, relabeling the rest background. N is the number of
/// predictions. Deterministic for a given seed.
inline Assignment SampleForeground(const Assignment& sigma, double gamma,
                                   std::uint64_t seed) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw InvalidArgument("gamma must lie in (0, 1]");
  }
  const std::size_t cap = ForegroundCap(sigma.size(), gamma);
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (IsPositive(sigma[i])) positives.push_back(i);
  }
  if (positives.size() <= cap) return sigma;

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> kept;
  kept.reserve(cap);
  std::sample(positives.begin(), positives.end(), std::back_inserter(kept), cap,
              rng);
  Assignment out = sigma;
  for (std::size_t i : positives) out[i] = kBackground;
  for (std::size_t i : kept) out[i] = sigma[i];
  return out;
}

/// Full stage assignment: balanced or plain overlap assignment depending on
/// cfg.balance_k, followed (or preceded, per cfg.order) by foreground
/// subsampling when cfg.fg_ratio is set.
inline Assignment StageAssign(std::span<const Box> boxes,
                              std::span<const GroundTruth> gts,
                              const AssignConfig& cfg) {
  cfg.Validate();
  if (!cfg.fg_ratio) return BalancedIouAssign(boxes, gts, cfg);
  if (cfg.order == SampleOrder::kBalanceThenSample) {
    return SampleForeground(BalancedIouAssign(boxes, gts, cfg), *cfg.fg_ratio,
                            cfg.seed);
  }
  const Assignment sampled =
      SampleForeground(IouAssign(boxes, gts, cfg), *cfg.fg_ratio, cfg.seed);
  const Assignment balanced = BalancedIouAssign(boxes, gts, cfg);
  Assignment out = balanced;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (IsPositive(out[i]) && !IsPositive(sampled[i])) out[i] = kBackground;
  }
  return out;
}

}  // namespace assignkit
