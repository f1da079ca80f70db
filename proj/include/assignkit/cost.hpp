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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "assignkit/assignment.hpp"
#include "assignkit/error.hpp"
#include "assignkit/geometry.hpp"
#include "assignkit/matrix.hpp"

namespace assignkit {

struct Prediction {
  Box box;
  std::vector<double> scores;  // one probability per class
  std::optional<double> objectness;
};

struct GroundTruth {
  Box box;
  int class_id = 0;
  bool is_crowd = false;
};

struct ImageSize {
  double width = 0.0;
  double height = 0.0;
};

// Weights of the three cost terms plus the focal parameters shared by the
// matching cost and the supervised loss.
struct CostWeights {
  double w_cls = 2.0;
  double w_l1 = 5.0;
  double w_giou = 2.0;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;

  void Validate() const {
    if (!(w_cls >= 0.0) || !(w_l1 >= 0.0) || !(w_giou >= 0.0)) {
      throw InvalidArgument("cost weights must be non-negative");
    }
    if (w_cls == 0.0 && w_l1 == 0.0 && w_giou == 0.0) {
      throw InvalidArgument("at least one cost weight must be positive");
    }
    if (!(focal_alpha > 0.0 && focal_alpha < 1.0)) {
      throw InvalidArgument("focal_alpha must lie in (0, 1)");
    }
    if (!(focal_gamma >= 0.0)) {
      throw InvalidArgument("focal_gamma must be non-negative");
    }
  }
};

inline constexpr double kScoreEps = 1e-8;

inline double ClampScore(double p) {
  return std::clamp(p, kScoreEps, 1.0 - kScoreEps);
}

// Focal loss of a probability whose target is the positive class.
inline double FocalPositive(double p, double alpha, double gamma) {
  p = ClampScore(p);
  return alpha * std::pow(1.0 - p, gamma) * -std::log(p);
}

// Focal loss of a probability whose target is the negative class.
inline double FocalNegative(double p, double alpha, double gamma) {
  p = ClampScore(p);
  return (1.0 - alpha) * std::pow(p, gamma) * -std::log(1.0 - p);
}

// Matching cost of predicting class probability p for a ground truth of that
// class: the change in focal loss when the target flips from negative to
// positive.
inline double ClassificationCost(double p, double alpha, double gamma) {
  return FocalPositive(p, alpha, gamma) - FocalNegative(p, alpha, gamma);
}

// L1 distance of the (cx, cy, w, h) forms normalized by the image size.
inline double NormalizedL1(const Box& a, const Box& b, const ImageSize& image) {
  return std::abs(a.cx() - b.cx()) / image.width +
         std::abs(a.cy() - b.cy()) / image.height +
         std::abs(a.width() - b.width()) / image.width +
         std::abs(a.height() - b.height()) / image.height;
}

namespace detail {

inline std::size_t CheckClassCounts(std::span<const Prediction> preds,
                                    std::span<const GroundTruth> gts) {
  const std::size_t num_classes = preds.empty() ? 0 : preds[0].scores.size();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].scores.size() != num_classes) {
      throw DimensionMismatch("prediction " + std::to_string(i) + " has " +
                              std::to_string(preds[i].scores.size()) +
                              " class scores, expected " +
                              std::to_string(num_classes));
    }
  }
  if (preds.empty()) return 0;
  if (num_classes == 0) throw DimensionMismatch("predictions carry no scores");
  for (std::size_t k = 0; k < gts.size(); ++k) {
    if (gts[k].class_id < 0 ||
        static_cast<std::size_t>(gts[k].class_id) >= num_classes) {
      throw DimensionMismatch("ground truth " + std::to_string(k) +
                              " has class " + std::to_string(gts[k].class_id) +
                              " outside [0, " + std::to_string(num_classes) +
                              ")");
    }
  }
  return num_classes;
}

inline void CheckImage(const ImageSize& image) {
  if (!(image.width > 0.0) || !(image.height > 0.0)) {
    throw InvalidArgument("image size must be positive");
  }
}

}  // namespace detail

/// Single entry of the matching cost matrix.
inline double PairCost(const Prediction& pred, const GroundTruth& gt,
                       const CostWeights& w, const ImageSize& image) {
  const double p = pred.scores[static_cast<std::size_t>(gt.class_id)];
  return w.w_cls * ClassificationCost(p, w.focal_alpha, w.focal_gamma) +
         w.w_l1 * NormalizedL1(pred.box, gt.box, image) +
         w.w_giou * (1.0 - Giou(pred.box, gt.box));
}

/// M x K matrix of PairCost over predictions (rows) and ground truths
/// (columns).
inline MatrixD BuildCostMatrix(std::span<const Prediction> preds,
                               std::span<const GroundTruth> gts,
                               const CostWeights& w, const ImageSize& image) {
  w.Validate();
  detail::CheckImage(image);
  detail::CheckClassCounts(preds, gts);
  MatrixD cost(preds.size(), gts.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t k = 0; k < gts.size(); ++k) {
      cost(i, k) = PairCost(preds[i], gts[k], w, image);
    }
  }
  return cost;
}

// Unweighted loss terms; Total() applies the weights.
struct LossTerms {
  double cls = 0.0;
  double l1 = 0.0;
  double giou = 0.0;

  double Total(const CostWeights& w) const {
    return w.w_cls * cls + w.w_l1 * l1 + w.w_giou * giou;
  }
};

/// Supervised loss of an assignment. Every non-ignored prediction pays a
/// focal classification loss against its target (all classes negative for
/// background); only matched predictions pay the box terms.
inline LossTerms DetectionLoss(std::span<const Prediction> preds,
                               std::span<const GroundTruth> gts,
                               const Assignment& sigma, const CostWeights& w,
                               const ImageSize& image) {
  w.Validate();
  detail::CheckImage(image);
  detail::CheckClassCounts(preds, gts);
  if (sigma.size() != preds.size()) {
    throw DimensionMismatch("assignment has " + std::to_string(sigma.size()) +
                            " labels for " + std::to_string(preds.size()) +
                            " predictions");
  }
  sigma.Validate(gts.size());

  LossTerms loss;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Label label = sigma[i];
    if (label == kIgnore) continue;
    const Prediction& pred = preds[i];
    const int target =
        IsPositive(label) ? gts[static_cast<std::size_t>(label)].class_id : -1;
    for (std::size_t c = 0; c < pred.scores.size(); ++c) {
      const double p = pred.scores[c];
      loss.cls += static_cast<int>(c) == target
                      ? FocalPositive(p, w.focal_alpha, w.focal_gamma)
                      : FocalNegative(p, w.focal_alpha, w.focal_gamma);
    }
    if (IsPositive(label)) {
      const GroundTruth& gt = gts[static_cast<std::size_t>(label)];
      loss.l1 += NormalizedL1(pred.box, gt.box, image);
      loss.giou += 1.0 - Giou(pred.box, gt.box);
    }
  }
  return loss;
}

/// Collapses class scores to one foreground score (objectness when present,
/// else the max class score) and every ground truth to class 0, for the
/// class-agnostic first-stage loss.
inline std::vector<Prediction> ToClassAgnostic(
    std::span<const Prediction> preds) {
  std::vector<Prediction> out;
  out.reserve(preds.size());
  for (const Prediction& p : preds) {
    double fg = 0.0;
    if (p.objectness) {
      fg = *p.objectness;
    } else if (!p.scores.empty()) {
      fg = *std::max_element(p.scores.begin(), p.scores.end());
    }
    out.push_back({p.box, {fg}, p.objectness});
  }
  return out;
}

inline std::vector<GroundTruth> ToClassAgnostic(
    std::span<const GroundTruth> gts) {
  std::vector<GroundTruth> out(gts.begin(), gts.end());
  for (GroundTruth& g : out) g.class_id = 0;
  return out;
}

}  // namespace assignkit
