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
#include <array>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <iomanip>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "assignkit/anchors.hpp"
#include "assignkit/assign.hpp"
#include "assignkit/assignment.hpp"
#include "assignkit/cost.hpp"
#include "assignkit/datio.hpp"
#include "assignkit/matching.hpp"

namespace assignkit {

// COCO size classes by box pixel area.
enum class SizeBucket { kSmall = 0, kMedium = 1, kLarge = 2 };
inline constexpr std::array<SizeBucket, 3> kBuckets = {
    SizeBucket::kSmall, SizeBucket::kMedium, SizeBucket::kLarge};

inline SizeBucket BucketOf(double area) {
  if (area < 32.0 * 32.0) return SizeBucket::kSmall;
  if (area < 96.0 * 96.0) return SizeBucket::kMedium;
  return SizeBucket::kLarge;
}

inline const char* BucketName(SizeBucket b) {
  switch (b) {
    case SizeBucket::kSmall:
      return "small";
    case SizeBucket::kMedium:
      return "medium";
    case SizeBucket::kLarge:
      return "large";
  }
  return "?";
}

struct BucketStats {
  std::int64_t num_gts = 0;
  std::int64_t total_positives = 0;
  std::int64_t num_unmatched = 0;

  double mean() const {
    return num_gts > 0 ? static_cast<double>(total_positives) / static_cast<double>(num_gts)
                       : 0.0;
  }
};

/// Positive counts per ground truth, pooled into size buckets. Crowd
/// ground truths keep a (zero) slot in `per_gt_positive_counts` but are left
/// out of the buckets.
struct AssignReport {
  std::string strategy;
  std::string config;
  std::vector<std::int64_t> per_gt_positive_counts;
  std::array<BucketStats, 3> buckets{};

  const BucketStats& bucket(SizeBucket b) const { return buckets[static_cast<std::size_t>(b)]; }

  std::int64_t MaxCount() const {
    if (per_gt_positive_counts.empty()) return 0;
    return *std::max_element(per_gt_positive_counts.begin(), per_gt_positive_counts.end());
  }

  // Pools another report's counts into this one.
  void Merge(const AssignReport& other) {
    per_gt_positive_counts.insert(per_gt_positive_counts.end(),
                                  other.per_gt_positive_counts.begin(),
                                  other.per_gt_positive_counts.end());
    for (std::size_t b = 0; b < buckets.size(); ++b) {
      buckets[b].num_gts += other.buckets[b].num_gts;
      buckets[b].total_positives += other.buckets[b].total_positives;
      buckets[b].num_unmatched += other.buckets[b].num_unmatched;
    }
  }
};

inline AssignReport AssignmentStats(const Assignment& sigma, std::span<const GroundTruth> gts) {
  sigma.Validate(gts.size());
  AssignReport r;
  r.per_gt_positive_counts = sigma.CountsPerGt(gts.size());
  for (std::size_t k = 0; k < gts.size(); ++k) {
    if (gts[k].is_crowd) continue;
    BucketStats& b = r.buckets[static_cast<std::size_t>(BucketOf(gts[k].box.area()))];
    const std::int64_t n = r.per_gt_positive_counts[k];
    ++b.num_gts;
    b.total_positives += n;
    if (n == 0) ++b.num_unmatched;
  }
  return r;
}

enum class StrategyKind { kHungarian, kBMatch, kIou, kIouBalanced };

inline const char* StrategyName(StrategyKind k) {
  switch (k) {
    case StrategyKind::kHungarian:
      return "hungarian";
    case StrategyKind::kBMatch:
      return "bmatch";
    case StrategyKind::kIou:
      return "iou";
    case StrategyKind::kIouBalanced:
      return "iou-balanced";
  }
  return "?";
}

struct Strategy {
  std::string label;
  StrategyKind kind = StrategyKind::kIou;
  AssignConfig cfg;
  int b = 1;
  CostWeights weights;

  std::string Describe() const {
    std::ostringstream os;
    os << "strategy=" << StrategyName(kind);
    switch (kind) {
      case StrategyKind::kBMatch:
        os << " b=" << b;
        [[fallthrough]];
      case StrategyKind::kHungarian:
        os << " w_cls=" << weights.w_cls << " w_l1=" << weights.w_l1
           << " w_giou=" << weights.w_giou << " focal_alpha=" << weights.focal_alpha
           << " focal_gamma=" << weights.focal_gamma;
        break;
      case StrategyKind::kIouBalanced:
        os << " balance_k=" << (cfg.balance_k ? std::to_string(*cfg.balance_k) : "inf");
        [[fallthrough]];
      case StrategyKind::kIou:
        os << " tau=" << cfg.tau << " fallback=" << (cfg.fallback_enabled ? "on" : "off")
           << " gamma=" << (cfg.fg_ratio ? std::to_string(*cfg.fg_ratio) : "none")
           << " order="
           << (cfg.order == SampleOrder::kBalanceThenSample ? "balance-then-sample"
                                                             : "sample-then-balance")
           << " seed=" << cfg.seed;
        break;
    }
    return os.str();
  }
};

/// Runs one strategy on one image. One-to-one strategies match against the
/// non-crowd ground truths only and report labels in the scene's indexing.
inline Assignment RunStrategy(const Strategy& s, const Scene& scene,
                              std::span<const Prediction> preds) {
  if (s.kind == StrategyKind::kHungarian || s.kind == StrategyKind::kBMatch) {
    std::vector<GroundTruth> targets;
    std::vector<std::size_t> ids;
    for (std::size_t k = 0; k < scene.gts.size(); ++k) {
      if (!scene.gts[k].is_crowd) {
        targets.push_back(scene.gts[k]);
        ids.push_back(k);
      }
    }
    const MatrixD cost = BuildCostMatrix(preds, targets, s.weights, scene.size());
    const MatchResult m = s.kind == StrategyKind::kHungarian ? SolveAssignment(cost)
                                                             : SolveBMatching(cost, s.b);
    Assignment out = m.assignment;
    for (Label& l : out.labels) {
      if (IsPositive(l)) l = static_cast<Label>(ids[static_cast<std::size_t>(l)]);
    }
    return out;
  }
  std::vector<Box> boxes;
  boxes.reserve(preds.size());
  for (const Prediction& p : preds) boxes.push_back(p.box);
  AssignConfig cfg = s.cfg;
  if (s.kind == StrategyKind::kIou) cfg.balance_k.reset();
  cfg.seed = MixSeed(cfg.seed, static_cast<std::uint64_t>(scene.image_id));
  return StageAssign(boxes, scene.gts, cfg);
}

// Produces the candidate predictions for a scene. Must be deterministic and
// safe to call from several threads.
using PredictionSource = std::function<std::vector<Prediction>(const Scene&)>;

// Constant-size initial boxes with flat 0.5 class scores.
inline PredictionSource AnchorSource(std::vector<int> strides, std::size_t num_classes) {
  return [strides = std::move(strides), num_classes](const Scene& scene) {
    const auto anchors = GenerateInitialBoxes(
        AnchorGridSpec::FromStrides(scene.width, scene.height, strides));
    std::vector<Prediction> out;
    out.reserve(anchors.size());
    for (const Anchor& a : anchors) out.push_back({a.box, std::vector<double>(num_classes, 0.5), {}});
    return out;
  };
}

inline PredictionSource SynthSource(JitterSpec spec, std::uint64_t seed, std::size_t num_classes) {
  return [spec, seed, num_classes](const Scene& scene) {
    return SynthesizePredictions(scene, spec,
                                 MixSeed(seed, static_cast<std::uint64_t>(scene.image_id)),
                                 num_classes);
  };
}

inline PredictionSource DenseProposalSource(std::vector<int> strides, JitterSpec spec,
                                            std::uint64_t seed, std::size_t num_classes) {
  return [strides = std::move(strides), spec, seed, num_classes](const Scene& scene) {
    const auto anchors = GenerateInitialBoxes(
        AnchorGridSpec::FromStrides(scene.width, scene.height, strides));
    return SynthesizeDenseProposals(scene, anchors, spec,
                                    MixSeed(seed, static_cast<std::uint64_t>(scene.image_id)),
                                    num_classes);
  };
}

// Images without records get no predictions.
inline PredictionSource LoadedSource(PredictionMap preds) {
  auto shared = std::make_shared<const PredictionMap>(std::move(preds));
  return [shared](const Scene& scene) {
    auto it = shared->find(scene.image_id);
    return it == shared->end() ? std::vector<Prediction>{} : it->second;
  };
}

/// Runs every strategy on every scene with `workers` threads (0 picks the
/// hardware concurrency) and pools the counts per strategy. Results are
/// merged in scene order, so the output does not depend on the worker count.
/// The first error raised by any scene is rethrown.
inline std::vector<AssignReport> CompareStrategies(const std::vector<Scene>& scenes,
                                                   const std::vector<Strategy>& strategies,
                                                   const PredictionSource& source,
                                                   unsigned workers = 0) {
  std::vector<std::vector<AssignReport>> per_scene(scenes.size());
  std::vector<std::exception_ptr> errors(scenes.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < scenes.size(); i = next++) {
      try {
        const std::vector<Prediction> preds = source(scenes[i]);
        per_scene[i].reserve(strategies.size());
        for (const Strategy& s : strategies) {
          per_scene[i].push_back(AssignmentStats(RunStrategy(s, scenes[i], preds), scenes[i].gts));
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(scenes.size(), 1)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<AssignReport> reports;
  for (const Strategy& s : strategies) {
    AssignReport r;
    r.strategy = s.label;
    r.config = s.Describe();
    reports.push_back(std::move(r));
  }
  for (const auto& scene_reports : per_scene) {
    for (std::size_t j = 0; j < scene_reports.size(); ++j) reports[j].Merge(scene_reports[j]);
  }
  return reports;
}

inline std::string FormatMean(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

/// CSV with one row per strategy x bucket. `header` lines are emitted first
/// as `# ` comments.
inline std::string ReportsCsv(const std::vector<AssignReport>& reports,
                              const std::vector<std::string>& header = {}) {
  std::ostringstream os;
  for (const std::string& h : header) os << "# " << h << "\n";
  for (const AssignReport& r : reports) os << "# " << r.strategy << ": " << r.config << "\n";
  os << "strategy,bucket,num_gts,positives,mean,unmatched\n";
  for (const AssignReport& r : reports) {
    for (SizeBucket b : kBuckets) {
      const BucketStats& s = r.bucket(b);
      os << r.strategy << "," << BucketName(b) << "," << s.num_gts << "," << s.total_positives
         << "," << FormatMean(s.mean()) << "," << s.num_unmatched << "\n";
    }
  }
  return os.str();
}

inline std::string SummaryTable(const std::vector<AssignReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "strategy" << std::setw(8) << "bucket" << std::right
     << std::setw(9) << "gts" << std::setw(11) << "positives" << std::setw(11) << "mean"
     << std::setw(11) << "unmatched" << std::setw(9) << "max" << "\n";
  for (const AssignReport& r : reports) {
    for (SizeBucket b : kBuckets) {
      const BucketStats& s = r.bucket(b);
      os << std::left << std::setw(20) << r.strategy << std::setw(8) << BucketName(b)
         << std::right << std::setw(9) << s.num_gts << std::setw(11) << s.total_positives
         << std::setw(11) << FormatMean(s.mean()) << std::setw(11) << s.num_unmatched
         << std::setw(9) << r.MaxCount() << "\n";
    }
  }
  return os.str();
}

/// Bar chart of how many ground truths received 0, 1, 2, ... positives.
/// Counts above `max_bin` share the last bar.
inline std::string PositiveCountHistogramSvg(const AssignReport& report, int max_bin = 20) {
  std::vector<std::int64_t> bins(static_cast<std::size_t>(max_bin) + 1, 0);
  for (std::int64_t c : report.per_gt_positive_counts) {
    ++bins[static_cast<std::size_t>(std::min<std::int64_t>(c, max_bin))];
  }
  const std::int64_t peak = std::max<std::int64_t>(1, *std::max_element(bins.begin(), bins.end()));
  constexpr double kWidth = 640, kHeight = 360, kLeft = 50, kBottom = 40, kTop = 30;
  const double plot_h = kHeight - kBottom - kTop;
  const double bar_w = (kWidth - kLeft - 10) / static_cast<double>(bins.size());

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">"
     << "positives per ground truth: " << report.strategy << " (n=" << report.per_gt_positive_counts.size()
     << ")</text>\n";
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const double h = plot_h * static_cast<double>(bins[i]) / static_cast<double>(peak);
    const double x = kLeft + static_cast<double>(i) * bar_w;
    os << "<rect x=\"" << x + 1 << "\" y=\"" << kHeight - kBottom - h << "\" width=\""
       << bar_w - 2 << "\" height=\"" << h << "\" fill=\"#4477aa\"><title>" << bins[i]
       << "</title></rect>\n";
    os << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << kHeight - kBottom + 15
       << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << i
       << (static_cast<int>(i) == max_bin ? "+" : "") << "</text>\n";
  }
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - 10
     << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  os << "<text x=\"10\" y=\"" << kTop + 10 << "\" font-family=\"sans-serif\" font-size=\"10\">"
     << peak << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace assignkit
