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

#include "assignkit/assign.hpp"

#include <gtest/gtest.h>

#include "assignkit/anchors.hpp"
#include "assignkit/datio.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace assignkit {
namespace {

using testing::Rng;

std::vector<GroundTruth> Gts(std::initializer_list<Box> boxes) {
  std::vector<GroundTruth> out;
  for (const Box& b : boxes) out.push_back({b, 0, false});
  return out;
}

// Random scene with some crowd regions.
std::pair<std::vector<Box>, std::vector<GroundTruth>> RandomScene(Rng& rng, std::size_t m,
                                                                  std::size_t k) {
  auto boxes = testing::RandomBoxes(rng, m);
  auto gts = testing::RandomGts(rng, k, 3);
  for (auto& g : gts) g.is_crowd = testing::UniformInt(rng, 0, 9) == 0;
  // A few exact copies of gt boxes create IoU ties at 1.
  for (std::size_t i = 0; i < m && k > 0; i += 7) {
    boxes[i] = gts[testing::UniformInt(rng, 0, static_cast<int>(k) - 1)].box;
  }
  return {boxes, gts};
}

TEST(IouAssignTest, ThresholdExample) {
  const std::vector<Box> boxes{{0, 0, 100, 100}, {50, 0, 150, 100}};
  AssignConfig cfg;
  cfg.tau = 0.6;
  const auto a = IouAssign(boxes, Gts({{0, 0, 100, 100}}), cfg);
  EXPECT_EQ(a.labels, (std::vector<Label>{0, kBackground}));
}

TEST(IouAssignTest, FallbackBelowThreshold) {
  // Best box has IoU 0.2 with the gt.
  const std::vector<Box> boxes{{0, 0, 100, 100}, {80, 0, 180, 100}, {500, 500, 510, 510}};
  const auto gts = Gts({{0, 0, 20, 100}});
  ASSERT_NEAR(Iou(boxes[0], gts[0].box), 0.2, 1e-12);
  AssignConfig cfg;
  cfg.tau = 0.7;
  EXPECT_EQ(IouAssign(boxes, gts, cfg).labels,
            (std::vector<Label>{0, kBackground, kBackground}));
  cfg.fallback_enabled = false;
  EXPECT_EQ(IouAssign(boxes, gts, cfg).NumPositives(), 0u);
}

TEST(IouAssignTest, FallbackTieGoesToLowestIndex) {
  const std::vector<Box> boxes{{5, 0, 15, 10}, {-5, 0, 5, 10}};
  AssignConfig cfg;
  cfg.tau = 0.9;
  EXPECT_EQ(IouAssign(boxes, Gts({{0, 0, 10, 10}}), cfg).labels,
            (std::vector<Label>{0, kBackground}));
}

TEST(IouAssignTest, EmptyGtsAllBackground) {
  const std::vector<Box> boxes{{0, 0, 1, 1}, {2, 2, 3, 3}};
  EXPECT_EQ(IouAssign(boxes, {}, {}).NumPositives(), 0u);
}

TEST(IouAssignTest, CrowdRegionsAreIgnoredNotTargets) {
  const std::vector<Box> boxes{{0, 0, 10, 10}, {100, 100, 110, 110}};
  std::vector<GroundTruth> gts{{{0, 0, 10, 10}, 0, true}, {{100, 100, 110, 110}, 0, false}};
  EXPECT_EQ(IouAssign(boxes, gts, {}).labels, (std::vector<Label>{kIgnore, 1}));
}

TEST(BalancedIouAssignTest, DynamicThresholdExample) {
  // Six boxes sliding off a 100x100 gt; IoU of a shift d is (100-d)/(100+d).
  const std::vector<double> ious{0.95, 0.9, 0.85, 0.8, 0.7, 0.65};
  std::vector<Box> boxes;
  for (double v : ious) {
    const double d = 100 * (1 - v) / (1 + v);
    boxes.push_back({d, 0, 100 + d, 100});
  }
  const auto gts = Gts({{0, 0, 100, 100}});
  for (std::size_t i = 0; i < ious.size(); ++i) {
    ASSERT_NEAR(Iou(boxes[i], gts[0].box), ious[i], 1e-12);
  }
  AssignConfig cfg;
  cfg.tau = 0.6;
  cfg.balance_k = 4;
  EXPECT_EQ(BalancedIouAssign(boxes, gts, cfg).labels,
            (std::vector<Label>{0, 0, 0, 0, kBackground, kBackground}));
  cfg.balance_k.reset();
  EXPECT_EQ(BalancedIouAssign(boxes, gts, cfg).NumPositives(), 6u);
}

TEST(BalancedIouAssignTest, TiesAtCutoffAdmittedByIndex) {
  const std::vector<Box> boxes(5, Box{0, 0, 10, 10});
  AssignConfig cfg;
  cfg.balance_k = 2;
  EXPECT_EQ(BalancedIouAssign(boxes, Gts({{0, 0, 10, 10}}), cfg).labels,
            (std::vector<Label>{0, 0, kBackground, kBackground, kBackground}));
}

TEST(BalancedIouAssignTest, NOneKeepsOnlyArgmaxBox) {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    // Separated gts so each one's best box also prefers it.
    const auto gts = Gts({{0, 0, 40, 40}, {200, 0, 260, 50}, {0, 200, 30, 290}});
    std::vector<Box> boxes;
    for (const auto& g : gts) {
      for (int j = 0; j < 20; ++j) {
        boxes.push_back(g.box.Translated(testing::Uniform(rng, -8, 8),
                                         testing::Uniform(rng, -8, 8)));
      }
    }
    AssignConfig cfg;
    cfg.tau = 0.3;
    cfg.balance_k = 1;
    const auto a = BalancedIouAssign(boxes, gts, cfg);
    for (std::size_t k = 0; k < gts.size(); ++k) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < boxes.size(); ++i) {
        if (Iou(boxes[i], gts[k].box) > Iou(boxes[best], gts[k].box)) best = i;
      }
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        EXPECT_EQ(a[i] == static_cast<Label>(k), i == best);
      }
    }
  }
}

TEST(AssignConfigTest, PresetsAndValidation) {
  const auto first = AssignConfig::FirstStage();
  EXPECT_EQ(first.tau, 0.7);
  EXPECT_EQ(first.fg_ratio, 0.5);
  const auto second = AssignConfig::SecondStage();
  EXPECT_EQ(second.tau, 0.6);
  EXPECT_EQ(second.balance_k, 4);
  EXPECT_EQ(second.fg_ratio, 0.25);
  AssignConfig bad;
  bad.tau = 0;
  EXPECT_THROW(bad.Validate(), InvalidArgument);
  bad.tau = 1.5;
  EXPECT_THROW(bad.Validate(), InvalidArgument);
  bad = {};
  bad.balance_k = 0;
  EXPECT_THROW(bad.Validate(), InvalidArgument);
  bad = {};
  bad.fg_ratio = 0.0;
  EXPECT_THROW(bad.Validate(), InvalidArgument);
}

TEST(SampleForegroundTest, CapsAtFloorNGamma) {
  Assignment sigma(300);
  for (std::size_t i = 0; i < 120; ++i) sigma[i * 2] = static_cast<Label>(i % 7);
  const auto out = SampleForeground(sigma, 0.25, 42);
  EXPECT_EQ(out.NumPositives(), 75u);
  for (std::size_t i = 0; i < 300; ++i) {
    if (IsPositive(out[i])) {
      EXPECT_EQ(out[i], sigma[i]);
    }
  }
  EXPECT_EQ(out, SampleForeground(sigma, 0.25, 42));
}

TEST(SampleForegroundTest, UnderCapUnchanged) {
  Assignment sigma(300);
  for (std::size_t i = 0; i < 10; ++i) sigma[i] = 0;
  EXPECT_EQ(SampleForeground(sigma, 0.25, 7), sigma);
}

TEST(SampleForegroundTest, IgnoreLabelsSurvive) {
  Assignment sigma(8);
  for (std::size_t i = 0; i < 6; ++i) sigma[i] = 0;
  sigma[7] = kIgnore;
  const auto out = SampleForeground(sigma, 0.25, 3);
  EXPECT_EQ(out.NumPositives(), 2u);
  EXPECT_EQ(out[7], kIgnore);
}

TEST(StageAssignTest, BothOrdersRespectBoundAndCap) {
  Rng rng(32);
  for (int t = 0; t < 30; ++t) {
    auto [boxes, gts] = RandomScene(rng, 400, 6);
    for (SampleOrder order : {SampleOrder::kBalanceThenSample, SampleOrder::kSampleThenBalance}) {
      AssignConfig cfg = AssignConfig::SecondStage();
      cfg.tau = 0.3;
      cfg.order = order;
      cfg.seed = t;
      const auto a = StageAssign(boxes, gts, cfg);
      EXPECT_LE(a.NumPositives(), ForegroundCap(400, 0.25));
      for (auto n : a.CountsPerGt(gts.size())) EXPECT_LE(n, 4);
      EXPECT_EQ(a, StageAssign(boxes, gts, cfg));
    }
  }
}

TEST(IouAssignProperty, MatchesQuadraticReference) {
  Rng rng(33);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = testing::UniformInt(rng, 0, 300);
    const std::size_t k = testing::UniformInt(rng, 0, 12);
    auto [boxes, gts] = RandomScene(rng, m, k);
    AssignConfig cfg;
    cfg.tau = testing::Uniform(rng, 0.2, 0.8);
    cfg.fallback_enabled = t % 4 != 0;
    EXPECT_EQ(IouAssign(boxes, gts, cfg),
              oracle::OverlapAssign(boxes, gts, cfg.tau, std::nullopt, cfg.fallback_enabled));
    cfg.balance_k = testing::UniformInt(rng, 1, 16);
    EXPECT_EQ(BalancedIouAssign(boxes, gts, cfg),
              oracle::OverlapAssign(boxes, gts, cfg.tau, cfg.balance_k, cfg.fallback_enabled));
  }
}

TEST(IouAssignProperty, AnchorGridMatchesReference) {
  const auto anchors = AnchorBoxes(GenerateInitialBoxes(AnchorGridSpec::Default(480, 480)));
  for (int t = 0; t < 3; ++t) {
    const Scene scene = assignkit::RandomScene(t, 480, 480, 20, 3, 100 + t);
    AssignConfig cfg;
    cfg.tau = 0.7;
    EXPECT_EQ(IouAssign(anchors, scene.gts, cfg),
              oracle::OverlapAssign(anchors, scene.gts, 0.7, std::nullopt, true));
  }
}

TEST(IouAssignProperty, PositivesJustified) {
  Rng rng(34);
  for (int t = 0; t < 100; ++t) {
    auto [boxes, gts] = RandomScene(rng, 200, 8);
    AssignConfig cfg;
    cfg.tau = 0.5;
    const auto a = IouAssign(boxes, gts, cfg);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (!IsPositive(a[i])) continue;
      const std::size_t k = static_cast<std::size_t>(a[i]);
      ASSERT_FALSE(gts[k].is_crowd);
      const double v = Iou(boxes[i], gts[k].box);
      // Assigned only to its argmax non-crowd gt.
      for (std::size_t j = 0; j < gts.size(); ++j) {
        if (!gts[j].is_crowd) {
          EXPECT_GE(v, Iou(boxes[i], gts[j].box));
        }
      }
      if (v < cfg.tau) {
        for (std::size_t j = 0; j < boxes.size(); ++j) {
          EXPECT_GE(v, Iou(boxes[j], gts[k].box));
        }
      }
    }
  }
}

TEST(IouAssignProperty, UniqueMaxBoxGivesAPositive) {
  Rng rng(35);
  for (int t = 0; t < 100; ++t) {
    auto [boxes, gts] = RandomScene(rng, 150, 6);
    for (auto& g : gts) g.is_crowd = false;
    AssignConfig cfg;
    cfg.tau = 0.9;
    const auto a = IouAssign(boxes, gts, cfg);
    const auto counts = a.CountsPerGt(gts.size());
    for (std::size_t k = 0; k < gts.size(); ++k) {
      std::size_t best = 0;
      int ties = 0;
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        const double v = Iou(boxes[i], gts[k].box);
        const double b = Iou(boxes[best], gts[k].box);
        if (v > b) {
          best = i;
          ties = 0;
        } else if (i != best && v == b) {
          ++ties;
        }
      }
      const double v = Iou(boxes[best], gts[k].box);
      bool argmax_here = v > 0;
      for (std::size_t j = 0; j < k; ++j) argmax_here &= Iou(boxes[best], gts[j].box) < v;
      for (std::size_t j = k + 1; j < gts.size(); ++j) {
        argmax_here &= Iou(boxes[best], gts[j].box) <= v;
      }
      if (ties == 0 && argmax_here) {
        EXPECT_GE(counts[k], 1) << "gt " << k;
      }
    }
  }
}

TEST(BalancedIouAssignProperty, BoundAndUnboundedIdentity) {
  Rng rng(36);
  for (int t = 0; t < 100; ++t) {
    auto [boxes, gts] = RandomScene(rng, 300, 5);
    AssignConfig cfg;
    cfg.tau = 0.3;
    for (int n : {1, 2, 4, 8, 16}) {
      cfg.balance_k = n;
      for (auto c : BalancedIouAssign(boxes, gts, cfg).CountsPerGt(gts.size())) {
        EXPECT_LE(c, n);
      }
    }
    cfg.balance_k.reset();
    EXPECT_EQ(BalancedIouAssign(boxes, gts, cfg), IouAssign(boxes, gts, cfg));
  }
}

}  // namespace
}  // namespace assignkit
