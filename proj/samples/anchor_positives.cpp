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

// Loads a COCO file, lays the default anchor grid over each image and
// prints how many anchors every object receives with and without balancing.
//
//   assignkit_sample path/to/instances.json

#include <cstdio>
#include <exception>

#include "assignkit.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s instances.json\n", argv[0]);
    return 2;
  }
  try {
    const assignkit::CocoDataset ds = assignkit::LoadCocoAnnotations(argv[1]);
    for (const assignkit::Scene& scene : ds.scenes) {
      const auto anchors = assignkit::AnchorBoxes(assignkit::GenerateInitialBoxes(
          assignkit::AnchorGridSpec::Default(scene.width, scene.height)));
      assignkit::AssignConfig cfg = assignkit::AssignConfig::SecondStage();
      cfg.fg_ratio.reset();
      const auto balanced = assignkit::BalancedIouAssign(anchors, scene.gts, cfg);
      cfg.balance_k.reset();
      const auto naive = assignkit::IouAssign(anchors, scene.gts, cfg);
      const auto nb = balanced.CountsPerGt(scene.gts.size());
      const auto nn = naive.CountsPerGt(scene.gts.size());
      std::printf("image %lld: %zu anchors\n", static_cast<long long>(scene.image_id),
                  anchors.size());
      for (std::size_t k = 0; k < scene.gts.size(); ++k) {
        const auto& g = scene.gts[k];
        std::printf("  gt %zu %s%s naive=%lld balanced=%lld\n", k, g.box.ToString().c_str(),
                    g.is_crowd ? " crowd" : "", static_cast<long long>(nn[k]),
                    static_cast<long long>(nb[k]));
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
