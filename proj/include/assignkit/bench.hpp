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
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "assignkit/assign.hpp"
#include "assignkit/error.hpp"
#include "assignkit/matching.hpp"
#include "assignkit/nms.hpp"

namespace assignkit {

// Timed operations: "nms", "hungarian", "iou_assign".
struct BenchOptions {
  std::vector<int> sizes = {1000, 10000};
  std::vector<std::string> ops = {"nms", "hungarian", "iou_assign"};
  int runs = 20;
  int num_gts = 10;  // columns for hungarian and iou_assign
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::string op;
  int size = 0;
  double median_ms = 0.0;
  int runs = 0;
};

namespace detail {

inline std::vector<ScoredBox> RandomDetections(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ScoredBox> dets;
  dets.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double w = 10.0 + 190.0 * unit(rng);
    const double h = 10.0 + 190.0 * unit(rng);
    const double x = unit(rng) * (1333.0 - w);
    const double y = unit(rng) * (800.0 - h);
    dets.push_back({{x, y, x + w, y + h}, unit(rng), static_cast<int>(unit(rng) * 80), {}});
  }
  return dets;
}

inline double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename F>
double MedianMillis(int runs, F&& fn) {
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return Median(std::move(times));
}

}  // namespace detail

/// Median wall-clock time of each op at each size over `runs` repetitions
/// (at least 20). Inputs are random but fixed by the seed.
inline std::vector<BenchRow> RunBench(const BenchOptions& opt) {
  if (opt.runs < 20) throw InvalidArgument("bench needs at least 20 runs");
  if (opt.num_gts < 1) throw InvalidArgument("bench needs at least one ground truth");
  for (int s : opt.sizes) {
    if (s < 1) throw InvalidArgument("bench sizes must be positive");
  }
  std::vector<BenchRow> rows;
  for (const std::string& op : opt.ops) {
    if (op != "nms" && op != "hungarian" && op != "iou_assign") {
      throw InvalidArgument("unknown bench op '" + op + "'");
    }
    for (int size : opt.sizes) {
      std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(size));
      double ms = 0.0;
      if (op == "nms") {
        const auto dets = detail::RandomDetections(size, rng);
        ms = detail::MedianMillis(opt.runs, [&] {
          volatile std::size_t kept = Nms(dets, 0.7, false).size();
          (void)kept;
        });
      } else if (op == "hungarian") {
        if (size < opt.num_gts) throw InvalidArgument("hungarian bench size below num_gts");
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        MatrixD cost(static_cast<std::size_t>(size), static_cast<std::size_t>(opt.num_gts));
        for (std::size_t i = 0; i < cost.rows(); ++i) {
          for (std::size_t k = 0; k < cost.cols(); ++k) cost(i, k) = unit(rng);
        }
        ms = detail::MedianMillis(opt.runs, [&] {
          volatile double c = SolveAssignment(cost).total_cost;
          (void)c;
        });
      } else {
        const auto dets = detail::RandomDetections(size, rng);
        const auto gt_dets = detail::RandomDetections(opt.num_gts, rng);
        std::vector<Box> boxes;
        for (const ScoredBox& d : dets) boxes.push_back(d.box);
        std::vector<GroundTruth> gts;
        for (const ScoredBox& d : gt_dets) gts.push_back({d.box, 0, false});
        const AssignConfig cfg = AssignConfig::SecondStage();
        ms = detail::MedianMillis(opt.runs, [&] {
          volatile std::size_t n = BalancedIouAssign(boxes, gts, cfg).NumPositives();
          (void)n;
        });
      }
      rows.push_back({op, size, ms, opt.runs});
    }
  }
  return rows;
}

inline std::string BenchCsv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "op,size,median_ms,runs\n";
  os << std::fixed << std::setprecision(4);
  for (const BenchRow& r : rows) {
    os << r.op << "," << r.size << "," << r.median_ms << "," << r.runs << "\n";
  }
  return os.str();
}

}  // namespace assignkit
