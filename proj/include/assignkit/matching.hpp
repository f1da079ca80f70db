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

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "assignkit/assignment.hpp"
#include "assignkit/error.hpp"
#include "assignkit/matrix.hpp"

namespace assignkit {

struct MatchResult {
  Assignment assignment;
  double total_cost = 0.0;  // summed over matched predictions in index order
};

namespace detail {

inline void CheckFinite(const MatrixD& cost) {
  for (double v : cost.data()) {
    if (!std::isfinite(v)) throw InvalidArgument("cost matrix has non-finite entries");
  }
}

inline double MatchedCost(const MatrixD& cost, const Assignment& a) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (IsPositive(a[i])) total += cost(i, static_cast<std::size_t>(a[i]));
  }
  return total;
}

// Shortest augmenting path Hungarian method with row/column potentials,
// O(K^2 M). Ground truths are the rows being inserted one at a time and
// predictions the columns, so K <= M is the only requirement. Returns the
// prediction matched to each ground truth.
//
// Each augmentation scans columns in increasing index and only accepts a
// strictly smaller slack, so among equal-cost alternatives the lowest
// prediction index wins and ground truths are resolved in index order.
inline std::vector<std::size_t> HungarianColumns(const MatrixD& cost) {
  const std::size_t num_gts = cost.cols();
  const std::size_t num_preds = cost.rows();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based; index 0 is the virtual source.
  std::vector<double> u(num_gts + 1, 0.0);
  std::vector<double> v(num_preds + 1, 0.0);
  std::vector<std::size_t> owner(num_preds + 1, 0);  // gt owning a column
  std::vector<std::size_t> way(num_preds + 1, 0);
  std::vector<double> min_slack(num_preds + 1);
  std::vector<char> used(num_preds + 1);

  for (std::size_t gt = 1; gt <= num_gts; ++gt) {
    owner[0] = gt;
    std::size_t col0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t row0 = owner[col0];
      double delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t col = 1; col <= num_preds; ++col) {
        if (used[col]) continue;
        const double slack = cost(col - 1, row0 - 1) - u[row0] - v[col];
        if (slack < min_slack[col]) {
          min_slack[col] = slack;
          way[col] = col0;
        }
        if (min_slack[col] < delta) {
          delta = min_slack[col];
          col1 = col;
        }
      }
      for (std::size_t col = 0; col <= num_preds; ++col) {
        if (used[col]) {
          u[owner[col]] += delta;
          v[col] -= delta;
        } else {
          min_slack[col] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<std::size_t> match(num_gts, 0);
  for (std::size_t col = 1; col <= num_preds; ++col) {
    if (owner[col] != 0) match[owner[col] - 1] = col - 1;
  }
  return match;
}

}  // namespace detail

/// Exact minimum-cost one-to-one matching of an M x K cost matrix
/// (predictions x ground truths). Every ground truth receives exactly one
/// prediction; the remaining M - K predictions are background.
///
/// Throws `Infeasible` when M < K and `InvalidArgument` on non-finite
/// entries.
inline MatchResult SolveAssignment(const MatrixD& cost) {
  if (cost.rows() < cost.cols()) {
    throw Infeasible("one-to-one matching needs at least as many predictions (" +
                     std::to_string(cost.rows()) + ") as ground truths (" +
                     std::to_string(cost.cols()) + ")");
  }
  detail::CheckFinite(cost);
  MatchResult result{Assignment(cost.rows()), 0.0};
  if (cost.cols() == 0) return result;
  const std::vector<std::size_t> match = detail::HungarianColumns(cost);
  for (std::size_t gt = 0; gt < match.size(); ++gt) {
    result.assignment[match[gt]] = static_cast<Label>(gt);
  }
  result.total_cost = detail::MatchedCost(cost, result.assignment);
  return result;
}

/// Minimum-cost assignment giving every ground truth exactly `b`
/// predictions. Solved as a one-to-one matching against the cost matrix
/// with each column repeated `b` times, then folded back.
inline MatchResult SolveBMatching(const MatrixD& cost, int b) {
  if (b < 1) throw InvalidArgument("b must be a positive integer");
  const std::size_t copies = static_cast<std::size_t>(b);
  if (cost.rows() < copies * cost.cols()) {
    throw Infeasible("b-matching with b=" + std::to_string(b) + " needs " +
                     std::to_string(copies * cost.cols()) +
                     " predictions, got " + std::to_string(cost.rows()));
  }
  MatrixD expanded(cost.rows(), cost.cols() * copies);
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    for (std::size_t k = 0; k < cost.cols(); ++k) {
      for (std::size_t c = 0; c < copies; ++c) {
        expanded(i, k * copies + c) = cost(i, k);
      }
    }
  }
  MatchResult result = SolveAssignment(expanded);
  for (Label& l : result.assignment.labels) {
    if (IsPositive(l)) l = static_cast<Label>(static_cast<std::size_t>(l) / copies);
  }
  result.total_cost = detail::MatchedCost(cost, result.assignment);
  return result;
}

}  // namespace assignkit
