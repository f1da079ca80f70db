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

#include "assignkit/matching.hpp"

#include <gtest/gtest.h>

#include <limits>

#include "oracles.hpp"
#include "test_util.hpp"

namespace assignkit {
namespace {

using testing::Rng;

TEST(SolveAssignmentTest, DominantDiagonal) {
  const auto r = SolveAssignment(MatrixD::FromRows({{1, 2}, {2, 1}}));
  EXPECT_EQ(r.assignment.labels, (std::vector<Label>{0, 1}));
  EXPECT_EQ(r.total_cost, 2.0);
}

TEST(SolveAssignmentTest, ThreeByThree) {
  const MatrixD c = MatrixD::FromRows({{4, 1, 3}, {2, 0, 5}, {3, 2, 2}});
  const auto r = SolveAssignment(c);
  EXPECT_EQ(r.assignment.labels, (std::vector<Label>{1, 0, 2}));
  EXPECT_EQ(r.total_cost, 5.0);
  EXPECT_EQ(r.total_cost, oracle::BruteForceMinCost(c));
}

TEST(SolveAssignmentTest, SingleColumn) {
  const auto r = SolveAssignment(MatrixD::FromRows({{5}, {1}, {3}}));
  EXPECT_EQ(r.assignment.labels, (std::vector<Label>{kBackground, 0, kBackground}));
}

TEST(SolveAssignmentTest, NoGroundTruths) {
  const auto r = SolveAssignment(MatrixD(3, 0));
  EXPECT_EQ(r.assignment.NumPositives(), 0u);
  EXPECT_EQ(r.total_cost, 0.0);
}

TEST(SolveAssignmentTest, Errors) {
  EXPECT_THROW(SolveAssignment(MatrixD(1, 2)), Infeasible);
  MatrixD c(2, 2);
  c(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(SolveAssignment(c), InvalidArgument);
}

TEST(SolveAssignmentTest, TiesGoToLowestPrediction) {
  const auto r = SolveAssignment(MatrixD(4, 2, 1.0));
  EXPECT_EQ(r.assignment.labels, (std::vector<Label>{0, 1, kBackground, kBackground}));
}

TEST(SolveAssignmentProperty, OptimalAgainstBruteForce) {
  Rng rng(21);
  for (int t = 0; t < 300; ++t) {
    const std::size_t k = testing::UniformInt(rng, 1, 6);
    const std::size_t m = testing::UniformInt(rng, static_cast<int>(k), 7);
    const MatrixD c = testing::RandomMatrix(rng, m, k, t % 2 == 0);
    const auto r = SolveAssignment(c);
    EXPECT_EQ(r.total_cost, oracle::BruteForceMinCost(c));
    // Every gt exactly once.
    const auto counts = r.assignment.CountsPerGt(k);
    for (auto n : counts) EXPECT_EQ(n, 1);
  }
}

TEST(SolveAssignmentProperty, ColumnShiftKeepsLabels) {
  Rng rng(22);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = testing::UniformInt(rng, 1, 6);
    const std::size_t m = testing::UniformInt(rng, static_cast<int>(k), 9);
    const MatrixD c = testing::RandomMatrix(rng, m, k, false);
    MatrixD shifted = c;
    const std::size_t col = testing::UniformInt(rng, 0, static_cast<int>(k) - 1);
    // Power-of-two shift keeps the addition exact on most entries.
    for (std::size_t i = 0; i < m; ++i) shifted(i, col) += 16.0;
    EXPECT_EQ(SolveAssignment(c).assignment, SolveAssignment(shifted).assignment);
  }
}

TEST(SolveBMatchingTest, TwoSmallest) {
  const auto r = SolveBMatching(MatrixD::FromRows({{3}, {1}, {2}, {5}}), 2);
  EXPECT_EQ(r.assignment.labels, (std::vector<Label>{kBackground, 0, 0, kBackground}));
  EXPECT_EQ(r.total_cost, 3.0);
}

TEST(SolveBMatchingTest, Errors) {
  EXPECT_THROW(SolveBMatching(MatrixD(4, 2), 0), InvalidArgument);
  EXPECT_THROW(SolveBMatching(MatrixD(4, 2), 3), Infeasible);
}

TEST(SolveBMatchingProperty, BEqualsOneIsSolveAssignment) {
  Rng rng(23);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = testing::UniformInt(rng, 0, 8);
    const std::size_t m = testing::UniformInt(rng, static_cast<int>(k), 12);
    const MatrixD c = testing::RandomMatrix(rng, m, k, t % 3 == 0);
    const auto a = SolveAssignment(c);
    const auto b = SolveBMatching(c, 1);
    EXPECT_EQ(a.assignment, b.assignment);
    EXPECT_EQ(a.total_cost, b.total_cost);
  }
}

TEST(SolveBMatchingProperty, MatchesExhaustiveSearch) {
  Rng rng(24);
  for (int b : {2, 3}) {
    for (int t = 0; t < 10; ++t) {
      const MatrixD c = testing::RandomMatrix(rng, 9, 2, t % 2 == 0);
      const auto r = SolveBMatching(c, b);
      EXPECT_EQ(r.total_cost, oracle::ExhaustiveBMatchingCost(c, b));
      for (auto n : r.assignment.CountsPerGt(2)) EXPECT_EQ(n, b);
    }
  }
}

TEST(SolveBMatchingProperty, MultiplicityIsB) {
  Rng rng(25);
  for (int b : {1, 2, 4, 8}) {
    for (int t = 0; t < 10; ++t) {
      const std::size_t k = testing::UniformInt(rng, 1, 5);
      const std::size_t m = b * k + testing::UniformInt(rng, 0, 10);
      const auto r = SolveBMatching(testing::RandomMatrix(rng, m, k, false), b);
      for (auto n : r.assignment.CountsPerGt(k)) EXPECT_EQ(n, b);
    }
  }
}

}  // namespace
}  // namespace assignkit
