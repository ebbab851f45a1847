// Copyright 2026 The ghzstab Authors
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

#include "ghzstab/reachability.h"

#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace ghzstab {
namespace {

using testing::ghz;
using testing::three_qubit_model;

SystemModel single_control(bool with_x) {
  const SystemModel m = three_qubit_model(with_x);
  return SystemModel(3, m.h0(), m.channels(), {m.controls()[0]});
}

TEST(NumericRankTest, Basics) {
  Eigen::MatrixXcd dup(4, 3);
  for (int c = 0; c < 3; ++c) dup.col(c) << 1.0, 2.0, Complex(0, 1), -1.0;
  EXPECT_EQ(numeric_rank(dup), 1);
  EXPECT_EQ(numeric_rank(Eigen::MatrixXcd::Identity(8, 8)), 8);
  EXPECT_EQ(numeric_rank(Eigen::MatrixXcd::Zero(3, 3)), 0);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd noisy = dup;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) noisy(i, j) += 1e-14 * normal(rng);
  }
  EXPECT_EQ(numeric_rank(noisy), 1);
}

TEST(RankMatrixTest, ColumnLayout) {
  const SystemModel model = three_qubit_model();
  const ComplexVector xi = ghz(3, 1, 1);
  const RankMatrix zero = build_rank_matrix(model, xi, 0, RankFlavor::kFull);
  EXPECT_EQ(zero.columns.cols(), 1);
  EXPECT_EQ(numeric_rank(zero), 1);

  const RankMatrix full = build_rank_matrix(model, xi, 2, RankFlavor::kFull);
  EXPECT_EQ(full.columns.cols(), 1 + 2 * (2 + 2));
  const RankMatrix z = build_rank_matrix(model, xi, 2, RankFlavor::kZOnly);
  EXPECT_EQ(z.columns.cols(), 1 + 2 * (2 + 1));

  // [xi, H1 xi, L1 H1 xi, L2 H1 xi, Lx H1 xi, H1^2 xi, ...] with unscaled L.
  const ComplexMatrix h1 = model.controls()[0].matrix();
  const ComplexVector h1xi = h1 * xi;
  EXPECT_LT((full.columns.col(0) - xi).norm(), 1e-15);
  EXPECT_LT((full.columns.col(1) - h1xi).norm(), 1e-14);
  EXPECT_LT((full.columns.col(2) - testing::z_string(3, {0, 2}) * h1xi).norm(),
            1e-14);
  EXPECT_LT(
      (full.columns.col(3) - 2.0 * testing::z_string(3, {0, 1}) * h1xi).norm(),
      1e-14);
  EXPECT_LT((full.columns.col(4) - testing::x_all(3) * h1xi).norm(), 1e-14);
  EXPECT_LT((full.columns.col(5) - h1 * h1xi).norm(), 1e-13);

  EXPECT_THROW(build_rank_matrix(three_qubit_model(false), xi, 2,
                                 RankFlavor::kFull),
               std::invalid_argument);
  EXPECT_THROW(build_rank_matrix(model, xi, -1, RankFlavor::kFull),
               std::invalid_argument);
}

TEST(RankMatrixTest, FullRankAtExampleDepths) {
  const SystemModel full = three_qubit_model();
  const SystemModel z_only = three_qubit_model(false);
  for (int s = 0; s < 8; ++s) {
    const GhzIndex idx = full.basis().index_at(s);
    const ComplexVector xi = full.basis().vector(idx);
    EXPECT_EQ(numeric_rank(build_rank_matrix(full, xi, 3, RankFlavor::kFull)), 8)
        << to_string(idx);
    EXPECT_EQ(
        numeric_rank(build_rank_matrix(z_only, xi, 4, RankFlavor::kZOnly)), 8)
        << to_string(idx);
    EXPECT_LT(numeric_rank(build_rank_matrix(full, xi, 1, RankFlavor::kFull)), 8)
        << to_string(idx);
  }
}

TEST(RankMatrixTest, RankIsMonotoneInDepth) {
  const SystemModel model = three_qubit_model();
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexVector xi = testing::random_vector(8, rng);
    for (RankFlavor flavor : {RankFlavor::kFull, RankFlavor::kZOnly}) {
      int prev = 0;
      for (int depth = 0; depth <= 6; ++depth) {
        const int r = numeric_rank(build_rank_matrix(model, xi, depth, flavor));
        EXPECT_GE(r, prev);
        EXPECT_LE(r, 8);
        prev = r;
      }
    }
  }
}

TEST(RankMatrixTest, DiagonalControlNeverReachesFullRank) {
  // H1 = Lz keeps every column on the line through xi.
  const SystemModel base = three_qubit_model();
  const SystemModel model(3, base.h0(), base.channels(),
                          {HermitianMatrix(base.z_sum())});
  const ComplexVector xi = ghz(3, 1, 1);
  EXPECT_EQ(first_depth_with_rank(model, xi, RankFlavor::kFull, 7, 16),
            std::nullopt);
  EXPECT_EQ(numeric_rank(build_rank_matrix(model, xi, 16, RankFlavor::kFull)), 1);

  const ConditionsReport r = check_conditions(
      model, FeedbackLaw(FidelityPower{10.0, 7.0}, {1, Sign::kPlus}),
      {.samples = 200});
  EXPECT_EQ(r.cond_ii, Verdict::kFail);
  EXPECT_FALSE(r.pass);
}

TEST(ConditionsTest, FidelityPowerOnScenario) {
  const SystemModel model = single_control(true);
  ConditionOptions opt;
  opt.samples = 500;
  const ConditionsReport r = check_conditions(
      model, FeedbackLaw(FidelityPower{10.0, 7.0}, {1, Sign::kPlus}), opt);
  EXPECT_EQ(r.flavor, RankFlavor::kFull);
  EXPECT_TRUE(r.assumptions.a0);
  EXPECT_TRUE(r.assumptions.a1);
  EXPECT_EQ(r.a2, Verdict::kPass);
  EXPECT_EQ(r.cond_ii, Verdict::kPass);
  ASSERT_TRUE(r.target_rank.depth.has_value());
  EXPECT_LE(*r.target_rank.depth, 3);
  EXPECT_EQ(r.depth_cap, 16);
  EXPECT_EQ(r.seed_ranks.size(), 8u);
  EXPECT_TRUE(r.pass) << r.summary();
}

TEST(ConditionsTest, ZeroLawFailsA2) {
  const ConditionsReport r =
      check_conditions(single_control(true), FeedbackLaw::zero({1, Sign::kPlus}),
                       {.samples = 100});
  EXPECT_EQ(r.a2, Verdict::kFail);
  EXPECT_FALSE(r.pass);
}

TEST(ConditionsTest, TwoHamiltonianZOnly) {
  const ConditionsReport r = check_conditions(
      three_qubit_model(false),
      FeedbackLaw(TwoHamiltonian{5.0, 0.1, 0.6}, {1, Sign::kPlus}),
      {.samples = 100});
  EXPECT_EQ(r.flavor, RankFlavor::kZOnly);
  EXPECT_EQ(r.cond_c, Verdict::kPass);
  for (const RankEntry& e : r.seed_ranks) {
    EXPECT_EQ(e.rank, 8);
    ASSERT_TRUE(e.depth.has_value());
    EXPECT_LE(*e.depth, 4);
  }
  EXPECT_EQ(r.commuting_sum, Verdict::kPass);
  EXPECT_LT(r.commuting_sum_norm, 1e-12);
  EXPECT_TRUE(r.extremal_target);
}

TEST(IntersectionTest, VerticesSatisfyConstraints) {
  const SystemModel model = three_qubit_model();
  const GhzIndex target{2, Sign::kPlus};
  const std::vector<RealVector> verts = intersection_vertices(model, target);
  ASSERT_FALSE(verts.empty());
  const GhzBasis& basis = model.basis();
  for (const RealVector& p : verts) {
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), -1e-12);
    double z = 0.0, x = 0.0;
    for (int s = 0; s < 8; ++s) {
      const GhzIndex idx = basis.index_at(s);
      z += p(s) * basis.population(model.z_sum(), idx);
      x += p(s) * sign_value(idx.sign);
    }
    EXPECT_NEAR(z, 1.0, 1e-12);
    EXPECT_NEAR(x, 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace ghzstab
