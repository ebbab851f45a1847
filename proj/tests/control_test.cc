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

#include "ghzstab/control.h"

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace ghzstab {
namespace {

using testing::ghz;
using testing::projector;
using testing::three_qubit_model;

constexpr Complex kI(0.0, 1.0);

// Tr(i[H, rho] |v><v|) written out with full matrix products.
double overlap_oracle(const ComplexMatrix& rho, const ComplexMatrix& h,
                      const ComplexVector& v) {
  return (kI * (h * rho - rho * h) * projector(v)).trace().real();
}

TEST(SmoothstepTest, Plateaus) {
  EXPECT_EQ(smoothstep_f(0.0, 0.1, 0.6), 0.0);
  EXPECT_EQ(smoothstep_f(0.05, 0.1, 0.6), 0.0);
  EXPECT_EQ(smoothstep_f(0.7, 0.1, 0.6), 1.0);
  EXPECT_EQ(smoothstep_f(1.0, 0.1, 0.6), 1.0);
  EXPECT_NEAR(smoothstep_f(0.35, 0.1, 0.6), 0.5, 1e-15);
}

TEST(SmoothstepTest, MonotoneAndFlatAtEdges) {
  double prev = 0.0;
  for (double x = 0.0; x <= 1.0; x += 1e-3) {
    const double f = smoothstep_f(x, 0.1, 0.6);
    EXPECT_GE(f, prev - 1e-15);
    prev = f;
  }
  // Continuous first derivative: the one-sided slopes vanish at both edges.
  const double h = 1e-6;
  EXPECT_LT(smoothstep_f(0.1 + h, 0.1, 0.6) / h, 1e-4);
  EXPECT_LT((1.0 - smoothstep_f(0.6 - h, 0.1, 0.6)) / h, 1e-4);
}

TEST(SmoothstepTest, RejectsBadArguments) {
  EXPECT_THROW(smoothstep_f(0.5, 0.6, 0.1), std::invalid_argument);
  EXPECT_THROW(smoothstep_f(0.5, 0.0, 0.6), std::invalid_argument);
  EXPECT_THROW(smoothstep_f(1.1, 0.1, 0.6), std::invalid_argument);
  EXPECT_THROW(smoothstep_f(-0.1, 0.1, 0.6), std::invalid_argument);
  EXPECT_EQ(smoothstep_f(1.0 + 1e-12, 0.1, 0.6), 1.0);
}

TEST(SignedPowerTest, Values) {
  EXPECT_EQ(signed_power(-2.0, 5.0), -32.0);
  EXPECT_EQ(signed_power(-2.0, 4.0), 16.0);
  EXPECT_NEAR(signed_power(-0.25, 1.5), -0.125, 1e-15);
  EXPECT_EQ(signed_power(0.0, 1.5), 0.0);
}

TEST(ThetaUTest, MatchesExplicitProducts) {
  std::mt19937_64 rng(21);
  const SystemModel model = three_qubit_model();
  const ComplexMatrix& h1 = model.controls()[0].matrix();
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexMatrix rho = testing::random_state(8, rng);
    const ComplexVector v = ghz(3, 1 + trial % 4, trial % 2 ? -1 : 1);
    const double u = 0.1 * (trial - 5);
    EXPECT_NEAR(theta_u(rho, h1, v, u), u * overlap_oracle(rho, h1, v), 1e-13);
  }
  // Vanishes on any state commuting with H.
  const ComplexVector v = ghz(3, 1, 1);
  EXPECT_NEAR(theta_u(ComplexMatrix(ComplexMatrix::Identity(8, 8) / 8.0), h1, v, 3.0), 0.0, 1e-15);
}

TEST(FidelityPowerTest, ValuesAtGhzAndMixed) {
  const SystemModel model = three_qubit_model();
  const FeedbackLaw law(FidelityPower{10.0, 7.0}, {1, Sign::kPlus});
  EXPECT_EQ(law.control_count(model), 1);
  EXPECT_EQ(law.evaluate(projector(ghz(3, 1, 1)), model)[0], 0.0);
  EXPECT_NEAR(law.evaluate(projector(ghz(3, 3, -1)), model)[0], 10.0, 1e-12);
  const ComplexMatrix mixed = ComplexMatrix::Identity(8, 8) / 8.0;
  EXPECT_NEAR(law.evaluate(mixed, model)[0], 10.0 * std::pow(7.0 / 8.0, 7),
              1e-12);
}

TEST(FidelityPowerTest, SameValueInBothFrames) {
  std::mt19937_64 rng(4);
  const SystemModel model = three_qubit_model();
  const SystemModel framed = model.in_frame(Frame::kGhz);
  const FeedbackLaw law(FidelityPower{10.0, 7.0}, {4, Sign::kMinus});
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexMatrix rho = testing::random_state(8, rng);
    EXPECT_NEAR(law.evaluate(rho, model)[0],
                law.evaluate(framed.basis().to_frame(rho), framed)[0], 1e-13);
  }
}

TEST(MixedPowerTest, MatchesDirectFormula) {
  std::mt19937_64 rng(8);
  const SystemModel model = three_qubit_model();
  const MixedPower p{1.0, 5.0, 1.0, 5.0};
  const FeedbackLaw law(p, {2, Sign::kPlus});
  // l_2 = 1 for the z-sum sz1 sz3 + 2 sz1 sz2; eps = +1.
  const ComplexMatrix lz = testing::z_string(3, {0, 2}) +
                           2.0 * testing::z_string(3, {0, 1});
  const ComplexMatrix lx = testing::x_all(3);
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexMatrix rho = testing::random_state(8, rng);
    const double z = 1.0 - (lz * rho).trace().real();
    const double x = 1.0 - (lx * rho).trace().real();
    EXPECT_NEAR(law.evaluate(rho, model)[0], std::pow(z, 5) + std::pow(x, 5),
                1e-11);
  }
  EXPECT_NEAR(law.evaluate(projector(ghz(3, 2, 1)), model)[0], 0.0, 1e-13);
}

TEST(MixedPowerTest, VanishesAtMirrorGhzState) {
  // At GHZ-_1 the z residual is 1 - 3 = -2 and the x residual is 1 + 1 = 2,
  // so equal odd powers cancel and (A2) fails there.
  const SystemModel model = three_qubit_model();
  const FeedbackLaw law(MixedPower{1.0, 5.0, 1.0, 5.0}, {2, Sign::kPlus});
  EXPECT_NEAR(law.evaluate(projector(ghz(3, 1, -1)), model)[0], 0.0, 1e-12);
  const A2Report r = check_A2(law, model);
  EXPECT_TRUE(r.vanishes_at_target);
  EXPECT_FALSE(r.pass);
  int failing = 0;
  for (const A2Entry& e : r.entries) {
    if (!e.pass) {
      ++failing;
      EXPECT_EQ(e.state, (GhzIndex{1, Sign::kMinus}));
    }
  }
  EXPECT_EQ(failing, 1);
  // Unequal gains break the cancellation.
  EXPECT_TRUE(check_A2(FeedbackLaw(MixedPower{2.0, 5.0, 1.0, 5.0},
                                   {2, Sign::kPlus}),
                       model)
                  .pass);
}

TEST(MixedPowerTest, RequiresXChannel) {
  const SystemModel model = three_qubit_model(/*with_x=*/false);
  const FeedbackLaw law(MixedPower{}, {1, Sign::kPlus});
  EXPECT_THROW(law.evaluate(ComplexMatrix::Identity(8, 8) / 8.0, model),
               std::invalid_argument);
}

TEST(TwoHamiltonianTest, ValuesAtTarget) {
  const SystemModel model = three_qubit_model(/*with_x=*/false);
  const TwoHamiltonian p{5.0, 0.1, 0.6};
  const FeedbackLaw law(p, {1, Sign::kPlus});
  EXPECT_EQ(law.control_count(model), 2);
  const std::vector<double> u = law.evaluate(projector(ghz(3, 1, 1)), model);
  ASSERT_EQ(u.size(), 2u);
  EXPECT_NEAR(u[0], 5.0, 1e-12);
  EXPECT_NEAR(u[1], 5.0, 1e-12);
  // H1 + H2 commutes with the target, so the combined drift vanishes.
  EXPECT_LT(combined_control_drift(law, model), 1e-12);
  EXPECT_FALSE(check_A2(law, model).applicable);
}

TEST(TwoHamiltonianTest, MatchesDirectFormula) {
  std::mt19937_64 rng(10);
  const SystemModel model = three_qubit_model(/*with_x=*/false);
  const FeedbackLaw law(TwoHamiltonian{5.0, 0.1, 0.6}, {1, Sign::kPlus});
  const ComplexVector v = ghz(3, 1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexMatrix rho = testing::random_state(8, rng);
    const double fid = testing::fidelity(rho, v);
    const std::vector<double> u = law.evaluate(rho, model);
    EXPECT_NEAR(u[0], 5.0 - overlap_oracle(rho, model.controls()[0].matrix(), v),
                1e-12);
    EXPECT_NEAR(u[1],
                smoothstep_f(fid, 0.1, 0.6) *
                    (5.0 - overlap_oracle(rho, model.controls()[1].matrix(), v)),
                1e-12);
  }
}

TEST(FeedbackLawTest, RejectsBadParameters) {
  EXPECT_THROW(FeedbackLaw(FidelityPower{-1.0, 7.0}, {}), std::invalid_argument);
  EXPECT_THROW(FeedbackLaw(FidelityPower{1.0, 1.0}, {}), std::invalid_argument);
  EXPECT_THROW(FeedbackLaw(MixedPower{1.0, 0.5, 1.0, 5.0}, {}),
               std::invalid_argument);
  EXPECT_THROW(FeedbackLaw(TwoHamiltonian{5.0, 0.6, 0.1}, {}),
               std::invalid_argument);
  EXPECT_THROW(FeedbackLaw(ZeroLaw{}, {0, Sign::kPlus}), std::invalid_argument);
}

TEST(A2Test, IdentityControlFails) {
  const int n = 3;
  std::vector<MeasurementChannel> ch;
  ch.emplace_back(HermitianMatrix(testing::z_string(n, {0, 2})), 1.0, 1.0,
                  ChannelKind::kZ);
  const SystemModel model(n, HermitianMatrix(ComplexMatrix::Zero(8, 8)), ch,
                          {HermitianMatrix(ComplexMatrix::Identity(8, 8))});
  const A2Report r =
      check_A2(FeedbackLaw(FidelityPower{}, {1, Sign::kPlus}), model);
  EXPECT_TRUE(r.vanishes_at_target);
  EXPECT_FALSE(r.pass);
  for (const A2Entry& e : r.entries) EXPECT_EQ(e.commutator_norm, 0.0);
}

TEST(A2Test, ZeroLawFails) {
  const A2Report r =
      check_A2(FeedbackLaw::zero({1, Sign::kPlus}), three_qubit_model());
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.entries.size(), 7u);
}

TEST(A2Test, FidelityPowerPassesOnScenario) {
  const A2Report r = check_A2(FeedbackLaw(FidelityPower{10.0, 7.0},
                                          {4, Sign::kMinus}),
                              three_qubit_model());
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.u_at_target, 0.0);
}

}  // namespace
}  // namespace ghzstab
