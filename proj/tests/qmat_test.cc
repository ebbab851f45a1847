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

#include "ghzstab/qmat.h"

#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.h"

namespace ghzstab {
namespace {

using testing::random_hermitian;
using testing::random_state;

ComplexMatrix diag(std::initializer_list<double> d) {
  ComplexMatrix m = ComplexMatrix::Zero(d.size(), d.size());
  int i = 0;
  for (double x : d) m(i, i) = x, ++i;
  return m;
}

TEST(KronTest, IdentityCase) {
  EXPECT_EQ(kron(identity(2), identity(2)), identity(4));
}

TEST(KronTest, DiagonalProducts) {
  EXPECT_EQ(kron(pauli_z(), pauli_z()), diag({1, -1, -1, 1}));
  EXPECT_EQ(kron(kron(pauli_z(), identity(2)), pauli_z()),
            diag({1, -1, 1, -1, -1, 1, -1, 1}));
}

TEST(KronTest, IndexRuleOnRandomBlocks) {
  std::mt19937_64 rng(7);
  const ComplexMatrix a = random_hermitian(3, rng);
  const ComplexMatrix b = random_hermitian(2, rng);
  const ComplexMatrix k = kron(a, b);
  ASSERT_EQ(k.rows(), 6);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int r = 0; r < 2; ++r) {
        for (int s = 0; s < 2; ++s) {
          EXPECT_EQ(k(2 * i + r, 2 * j + s), a(i, j) * b(r, s));
        }
      }
    }
  }
}

TEST(KronTest, KronAllMatchesNested) {
  const std::vector<ComplexMatrix> f = {pauli_x(), pauli_y(), pauli_z()};
  EXPECT_EQ(kron_all(f), kron(kron(pauli_x(), pauli_y()), pauli_z()));
}

TEST(CommutatorTest, Basics) {
  std::mt19937_64 rng(1);
  const ComplexMatrix a = random_hermitian(4, rng);
  EXPECT_EQ(max_abs(commutator(a, a)), 0.0);
  EXPECT_EQ(max_abs(commutator(pauli_z(), diag({0.3, 0.7}))), 0.0);

  ComplexMatrix plus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  ComplexMatrix expected(2, 2);
  expected << 0, 1, -1, 0;
  EXPECT_LT(max_abs(commutator(pauli_z(), plus) - expected), 1e-15);
}

TEST(TraceProductTest, Basics) {
  std::mt19937_64 rng(2);
  const ComplexMatrix rho = random_state(8, rng);
  EXPECT_NEAR(trace_product(identity(8), rho).real(), 1.0, 1e-14);
  EXPECT_EQ(trace_product(pauli_z(), 0.5 * identity(2)), Complex(0.0, 0.0));
  EXPECT_EQ(trace_product(pauli_z(), diag({1, 0})), Complex(1.0, 0.0));

  const ComplexMatrix a = random_hermitian(8, rng);
  EXPECT_LT(std::abs(trace_product(a, rho) - (a * rho).trace()), 1e-13);
}

TEST(HermitianMatrixTest, RejectsNonHermitian) {
  ComplexMatrix m = pauli_x();
  m(0, 1) = 2.0;
  EXPECT_THROW(HermitianMatrix{m}, std::invalid_argument);
  EXPECT_THROW(HermitianMatrix(ComplexMatrix::Zero(2, 3)), DimensionError);
  ComplexMatrix nan = pauli_z();
  nan(0, 0) = std::nan("");
  EXPECT_THROW(HermitianMatrix{nan}, std::invalid_argument);
}

TEST(HermitianMatrixTest, DiagonalDetection) {
  EXPECT_TRUE(HermitianMatrix(pauli_z()).is_diagonal());
  EXPECT_FALSE(HermitianMatrix(pauli_x()).is_diagonal());
}

TEST(EigTest, DiagonalInput) {
  const EigenDecomposition e =
      eig_hermitian(HermitianMatrix(diag({3, 1, -1, -3, -3, -1, 1, 3})));
  const std::vector<double> expected = {-3, -3, -1, -1, 1, 1, 3, 3};
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(e.values(i), expected[i], 1e-14);
}

TEST(EigTest, PauliSpectrum) {
  const EigenDecomposition e = eig_hermitian(HermitianMatrix(pauli_x()));
  EXPECT_NEAR(e.values(0), -1.0, 1e-15);
  EXPECT_NEAR(e.values(1), 1.0, 1e-15);
}

TEST(EigTest, RandomReconstruction) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix a = random_hermitian(8, rng);
    const EigenDecomposition e = eig_hermitian(HermitianMatrix(a));
    const ComplexMatrix back =
        e.vectors * e.values.cast<Complex>().asDiagonal() * e.vectors.adjoint();
    EXPECT_LT(max_abs(back - a), 1e-12);
    for (int i = 1; i < 8; ++i) EXPECT_LE(e.values(i - 1), e.values(i));
    EXPECT_LT(max_abs(hermitian_eigenvalues(a).cast<Complex>() -
                      e.values.cast<Complex>()),
              1e-12);
  }
}

TEST(SingularValuesTest, DescendingAndRectangular) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 2);
  m(0, 0) = 2.0;
  m(1, 1) = Complex(0.0, 5.0);
  const RealVector s = singular_values(m);
  ASSERT_EQ(s.size(), 2);
  EXPECT_NEAR(s(0), 5.0, 1e-14);
  EXPECT_NEAR(s(1), 2.0, 1e-14);
}

}  // namespace
}  // namespace ghzstab
