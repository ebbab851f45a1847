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

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace ghzstab {
namespace {

void require_square_pair(const ComplexMatrix& a, const ComplexMatrix& b,
                         const char* what) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    std::ostringstream msg;
    msg << what << ": expected square matrices of equal size, got " << a.rows()
        << "x" << a.cols() << " and " << b.rows() << "x" << b.cols();
    throw DimensionError(msg.str());
  }
}

}  // namespace

HermitianMatrix::HermitianMatrix(ComplexMatrix m, double tol)
    : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) {
    throw DimensionError("HermitianMatrix: matrix is not square");
  }
  if (!all_finite(m_)) {
    throw std::invalid_argument("HermitianMatrix: non-finite entry");
  }
  const double defect = max_abs(m_ - m_.adjoint());
  if (defect > tol) {
    std::ostringstream msg;
    msg << "HermitianMatrix: ||A - A^dagger||_max = " << defect
        << " exceeds " << tol;
    throw std::invalid_argument(msg.str());
  }
}

bool HermitianMatrix::is_diagonal() const {
  for (Eigen::Index i = 0; i < m_.rows(); ++i) {
    for (Eigen::Index j = 0; j < m_.cols(); ++j) {
      if (i != j && m_(i, j) != Complex(0.0)) return false;
    }
  }
  return true;
}

ComplexMatrix identity(Eigen::Index dim) {
  return ComplexMatrix::Identity(dim, dim);
}

ComplexMatrix pauli_x() {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

ComplexMatrix pauli_y() {
  ComplexMatrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}

ComplexMatrix pauli_z() {
  ComplexMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const Eigen::Index p = b.rows();
  const Eigen::Index q = b.cols();
  ComplexMatrix out(a.rows() * p, a.cols() * q);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * p, j * q, p, q) = a(i, j) * b;
    }
  }
  return out;
}

ComplexMatrix kron_all(std::span<const ComplexMatrix> factors) {
  if (factors.empty()) {
    throw std::invalid_argument("kron_all: no factors");
  }
  ComplexMatrix out = factors.front();
  for (const auto& f : factors.subspan(1)) out = kron(out, f);
  return out;
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_square_pair(a, b, "commutator");
  return a * b - b * a;
}

Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_square_pair(a, b, "trace_product");
  // Tr(AB) = sum_ij A_ij B_ji; row-major A pairs with columns of B.
  return (a.array() * b.transpose().array()).sum();
}

double max_abs(const ComplexMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

bool all_finite(const ComplexMatrix& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const Complex z = a.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

EigenDecomposition eig_hermitian(const HermitianMatrix& a,
                                 const Tolerances& tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eig_hermitian: eigen-solver did not converge");
  }
  EigenDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  const ComplexMatrix rebuilt =
      out.vectors * out.values.cast<Complex>().asDiagonal() *
      out.vectors.adjoint();
  const double err = max_abs(a.matrix() - rebuilt);
  // Scale by the spectral radius so large operators are not penalised.
  const double scale = std::max(1.0, out.values.cwiseAbs().maxCoeff());
  if (err > tol.reconstruction * scale) {
    std::ostringstream msg;
    msg << "eig_hermitian: reconstruction error " << err;
    throw NumericalError(msg.str());
  }
  return out;
}

RealVector hermitian_eigenvalues(const ComplexMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("hermitian_eigenvalues: no convergence");
  }
  return solver.eigenvalues();
}

RealVector singular_values(const Eigen::MatrixXcd& a) {
  if (a.size() == 0) return RealVector();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  return svd.singularValues();
}

std::string to_string(const ComplexMatrix& a, int precision) {
  std::ostringstream out;
  out.precision(precision);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) out << "  ";
      out << a(i, j);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace ghzstab
