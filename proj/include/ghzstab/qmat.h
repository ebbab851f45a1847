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

#ifndef GHZSTAB_QMAT_H_
#define GHZSTAB_QMAT_H_

#include <complex>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ghzstab {

using Complex = std::complex<double>;
using ComplexMatrix =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Every numerical threshold used across the toolkit. Keeping them in one
/// record means a run's acceptance margins can be read off a single place.
struct Tolerances {
  /// Max-norm bound on A - A^dagger for a matrix to count as Hermitian.
  double hermitian = 1e-12;
  /// Max-norm bound on A - U diag(lambda) U^dagger.
  double reconstruction = 1e-10;
  /// Off-diagonal magnitude allowed in the GHZ frame for (A0).
  double frame_diagonal = 1e-10;
  /// |Tr(rho) - 1| allowed for a density matrix.
  double trace = 1e-10;
  /// Most negative eigenvalue allowed for a density matrix.
  double psd = 1e-10;
  /// Eigenvalues above this count toward the numerical rank of a state.
  double rank_eigenvalue = 1e-8;
  /// Relative singular-value cutoff for the rank of a column matrix.
  double rank_singular = 1e-10;
  /// Eigenvalues in [-clip_floor, 0) are roundoff and left untouched by the
  /// projection; anything below is clipped to zero.
  double clip_floor = 1e-14;
  /// A pre-projection eigenvalue below -abort_eigenvalue aborts the run.
  double abort_eigenvalue = 1e-2;
  /// Initial states violating the invariants by more than this are rejected;
  /// smaller violations are projected with a warning.
  double ingest = 1e-6;
};

inline constexpr Tolerances kDefaultTolerances{};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A square matrix certified Hermitian (and finite) at construction.
class HermitianMatrix {
 public:
  /// Throws DimensionError for non-square input and std::invalid_argument
  /// when ||A - A^dagger||_max exceeds `tol` or an entry is not finite.
  explicit HermitianMatrix(ComplexMatrix m,
                           double tol = kDefaultTolerances.hermitian);

  const ComplexMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

  /// True when every off-diagonal entry is exactly zero.
  bool is_diagonal() const;
  /// Real diagonal; only meaningful when is_diagonal().
  RealVector diagonal() const { return m_.diagonal().real(); }

 private:
  ComplexMatrix m_;
};

ComplexMatrix identity(Eigen::Index dim);
ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();

/// (A (x) B)_{p(i-1)+r, q(j-1)+s} = A_{ij} B_{rs}.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
/// Left-to-right Kronecker product of a non-empty list.
ComplexMatrix kron_all(std::span<const ComplexMatrix> factors);

/// AB - BA.
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

/// Tr(AB) evaluated without forming the product.
Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b);

/// Largest absolute entry.
double max_abs(const ComplexMatrix& a);

bool all_finite(const ComplexMatrix& a);

struct EigenDecomposition {
  RealVector values;     // ascending
  ComplexMatrix vectors; // columns are the eigenvectors
};

/// Throws NumericalError if the solver does not converge or the
/// reconstruction check fails.
EigenDecomposition eig_hermitian(const HermitianMatrix& a,
                                 const Tolerances& tol = kDefaultTolerances);

/// Ascending eigenvalues of a matrix assumed Hermitian (lower triangle read).
RealVector hermitian_eigenvalues(const ComplexMatrix& a);

/// Descending singular values of an arbitrary (possibly rectangular) matrix.
RealVector singular_values(const Eigen::MatrixXcd& a);

std::string to_string(const ComplexMatrix& a, int precision = 4);

}  // namespace ghzstab

#endif  // GHZSTAB_QMAT_H_
