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

#ifndef GHZSTAB_MODEL_H_
#define GHZSTAB_MODEL_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ghzstab/qmat.h"

namespace ghzstab {

/// Largest supported register; keeps every operator at N <= 16.
inline constexpr int kMaxQubits = 4;

enum class Sign { kPlus, kMinus };

inline int sign_value(Sign s) { return s == Sign::kPlus ? 1 : -1; }
inline char sign_char(Sign s) { return s == Sign::kPlus ? '+' : '-'; }
inline Sign flip(Sign s) { return s == Sign::kPlus ? Sign::kMinus : Sign::kPlus; }

/// Addresses ghz^{sign}_k with 1 <= k <= N/2.
struct GhzIndex {
  int k = 1;
  Sign sign = Sign::kPlus;

  friend bool operator==(const GhzIndex&, const GhzIndex&) = default;
};

/// "GHZ+_3" style label.
std::string to_string(GhzIndex idx);

/// Representation in which matrices are stored. The GHZ frame is the
/// computational frame conjugated by U, where U stacks the GHZ vectors as
/// columns in (1,+)..(N/2,+),(1,-)..(N/2,-) order.
enum class Frame { kComputational, kGhz };

/// ghz^{sign}_k in the computational basis: (|k_1..k_n> +- |1-k_1..1-k_n>)/sqrt2
/// with k_1 = 0 and k_2..k_n the binary digits of k-1. Throws
/// std::out_of_range unless 1 <= k <= 2^{n-1}.
ComplexVector ghz_vector(int n, int k, Sign sign);

class GhzBasis {
 public:
  explicit GhzBasis(int n, Frame frame = Frame::kComputational);

  int qubits() const { return n_; }
  int dim() const { return dim_; }
  int half() const { return dim_ / 2; }
  Frame frame() const { return frame_; }

  /// Position in the stacked order; (k,+) -> k-1, (k,-) -> N/2 + k-1.
  int slot(GhzIndex idx) const;
  GhzIndex index_at(int slot) const;
  /// All 2^n indices in slot order.
  std::vector<GhzIndex> indices() const;

  /// The GHZ vector expressed in this basis' frame.
  ComplexVector vector(GhzIndex idx) const;
  ComplexMatrix projector(GhzIndex idx) const;

  /// Columns are the GHZ vectors in the computational basis.
  const ComplexMatrix& unitary() const { return unitary_; }

  /// Tr(rho GHZ^{sign}_k) for rho stored in this frame.
  double population(const ComplexMatrix& rho, GhzIndex idx) const;
  /// Populations in slot order.
  RealVector populations(const ComplexMatrix& rho) const;
  /// 1 - Tr(rho GHZ) summed from the other populations, so it stays
  /// accurate when the fidelity is within roundoff of one.
  double infidelity(const ComplexMatrix& rho, GhzIndex idx) const;
  /// ghz^dagger A B ghz, the building block of Tr(i[H,rho] GHZ).
  Complex sandwich(const ComplexMatrix& a, const ComplexMatrix& b,
                   GhzIndex idx) const;

  /// Converts a computational-frame matrix into this frame and back.
  ComplexMatrix to_frame(const ComplexMatrix& computational) const;
  ComplexMatrix from_frame(const ComplexMatrix& framed) const;
  ComplexVector vector_to_frame(const ComplexVector& computational) const;

 private:
  int n_;
  int dim_;
  Frame frame_;
  ComplexMatrix unitary_;
};

/// Per-qubit choice: true for sigma_z, false for the identity.
using ZPattern = std::vector<bool>;

/// Parses "z,1,z" (also accepts "Z", "I", "1"). Throws std::invalid_argument.
ZPattern parse_z_pattern(std::string_view text);
std::string to_string(const ZPattern& pattern);

/// Kronecker product of the pattern; requires an even and non-zero number of
/// sigma_z factors.
HermitianMatrix build_z_operator(int n, const ZPattern& pattern);
/// Like build_z_operator but also accepts the all-identity pattern. Used for
/// span-completeness checks only, never as a measurement operator.
HermitianMatrix build_pattern_product(int n, const ZPattern& pattern);
/// The 2^{n-1} patterns with an even number of sigma_z (identity included).
std::vector<ZPattern> even_z_patterns(int n);
/// sigma_x^{(x) n}.
HermitianMatrix build_x_operator(int n);

/// Sum of weighted Pauli strings, e.g. "IIX + IXX - 0.5*ZYX".
/// Throws std::invalid_argument on malformed input or a non-Hermitian result.
HermitianMatrix parse_pauli_sum(int n, std::string_view text);

enum class ChannelKind { kZ, kX };

class MeasurementChannel {
 public:
  /// `op` is the unscaled operator; the scaled one is sqrt(strength) * op.
  /// Throws std::invalid_argument unless strength > 0 and 0 < efficiency <= 1.
  MeasurementChannel(HermitianMatrix op, double strength, double efficiency,
                     ChannelKind kind);

  const HermitianMatrix& unscaled() const { return unscaled_; }
  const HermitianMatrix& scaled() const { return scaled_; }
  double strength() const { return strength_; }
  double efficiency() const { return efficiency_; }
  ChannelKind kind() const { return kind_; }

  /// Same channel with both operators conjugated into `basis`' frame.
  MeasurementChannel in_frame(const GhzBasis& basis) const;

 private:
  HermitianMatrix unscaled_;
  HermitianMatrix scaled_;
  double strength_;
  double efficiency_;
  ChannelKind kind_;
};

/// n qubits, free Hamiltonian, measurement channels and control Hamiltonians.
/// The constructor validates dimensions and the z/x channel shapes in the
/// computational frame; (A0) and (A1) are reported by check_assumptions, not
/// enforced, so that violating models can still be inspected.
class SystemModel {
 public:
  SystemModel(int n, HermitianMatrix h0,
              std::vector<MeasurementChannel> channels,
              std::vector<HermitianMatrix> controls);

  int qubits() const { return basis_.qubits(); }
  int dim() const { return basis_.dim(); }
  Frame frame() const { return basis_.frame(); }
  const GhzBasis& basis() const { return basis_; }

  const HermitianMatrix& h0() const { return h0_; }
  const std::vector<MeasurementChannel>& channels() const { return channels_; }
  const std::vector<HermitianMatrix>& controls() const { return controls_; }

  /// Channel positions of the z-type channels, in declaration order.
  const std::vector<int>& z_channels() const { return z_channels_; }
  /// Channel position of the x-type channel, if any.
  std::optional<int> x_channel() const { return x_channel_; }
  bool has_x_channel() const { return x_channel_.has_value(); }

  /// Sum of the unscaled z-type operators.
  const ComplexMatrix& z_sum() const { return z_sum_; }
  /// The unscaled x-type operator; throws std::logic_error if absent.
  const ComplexMatrix& x_operator() const;

  /// Copy with every operator conjugated into `frame`.
  SystemModel in_frame(Frame frame) const;

 private:
  struct Unchecked {};
  SystemModel(Unchecked, GhzBasis basis, HermitianMatrix h0,
              std::vector<MeasurementChannel> channels,
              std::vector<HermitianMatrix> controls);
  void index_channels();

  GhzBasis basis_;
  HermitianMatrix h0_;
  std::vector<MeasurementChannel> channels_;
  std::vector<HermitianMatrix> controls_;
  std::vector<int> z_channels_;
  std::optional<int> x_channel_;
  ComplexMatrix z_sum_;
};

/// Spectral constants of the z-type measurements for a chosen target.
struct SpectralData {
  /// Eigenvalues of the unscaled z-sum on ghz_k, k = 1..N/2.
  std::vector<double> l;
  /// Per z-channel eigenvalue tables: channel_l[i][k-1] = l^{(i)}_k.
  std::vector<std::vector<double>> channel_l;
  /// Minimal gap; empty when two l_k coincide.
  std::optional<double> ell;
  GhzIndex target;
  double c_plus = 0.0;
  double c_minus = 0.0;
  /// min over z-channels of eta*M.
  double gamma_z = 0.0;
  /// min over all channels of eta*M.
  double gamma_m = 0.0;
  int m_z = 0;
};

/// Throws std::invalid_argument if the model has no z-type channel or (A0)
/// does not hold.
SpectralData spectral_data(const SystemModel& model, GhzIndex target);

struct AssumptionReport {
  bool a0 = false;
  /// Worst off-diagonal element in the GHZ frame when (A0) fails.
  std::string a0_operator;
  int a0_row = -1;
  int a0_col = -1;
  double a0_magnitude = 0.0;

  bool a1 = false;
  /// 1-based pair (i, j) with l_i == l_j when (A1) fails.
  int a1_first = -1;
  int a1_second = -1;

  std::string summary() const;
};

AssumptionReport check_assumptions(const SystemModel& model,
                                   const Tolerances& tol = kDefaultTolerances);

}  // namespace ghzstab

#endif  // GHZSTAB_MODEL_H_
