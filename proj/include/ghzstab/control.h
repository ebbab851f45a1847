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

#ifndef GHZSTAB_CONTROL_H_
#define GHZSTAB_CONTROL_H_

#include <string>
#include <variant>
#include <vector>

#include "ghzstab/model.h"
#include "ghzstab/qmat.h"

namespace ghzstab {

/// u == 0 on every control.
struct ZeroLaw {};

/// u = alpha (1 - Tr(rho rhobar))^beta.
struct FidelityPower {
  double alpha = 10.0;
  double beta = 7.0;
};

/// u = alpha (l_k - Tr(Lz rho))^beta + gamma (eps - Tr(Lx rho))^delta.
struct MixedPower {
  double alpha = 1.0;
  double beta = 5.0;
  double gamma = 1.0;
  double delta = 5.0;
};

/// u1 = gamma - Tr(i[H1,rho] rhobar),
/// u2 = f(Tr(rho rhobar)) (gamma - Tr(i[H2,rho] rhobar)).
struct TwoHamiltonian {
  double gamma = 5.0;
  double eps1 = 0.1;
  double eps2 = 0.6;
};

using LawVariant =
    std::variant<ZeroLaw, FidelityPower, MixedPower, TwoHamiltonian>;

/// A feedback law bound to its target. Stateless; evaluate() is a pure
/// function of the state, so one instance can serve every worker thread.
class FeedbackLaw {
 public:
  /// Throws std::invalid_argument for out-of-range parameters.
  FeedbackLaw(LawVariant variant, GhzIndex target);

  static FeedbackLaw zero(GhzIndex target = {}) { return {ZeroLaw{}, target}; }

  const LawVariant& variant() const { return variant_; }
  GhzIndex target() const { return target_; }
  std::string name() const;
  bool is_zero() const { return std::holds_alternative<ZeroLaw>(variant_); }

  /// Number of control values evaluate() produces against `model`. The zero
  /// law produces one zero per control Hamiltonian of the model.
  int control_count(const SystemModel& model) const;

  /// `rho` is stored in model.frame(). Throws std::invalid_argument when the
  /// model lacks what the law needs (an x-channel for MixedPower, two
  /// control Hamiltonians for TwoHamiltonian).
  std::vector<double> evaluate(const ComplexMatrix& rho,
                               const SystemModel& model) const;

 private:
  LawVariant variant_;
  GhzIndex target_;
};

/// x^p for integer p, sign(x)|x|^p otherwise; continuous through zero.
double signed_power(double x, double p);

/// The C^1 sine blend that is 0 below eps1 and 1 above eps2. Throws
/// std::invalid_argument unless 0 <= x <= 1 and 0 < eps1 < eps2 < 1; inputs
/// within 1e-9 of the interval are clamped first.
double smoothstep_f(double x, double eps1, double eps2);

/// Tr(i[H,rho] |v><v|) for a unit vector v (all in one frame). Throws
/// NumericalError if the imaginary part exceeds 1e-12.
double commutator_overlap(const ComplexMatrix& rho, const ComplexMatrix& h,
                          const ComplexVector& v);

/// u Tr(i[H,rho] rhobar) with rhobar = |v><v|.
double theta_u(const ComplexMatrix& rho, const ComplexMatrix& h,
               const ComplexVector& target, double u);

struct A2Entry {
  GhzIndex state;
  double u = 0.0;
  double commutator_norm = 0.0;
  bool pass = false;
};

struct A2Report {
  bool applicable = true;
  double u_at_target = 0.0;
  bool vanishes_at_target = false;
  std::vector<A2Entry> entries;
  bool pass = false;
  std::string note;
};

/// u(rhobar) = 0 and |u(rho)| ||[H1,rho]|| > 1e-8 at every other GHZ state.
/// Only meaningful for single-control laws; TwoHamiltonian is reported as
/// not applicable (see check_combined_equilibrium).
A2Report check_A2(const FeedbackLaw& law, const SystemModel& model);

/// Max-norm of -i sum_j u_j(rhobar) [H_j, rhobar]; zero when the target is an
/// equilibrium of the controlled drift even if individual u_j do not vanish.
double combined_control_drift(const FeedbackLaw& law, const SystemModel& model);

}  // namespace ghzstab

#endif  // GHZSTAB_CONTROL_H_
