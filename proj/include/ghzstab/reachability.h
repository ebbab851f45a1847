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

#ifndef GHZSTAB_REACHABILITY_H_
#define GHZSTAB_REACHABILITY_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ghzstab/control.h"
#include "ghzstab/model.h"
#include "ghzstab/qmat.h"

namespace ghzstab {

enum class RankFlavor { kFull, kZOnly };

/// Columns [xi, H1 xi, L1 H1 xi, .., Lmz H1 xi, (Lx H1 xi), .., H1^l xi, ..]
/// with unscaled measurement operators.
struct RankMatrix {
  Eigen::MatrixXcd columns;
  int depth = 0;
  RankFlavor flavor = RankFlavor::kFull;
};

/// `xi` is expressed in the model's frame. Throws std::invalid_argument for
/// l < 0, a full flavor without x-type channel, or a model without controls.
RankMatrix build_rank_matrix(const SystemModel& model, const ComplexVector& xi,
                             int depth, RankFlavor flavor);

/// Singular values above tol * (largest singular value); 0 for a zero matrix.
int numeric_rank(const RankMatrix& m, double tol = 1e-10);
int numeric_rank(const Eigen::MatrixXcd& m, double tol = 1e-10);

/// Smallest depth in [0, cap] whose rank reaches `required`, if any.
std::optional<int> first_depth_with_rank(const SystemModel& model,
                                         const ComplexVector& xi,
                                         RankFlavor flavor, int required,
                                         int cap);

enum class Verdict { kPass, kFail, kAssumed, kNotApplicable };
std::string to_string(Verdict v);

struct RankEntry {
  GhzIndex seed;
  /// Rank at the cap depth.
  int rank = 0;
  /// First depth reaching the required rank.
  std::optional<int> depth;
};

struct SamplingResult {
  long requested = 0;
  /// States drawn from the intersection set outside the excluded ball.
  long sampled = 0;
  /// Vertices of the population polytope of the intersection set.
  int vertices = 0;
  /// min over samples of LHS - RHS; empty when nothing was sampled.
  std::optional<double> margin;
  /// The intersection set reduces to the target: condition holds vacuously.
  bool vacuous = false;
  /// Populations (slot order) of the worst sample.
  std::vector<double> worst_populations;
};

struct ConditionsReport {
  RankFlavor flavor = RankFlavor::kFull;
  std::string law;
  GhzIndex target;

  AssumptionReport assumptions;

  /// (A2) for single-control laws / (A) for the z-only setting.
  Verdict a2 = Verdict::kFail;
  std::string a2_detail;
  double u_at_target = 0.0;
  /// Max-norm of the controlled drift at the target.
  double control_drift_at_target = 0.0;
  std::vector<A2Entry> a2_entries;

  /// (i) / (B): established per law family.
  Verdict cond_i = Verdict::kFail;
  std::string cond_i_detail;

  /// (ii): rank >= N-1 at the target seed. (C): rank == N at every seed.
  Verdict cond_ii = Verdict::kFail;
  RankEntry target_rank;
  Verdict cond_c = Verdict::kFail;
  std::vector<RankEntry> seed_ranks;
  int depth_cap = 0;

  /// (iii), sampled.
  Verdict cond_iii = Verdict::kNotApplicable;
  SamplingResult sampling;

  /// [H1 + H2, rhobar] == 0, needed by the two-control law.
  Verdict commuting_sum = Verdict::kNotApplicable;
  double commuting_sum_norm = 0.0;

  /// l_k strictly above or strictly below every other l_n.
  bool extremal_target = false;

  /// Conjunction of the verdicts relevant to the flavor (kAssumed counts as
  /// holding but is surfaced in the summary).
  bool pass = false;

  std::string summary() const;
};

struct ConditionOptions {
  long samples = 10000;
  double exclusion_radius = 0.05;
  /// 0 selects 2N.
  int depth_cap = 0;
  std::uint64_t seed = 1;
};

/// Checks the stabilizability conditions for `law` on `model`. Uses the full
/// flavor when the model has an x-type channel, the z-only flavor otherwise.
ConditionsReport check_conditions(const SystemModel& model,
                                  const FeedbackLaw& law,
                                  const ConditionOptions& options = {});

/// Vertices (GHZ populations in slot order) of {p >= 0, sum p = 1,
/// sum_s l^{(i)}(s) p_s = l^{(i)}_k, sum_s x(s) p_s = eps}.
std::vector<RealVector> intersection_vertices(const SystemModel& model,
                                              GhzIndex target);

}  // namespace ghzstab

#endif  // GHZSTAB_REACHABILITY_H_
