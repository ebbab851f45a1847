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

#ifndef GHZSTAB_DYNAMICS_H_
#define GHZSTAB_DYNAMICS_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ghzstab/control.h"
#include "ghzstab/model.h"
#include "ghzstab/qmat.h"

namespace ghzstab {

/// Raised when a state cannot be accepted as a density matrix.
class InvalidState : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the pre-projection spectrum is too negative to repair.
class ProjectionFailure : public NumericalError {
 public:
  ProjectionFailure(const std::string& what, double min_eigenvalue)
      : NumericalError(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// A projection failure located in an ensemble.
class IntegrationAbort : public NumericalError {
 public:
  IntegrationAbort(const std::string& what, std::uint64_t trajectory,
                   double time)
      : NumericalError(what), trajectory_(trajectory), time_(time) {}
  std::uint64_t trajectory() const { return trajectory_; }
  double time() const { return time_; }

 private:
  std::uint64_t trajectory_;
  double time_;
};

/// What one projection had to repair.
struct ProjectionDiagnostics {
  /// ||rho - rho^dagger||_max before hermitizing.
  double hermitian_defect = 0.0;
  /// |Tr(rho) - 1| before renormalizing.
  double trace_defect = 0.0;
  /// Smallest eigenvalue before clipping.
  double min_eigenvalue = 0.0;
  /// Largest |lambda| removed by clipping (0 when nothing was clipped).
  double clip = 0.0;
  /// Eigenvalues above the rank threshold after projection.
  int rank = 0;
  /// Smallest eigenvalue after projection (estimated from the clipped
  /// spectrum).
  double post_min_eigenvalue = 0.0;
};

/// Hermitize, clip eigenvalues below -clip_floor, renormalize the trace.
/// Throws ProjectionFailure if the smallest eigenvalue is below
/// -abort_eigenvalue or the trace is not positive.
ProjectionDiagnostics project(ComplexMatrix& rho,
                              const Tolerances& tol = kDefaultTolerances);

/// A matrix certified to satisfy the density-matrix invariants.
class DensityMatrix {
 public:
  /// Strict check against `tol`; throws InvalidState on violation.
  static DensityMatrix from_matrix(ComplexMatrix m,
                                   const Tolerances& tol = kDefaultTolerances);
  /// Accepts violations up to tol.ingest by projecting (and appending a
  /// message to `warning` when given); larger violations throw InvalidState.
  static DensityMatrix ingest(ComplexMatrix m, std::string* warning = nullptr,
                              const Tolerances& tol = kDefaultTolerances);
  static DensityMatrix maximally_mixed(int dim);
  /// |v><v| / <v|v>.
  static DensityMatrix pure(const ComplexVector& v);

  const ComplexMatrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  const ProjectionDiagnostics& last_projection() const { return last_; }

 private:
  DensityMatrix(ComplexMatrix m, ProjectionDiagnostics last)
      : m_(std::move(m)), last_(last) {}
  ComplexMatrix m_;
  ProjectionDiagnostics last_;
};

/// Invariant violations of `m` measured against `tol`: empty when valid.
std::string density_violation(const ComplexMatrix& m,
                              const Tolerances& tol = kDefaultTolerances);

// Reference vector fields. Each takes the state and operators in one common
// frame and returns a full matrix; the integrator's fast path must agree
// with these.

/// -i[H0 + sum_j u_j H_j, rho]. Throws DimensionError when u does not match
/// the control count.
ComplexMatrix hamiltonian_field(const ComplexMatrix& rho,
                                const SystemModel& model,
                                std::span<const double> u);
/// L rho L - (L^2 rho + rho L^2)/2 for the scaled operator L.
ComplexMatrix lindblad_field(const ComplexMatrix& rho, const ComplexMatrix& l);
/// L rho + rho L - 2 Tr(L rho) rho.
ComplexMatrix diffusion_field(const ComplexMatrix& rho, const ComplexMatrix& l);
/// (1-eta) L rho L - (1+eta)/2 (L^2 rho + rho L^2) + 2 eta Tr(L^2 rho) rho
///   + 2 eta Tr(L rho)(L rho + rho L - 2 Tr(L rho) rho).
ComplexMatrix hat_field(const ComplexMatrix& rho, const ComplexMatrix& l,
                        double eta);

/// kKraus: rho <- (M rho M^dagger + sum (1 - eta_k) L_k rho L_k dt) / Tr(..)
/// with M = 1 - (i H + sum L_k^2 / 2) dt + sum sqrt(eta_k) L_k dy_k and
/// dy_k = dW_k + 2 sqrt(eta_k) Tr(L_k rho) dt. Positive by construction and
/// consistent with the Ito SME to first order.
/// kEuler: plain Euler-Maruyama on the SME.
/// Both are followed by the same projection.
enum class Scheme { kKraus, kEuler };

std::string to_string(Scheme scheme);
/// "kraus" or "euler"; throws std::invalid_argument.
Scheme parse_scheme(std::string_view text);

struct IntegratorConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::kKraus;
  /// Snapshot every `stride` steps.
  int stride = 100;
  Tolerances tol = kDefaultTolerances;
};

/// Gaussian increments for one trajectory, seeded from (master seed,
/// trajectory index) so every trajectory is reproducible on its own.
class WienerStream {
 public:
  WienerStream(std::uint64_t master_seed, std::uint64_t index);
  /// sqrt(dt) * N(0,1).
  double next(double dt);
  void fill(std::span<double> out, double dt);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// One Euler-Maruyama step of the SME with the projection, reusing a fixed
/// workspace. Channels and H0 that are diagonal in the model's frame go
/// through an elementwise update; everything else uses the reference fields.
class SmeStepper {
 public:
  SmeStepper(const SystemModel& model, const Tolerances& tol,
             Scheme scheme = Scheme::kKraus);

  /// One step of the configured scheme, then the projection.
  ProjectionDiagnostics step(ComplexMatrix& rho, std::span<const double> u,
                             std::span<const double> dw, double dt);
  /// rho <- project(rho + F0 dt + sum F_k dt + sum sqrt(eta_k) G_k dW_k).
  ProjectionDiagnostics euler_step(ComplexMatrix& rho,
                                   std::span<const double> u,
                                   std::span<const double> dw, double dt);
  ProjectionDiagnostics kraus_step(ComplexMatrix& rho,
                                   std::span<const double> u,
                                   std::span<const double> dw, double dt);

  /// rho <- project(rho + dt (F0 + sum hatF_k + sum sqrt(eta_k) G_k v_k)).
  ProjectionDiagnostics deterministic_step(ComplexMatrix& rho,
                                           std::span<const double> u,
                                           std::span<const double> v,
                                           double dt);

  const SystemModel& model() const { return model_; }
  bool fast_path() const { return all_diagonal_; }
  Scheme scheme() const { return scheme_; }

 private:
  void check_inputs(const ComplexMatrix& rho, std::span<const double> u,
                    std::span<const double> dw) const;
  ProjectionDiagnostics finish(ComplexMatrix& rho);

  const SystemModel& model_;
  Tolerances tol_;
  Scheme scheme_;
  bool all_diagonal_ = false;
  bool h0_diagonal_ = false;
  std::vector<bool> channel_diagonal_;
  // Diagonal data: d_[k] holds the scaled operator's diagonal.
  std::vector<RealVector> d_;
  RealVector h0_diag_;
  // Constant part of the elementwise drift: -i(h_i - h_j) - sum_k (d_ki - d_kj)^2/2
  // over diagonal channels (H0 term only when H0 is diagonal).
  ComplexMatrix drift_;
  ComplexMatrix next_;
  ComplexMatrix scratch_;
  RealVector alpha_;
  // Kraus scheme: dephasing weights sum_k (1 - eta_k) d_ki d_kj over the
  // diagonal channels, the constant part of diag(M), and M itself.
  Eigen::MatrixXd dephasing_;
  ComplexVector kraus_base_;
  ComplexVector kraus_diag_;
  ComplexMatrix kraus_;
  Eigen::MatrixXcd eig_input_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver_;
};

/// Running diagnostics of one trajectory; every field is a worst case over
/// all steps.
struct TrajectoryDiagnostics {
  long steps = 0;
  double max_clip = 0.0;
  double max_trace_defect = 0.0;
  double max_hermitian_defect = 0.0;
  double min_eigenvalue = 0.0;
  double min_post_eigenvalue = 0.0;
  /// Post-projection invariants re-measured at every snapshot.
  double snapshot_max_trace_error = 0.0;
  double snapshot_max_hermitian_error = 0.0;
  double snapshot_min_eigenvalue = 0.0;
  int initial_rank = 0;
  int final_rank = 0;
  int min_rank = 0;
  int max_rank = 0;
  /// Steps whose rank is below the previous step's.
  long rank_decreases = 0;
  /// The subset of rank_decreases on steps where clipping was applied.
  long rank_decreases_with_clip = 0;
  double first_rank_decrease_time = -1.0;
  /// Rank history: one (time, rank) entry each time the rank changes.
  std::vector<std::pair<double, int>> rank_changes;
  double min_lambda = 1.0;
  /// Minimum of 4 p_- p_+ (only tracked with an x-type channel).
  double min_vx = 1.0;
  double initial_purity = 0.0;
  /// First step with purity below 1 - 1e-6, or -1.
  long purity_drop_step = -1;
  /// Purity after each of the first ten steps.
  std::vector<double> early_purity;
};

/// State carried by em_step.
struct TrajectoryState {
  ComplexMatrix rho;
  double t = 0.0;
  long step = 0;
  WienerStream rng;
  TrajectoryDiagnostics diagnostics;
};

/// Everything an observer sees at a snapshot; `rho` is in the model's frame.
struct SnapshotView {
  double t;
  long step;
  const ComplexMatrix& rho;
  std::span<const double> u;
};

using SnapshotObserver = std::function<void(const SnapshotView&)>;

struct TrajectoryResult {
  ComplexMatrix final_rho;
  std::vector<double> final_u;
  TrajectoryDiagnostics diagnostics;
  long snapshots = 0;
};

/// One step against an explicit increment vector (one entry per channel).
/// The feedback is evaluated at the pre-step state.
void em_step(TrajectoryState& state, SmeStepper& stepper,
             const FeedbackLaw& law, const IntegratorConfig& cfg,
             std::span<const double> dw);

/// Integrates from rho0 (in the model's frame) to `horizon`. Snapshots at
/// every multiple of cfg.stride steps, including t = 0. Deterministic given
/// (master_seed, index, cfg). Throws IntegrationAbort on projection failure.
TrajectoryResult simulate_trajectory(const SystemModel& model,
                                     const FeedbackLaw& law,
                                     const ComplexMatrix& rho0,
                                     const IntegratorConfig& cfg,
                                     double horizon, std::uint64_t master_seed,
                                     std::uint64_t index,
                                     const SnapshotObserver& observer = {});

struct Snapshot {
  double t;
  ComplexMatrix rho;
  std::vector<double> u;
};

/// simulate_trajectory keeping every snapshot; for small runs and tests.
std::vector<Snapshot> record_trajectory(const SystemModel& model,
                                        const FeedbackLaw& law,
                                        const ComplexMatrix& rho0,
                                        const IntegratorConfig& cfg,
                                        double horizon,
                                        std::uint64_t master_seed,
                                        std::uint64_t index);

/// Steering input for the deterministic ODE: picks the channel i with the
/// largest sqrt(eta_i M_i) P_i^2 and sets v_i = K P_i / Tr(rho rhobar), other
/// entries zero. P_i = l^{(i)}_k - Tr(L^{(i)}_z rho) for z-channels and
/// eps - Tr(L_x rho) for the x-channel (unscaled operators). Returns zeros
/// when Tr(rho rhobar) <= 1e-12.
std::vector<double> steering_input(const ComplexMatrix& rho,
                                   const SystemModel& model, GhzIndex target,
                                   double gain);

/// Integrates the deterministic ODE with the steering law for `steps` steps
/// and returns Tr(rho rhobar) after each step (first entry is the start).
std::vector<double> steer(const SystemModel& model, const FeedbackLaw& law,
                          ComplexMatrix rho, double gain, double dt, long steps,
                          const Tolerances& tol = kDefaultTolerances);

}  // namespace ghzstab

#endif  // GHZSTAB_DYNAMICS_H_
