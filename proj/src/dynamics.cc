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

#include "ghzstab/dynamics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ghzstab {
namespace {

constexpr Complex kI(0.0, 1.0);
constexpr double kPurityDrop = 1e-6;
constexpr size_t kMaxRankChanges = 256;
constexpr double kSteerFloor = 1e-12;

void require_same_dim(const ComplexMatrix& rho, const ComplexMatrix& op,
                      const char* what) {
  if (rho.rows() != rho.cols() || op.rows() != op.cols() ||
      rho.rows() != op.rows()) {
    throw DimensionError(std::string(what) + ": state is " +
                         std::to_string(rho.rows()) + "x" +
                         std::to_string(rho.cols()) + ", operator is " +
                         std::to_string(op.rows()) + "x" +
                         std::to_string(op.cols()));
  }
}

struct InvariantErrors {
  double hermitian = 0.0;
  double trace = 0.0;
  double min_eigenvalue = 0.0;
};

InvariantErrors measure(const ComplexMatrix& m) {
  InvariantErrors e;
  e.hermitian = max_abs(m - m.adjoint());
  e.trace = std::abs(m.trace() - Complex(1.0));
  const ComplexMatrix h = 0.5 * (m + m.adjoint());
  e.min_eigenvalue = hermitian_eigenvalues(h).minCoeff();
  return e;
}

// Shared by project() and the stepper: the solver carries its workspace.
ProjectionDiagnostics project_with(
    ComplexMatrix& rho, const Tolerances& tol, Eigen::MatrixXcd& eig_input,
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>& solver) {
  ProjectionDiagnostics out;
  const Eigen::Index n = rho.rows();
  double defect = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    rho(i, i) = Complex(rho(i, i).real(), 0.0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Complex a = rho(i, j);
      const Complex b = std::conj(rho(j, i));
      defect = std::max(defect, std::abs(a - b));
      const Complex avg = 0.5 * (a + b);
      rho(i, j) = avg;
      rho(j, i) = std::conj(avg);
    }
  }
  out.hermitian_defect = defect;
  const double trace = rho.trace().real();
  out.trace_defect = std::abs(trace - 1.0);
  if (!(trace > 0.0) || !std::isfinite(trace)) {
    throw ProjectionFailure("projection: trace " + std::to_string(trace) +
                                " is not positive",
                            std::numeric_limits<double>::quiet_NaN());
  }

  eig_input = rho;
  solver.compute(eig_input, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ProjectionFailure("projection: eigen-solver did not converge",
                            std::numeric_limits<double>::quiet_NaN());
  }
  RealVector values = solver.eigenvalues();
  out.min_eigenvalue = values(0) / trace;
  if (out.min_eigenvalue < -tol.abort_eigenvalue) {
    std::ostringstream msg;
    msg << "projection: eigenvalue " << out.min_eigenvalue << " below -"
        << tol.abort_eigenvalue << " (step size too large?)";
    throw ProjectionFailure(msg.str(), out.min_eigenvalue);
  }

  double new_trace = trace;
  if (values(0) < -tol.clip_floor) {
    solver.compute(eig_input, Eigen::ComputeEigenvectors);
    values = solver.eigenvalues();
    const auto& vectors = solver.eigenvectors();
    for (Eigen::Index k = 0; k < n && values(k) < -tol.clip_floor; ++k) {
      const double lambda = values(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Complex vi = lambda * vectors(i, k);
        for (Eigen::Index j = 0; j < n; ++j) {
          rho(i, j) -= vi * std::conj(vectors(j, k));
        }
      }
      out.clip = std::max(out.clip, -lambda);
      new_trace -= lambda;
      values(k) = 0.0;
    }
  }
  rho /= new_trace;
  out.post_min_eigenvalue = values.minCoeff() / new_trace;
  int rank = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (values(k) / new_trace > tol.rank_eigenvalue) ++rank;
  }
  out.rank = rank;
  return out;
}

void update_diagnostics(TrajectoryDiagnostics& d, const ProjectionDiagnostics& p,
                        const ComplexMatrix& rho, const SystemModel& model,
                        double t, long step) {
  d.steps = step;
  d.max_clip = std::max(d.max_clip, p.clip);
  d.max_trace_defect = std::max(d.max_trace_defect, p.trace_defect);
  d.max_hermitian_defect = std::max(d.max_hermitian_defect, p.hermitian_defect);
  d.min_eigenvalue = std::min(d.min_eigenvalue, p.min_eigenvalue);
  d.min_post_eigenvalue = std::min(d.min_post_eigenvalue, p.post_min_eigenvalue);
  if (p.rank < d.final_rank) {
    ++d.rank_decreases;
    if (p.clip > 0.0) ++d.rank_decreases_with_clip;
    if (d.first_rank_decrease_time < 0.0) d.first_rank_decrease_time = t;
  }
  if (p.rank != d.final_rank && d.rank_changes.size() < kMaxRankChanges) {
    d.rank_changes.emplace_back(t, p.rank);
  }
  d.final_rank = p.rank;
  d.min_rank = std::min(d.min_rank, p.rank);
  d.max_rank = std::max(d.max_rank, p.rank);

  const GhzBasis& basis = model.basis();
  double plus = 0.0;
  double minus = 0.0;
  for (int k = 1; k <= basis.half(); ++k) {
    const double pp = basis.population(rho, {k, Sign::kPlus});
    const double pm = basis.population(rho, {k, Sign::kMinus});
    d.min_lambda = std::min(d.min_lambda, pp + pm);
    plus += pp;
    minus += pm;
  }
  if (model.has_x_channel()) d.min_vx = std::min(d.min_vx, 4.0 * plus * minus);

  const double purity = rho.squaredNorm();
  if (step <= 10) d.early_purity.push_back(purity);
  if (d.purity_drop_step < 0 && purity < 1.0 - kPurityDrop) {
    d.purity_drop_step = step;
  }
}

void init_diagnostics(TrajectoryDiagnostics& d, const ComplexMatrix& rho,
                      const SystemModel& model, const Tolerances& tol) {
  const RealVector values = hermitian_eigenvalues(rho);
  int rank = 0;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (values(k) > tol.rank_eigenvalue) ++rank;
  }
  d.initial_rank = d.final_rank = d.min_rank = d.max_rank = rank;
  d.min_eigenvalue = d.min_post_eigenvalue = d.snapshot_min_eigenvalue =
      std::min(0.0, values(0));
  d.initial_purity = rho.squaredNorm();
  if (d.initial_purity < 1.0 - kPurityDrop) d.purity_drop_step = 0;
  ProjectionDiagnostics none;
  none.rank = rank;
  none.min_eigenvalue = none.post_min_eigenvalue = d.min_eigenvalue;
  update_diagnostics(d, none, rho, model, 0.0, 0);
  d.early_purity.clear();
}

void record_snapshot_invariants(TrajectoryDiagnostics& d,
                                const ComplexMatrix& rho) {
  const InvariantErrors e = measure(rho);
  d.snapshot_max_trace_error = std::max(d.snapshot_max_trace_error, e.trace);
  d.snapshot_max_hermitian_error =
      std::max(d.snapshot_max_hermitian_error, e.hermitian);
  d.snapshot_min_eigenvalue = std::min(d.snapshot_min_eigenvalue,
                                       e.min_eigenvalue);
}

}  // namespace

ProjectionDiagnostics project(ComplexMatrix& rho, const Tolerances& tol) {
  if (rho.rows() != rho.cols()) throw DimensionError("project: not square");
  Eigen::MatrixXcd eig_input;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho.rows());
  return project_with(rho, tol, eig_input, solver);
}

std::string density_violation(const ComplexMatrix& m, const Tolerances& tol) {
  if (m.rows() != m.cols() || m.rows() == 0) return "matrix is not square";
  if (!all_finite(m)) return "matrix has non-finite entries";
  const InvariantErrors e = measure(m);
  std::ostringstream out;
  if (e.hermitian > tol.hermitian) {
    out << "||rho - rho^dagger||_max = " << e.hermitian << "; ";
  }
  if (e.trace > tol.trace) out << "|Tr(rho) - 1| = " << e.trace << "; ";
  if (e.min_eigenvalue < -tol.psd) {
    out << "min eigenvalue = " << e.min_eigenvalue << "; ";
  }
  return out.str();
}

DensityMatrix DensityMatrix::from_matrix(ComplexMatrix m, const Tolerances& tol) {
  const std::string violation = density_violation(m, tol);
  if (!violation.empty()) throw InvalidState("not a density matrix: " + violation);
  return DensityMatrix(std::move(m), {});
}

DensityMatrix DensityMatrix::ingest(ComplexMatrix m, std::string* warning,
                                    const Tolerances& tol) {
  const std::string strict = density_violation(m, tol);
  if (strict.empty()) return DensityMatrix(std::move(m), {});
  if (m.rows() != m.cols() || !all_finite(m)) throw InvalidState(strict);
  const InvariantErrors e = measure(m);
  if (e.hermitian > tol.ingest || e.trace > tol.ingest ||
      e.min_eigenvalue < -tol.ingest) {
    throw InvalidState("initial state violates the density-matrix invariants "
                       "beyond " + std::to_string(tol.ingest) + ": " + strict);
  }
  // Small violations: clip everything negative, not just below clip_floor.
  Tolerances repair = tol;
  repair.clip_floor = 0.0;
  ComplexMatrix fixed = std::move(m);
  const ProjectionDiagnostics diag = project(fixed, repair);
  if (warning) *warning += "initial state projected: " + strict;
  return DensityMatrix(std::move(fixed), diag);
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim <= 0) throw DimensionError("maximally_mixed: dimension must be > 0");
  return DensityMatrix(identity(dim) / static_cast<double>(dim), {});
}

DensityMatrix DensityMatrix::pure(const ComplexVector& v) {
  const double norm2 = v.squaredNorm();
  if (!(norm2 > 0.0)) throw InvalidState("pure: zero vector");
  ComplexMatrix m = v * v.adjoint() / norm2;
  return DensityMatrix(std::move(m), {});
}

ComplexMatrix hamiltonian_field(const ComplexMatrix& rho,
                                const SystemModel& model,
                                std::span<const double> u) {
  require_same_dim(rho, model.h0().matrix(), "hamiltonian_field");
  if (u.size() != model.controls().size()) {
    throw DimensionError("hamiltonian_field: " + std::to_string(u.size()) +
                         " control values for " +
                         std::to_string(model.controls().size()) +
                         " control Hamiltonians");
  }
  ComplexMatrix h = model.h0().matrix();
  for (size_t j = 0; j < u.size(); ++j) h += u[j] * model.controls()[j].matrix();
  return -kI * commutator(h, rho);
}

ComplexMatrix lindblad_field(const ComplexMatrix& rho, const ComplexMatrix& l) {
  require_same_dim(rho, l, "lindblad_field");
  const ComplexMatrix l2 = l * l;
  return l * rho * l - 0.5 * (l2 * rho + rho * l2);
}

ComplexMatrix diffusion_field(const ComplexMatrix& rho, const ComplexMatrix& l) {
  require_same_dim(rho, l, "diffusion_field");
  const Complex mean = trace_product(l, rho);
  return l * rho + rho * l - 2.0 * mean.real() * rho;
}

ComplexMatrix hat_field(const ComplexMatrix& rho, const ComplexMatrix& l,
                        double eta) {
  require_same_dim(rho, l, "hat_field");
  const ComplexMatrix l2 = l * l;
  const double mean = trace_product(l, rho).real();
  const double mean2 = trace_product(l2, rho).real();
  const ComplexMatrix lr = l * rho;
  const ComplexMatrix rl = rho * l;
  return (1.0 - eta) * l * rho * l - 0.5 * (1.0 + eta) * (l2 * rho + rho * l2) +
         2.0 * eta * mean2 * rho +
         2.0 * eta * mean * (lr + rl - 2.0 * mean * rho);
}

WienerStream::WienerStream(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  engine_.seed(seq);
}

double WienerStream::next(double dt) { return std::sqrt(dt) * normal_(engine_); }

void WienerStream::fill(std::span<double> out, double dt) {
  const double scale = std::sqrt(dt);
  for (double& x : out) x = scale * normal_(engine_);
}

std::string to_string(Scheme scheme) {
  return scheme == Scheme::kKraus ? "kraus" : "euler";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "kraus") return Scheme::kKraus;
  if (text == "euler") return Scheme::kEuler;
  throw std::invalid_argument("unknown scheme '" + std::string(text) +
                              "' (expected kraus or euler)");
}

SmeStepper::SmeStepper(const SystemModel& model, const Tolerances& tol,
                       Scheme scheme)
    : model_(model), tol_(tol), scheme_(scheme), solver_(model.dim()) {
  const int n = model.dim();
  h0_diagonal_ = model.h0().is_diagonal();
  all_diagonal_ = h0_diagonal_;
  for (const auto& ch : model.channels()) {
    const bool diag = ch.scaled().is_diagonal();
    channel_diagonal_.push_back(diag);
    d_.push_back(diag ? ch.scaled().diagonal() : RealVector());
    all_diagonal_ = all_diagonal_ && diag;
  }
  h0_diag_ = h0_diagonal_ ? model.h0().diagonal() : RealVector::Zero(n);
  drift_ = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double lind = 0.0;
      for (size_t k = 0; k < d_.size(); ++k) {
        if (!channel_diagonal_[k]) continue;
        const double gap = d_[k](i) - d_[k](j);
        lind -= 0.5 * gap * gap;
      }
      drift_(i, j) = Complex(lind, -(h0_diag_(i) - h0_diag_(j)));
    }
  }
  dephasing_ = Eigen::MatrixXd::Zero(n, n);
  kraus_base_ = ComplexVector::Constant(n, Complex(0.0, 0.0));
  for (size_t k = 0; k < d_.size(); ++k) {
    if (!channel_diagonal_[k]) continue;
    const double keep = 1.0 - model.channels()[k].efficiency();
    dephasing_ += keep * d_[k] * d_[k].transpose();
    kraus_base_ -= 0.5 * d_[k].cwiseAbs2().cast<Complex>();
  }
  kraus_base_ -= kI * h0_diag_.cast<Complex>();
  next_.resize(n, n);
  scratch_.resize(n, n);
  alpha_.resize(n);
  kraus_diag_.resize(n);
  kraus_.resize(n, n);
  eig_input_.resize(n, n);
}

void SmeStepper::check_inputs(const ComplexMatrix& rho,
                              std::span<const double> u,
                              std::span<const double> dw) const {
  const auto& channels = model_.channels();
  const auto& controls = model_.controls();
  if (dw.size() != channels.size()) {
    throw DimensionError("sme step: " + std::to_string(dw.size()) +
                         " increments for " + std::to_string(channels.size()) +
                         " channels");
  }
  if (u.size() != controls.size()) {
    throw DimensionError("sme step: " + std::to_string(u.size()) +
                         " control values for " +
                         std::to_string(controls.size()) +
                         " control Hamiltonians");
  }
  require_same_dim(rho, model_.h0().matrix(), "sme step");
}

ProjectionDiagnostics SmeStepper::step(ComplexMatrix& rho,
                                       std::span<const double> u,
                                       std::span<const double> dw, double dt) {
  return scheme_ == Scheme::kKraus ? kraus_step(rho, u, dw, dt)
                                   : euler_step(rho, u, dw, dt);
}

ProjectionDiagnostics SmeStepper::kraus_step(ComplexMatrix& rho,
                                             std::span<const double> u,
                                             std::span<const double> dw,
                                             double dt) {
  check_inputs(rho, u, dw);
  const auto& channels = model_.channels();
  const auto& controls = model_.controls();
  const Eigen::Index n = rho.rows();

  // diag(M) from H0 and the diagonal channels.
  kraus_diag_ = ComplexVector::Ones(n) + dt * kraus_base_;
  for (size_t k = 0; k < channels.size(); ++k) {
    if (!channel_diagonal_[k]) continue;
    const double sq = std::sqrt(channels[k].efficiency());
    const RealVector& d = d_[k];
    double mean = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) mean += d(i) * rho(i, i).real();
    const double dy = dw[k] + 2.0 * sq * mean * dt;
    kraus_diag_ += (sq * dy) * d.cast<Complex>();
  }

  bool dense = !h0_diagonal_;
  for (size_t j = 0; j < controls.size(); ++j) dense = dense || u[j] != 0.0;
  for (size_t k = 0; k < channels.size(); ++k) {
    dense = dense || !channel_diagonal_[k];
  }

  if (!dense) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        next_(i, j) = kraus_diag_(i) * rho(i, j) * std::conj(kraus_diag_(j)) +
                      (dt * dephasing_(i, j)) * rho(i, j);
      }
    }
  } else {
    kraus_.setZero();
    kraus_.diagonal() = kraus_diag_;
    if (!h0_diagonal_) {
      kraus_ += (-kI * dt) * model_.h0().matrix();
    }
    for (size_t j = 0; j < controls.size(); ++j) {
      if (u[j] != 0.0) kraus_ += (-kI * dt * u[j]) * controls[j].matrix();
    }
    for (size_t k = 0; k < channels.size(); ++k) {
      if (channel_diagonal_[k]) continue;
      const ComplexMatrix& l = channels[k].scaled().matrix();
      const double sq = std::sqrt(channels[k].efficiency());
      const double dy = dw[k] + 2.0 * sq * trace_product(l, rho).real() * dt;
      kraus_ += (-0.5 * dt) * (l * l) + (sq * dy) * l;
    }
    scratch_.noalias() = kraus_.lazyProduct(rho);
    next_.noalias() = scratch_.lazyProduct(kraus_.adjoint());
    next_.array() += dt * dephasing_.cast<Complex>().array() * rho.array();
    for (size_t k = 0; k < channels.size(); ++k) {
      if (channel_diagonal_[k]) continue;
      const ComplexMatrix& l = channels[k].scaled().matrix();
      next_ += ((1.0 - channels[k].efficiency()) * dt) * (l * rho * l);
    }
  }
  const double trace = next_.trace().real();
  if (trace > 0.0 && std::isfinite(trace)) next_ /= trace;
  rho.swap(next_);
  return finish(rho);
}

ProjectionDiagnostics SmeStepper::euler_step(ComplexMatrix& rho,
                                             std::span<const double> u,
                                             std::span<const double> dw,
                                             double dt) {
  check_inputs(rho, u, dw);
  const auto& channels = model_.channels();
  const auto& controls = model_.controls();
  const Eigen::Index n = rho.rows();

  // Elementwise part: rho_ij (1 + dt W_ij + alpha_i + alpha_j - beta), where
  // alpha_i = sum_k sqrt(eta_k) dW_k d_ki and beta = 2 sum_k sqrt(eta_k) dW_k
  // Tr(L_k rho) over the diagonal channels.
  alpha_.setZero();
  double beta = 0.0;
  for (size_t k = 0; k < channels.size(); ++k) {
    if (!channel_diagonal_[k]) continue;
    const double a = std::sqrt(channels[k].efficiency()) * dw[k];
    const RealVector& d = d_[k];
    double mean = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) mean += d(i) * rho(i, i).real();
    alpha_ += a * d;
    beta += 2.0 * a * mean;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      next_(i, j) =
          rho(i, j) * (1.0 + dt * drift_(i, j) + (alpha_(i) + alpha_(j) - beta));
    }
  }

  if (!h0_diagonal_) {
    next_ += dt * (-kI) * commutator(model_.h0().matrix(), rho);
  }
  for (size_t k = 0; k < channels.size(); ++k) {
    if (channel_diagonal_[k]) continue;
    const ComplexMatrix& l = channels[k].scaled().matrix();
    next_ += dt * lindblad_field(rho, l) +
             (std::sqrt(channels[k].efficiency()) * dw[k]) *
                 diffusion_field(rho, l);
  }
  for (size_t j = 0; j < controls.size(); ++j) {
    if (u[j] == 0.0) continue;
    // [H, rho] = H rho - (H rho)^dagger for Hermitian H and rho.
    scratch_.noalias() = controls[j].matrix().lazyProduct(rho);
    next_ += (-kI * dt * u[j]) * (scratch_ - scratch_.adjoint());
  }
  rho.swap(next_);
  return finish(rho);
}

ProjectionDiagnostics SmeStepper::deterministic_step(ComplexMatrix& rho,
                                                     std::span<const double> u,
                                                     std::span<const double> v,
                                                     double dt) {
  const auto& channels = model_.channels();
  if (v.size() != channels.size()) {
    throw DimensionError("deterministic_step: input has " +
                         std::to_string(v.size()) + " entries for " +
                         std::to_string(channels.size()) + " channels");
  }
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument("deterministic_step: non-finite input");
    }
  }
  ComplexMatrix field = hamiltonian_field(rho, model_, u);
  for (size_t k = 0; k < channels.size(); ++k) {
    const ComplexMatrix& l = channels[k].scaled().matrix();
    const double eta = channels[k].efficiency();
    field += hat_field(rho, l, eta);
    if (v[k] != 0.0) field += std::sqrt(eta) * v[k] * diffusion_field(rho, l);
  }
  rho += dt * field;
  return finish(rho);
}

ProjectionDiagnostics SmeStepper::finish(ComplexMatrix& rho) {
  return project_with(rho, tol_, eig_input_, solver_);
}

void em_step(TrajectoryState& state, SmeStepper& stepper,
             const FeedbackLaw& law, const IntegratorConfig& cfg,
             std::span<const double> dw) {
  const std::vector<double> u = law.evaluate(state.rho, stepper.model());
  const ProjectionDiagnostics p = stepper.step(state.rho, u, dw, cfg.dt);
  ++state.step;
  state.t = static_cast<double>(state.step) * cfg.dt;
  update_diagnostics(state.diagnostics, p, state.rho, stepper.model(), state.t,
                     state.step);
}

TrajectoryResult simulate_trajectory(const SystemModel& model,
                                     const FeedbackLaw& law,
                                     const ComplexMatrix& rho0,
                                     const IntegratorConfig& cfg,
                                     double horizon, std::uint64_t master_seed,
                                     std::uint64_t index,
                                     const SnapshotObserver& observer) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (cfg.stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  require_same_dim(rho0, model.h0().matrix(), "simulate_trajectory");

  SmeStepper stepper(model, cfg.tol, cfg.scheme);
  TrajectoryState state{rho0, 0.0, 0, WienerStream(master_seed, index), {}};
  init_diagnostics(state.diagnostics, state.rho, model, cfg.tol);
  const long steps = std::lround(horizon / cfg.dt);
  std::vector<double> dw(model.channels().size());

  TrajectoryResult result;
  auto snapshot = [&] {
    record_snapshot_invariants(state.diagnostics, state.rho);
    ++result.snapshots;
    if (observer) {
      const std::vector<double> u = law.evaluate(state.rho, model);
      observer(SnapshotView{state.t, state.step, state.rho, u});
    }
  };
  snapshot();
  for (long s = 1; s <= steps; ++s) {
    state.rng.fill(dw, cfg.dt);
    try {
      em_step(state, stepper, law, cfg, dw);
    } catch (const ProjectionFailure& e) {
      std::ostringstream msg;
      msg << "trajectory " << index << " aborted at t = "
          << static_cast<double>(s) * cfg.dt << ": " << e.what();
      throw IntegrationAbort(msg.str(), index, static_cast<double>(s) * cfg.dt);
    }
    if (s % cfg.stride == 0) snapshot();
  }
  result.final_u = law.evaluate(state.rho, model);
  result.final_rho = std::move(state.rho);
  result.diagnostics = std::move(state.diagnostics);
  return result;
}

std::vector<Snapshot> record_trajectory(const SystemModel& model,
                                        const FeedbackLaw& law,
                                        const ComplexMatrix& rho0,
                                        const IntegratorConfig& cfg,
                                        double horizon,
                                        std::uint64_t master_seed,
                                        std::uint64_t index) {
  std::vector<Snapshot> out;
  simulate_trajectory(model, law, rho0, cfg, horizon, master_seed, index,
                      [&](const SnapshotView& s) {
                        out.push_back(Snapshot{
                            s.t, s.rho, std::vector<double>(s.u.begin(), s.u.end())});
                      });
  return out;
}

std::vector<double> steering_input(const ComplexMatrix& rho,
                                   const SystemModel& model, GhzIndex target,
                                   double gain) {
  const auto& channels = model.channels();
  std::vector<double> v(channels.size(), 0.0);
  // Populations within roundoff of zero count as zero; dividing by them
  // would only amplify noise.
  const double fidelity = model.basis().population(rho, target);
  if (!(fidelity > kSteerFloor)) return v;
  int best = -1;
  double best_score = -1.0;
  double best_residual = 0.0;
  for (size_t i = 0; i < channels.size(); ++i) {
    const ComplexMatrix& op = channels[i].unscaled().matrix();
    const double reference = channels[i].kind() == ChannelKind::kZ
                                 ? model.basis().population(op, target)
                                 : sign_value(target.sign);
    const double residual = reference - trace_product(op, rho).real();
    const double score =
        std::sqrt(channels[i].efficiency() * channels[i].strength()) *
        residual * residual;
    if (score > best_score) {
      best = static_cast<int>(i);
      best_score = score;
      best_residual = residual;
    }
  }
  if (best >= 0) v[best] = gain * best_residual / fidelity;
  return v;
}

std::vector<double> steer(const SystemModel& model, const FeedbackLaw& law,
                          ComplexMatrix rho, double gain, double dt, long steps,
                          const Tolerances& tol) {
  SmeStepper stepper(model, tol);
  std::vector<double> fidelity;
  fidelity.reserve(steps + 1);
  fidelity.push_back(1.0 - model.basis().infidelity(rho, law.target()));
  for (long s = 0; s < steps; ++s) {
    const std::vector<double> v = steering_input(rho, model, law.target(), gain);
    const std::vector<double> u = law.evaluate(rho, model);
    stepper.deterministic_step(rho, u, v, dt);
    fidelity.push_back(1.0 - model.basis().infidelity(rho, law.target()));
  }
  return fidelity;
}

}  // namespace ghzstab
