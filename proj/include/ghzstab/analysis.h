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

#ifndef GHZSTAB_ANALYSIS_H_
#define GHZSTAB_ANALYSIS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghzstab/dynamics.h"
#include "ghzstab/model.h"
#include "ghzstab/qmat.h"

namespace ghzstab {

// All functionals take the state in the frame of the basis/model passed
// alongside it.

/// Tr((GHZ+_k + GHZ-_k) rho). Throws std::out_of_range for a bad k.
double lambda_k(const ComplexMatrix& rho, const GhzBasis& basis, int k);

/// Tr(L^2 rho) - Tr(L rho)^2 for the scaled channel operator.
double variance(const ComplexMatrix& rho, const MeasurementChannel& channel);

/// 1 - Tr(Lx rho)^2 evaluated as 4 (sum_k p-_k)(sum_k p+_k), which is exact
/// in the same algebra and never rounds below zero.
double vx(const ComplexMatrix& rho, const GhzBasis& basis);

/// 1 - eps Tr(Lx rho) evaluated as 2 sum_k p^{-eps}_k.
double x_residual(const ComplexMatrix& rho, const GhzBasis& basis, Sign eps);

/// Bures distance to |v><v|: sqrt(2 - 2 sqrt(<v|rho|v>)) for unit v.
double bures_to_pure(const ComplexMatrix& rho, const ComplexVector& v);
/// Same with a projector; throws std::invalid_argument unless `sigma` is a
/// rank-one projector to 1e-10.
double bures_to_pure(const ComplexMatrix& rho, const ComplexMatrix& sigma);
/// Minimum over a set of unit vectors.
double bures_to_set(const ComplexMatrix& rho,
                    std::span<const ComplexVector> set);
/// Bures distance to one GHZ state, computed from the infidelity so that it
/// stays accurate as rho approaches the target.
double bures_to_ghz(const ComplexMatrix& rho, const GhzBasis& basis,
                    GhzIndex idx);
/// Distance to the closest GHZ state.
double bures_to_ghz_set(const ComplexMatrix& rho, const GhzBasis& basis);

enum class LyapunovKind { kReduction, kFidelity, kMixed };

std::string to_string(LyapunovKind kind);
/// "reduction", "fidelity" or "mixed"; throws std::invalid_argument.
LyapunovKind parse_lyapunov_kind(std::string_view text);

/// Reduction: sum over unordered pairs i<j of sqrt(Lambda_i Lambda_j), plus
/// sqrt(V_x) when the model has an x-type channel. Fidelity:
/// sqrt(1 - Tr(rho rhobar)). Mixed: sum_{n != k} sqrt(Lambda_n) +
/// sqrt(1 - eps Tr(Lx rho)). The target is ignored for Reduction.
double lyapunov(LyapunovKind kind, const ComplexMatrix& rho,
                const SystemModel& model, GhzIndex target = {});

struct SandwichConstants {
  double lower;
  double upper;
};

/// c1 d_B <= V <= c2 d_B with d_B to the GHZ set (Reduction) or to the
/// target (Fidelity, Mixed). For Mixed the upper constant is
/// sqrt(N/2 - 1) + sqrt(2); the tighter value 2 fails at the maximally mixed
/// state.
SandwichConstants sandwich_constants(LyapunovKind kind, int dim);

/// The Lyapunov function's reference distance: d_B to the GHZ set for
/// Reduction, to the target otherwise.
double lyapunov_distance(LyapunovKind kind, const ComplexMatrix& rho,
                         const GhzBasis& basis, GhzIndex target = {});

/// Closed-form generator of sqrt(Lambda_i Lambda_j) with u == 0 (1-based
/// i != j):
///   -1/2 sqrt(Lambda_i Lambda_j) [ sum_z eta_k M_k (l^k_i - l^k_j)^2
///                                  + eta_m M_m (a_i - a_j)^2 ],
/// a_n = (p+_n - p-_n)/Lambda_n. The x-channel term is absent when the model
/// has no x-type channel and vanishes whenever Lambda_n is zero.
double generator_reduction_pair(const ComplexMatrix& rho, int i, int j,
                                const SystemModel& model);

/// Closed-form generator of sqrt(V_x) with u == 0:
///   -2 eta_m M_m sqrt(V_x) - 2 sum_z eta_k Delta_k^2 / V_x^{3/2},
/// Delta_k = Tr(L_k Lx rho) - Tr(L_k rho) Tr(Lx rho) with scaled L_k.
/// Returns 0 on V_x = 0. Throws std::invalid_argument without an x-channel.
double generator_vx(const ComplexMatrix& rho, const SystemModel& model);

/// Generator of the Reduction Lyapunov function (u == 0).
double generator_reduction(const ComplexMatrix& rho, const SystemModel& model);

struct RateBounds {
  /// min{Gamma_z ell^2 / (2 m_z), 2 eta_m M_m}; the second entry only with
  /// an x-type channel.
  double c_bar = 0.0;
  double z_rate = 0.0;
  std::optional<double> x_rate;
  /// Gamma_m (min{c+, 1})^2 when c+ > 0.
  std::optional<double> c_plus_bar;
  /// Gamma_m (max{c-, -1})^2 when c- < 0.
  std::optional<double> c_minus_bar;
  double c_plus = 0.0;
  double c_minus = 0.0;
  double ell = 0.0;

  double reduction_exponent() const { return -c_bar; }
  /// -2 C+ if defined, else -2 C-, else empty.
  std::optional<double> special_exponent() const;
  double general_exponent() const { return -c_bar; }
};

/// Throws std::invalid_argument when (A0) or (A1) fails.
RateBounds rate_bounds(const SystemModel& model, GhzIndex target);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
  /// Some value in the window was below the smallest normal double and was
  /// clamped there.
  bool clamped = false;
};

/// Least-squares slope of log(value) against t over t0 <= t <= t1. Throws
/// std::invalid_argument with fewer than 10 points in the window.
ExponentFit estimate_exponent(std::span<const double> t,
                              std::span<const double> value, double t0,
                              double t1);

/// The GHZ state whose fidelity reaches `threshold`, if any. Throws
/// std::invalid_argument unless 0.5 < threshold < 1.
std::optional<GhzIndex> classify_limit(const ComplexMatrix& rho,
                                       const GhzBasis& basis,
                                       double threshold = 0.99);

/// g_i = sqrt(eta_i) D V(rho)[G_i(rho)] / V(rho) by central differences with
/// step `h`. Throws std::invalid_argument when V(rho) is zero.
std::vector<double> noise_coefficients(LyapunovKind kind,
                                       const ComplexMatrix& rho,
                                       const SystemModel& model,
                                       GhzIndex target = {}, double h = 1e-6);

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  long samples = 0;
};

using StateFunctional = std::function<double(const ComplexMatrix&)>;

/// Estimates the generator (u == 0) of each functional at rho from one-step
/// Euler-Maruyama samples: E[(f(rho') - f(rho))/dt]. Samples are antithetic
/// pairs (+dW, -dW) which cancel the O(dW) noise; `pairs` pairs are drawn.
std::vector<MonteCarloEstimate> monte_carlo_generator(
    const SystemModel& model, const ComplexMatrix& rho,
    std::span<const StateFunctional> functionals, double dt, long pairs,
    std::uint64_t seed, Scheme scheme = Scheme::kKraus);

}  // namespace ghzstab

#endif  // GHZSTAB_ANALYSIS_H_
