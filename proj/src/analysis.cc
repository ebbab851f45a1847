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

#include "ghzstab/analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ghzstab/dynamics.h"

namespace ghzstab {
namespace {

double safe_sqrt(double x) { return std::sqrt(std::max(x, 0.0)); }

// sqrt(2X / (1 + sqrt(1 - X))) == sqrt(2 - 2 sqrt(F)) with X = 1 - F, without
// the cancellation near F = 1.
double bures_from_infidelity(double infidelity) {
  const double x = std::clamp(infidelity, 0.0, 1.0);
  return std::sqrt(2.0 * x / (1.0 + std::sqrt(1.0 - x)));
}

struct PopulationSums {
  double plus = 0.0;
  double minus = 0.0;
};

PopulationSums population_sums(const ComplexMatrix& rho, const GhzBasis& basis) {
  PopulationSums s;
  for (int k = 1; k <= basis.half(); ++k) {
    s.plus += basis.population(rho, {k, Sign::kPlus});
    s.minus += basis.population(rho, {k, Sign::kMinus});
  }
  return s;
}

}  // namespace

double lambda_k(const ComplexMatrix& rho, const GhzBasis& basis, int k) {
  if (k < 1 || k > basis.half()) {
    throw std::out_of_range("lambda_k: k=" + std::to_string(k) +
                            " outside [1, " + std::to_string(basis.half()) + "]");
  }
  return basis.population(rho, {k, Sign::kPlus}) +
         basis.population(rho, {k, Sign::kMinus});
}

double variance(const ComplexMatrix& rho, const MeasurementChannel& channel) {
  const ComplexMatrix& l = channel.scaled().matrix();
  const double mean = trace_product(l, rho).real();
  const double second = trace_product(l * l, rho).real();
  return second - mean * mean;
}

double vx(const ComplexMatrix& rho, const GhzBasis& basis) {
  const PopulationSums s = population_sums(rho, basis);
  return 4.0 * std::max(s.plus, 0.0) * std::max(s.minus, 0.0);
}

double x_residual(const ComplexMatrix& rho, const GhzBasis& basis, Sign eps) {
  const PopulationSums s = population_sums(rho, basis);
  return 2.0 * std::max(eps == Sign::kPlus ? s.minus : s.plus, 0.0);
}

double bures_to_pure(const ComplexMatrix& rho, const ComplexVector& v) {
  if (rho.rows() != v.size()) throw DimensionError("bures_to_pure: size");
  const double norm2 = v.squaredNorm();
  if (std::abs(norm2 - 1.0) > 1e-10) {
    throw std::invalid_argument("bures_to_pure: vector is not normalized");
  }
  const double fidelity = (v.adjoint() * rho * v)(0, 0).real();
  return bures_from_infidelity(1.0 - fidelity);
}

double bures_to_pure(const ComplexMatrix& rho, const ComplexMatrix& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != rho.rows()) {
    throw DimensionError("bures_to_pure: size");
  }
  const double defect =
      std::max({max_abs(sigma * sigma - sigma), max_abs(sigma - sigma.adjoint()),
                std::abs(sigma.trace() - Complex(1.0))});
  if (defect > 1e-10) {
    throw std::invalid_argument("bures_to_pure: sigma is not a pure state");
  }
  const double fidelity = trace_product(rho, sigma).real();
  return bures_from_infidelity(1.0 - fidelity);
}

double bures_to_set(const ComplexMatrix& rho,
                    std::span<const ComplexVector> set) {
  if (set.empty()) throw std::invalid_argument("bures_to_set: empty set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : set) best = std::min(best, bures_to_pure(rho, v));
  return best;
}

double bures_to_ghz(const ComplexMatrix& rho, const GhzBasis& basis,
                    GhzIndex idx) {
  return bures_from_infidelity(basis.infidelity(rho, idx));
}

double bures_to_ghz_set(const ComplexMatrix& rho, const GhzBasis& basis) {
  double best = std::numeric_limits<double>::infinity();
  for (const GhzIndex idx : basis.indices()) {
    best = std::min(best, bures_to_ghz(rho, basis, idx));
  }
  return best;
}

std::string to_string(LyapunovKind kind) {
  switch (kind) {
    case LyapunovKind::kReduction:
      return "reduction";
    case LyapunovKind::kFidelity:
      return "fidelity";
    case LyapunovKind::kMixed:
      return "mixed";
  }
  return "?";
}

LyapunovKind parse_lyapunov_kind(std::string_view text) {
  if (text == "reduction") return LyapunovKind::kReduction;
  if (text == "fidelity") return LyapunovKind::kFidelity;
  if (text == "mixed") return LyapunovKind::kMixed;
  throw std::invalid_argument("unknown Lyapunov kind '" + std::string(text) +
                              "'");
}

double lyapunov(LyapunovKind kind, const ComplexMatrix& rho,
                const SystemModel& model, GhzIndex target) {
  const GhzBasis& basis = model.basis();
  switch (kind) {
    case LyapunovKind::kReduction: {
      const int half = basis.half();
      std::vector<double> lambda(half);
      for (int k = 1; k <= half; ++k) {
        lambda[k - 1] = std::max(lambda_k(rho, basis, k), 0.0);
      }
      double v = 0.0;
      for (int i = 0; i < half; ++i) {
        for (int j = i + 1; j < half; ++j) v += std::sqrt(lambda[i] * lambda[j]);
      }
      if (model.has_x_channel()) v += std::sqrt(vx(rho, basis));
      return v;
    }
    case LyapunovKind::kFidelity:
      return safe_sqrt(basis.infidelity(rho, target));
    case LyapunovKind::kMixed: {
      double v = 0.0;
      for (int n = 1; n <= basis.half(); ++n) {
        if (n != target.k) v += safe_sqrt(lambda_k(rho, basis, n));
      }
      return v + std::sqrt(x_residual(rho, basis, target.sign));
    }
  }
  throw std::logic_error("lyapunov: unknown kind");
}

SandwichConstants sandwich_constants(LyapunovKind kind, int dim) {
  switch (kind) {
    case LyapunovKind::kReduction:
      return {1.0 / 8.0, dim * (dim / 2.0 - 1.0) + 4.0};
    case LyapunovKind::kFidelity:
      return {std::sqrt(2.0) / 2.0, 1.0};
    case LyapunovKind::kMixed:
      // sum_{n != k} sqrt(Lambda_n) <= sqrt((N/2 - 1)(1 - F)) by
      // Cauchy-Schwarz, 1 - eps Tr(Lx rho) <= 2 (1 - F), and
      // 1 - F <= d_B^2.
      return {std::sqrt(2.0) / 2.0, std::sqrt(dim / 2.0 - 1.0) + std::sqrt(2.0)};
  }
  throw std::logic_error("sandwich_constants: unknown kind");
}

double lyapunov_distance(LyapunovKind kind, const ComplexMatrix& rho,
                         const GhzBasis& basis, GhzIndex target) {
  return kind == LyapunovKind::kReduction ? bures_to_ghz_set(rho, basis)
                                          : bures_to_ghz(rho, basis, target);
}

double generator_reduction_pair(const ComplexMatrix& rho, int i, int j,
                                const SystemModel& model) {
  const GhzBasis& basis = model.basis();
  if (i == j) throw std::invalid_argument("generator_reduction_pair: i == j");
  const double li = std::max(lambda_k(rho, basis, i), 0.0);
  const double lj = std::max(lambda_k(rho, basis, j), 0.0);
  const double root = std::sqrt(li * lj);
  if (root == 0.0) return 0.0;
  double rate = 0.0;
  for (const auto& ch : model.channels()) {
    const double gain = ch.efficiency() * ch.strength();
    double gap = 0.0;
    if (ch.kind() == ChannelKind::kZ) {
      const ComplexMatrix& op = ch.unscaled().matrix();
      gap = basis.population(op, {i, Sign::kPlus}) -
            basis.population(op, {j, Sign::kPlus});
    } else {
      auto a = [&](int n, double lambda) {
        return (basis.population(rho, {n, Sign::kPlus}) -
                basis.population(rho, {n, Sign::kMinus})) /
               lambda;
      };
      gap = a(i, li) - a(j, lj);
    }
    rate += gain * gap * gap;
  }
  return -0.5 * root * rate;
}

double generator_vx(const ComplexMatrix& rho, const SystemModel& model) {
  if (!model.has_x_channel()) {
    throw std::invalid_argument("generator_vx: model has no x-type channel");
  }
  const GhzBasis& basis = model.basis();
  const double v = vx(rho, basis);
  if (v <= 0.0) return 0.0;
  const ComplexMatrix& lx = model.x_operator();
  const double mean_x = trace_product(lx, rho).real();
  double value = 0.0;
  for (const auto& ch : model.channels()) {
    if (ch.kind() == ChannelKind::kX) {
      value -= 2.0 * ch.efficiency() * ch.strength() * std::sqrt(v);
      continue;
    }
    const ComplexMatrix& l = ch.scaled().matrix();
    const double delta = trace_product(l * lx, rho).real() -
                         trace_product(l, rho).real() * mean_x;
    value -= 2.0 * ch.efficiency() * delta * delta / std::pow(v, 1.5);
  }
  return value;
}

double generator_reduction(const ComplexMatrix& rho, const SystemModel& model) {
  const int half = model.basis().half();
  double value = 0.0;
  for (int i = 1; i <= half; ++i) {
    for (int j = i + 1; j <= half; ++j) {
      value += generator_reduction_pair(rho, i, j, model);
    }
  }
  if (model.has_x_channel()) value += generator_vx(rho, model);
  return value;
}

std::optional<double> RateBounds::special_exponent() const {
  if (c_plus_bar) return -2.0 * *c_plus_bar;
  if (c_minus_bar) return -2.0 * *c_minus_bar;
  return std::nullopt;
}

RateBounds rate_bounds(const SystemModel& model, GhzIndex target) {
  const SpectralData s = spectral_data(model, target);
  if (!s.ell) {
    throw std::invalid_argument("rate_bounds: (A1) fails, two l_k coincide");
  }
  RateBounds r;
  r.ell = *s.ell;
  r.c_plus = s.c_plus;
  r.c_minus = s.c_minus;
  r.z_rate = s.gamma_z * r.ell * r.ell / (2.0 * s.m_z);
  r.c_bar = r.z_rate;
  if (model.has_x_channel()) {
    const auto& ch = model.channels()[*model.x_channel()];
    r.x_rate = 2.0 * ch.efficiency() * ch.strength();
    r.c_bar = std::min(r.c_bar, *r.x_rate);
  }
  if (s.c_plus > 0.0) {
    const double c = std::min(s.c_plus, 1.0);
    r.c_plus_bar = s.gamma_m * c * c;
  }
  if (s.c_minus < 0.0) {
    const double c = std::max(s.c_minus, -1.0);
    r.c_minus_bar = s.gamma_m * c * c;
  }
  return r;
}

ExponentFit estimate_exponent(std::span<const double> t,
                              std::span<const double> value, double t0,
                              double t1) {
  if (t.size() != value.size()) {
    throw std::invalid_argument("estimate_exponent: length mismatch");
  }
  constexpr double kFloor = std::numeric_limits<double>::min();
  ExponentFit fit;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 || t[i] > t1) continue;
    double v = value[i];
    if (!(v > kFloor)) {
      v = kFloor;
      fit.clamped = true;
    }
    const double y = std::log(v);
    sx += t[i];
    sy += y;
    sxx += t[i] * t[i];
    sxy += t[i] * y;
    ++fit.points;
  }
  if (fit.points < 10) {
    throw std::invalid_argument("estimate_exponent: " +
                                std::to_string(fit.points) +
                                " points in the window, need at least 10");
  }
  const double n = fit.points;
  const double denom = n * sxx - sx * sx;
  if (!(denom > 0.0)) {
    throw std::invalid_argument("estimate_exponent: degenerate time window");
  }
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

std::optional<GhzIndex> classify_limit(const ComplexMatrix& rho,
                                       const GhzBasis& basis, double threshold) {
  if (!(threshold > 0.5 && threshold < 1.0)) {
    throw std::invalid_argument("classify_limit: threshold must lie in (0.5, 1)");
  }
  // Fidelities sum to one, so at most one can exceed 1/2.
  for (const GhzIndex idx : basis.indices()) {
    if (1.0 - basis.infidelity(rho, idx) >= threshold) return idx;
  }
  return std::nullopt;
}

std::vector<double> noise_coefficients(LyapunovKind kind,
                                       const ComplexMatrix& rho,
                                       const SystemModel& model,
                                       GhzIndex target, double h) {
  const double v0 = lyapunov(kind, rho, model, target);
  if (!(v0 > 0.0)) {
    throw std::invalid_argument("noise_coefficients: V(rho) is zero");
  }
  std::vector<double> g;
  for (const auto& ch : model.channels()) {
    const ComplexMatrix dir = diffusion_field(rho, ch.scaled().matrix());
    const double up = lyapunov(kind, rho + h * dir, model, target);
    const double down = lyapunov(kind, rho - h * dir, model, target);
    g.push_back(std::sqrt(ch.efficiency()) * (up - down) / (2.0 * h) / v0);
  }
  return g;
}

std::vector<MonteCarloEstimate> monte_carlo_generator(
    const SystemModel& model, const ComplexMatrix& rho,
    std::span<const StateFunctional> functionals, double dt, long pairs,
    std::uint64_t seed, Scheme scheme) {
  if (pairs < 2) throw std::invalid_argument("monte_carlo_generator: pairs < 2");
  SmeStepper stepper(model, kDefaultTolerances, scheme);
  WienerStream stream(seed, 0);
  const size_t m = model.channels().size();
  const std::vector<double> u(model.controls().size(), 0.0);
  std::vector<double> dw(m), neg(m);
  std::vector<double> base(functionals.size());
  for (size_t f = 0; f < functionals.size(); ++f) base[f] = functionals[f](rho);
  std::vector<double> sum(functionals.size(), 0.0);
  std::vector<double> sum_sq(functionals.size(), 0.0);
  ComplexMatrix plus, minus;
  for (long p = 0; p < pairs; ++p) {
    stream.fill(dw, dt);
    for (size_t k = 0; k < m; ++k) neg[k] = -dw[k];
    plus = rho;
    minus = rho;
    stepper.step(plus, u, dw, dt);
    stepper.step(minus, u, neg, dt);
    for (size_t f = 0; f < functionals.size(); ++f) {
      const double sample =
          (0.5 * (functionals[f](plus) + functionals[f](minus)) - base[f]) / dt;
      sum[f] += sample;
      sum_sq[f] += sample * sample;
    }
  }
  std::vector<MonteCarloEstimate> out(functionals.size());
  const double n = static_cast<double>(pairs);
  for (size_t f = 0; f < functionals.size(); ++f) {
    const double mean = sum[f] / n;
    const double var = std::max(sum_sq[f] / n - mean * mean, 0.0) * n / (n - 1);
    out[f] = {mean, std::sqrt(var / n), pairs};
  }
  return out;
}

}  // namespace ghzstab
