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

#include "ghzstab/control.h"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ghzstab {
namespace {

constexpr double kImaginaryTolerance = 1e-12;
constexpr double kA2Threshold = 1e-8;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// Tr(i[H,rho] GHZ) for the law's target, evaluated in the model's frame.
double overlap_at(const GhzBasis& basis, const ComplexMatrix& rho,
                  const ComplexMatrix& h, GhzIndex target) {
  const Complex x = basis.sandwich(h, rho, target);
  const Complex y = basis.sandwich(rho, h, target);
  const Complex value = Complex(0.0, 1.0) * (x - y);
  if (std::abs(value.imag()) > kImaginaryTolerance * std::max(1.0, std::abs(x))) {
    throw NumericalError("Tr(i[H,rho] rhobar) has imaginary part " +
                         std::to_string(value.imag()));
  }
  return value.real();
}

double fidelity_at(const GhzBasis& basis, const ComplexMatrix& rho,
                   GhzIndex target) {
  return 1.0 - basis.infidelity(rho, target);
}

}  // namespace

FeedbackLaw::FeedbackLaw(LawVariant variant, GhzIndex target)
    : variant_(std::move(variant)), target_(target) {
  require(target.k >= 1, "feedback target index must be >= 1");
  std::visit(
      Overloaded{
          [](const ZeroLaw&) {},
          [](const FidelityPower& p) {
            require(p.alpha > 0.0, "FidelityPower: alpha must be > 0");
            require(p.beta > 1.0, "FidelityPower: beta must be > 1");
          },
          [](const MixedPower& p) {
            require(p.alpha > 0.0 && p.gamma > 0.0,
                    "MixedPower: alpha and gamma must be > 0");
            require(p.beta > 1.0 && p.delta > 1.0,
                    "MixedPower: beta and delta must be > 1");
          },
          [](const TwoHamiltonian& p) {
            require(std::isfinite(p.gamma), "TwoHamiltonian: gamma not finite");
            require(0.0 < p.eps1 && p.eps1 < p.eps2 && p.eps2 < 1.0,
                    "TwoHamiltonian: need 0 < eps1 < eps2 < 1");
          },
      },
      variant_);
}

std::string FeedbackLaw::name() const {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const ZeroLaw&) { out << "zero"; },
                 [&](const FidelityPower& p) {
                   out << "fidelity-power(alpha=" << p.alpha
                       << ", beta=" << p.beta << ")";
                 },
                 [&](const MixedPower& p) {
                   out << "mixed-power(alpha=" << p.alpha << ", beta=" << p.beta
                       << ", gamma=" << p.gamma << ", delta=" << p.delta << ")";
                 },
                 [&](const TwoHamiltonian& p) {
                   out << "two-hamiltonian(gamma=" << p.gamma
                       << ", eps1=" << p.eps1 << ", eps2=" << p.eps2 << ")";
                 },
             },
             variant_);
  out << " -> " << to_string(target_);
  return out.str();
}

int FeedbackLaw::control_count(const SystemModel& model) const {
  if (is_zero()) return static_cast<int>(model.controls().size());
  return std::holds_alternative<TwoHamiltonian>(variant_) ? 2 : 1;
}

std::vector<double> FeedbackLaw::evaluate(const ComplexMatrix& rho,
                                          const SystemModel& model) const {
  const GhzBasis& basis = model.basis();
  if (!is_zero() && model.controls().empty()) {
    throw std::invalid_argument(name() + ": model has no control Hamiltonian");
  }
  return std::visit(
      Overloaded{
          [&](const ZeroLaw&) {
            return std::vector<double>(model.controls().size(), 0.0);
          },
          [&](const FidelityPower& p) {
            const double base = basis.infidelity(rho, target_);
            return std::vector<double>{p.alpha * signed_power(base, p.beta)};
          },
          [&](const MixedPower& p) {
            if (!model.has_x_channel()) {
              throw std::invalid_argument(
                  "MixedPower needs an x-type measurement channel");
            }
            const double lk = basis.population(model.z_sum(), target_);
            const double z_res = lk - trace_product(model.z_sum(), rho).real();
            const double x_res = sign_value(target_.sign) -
                                 trace_product(model.x_operator(), rho).real();
            return std::vector<double>{p.alpha * signed_power(z_res, p.beta) +
                                       p.gamma * signed_power(x_res, p.delta)};
          },
          [&](const TwoHamiltonian& p) {
            if (model.controls().size() < 2) {
              throw std::invalid_argument(
                  "TwoHamiltonian needs two control Hamiltonians");
            }
            const double o1 =
                overlap_at(basis, rho, model.controls()[0].matrix(), target_);
            const double o2 =
                overlap_at(basis, rho, model.controls()[1].matrix(), target_);
            const double fid = fidelity_at(basis, rho, target_);
            return std::vector<double>{
                p.gamma - o1, smoothstep_f(fid, p.eps1, p.eps2) * (p.gamma - o2)};
          },
      },
      variant_);
}

double signed_power(double x, double p) {
  if (p == std::floor(p) && std::abs(p) < 64) return std::pow(x, p);
  const double mag = std::pow(std::abs(x), p);
  return x < 0 ? -mag : mag;
}

double smoothstep_f(double x, double eps1, double eps2) {
  if (!(0.0 < eps1 && eps1 < eps2 && eps2 < 1.0)) {
    throw std::invalid_argument("smoothstep_f: need 0 < eps1 < eps2 < 1");
  }
  constexpr double kSlack = 1e-9;
  if (!(x >= -kSlack && x <= 1.0 + kSlack)) {
    throw std::invalid_argument("smoothstep_f: argument " + std::to_string(x) +
                                " outside [0, 1]");
  }
  if (x < eps1) return 0.0;
  if (x >= eps2) return 1.0;
  const double phase =
      std::numbers::pi * (2.0 * x - eps1 - eps2) / (2.0 * (eps2 - eps1));
  return 0.5 * std::sin(phase) + 0.5;
}

double commutator_overlap(const ComplexMatrix& rho, const ComplexMatrix& h,
                          const ComplexVector& v) {
  const ComplexVector hv = h * v;
  const ComplexVector rv = rho * v;
  // v^dagger H rho v and v^dagger rho H v, each from its own products.
  const Complex x = hv.adjoint() * rv;
  const Complex y = rv.adjoint() * hv;
  const Complex value = Complex(0.0, 1.0) * (x - y);
  if (std::abs(value.imag()) > kImaginaryTolerance * std::max(1.0, std::abs(x))) {
    throw NumericalError("Tr(i[H,rho] rhobar) has imaginary part " +
                         std::to_string(value.imag()));
  }
  return value.real();
}

double theta_u(const ComplexMatrix& rho, const ComplexMatrix& h,
               const ComplexVector& target, double u) {
  if (u == 0.0) return 0.0;
  return u * commutator_overlap(rho, h, target);
}

A2Report check_A2(const FeedbackLaw& law, const SystemModel& model) {
  A2Report report;
  if (std::holds_alternative<TwoHamiltonian>(law.variant())) {
    report.applicable = false;
    report.note =
        "two-control law: the target is an equilibrium of the combined drift "
        "only; use the combined-drift check";
    return report;
  }
  if (model.controls().empty()) {
    report.note = "model has no control Hamiltonian";
    return report;
  }
  const GhzBasis& basis = model.basis();
  const ComplexMatrix& h1 = model.controls()[0].matrix();
  report.u_at_target = law.evaluate(basis.projector(law.target()), model)[0];
  report.vanishes_at_target = std::abs(report.u_at_target) <= kA2Threshold;
  bool all = true;
  for (const GhzIndex idx : basis.indices()) {
    if (idx == law.target()) continue;
    const ComplexMatrix rho = basis.projector(idx);
    A2Entry entry;
    entry.state = idx;
    entry.u = law.evaluate(rho, model)[0];
    entry.commutator_norm = commutator(h1, rho).norm();
    entry.pass = std::abs(entry.u) * entry.commutator_norm > kA2Threshold;
    all = all && entry.pass;
    report.entries.push_back(entry);
  }
  report.pass = report.vanishes_at_target && all;
  if (law.is_zero()) report.note = "u vanishes identically";
  return report;
}

double combined_control_drift(const FeedbackLaw& law, const SystemModel& model) {
  const ComplexMatrix target = model.basis().projector(law.target());
  const std::vector<double> u = law.evaluate(target, model);
  ComplexMatrix drift = ComplexMatrix::Zero(model.dim(), model.dim());
  for (size_t j = 0; j < u.size() && j < model.controls().size(); ++j) {
    drift += u[j] * commutator(model.controls()[j].matrix(), target);
  }
  return max_abs(drift);
}

}  // namespace ghzstab
