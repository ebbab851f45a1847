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

#include "ghzstab/reachability.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/LU>

#include "ghzstab/analysis.h"

namespace ghzstab {
namespace {

constexpr double kDriftTolerance = 1e-10;
constexpr double kSecondaryControlTolerance = 1e-12;
constexpr double kA2Threshold = 1e-8;

bool holds(Verdict v) { return v == Verdict::kPass || v == Verdict::kAssumed; }

Verdict verdict(bool ok) { return ok ? Verdict::kPass : Verdict::kFail; }

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void condition_i(const FeedbackLaw& law, ConditionsReport& r) {
  std::visit(
      Overloaded{
          [&](const ZeroLaw&) {
            r.cond_i = Verdict::kFail;
            r.cond_i_detail =
                "u vanishes identically, so every directional derivative of u "
                "is zero on the zero-fidelity slice";
          },
          [&](const FidelityPower& p) {
            r.cond_i = Verdict::kPass;
            r.cond_i_detail = "u = alpha = " + std::to_string(p.alpha) +
                              " on the zero-fidelity slice, so the slice "
                              "contains no zero of u (holds vacuously)";
          },
          [&](const MixedPower&) {
            r.cond_i = Verdict::kAssumed;
            r.cond_i_detail =
                "the zero set of u can meet the zero-fidelity slice; no "
                "closed-form verdict for this family, not verified";
          },
          [&](const TwoHamiltonian& p) {
            r.cond_i = verdict(p.gamma != 0.0);
            r.cond_i_detail =
                p.gamma != 0.0
                    ? "rho ghz = 0 on the zero-fidelity slice, so u1 = gamma "
                      "!= 0 and u2 = f(0)(...) = 0 (holds vacuously)"
                    : "gamma = 0 makes u1 vanish on the zero-fidelity slice";
          },
      },
      law.variant());
}

void condition_a(const FeedbackLaw& law, const SystemModel& model,
                 ConditionsReport& r) {
  if (model.controls().empty()) {
    r.a2 = Verdict::kFail;
    r.a2_detail = "model has no control Hamiltonian";
    return;
  }
  r.control_drift_at_target = combined_control_drift(law, model);
  const bool two = std::holds_alternative<TwoHamiltonian>(law.variant());
  if (!two) {
    const A2Report a2 = check_A2(law, model);
    r.u_at_target = a2.u_at_target;
    r.a2_entries = a2.entries;
    r.a2 = verdict(a2.pass);
    r.a2_detail = a2.pass ? "u(rhobar) = 0 and u[H1,rho] != 0 on the other "
                            "GHZ states"
                          : (!a2.vanishes_at_target
                                 ? "u does not vanish at the target"
                                 : "u[H1,rho] vanishes at some GHZ state");
    if (!a2.note.empty()) r.a2_detail += " (" + a2.note + ")";
    return;
  }
  const GhzBasis& basis = model.basis();
  const ComplexMatrix& h1 = model.controls()[0].matrix();
  r.u_at_target = law.evaluate(basis.projector(law.target()), model)[0];
  bool all = true;
  for (const GhzIndex idx : basis.indices()) {
    if (idx == law.target()) continue;
    const ComplexMatrix rho = basis.projector(idx);
    const std::vector<double> u = law.evaluate(rho, model);
    A2Entry e;
    e.state = idx;
    e.u = u[0];
    e.commutator_norm = commutator(h1, rho).norm();
    e.pass = std::abs(e.u) * e.commutator_norm > kA2Threshold;
    for (size_t k = 1; k < u.size(); ++k) {
      e.pass = e.pass && std::abs(u[k]) <= kSecondaryControlTolerance;
    }
    all = all && e.pass;
    r.a2_entries.push_back(e);
  }
  const bool equilibrium = r.control_drift_at_target <= kDriftTolerance;
  r.a2 = verdict(all && equilibrium);
  r.a2_detail = all ? "u1[H1,rho] != 0 and u_k = 0 (k > 1) on the other GHZ "
                      "states"
                    : "u1[H1,rho] vanishes or u_k != 0 (k > 1) at some GHZ "
                      "state";
  r.a2_detail += equilibrium
                     ? "; the controlled drift vanishes at the target"
                     : "; the controlled drift does not vanish at the target";
}

ComplexMatrix random_correlation(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = Complex(normal(rng), normal(rng));
  }
  Eigen::MatrixXcd c = g * g.adjoint();
  const Eigen::VectorXd scale = c.diagonal().real().cwiseSqrt().cwiseInverse();
  c = scale.asDiagonal() * c * scale.asDiagonal();
  return c;
}

SamplingResult sample_condition_iii(const SystemModel& model,
                                    const FeedbackLaw& law,
                                    const ConditionOptions& options) {
  SamplingResult out;
  out.requested = options.samples;
  const GhzIndex target = law.target();
  const std::vector<RealVector> vertices = intersection_vertices(model, target);
  out.vertices = static_cast<int>(vertices.size());
  const GhzBasis& basis = model.basis();
  const int n = basis.dim();
  const int t = basis.slot(target);
  const bool only_target = std::all_of(
      vertices.begin(), vertices.end(),
      [&](const RealVector& v) { return std::abs(v(t) - 1.0) < 1e-12; });
  if (only_target) {
    out.vacuous = true;
    return out;
  }

  const GhzBasis ghz(basis.qubits(), Frame::kGhz);
  const ComplexMatrix& h1 = model.controls()[0].matrix();
  const ComplexVector target_vec = basis.vector(target);
  std::mt19937_64 rng(options.seed);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (long s = 0; s < options.samples; ++s) {
    RealVector p = RealVector::Zero(n);
    double total = 0.0;
    for (const auto& v : vertices) {
      const double w = gamma(rng);
      p += w * v;
      total += w;
    }
    p /= total;
    p = p.cwiseMax(0.0);
    ComplexMatrix c = ComplexMatrix::Identity(n, n);
    if (unit(rng) > 0.25) {
      const double mix = unit(rng);
      c = mix * random_correlation(n, rng) + (1.0 - mix) * c;
    }
    const RealVector root = p.cwiseSqrt();
    ComplexMatrix framed(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) framed(i, j) = root(i) * root(j) * c(i, j);
    }
    const ComplexMatrix rho = basis.to_frame(ghz.from_frame(framed));
    if (bures_to_ghz(rho, basis, target) < options.exclusion_radius) continue;
    ++out.sampled;
    const double fidelity = 1.0 - basis.infidelity(rho, target);
    double spread = 0.0;
    for (int c_idx : model.z_channels()) {
      const auto& ch = model.channels()[c_idx];
      spread += ch.efficiency() * variance(rho, ch);
    }
    const double lhs = 2.0 * fidelity * spread;
    const double u = law.evaluate(rho, model)[0];
    const double rhs = theta_u(rho, h1, target_vec, u);
    const double margin = lhs - rhs;
    if (!out.margin || margin < *out.margin) {
      out.margin = margin;
      out.worst_populations.assign(p.data(), p.data() + n);
    }
  }
  if (out.sampled == 0) out.vacuous = true;
  return out;
}

}  // namespace

RankMatrix build_rank_matrix(const SystemModel& model, const ComplexVector& xi,
                             int depth, RankFlavor flavor) {
  if (depth < 0) throw std::invalid_argument("build_rank_matrix: depth < 0");
  if (xi.size() != model.dim()) {
    throw DimensionError("build_rank_matrix: seed vector has wrong length");
  }
  if (flavor == RankFlavor::kFull && !model.has_x_channel()) {
    throw std::invalid_argument(
        "build_rank_matrix: full flavor needs an x-type channel");
  }
  if (model.controls().empty()) {
    throw std::invalid_argument("build_rank_matrix: model has no control");
  }
  const ComplexMatrix& h1 = model.controls()[0].matrix();
  const int per_level = static_cast<int>(model.z_channels().size()) +
                        (flavor == RankFlavor::kFull ? 2 : 1);
  RankMatrix out;
  out.depth = depth;
  out.flavor = flavor;
  out.columns.resize(model.dim(), 1 + depth * per_level);
  out.columns.col(0) = xi;
  ComplexVector w = xi;
  int col = 1;
  for (int level = 1; level <= depth; ++level) {
    w = h1 * w;
    out.columns.col(col++) = w;
    for (int c : model.z_channels()) {
      out.columns.col(col++) = model.channels()[c].unscaled().matrix() * w;
    }
    if (flavor == RankFlavor::kFull) {
      out.columns.col(col++) = model.x_operator() * w;
    }
  }
  return out;
}

int numeric_rank(const Eigen::MatrixXcd& m, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("numeric_rank: tol must be > 0");
  const RealVector s = singular_values(m);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol * s(0)) ++rank;
  }
  return rank;
}

int numeric_rank(const RankMatrix& m, double tol) {
  return numeric_rank(m.columns, tol);
}

std::optional<int> first_depth_with_rank(const SystemModel& model,
                                         const ComplexVector& xi,
                                         RankFlavor flavor, int required,
                                         int cap) {
  for (int l = 0; l <= cap; ++l) {
    if (numeric_rank(build_rank_matrix(model, xi, l, flavor)) >= required) {
      return l;
    }
  }
  return std::nullopt;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "pass";
    case Verdict::kFail:
      return "fail";
    case Verdict::kAssumed:
      return "assumed";
    case Verdict::kNotApplicable:
      return "n/a";
  }
  return "?";
}

std::vector<RealVector> intersection_vertices(const SystemModel& model,
                                              GhzIndex target) {
  const GhzBasis& basis = model.basis();
  const int n = basis.dim();
  const int rows = 1 + static_cast<int>(model.z_channels().size()) +
                   (model.has_x_channel() ? 1 : 0);
  Eigen::MatrixXd a(rows, n);
  Eigen::VectorXd b(rows);
  a.row(0).setOnes();
  b(0) = 1.0;
  int row = 1;
  for (int c : model.z_channels()) {
    const ComplexMatrix& op = model.channels()[c].unscaled().matrix();
    for (int s = 0; s < n; ++s) a(row, s) = basis.population(op, basis.index_at(s));
    b(row) = basis.population(op, target);
    ++row;
  }
  if (model.has_x_channel()) {
    for (int s = 0; s < n; ++s) a(row, s) = sign_value(basis.index_at(s).sign);
    b(row) = sign_value(target.sign);
  }

  std::vector<RealVector> vertices;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    const int size = std::popcount(mask);
    if (size > rows) continue;
    std::vector<int> cols;
    for (int s = 0; s < n; ++s) {
      if (mask & (1u << s)) cols.push_back(s);
    }
    Eigen::MatrixXd sub(rows, size);
    for (int j = 0; j < size; ++j) sub.col(j) = a.col(cols[j]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    if (lu.rank() != size) continue;
    const Eigen::VectorXd x = sub.colPivHouseholderQr().solve(b);
    if ((sub * x - b).norm() > 1e-10) continue;
    if (x.minCoeff() < -1e-12) continue;
    RealVector p = RealVector::Zero(n);
    for (int j = 0; j < size; ++j) p(cols[j]) = std::max(x(j), 0.0);
    const bool seen =
        std::any_of(vertices.begin(), vertices.end(),
                    [&](const RealVector& v) { return (v - p).norm() < 1e-9; });
    if (!seen) vertices.push_back(std::move(p));
  }
  return vertices;
}

ConditionsReport check_conditions(const SystemModel& model,
                                  const FeedbackLaw& law,
                                  const ConditionOptions& options) {
  ConditionsReport r;
  r.flavor = model.has_x_channel() ? RankFlavor::kFull : RankFlavor::kZOnly;
  r.law = law.name();
  r.target = law.target();
  r.assumptions = check_assumptions(model);
  const GhzBasis& basis = model.basis();
  const int n = basis.dim();
  basis.slot(law.target());

  condition_a(law, model, r);
  condition_i(law, r);

  r.depth_cap = options.depth_cap > 0 ? options.depth_cap : 2 * n;
  if (!model.controls().empty()) {
    bool all_full = true;
    for (const GhzIndex idx : basis.indices()) {
      const ComplexVector xi = basis.vector(idx);
      RankEntry e;
      e.seed = idx;
      e.rank = numeric_rank(build_rank_matrix(model, xi, r.depth_cap, r.flavor));
      e.depth = first_depth_with_rank(model, xi, r.flavor, n, r.depth_cap);
      all_full = all_full && e.depth.has_value();
      r.seed_ranks.push_back(e);
      if (idx == law.target()) {
        r.target_rank = e;
        r.target_rank.depth =
            first_depth_with_rank(model, xi, r.flavor, n - 1, r.depth_cap);
      }
    }
    r.cond_ii = verdict(r.target_rank.depth.has_value());
    r.cond_c = verdict(all_full);
  }

  if (model.z_channels().size() > 0) {
    const int half = basis.half();
    std::vector<double> l(half);
    for (int k = 1; k <= half; ++k) {
      l[k - 1] = basis.population(model.z_sum(), {k, Sign::kPlus});
    }
    const double lk = l[law.target().k - 1];
    bool above = true, below = true;
    for (int k = 1; k <= half; ++k) {
      if (k == law.target().k) continue;
      above = above && lk > l[k - 1];
      below = below && lk < l[k - 1];
    }
    r.extremal_target = above || below;
  }

  if (std::holds_alternative<TwoHamiltonian>(law.variant()) &&
      model.controls().size() >= 2) {
    const ComplexMatrix target = basis.projector(law.target());
    r.commuting_sum_norm =
        max_abs(commutator(model.controls()[0].matrix() +
                               model.controls()[1].matrix(),
                           target));
    r.commuting_sum = verdict(r.commuting_sum_norm <= kDriftTolerance);
  }

  const bool assumptions_ok = r.assumptions.a0 && r.assumptions.a1;
  if (r.flavor == RankFlavor::kFull) {
    if (!model.controls().empty() && assumptions_ok) {
      r.sampling = sample_condition_iii(model, law, options);
      r.cond_iii = verdict(r.sampling.vacuous ||
                           (r.sampling.margin && *r.sampling.margin > 0.0));
    } else {
      r.cond_iii = Verdict::kFail;
    }
    r.pass = assumptions_ok && holds(r.a2) && holds(r.cond_i) &&
             holds(r.cond_ii) && holds(r.cond_iii);
  } else {
    r.pass = assumptions_ok && holds(r.a2) && holds(r.cond_i) &&
             holds(r.cond_c) && r.extremal_target &&
             r.commuting_sum != Verdict::kFail;
  }
  return r;
}

std::string ConditionsReport::summary() const {
  std::ostringstream out;
  const bool full = flavor == RankFlavor::kFull;
  out << "law: " << law << "\n";
  out << "measurements: " << (full ? "z-type and x-type" : "z-type only")
      << "\n";
  out << assumptions.summary() << "\n";
  out << (full ? "(A2) " : "(A) ") << to_string(a2) << ": " << a2_detail
      << " [u(rhobar) = " << u_at_target
      << ", |controlled drift at rhobar| = " << control_drift_at_target << "]\n";
  for (const auto& e : a2_entries) {
    out << "    " << to_string(e.state) << ": u = " << e.u
        << ", ||[H1,rho]|| = " << e.commutator_norm
        << (e.pass ? "" : "  <- fails") << "\n";
  }
  out << (full ? "(i) " : "(B) ") << to_string(cond_i) << ": " << cond_i_detail
      << "\n";
  if (full) {
    out << "(ii) " << to_string(cond_ii) << ": rank >= N-1 at "
        << to_string(target);
    if (target_rank.depth) out << " from depth " << *target_rank.depth;
    out << " (cap " << depth_cap << ")\n";
  }
  out << (full ? "rank N per seed: " : "(C) ") << to_string(cond_c) << ":";
  for (const auto& e : seed_ranks) {
    out << " " << to_string(e.seed) << "="
        << (e.depth ? "l" + std::to_string(*e.depth) : "never");
  }
  out << "\n";
  if (full) {
    out << "(iii) " << to_string(cond_iii) << ": ";
    if (sampling.vacuous) {
      out << "intersection set reduces to the target (" << sampling.vertices
          << " vertex), holds vacuously";
    } else {
      out << sampling.sampled << " samples, min margin "
          << (sampling.margin ? std::to_string(*sampling.margin) : "n/a");
    }
    out << "\n";
  } else {
    out << "[H1+H2, rhobar] = 0: " << to_string(commuting_sum) << " (norm "
        << commuting_sum_norm << ")\n";
    out << "target l_k extremal: " << (extremal_target ? "yes" : "no") << "\n";
  }
  out << "overall: " << (pass ? "pass" : "fail") << "\n";
  return out.str();
}

}  // namespace ghzstab
