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

#include "ghzstab/model.h"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ghzstab {
namespace {

void require_qubits(int n) {
  if (n < 2 || n > kMaxQubits) {
    throw std::invalid_argument("qubit count must be in [2, " +
                                std::to_string(kMaxQubits) + "], got " +
                                std::to_string(n));
  }
}

// Conjugation by U leaves O(1e-17) debris where exact zeros belong; the fast
// diagonal paths in the integrator need those zeros back.
ComplexMatrix chop(ComplexMatrix m) {
  const double cutoff = 1e-14 * std::max(1.0, max_abs(m));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    Complex& z = m.data()[i];
    if (std::abs(z.real()) < cutoff) z.real(0.0);
    if (std::abs(z.imag()) < cutoff) z.imag(0.0);
  }
  return m;
}

HermitianMatrix conjugate_into(const HermitianMatrix& op, const GhzBasis& from,
                               const GhzBasis& to) {
  ComplexMatrix m = to.to_frame(from.from_frame(op.matrix()));
  m = chop(0.5 * (m + m.adjoint()));
  return HermitianMatrix(std::move(m));
}

ComplexMatrix pauli_from_letter(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'I':
      return identity(2);
    case 'X':
      return pauli_x();
    case 'Y':
      return pauli_y();
    case 'Z':
      return pauli_z();
    default:
      throw std::invalid_argument(std::string("unknown Pauli letter '") + c +
                                  "'");
  }
}

}  // namespace

std::string to_string(GhzIndex idx) {
  return std::string("GHZ") + sign_char(idx.sign) + "_" + std::to_string(idx.k);
}

ComplexVector ghz_vector(int n, int k, Sign sign) {
  if (n < 1 || n > kMaxQubits) {
    throw std::out_of_range("ghz_vector: unsupported qubit count");
  }
  const int dim = 1 << n;
  if (k < 1 || k > dim / 2) {
    throw std::out_of_range("ghz_vector: k=" + std::to_string(k) +
                            " outside [1, " + std::to_string(dim / 2) + "]");
  }
  // k_1 = 0 puts |k_1..k_n> at index k-1; the bitwise complement sits at N-k.
  ComplexVector v = ComplexVector::Zero(dim);
  const double amp = 1.0 / std::sqrt(2.0);
  v(k - 1) = amp;
  v(dim - k) = sign == Sign::kPlus ? amp : -amp;
  return v;
}

GhzBasis::GhzBasis(int n, Frame frame) : n_(n), dim_(1 << n), frame_(frame) {
  if (n < 1 || n > kMaxQubits) {
    throw std::invalid_argument("GhzBasis: unsupported qubit count");
  }
  unitary_ = ComplexMatrix::Zero(dim_, dim_);
  for (int s = 0; s < dim_; ++s) {
    const GhzIndex idx = index_at(s);
    unitary_.col(s) = ghz_vector(n_, idx.k, idx.sign);
  }
}

int GhzBasis::slot(GhzIndex idx) const {
  if (idx.k < 1 || idx.k > half()) {
    throw std::out_of_range("GhzBasis: k=" + std::to_string(idx.k) +
                            " outside [1, " + std::to_string(half()) + "]");
  }
  return idx.sign == Sign::kPlus ? idx.k - 1 : half() + idx.k - 1;
}

GhzIndex GhzBasis::index_at(int s) const {
  if (s < 0 || s >= dim_) throw std::out_of_range("GhzBasis: bad slot");
  return s < half() ? GhzIndex{s + 1, Sign::kPlus}
                    : GhzIndex{s - half() + 1, Sign::kMinus};
}

std::vector<GhzIndex> GhzBasis::indices() const {
  std::vector<GhzIndex> out;
  out.reserve(dim_);
  for (int s = 0; s < dim_; ++s) out.push_back(index_at(s));
  return out;
}

ComplexVector GhzBasis::vector(GhzIndex idx) const {
  if (frame_ == Frame::kGhz) {
    ComplexVector v = ComplexVector::Zero(dim_);
    v(slot(idx)) = 1.0;
    return v;
  }
  return ghz_vector(n_, idx.k, idx.sign);
}

ComplexMatrix GhzBasis::projector(GhzIndex idx) const {
  const ComplexVector v = vector(idx);
  return v * v.adjoint();
}

double GhzBasis::population(const ComplexMatrix& rho, GhzIndex idx) const {
  const int s = slot(idx);
  if (frame_ == Frame::kGhz) return rho(s, s).real();
  const int a = idx.k - 1;
  const int b = dim_ - idx.k;
  const double cross = rho(a, b).real() + rho(b, a).real();
  return 0.5 * (rho(a, a).real() + rho(b, b).real() +
                sign_value(idx.sign) * cross);
}

RealVector GhzBasis::populations(const ComplexMatrix& rho) const {
  RealVector p(dim_);
  for (int s = 0; s < dim_; ++s) p(s) = population(rho, index_at(s));
  return p;
}

double GhzBasis::infidelity(const ComplexMatrix& rho, GhzIndex idx) const {
  const int target = slot(idx);
  double sum = 0.0;
  for (int s = 0; s < dim_; ++s) {
    if (s != target) sum += population(rho, index_at(s));
  }
  return sum;
}

Complex GhzBasis::sandwich(const ComplexMatrix& a, const ComplexMatrix& b,
                           GhzIndex idx) const {
  if (frame_ == Frame::kGhz) {
    const int s = slot(idx);
    return (a.row(s).transpose().array() * b.col(s).array()).sum();
  }
  const int p = idx.k - 1;
  const int q = dim_ - idx.k;
  auto ab = [&](int i, int j) {
    return (a.row(i).transpose().array() * b.col(j).array()).sum();
  };
  const double sgn = sign_value(idx.sign);
  return 0.5 * (ab(p, p) + ab(q, q) + sgn * (ab(p, q) + ab(q, p)));
}

ComplexMatrix GhzBasis::to_frame(const ComplexMatrix& computational) const {
  if (frame_ == Frame::kComputational) return computational;
  return unitary_.adjoint() * computational * unitary_;
}

ComplexMatrix GhzBasis::from_frame(const ComplexMatrix& framed) const {
  if (frame_ == Frame::kComputational) return framed;
  return unitary_ * framed * unitary_.adjoint();
}

ComplexVector GhzBasis::vector_to_frame(const ComplexVector& computational) const {
  if (frame_ == Frame::kComputational) return computational;
  return unitary_.adjoint() * computational;
}

ZPattern parse_z_pattern(std::string_view text) {
  ZPattern out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) {
      throw std::invalid_argument("z-pattern: empty factor in '" +
                                  std::string(text) + "'");
    }
    if (token == "z" || token == "Z") {
      out.push_back(true);
    } else if (token == "1" || token == "i" || token == "I") {
      out.push_back(false);
    } else {
      throw std::invalid_argument("z-pattern: unknown factor '" + token + "'");
    }
    token.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == ',') {
      flush();
    } else {
      token.push_back(c);
    }
  }
  flush();
  return out;
}

std::string to_string(const ZPattern& pattern) {
  std::string out;
  for (size_t i = 0; i < pattern.size(); ++i) {
    if (i) out.push_back(',');
    out.push_back(pattern[i] ? 'z' : '1');
  }
  return out;
}

HermitianMatrix build_pattern_product(int n, const ZPattern& pattern) {
  if (static_cast<int>(pattern.size()) != n) {
    throw DimensionError("z-pattern has " + std::to_string(pattern.size()) +
                         " factors for " + std::to_string(n) + " qubits");
  }
  const auto z_count = std::count(pattern.begin(), pattern.end(), true);
  if (z_count % 2 != 0) {
    throw std::invalid_argument("z-pattern " + to_string(pattern) +
                                " has an odd number of sigma_z factors");
  }
  std::vector<ComplexMatrix> factors;
  for (bool z : pattern) factors.push_back(z ? pauli_z() : identity(2));
  return HermitianMatrix(kron_all(factors));
}

HermitianMatrix build_z_operator(int n, const ZPattern& pattern) {
  if (std::none_of(pattern.begin(), pattern.end(), [](bool z) { return z; })) {
    throw std::invalid_argument(
        "z-pattern without sigma_z is a multiple of the identity");
  }
  return build_pattern_product(n, pattern);
}

std::vector<ZPattern> even_z_patterns(int n) {
  std::vector<ZPattern> out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) % 2 != 0) continue;
    ZPattern p(n);
    for (int q = 0; q < n; ++q) p[q] = (mask >> (n - 1 - q)) & 1u;
    out.push_back(std::move(p));
  }
  return out;
}

HermitianMatrix build_x_operator(int n) {
  std::vector<ComplexMatrix> factors(n, pauli_x());
  return HermitianMatrix(kron_all(factors));
}

HermitianMatrix parse_pauli_sum(int n, std::string_view text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  if (s.empty()) throw std::invalid_argument("Pauli sum: empty expression");
  const int dim = 1 << n;
  ComplexMatrix total = ComplexMatrix::Zero(dim, dim);
  size_t pos = 0;
  while (pos < s.size()) {
    double coeff = 1.0;
    if (s[pos] == '+' || s[pos] == '-') {
      if (s[pos] == '-') coeff = -1.0;
      ++pos;
    } else if (pos != 0) {
      throw std::invalid_argument("Pauli sum: expected '+' or '-' at '" +
                                  s.substr(pos) + "'");
    }
    if (pos < s.size() &&
        (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) {
      const char* begin = s.c_str() + pos;
      char* end = nullptr;
      const double value = std::strtod(begin, &end);
      if (end == begin) throw std::invalid_argument("Pauli sum: bad number");
      coeff *= value;
      pos += static_cast<size_t>(end - begin);
      if (pos < s.size() && s[pos] == '*') ++pos;
    }
    std::vector<ComplexMatrix> factors;
    while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) {
      factors.push_back(pauli_from_letter(s[pos]));
      ++pos;
    }
    if (static_cast<int>(factors.size()) != n) {
      throw std::invalid_argument("Pauli sum: term with " +
                                  std::to_string(factors.size()) +
                                  " letters for " + std::to_string(n) +
                                  " qubits in '" + std::string(text) + "'");
    }
    total += coeff * kron_all(factors);
  }
  return HermitianMatrix(std::move(total));
}

MeasurementChannel::MeasurementChannel(HermitianMatrix op, double strength,
                                       double efficiency, ChannelKind kind)
    : unscaled_(std::move(op)),
      scaled_(unscaled_.matrix() * std::sqrt(strength > 0 ? strength : 0.0)),
      strength_(strength),
      efficiency_(efficiency),
      kind_(kind) {
  if (!(strength > 0.0) || !std::isfinite(strength)) {
    throw std::invalid_argument("measurement strength must be positive");
  }
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw std::invalid_argument("measurement efficiency must lie in (0, 1]");
  }
}

MeasurementChannel MeasurementChannel::in_frame(const GhzBasis& basis) const {
  const GhzBasis computational(basis.qubits());
  return MeasurementChannel(conjugate_into(unscaled_, computational, basis),
                            strength_, efficiency_, kind_);
}

SystemModel::SystemModel(int n, HermitianMatrix h0,
                         std::vector<MeasurementChannel> channels,
                         std::vector<HermitianMatrix> controls)
    : basis_((require_qubits(n), n)),
      h0_(std::move(h0)),
      channels_(std::move(channels)),
      controls_(std::move(controls)) {
  const Eigen::Index dim = basis_.dim();
  auto check_dim = [dim](const HermitianMatrix& m, const std::string& what) {
    if (m.dim() != dim) {
      throw DimensionError(what + " is " + std::to_string(m.dim()) + "x" +
                           std::to_string(m.dim()) + ", expected " +
                           std::to_string(dim));
    }
  };
  check_dim(h0_, "H0");
  const ComplexMatrix lx = build_x_operator(n).matrix();
  int x_count = 0;
  for (size_t c = 0; c < channels_.size(); ++c) {
    const auto& ch = channels_[c];
    const std::string name = "channel " + std::to_string(c + 1);
    check_dim(ch.unscaled(), name);
    if (ch.kind() == ChannelKind::kZ) {
      if (!ch.unscaled().is_diagonal()) {
        throw std::invalid_argument(name + ": z-type operator is not diagonal");
      }
      const RealVector d = ch.unscaled().diagonal();
      for (Eigen::Index i = 0; i < dim; ++i) {
        if (std::abs(d(i) - d(dim - 1 - i)) > kDefaultTolerances.hermitian) {
          throw std::invalid_argument(
              name + ": z-type diagonal is not mirror-symmetric");
        }
      }
    } else {
      if (++x_count > 1) {
        throw std::invalid_argument("at most one x-type channel is supported");
      }
      if (max_abs(ch.unscaled().matrix() - lx) > kDefaultTolerances.hermitian) {
        throw std::invalid_argument(name +
                                    ": x-type operator must be sigma_x^(x)n");
      }
    }
  }
  for (size_t j = 0; j < controls_.size(); ++j) {
    check_dim(controls_[j], "control " + std::to_string(j + 1));
  }
  index_channels();
}

SystemModel::SystemModel(Unchecked, GhzBasis basis, HermitianMatrix h0,
                         std::vector<MeasurementChannel> channels,
                         std::vector<HermitianMatrix> controls)
    : basis_(std::move(basis)),
      h0_(std::move(h0)),
      channels_(std::move(channels)),
      controls_(std::move(controls)) {
  index_channels();
}

void SystemModel::index_channels() {
  z_channels_.clear();
  x_channel_.reset();
  z_sum_ = ComplexMatrix::Zero(dim(), dim());
  for (size_t c = 0; c < channels_.size(); ++c) {
    if (channels_[c].kind() == ChannelKind::kZ) {
      z_channels_.push_back(static_cast<int>(c));
      z_sum_ += channels_[c].unscaled().matrix();
    } else {
      x_channel_ = static_cast<int>(c);
    }
  }
}

const ComplexMatrix& SystemModel::x_operator() const {
  if (!x_channel_) throw std::logic_error("model has no x-type channel");
  return channels_[*x_channel_].unscaled().matrix();
}

SystemModel SystemModel::in_frame(Frame frame) const {
  if (frame == basis_.frame()) return *this;
  GhzBasis target(basis_.qubits(), frame);
  std::vector<MeasurementChannel> channels;
  for (const auto& ch : channels_) {
    channels.emplace_back(conjugate_into(ch.unscaled(), basis_, target),
                          ch.strength(), ch.efficiency(), ch.kind());
  }
  std::vector<HermitianMatrix> controls;
  for (const auto& h : controls_) {
    controls.push_back(conjugate_into(h, basis_, target));
  }
  HermitianMatrix h0 = conjugate_into(h0_, basis_, target);
  return SystemModel(Unchecked{}, std::move(target), std::move(h0),
                     std::move(channels), std::move(controls));
}

namespace {

// <ghz_k^+| X |ghz_k^+> for an operator stored in the model's frame.
double ghz_expectation(const GhzBasis& basis, const ComplexMatrix& op, int k) {
  return basis.population(op, GhzIndex{k, Sign::kPlus});
}

}  // namespace

SpectralData spectral_data(const SystemModel& model, GhzIndex target) {
  if (model.z_channels().empty()) {
    throw std::invalid_argument("spectral_data: model has no z-type channel");
  }
  const AssumptionReport report = check_assumptions(model);
  if (!report.a0) {
    throw std::invalid_argument("spectral_data: (A0) fails: " +
                                report.summary());
  }
  const GhzBasis& basis = model.basis();
  basis.slot(target);  // range check
  SpectralData out;
  out.target = target;
  out.m_z = static_cast<int>(model.z_channels().size());
  const int half = basis.half();
  out.l.assign(half, 0.0);
  out.gamma_z = std::numeric_limits<double>::infinity();
  out.gamma_m = std::numeric_limits<double>::infinity();
  for (int c : model.z_channels()) {
    const auto& ch = model.channels()[c];
    std::vector<double> table(half);
    for (int k = 1; k <= half; ++k) {
      table[k - 1] = ghz_expectation(basis, ch.unscaled().matrix(), k);
      out.l[k - 1] += table[k - 1];
    }
    out.channel_l.push_back(std::move(table));
    out.gamma_z = std::min(out.gamma_z, ch.efficiency() * ch.strength());
  }
  for (const auto& ch : model.channels()) {
    out.gamma_m = std::min(out.gamma_m, ch.efficiency() * ch.strength());
  }

  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < half; ++i) {
    for (int j = i + 1; j < half; ++j) {
      gap = std::min(gap, std::abs(out.l[i] - out.l[j]));
    }
  }
  if (half > 1 && gap > kDefaultTolerances.hermitian) out.ell = gap;

  const double lk = out.l[target.k - 1];
  double max_other = -std::numeric_limits<double>::infinity();
  double min_other = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= half; ++k) {
    if (k == target.k) continue;
    max_other = std::max(max_other, out.l[k - 1]);
    min_other = std::min(min_other, out.l[k - 1]);
  }
  const double root = std::sqrt(static_cast<double>(out.m_z));
  out.c_plus = (lk - max_other) / root - 1.0;
  out.c_minus = (lk - min_other) / root + 1.0;
  return out;
}

std::string AssumptionReport::summary() const {
  std::ostringstream out;
  out << "(A0) " << (a0 ? "pass" : "fail");
  if (!a0) {
    out << " [" << a0_operator << " has |(U^dagger X U)_{" << a0_row + 1 << ","
        << a0_col + 1 << "}| = " << a0_magnitude << "]";
  }
  out << "; (A1) " << (a1 ? "pass" : "fail");
  if (!a1 && a1_first > 0) {
    out << " [l_" << a1_first << " = l_" << a1_second << "]";
  }
  return out.str();
}

AssumptionReport check_assumptions(const SystemModel& model,
                                   const Tolerances& tol) {
  AssumptionReport report;
  const GhzBasis& basis = model.basis();
  const GhzBasis computational(model.qubits());
  const ComplexMatrix& u = computational.unitary();

  std::vector<std::pair<std::string, const ComplexMatrix*>> ops;
  ops.emplace_back("H0", &model.h0().matrix());
  for (size_t c = 0; c < model.channels().size(); ++c) {
    ops.emplace_back("L" + std::to_string(c + 1),
                     &model.channels()[c].scaled().matrix());
  }
  report.a0 = true;
  for (const auto& [name, op] : ops) {
    const ComplexMatrix in_ghz = u.adjoint() * basis.from_frame(*op) * u;
    for (Eigen::Index i = 0; i < in_ghz.rows(); ++i) {
      for (Eigen::Index j = 0; j < in_ghz.cols(); ++j) {
        if (i == j) continue;
        const double mag = std::abs(in_ghz(i, j));
        if (mag > tol.frame_diagonal && mag > report.a0_magnitude) {
          report.a0 = false;
          report.a0_operator = name;
          report.a0_row = static_cast<int>(i);
          report.a0_col = static_cast<int>(j);
          report.a0_magnitude = mag;
        }
      }
    }
  }

  if (model.z_channels().empty()) return report;
  const int half = basis.half();
  std::vector<double> l(half);
  for (int k = 1; k <= half; ++k) {
    l[k - 1] = ghz_expectation(basis, model.z_sum(), k);
  }
  report.a1 = true;
  for (int i = 0; i < half && report.a1; ++i) {
    for (int j = i + 1; j < half; ++j) {
      if (std::abs(l[i] - l[j]) <= tol.hermitian) {
        report.a1 = false;
        report.a1_first = i + 1;
        report.a1_second = j + 1;
        break;
      }
    }
  }
  return report;
}

}  // namespace ghzstab
