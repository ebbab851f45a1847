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

// Scenario configuration: a flat "key = value" file. Lines starting with '#'
// are comments, values may be wrapped in double quotes, and dotted keys
// address channels and controls by their 1-based position.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "ghzstab/scenario.h"

namespace ghzstab {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

double to_double(std::string_view key, std::string_view value) {
  const std::string text(value);
  char* end = nullptr;
  const double x = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(x)) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + text +
                      "'");
  }
  return x;
}

double to_positive(std::string_view key, std::string_view value) {
  const double x = to_double(key, value);
  if (!(x > 0.0)) throw ConfigError(std::string(key) + " must be positive");
  return x;
}

template <class Int>
Int to_integer(std::string_view key, std::string_view value) {
  Int x{};
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), x);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" +
                      std::string(value) + "'");
  }
  return x;
}

Sign to_sign(std::string_view key, std::string_view value) {
  if (value == "+" || value == "plus" || value == "+1" || value == "1") {
    return Sign::kPlus;
  }
  if (value == "-" || value == "minus" || value == "-1") return Sign::kMinus;
  throw ConfigError(std::string(key) + ": expected + or -, got '" +
                    std::string(value) + "'");
}

// "ghz:4:-" -> (4, -)
GhzIndex parse_ghz_spec(std::string_view key, std::string_view text) {
  const auto first = text.find(':');
  const auto second = text.find(':', first + 1);
  if (first == std::string_view::npos || second == std::string_view::npos) {
    throw ConfigError(std::string(key) + ": expected ghz:K:SIGN");
  }
  return {to_integer<int>(key, text.substr(first + 1, second - first - 1)),
          to_sign(key, text.substr(second + 1))};
}

ChannelSpec& channel_at(ScenarioConfig& cfg, std::string_view key, int index) {
  if (index < 1 || index > 64) {
    throw ConfigError(std::string(key) + ": channel index out of range");
  }
  if (static_cast<int>(cfg.channels.size()) < index) cfg.channels.resize(index);
  return cfg.channels[index - 1];
}

template <class T>
T& law_as(ScenarioConfig& cfg, std::string_view key) {
  if (!std::holds_alternative<T>(cfg.law)) {
    throw ConfigError(std::string(key) +
                      " does not apply to feedback.law = " + law_name(cfg.law) +
                      " (set feedback.law first)");
  }
  return std::get<T>(cfg.law);
}

void set_feedback_parameter(ScenarioConfig& cfg, std::string_view key,
                            std::string_view param, std::string_view value) {
  const double x = to_double(key, value);
  if (param == "alpha") {
    if (auto* p = std::get_if<FidelityPower>(&cfg.law)) {
      p->alpha = x;
    } else {
      law_as<MixedPower>(cfg, key).alpha = x;
    }
  } else if (param == "beta") {
    if (auto* p = std::get_if<FidelityPower>(&cfg.law)) {
      p->beta = x;
    } else {
      law_as<MixedPower>(cfg, key).beta = x;
    }
  } else if (param == "gamma") {
    if (auto* p = std::get_if<TwoHamiltonian>(&cfg.law)) {
      p->gamma = x;
    } else {
      law_as<MixedPower>(cfg, key).gamma = x;
    }
  } else if (param == "delta") {
    law_as<MixedPower>(cfg, key).delta = x;
  } else if (param == "eps1") {
    law_as<TwoHamiltonian>(cfg, key).eps1 = x;
  } else if (param == "eps2") {
    law_as<TwoHamiltonian>(cfg, key).eps2 = x;
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

}  // namespace

std::string law_name(const LawVariant& law) {
  switch (law.index()) {
    case 0:
      return "zero";
    case 1:
      return "fidelity-power";
    case 2:
      return "mixed-power";
    default:
      return "two-hamiltonian";
  }
}

void apply_setting(ScenarioConfig& cfg, std::string_view key_in,
                   std::string_view raw, const std::filesystem::path& base_dir) {
  const std::string key(trim(key_in));
  const std::string value = unquote(raw);
  if (key == "name") {
    cfg.name = value;
  } else if (key == "qubits") {
    cfg.qubits = to_integer<int>(key, value);
    if (cfg.qubits < 2 || cfg.qubits > kMaxQubits) {
      throw ConfigError("qubits must be in [2, " + std::to_string(kMaxQubits) +
                        "]");
    }
  } else if (key == "omega") {
    cfg.omega = to_double(key, value);
  } else if (key == "h0") {
    cfg.h0 = value;
  } else if (key.starts_with("channel.")) {
    const auto dot = key.find('.', 8);
    if (dot == std::string::npos) throw ConfigError("malformed key '" + key + "'");
    const int index = to_integer<int>(key, std::string_view(key).substr(8, dot - 8));
    ChannelSpec& ch = channel_at(cfg, key, index);
    const std::string field = key.substr(dot + 1);
    if (field == "type") {
      const std::string t = lower(value);
      if (t == "z") {
        ch.kind = ChannelKind::kZ;
      } else if (t == "x") {
        ch.kind = ChannelKind::kX;
      } else {
        throw ConfigError(key + ": expected z or x");
      }
    } else if (field == "pattern") {
      std::string compact;
      for (char c : value) {
        if (c != ',' && !std::isspace(static_cast<unsigned char>(c))) {
          compact.push_back(static_cast<char>(std::tolower(c)));
        }
      }
      if (!compact.empty() &&
          std::all_of(compact.begin(), compact.end(),
                      [](char c) { return c == 'x'; })) {
        ch.kind = ChannelKind::kX;
        ch.pattern.clear();
      } else {
        try {
          ch.pattern = parse_z_pattern(value);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(key + ": " + e.what());
        }
        ch.kind = ChannelKind::kZ;
      }
    } else if (field == "weight") {
      ch.weight = to_double(key, value);
      if (ch.weight == 0.0) throw ConfigError(key + " must be non-zero");
    } else if (field == "M") {
      ch.strength = to_positive(key, value);
    } else if (field == "eta") {
      ch.efficiency = to_double(key, value);
      if (!(ch.efficiency > 0.0 && ch.efficiency <= 1.0)) {
        throw ConfigError(key + " must lie in (0, 1]");
      }
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  } else if (key.starts_with("control.")) {
    const int index = to_integer<int>(key, std::string_view(key).substr(8));
    if (index < 1 || index > 16) throw ConfigError(key + ": index out of range");
    if (static_cast<int>(cfg.controls.size()) < index) {
      cfg.controls.resize(index);
    }
    cfg.controls[index - 1] = value;
  } else if (key == "target.k") {
    cfg.target.k = to_integer<int>(key, value);
  } else if (key == "target.sign") {
    cfg.target.sign = to_sign(key, value);
  } else if (key == "target") {
    cfg.target = parse_ghz_spec(key, value);
  } else if (key == "feedback.law") {
    const std::string name = lower(value);
    if (name == "zero") {
      cfg.law = ZeroLaw{};
    } else if (name == "fidelity-power") {
      cfg.law = FidelityPower{};
    } else if (name == "mixed-power") {
      cfg.law = MixedPower{};
    } else if (name == "two-hamiltonian") {
      cfg.law = TwoHamiltonian{};
    } else {
      throw ConfigError("feedback.law: unknown law '" + value + "'");
    }
  } else if (key.starts_with("feedback.")) {
    set_feedback_parameter(cfg, key, std::string_view(key).substr(9), value);
  } else if (key == "initial") {
    const std::string v = lower(value);
    if (v == "mixed") {
      cfg.initial = InitialKind::kMixed;
    } else if (v.starts_with("ghz:")) {
      cfg.initial = InitialKind::kGhz;
      cfg.initial_ghz = parse_ghz_spec(key, value);
    } else if (v.starts_with("file:")) {
      cfg.initial = InitialKind::kFile;
      std::filesystem::path p = value.substr(5);
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      cfg.initial_file = p;
    } else {
      throw ConfigError("initial: expected mixed, ghz:K:SIGN or file:PATH");
    }
  } else if (key == "dt") {
    cfg.dt = to_positive(key, value);
  } else if (key == "scheme") {
    try {
      cfg.scheme = parse_scheme(lower(value));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("scheme: ") + e.what());
    }
  } else if (key == "horizon") {
    cfg.horizon = to_positive(key, value);
  } else if (key == "trajectories") {
    cfg.trajectories = to_integer<long>(key, value);
    if (cfg.trajectories < 1) throw ConfigError("trajectories must be >= 1");
  } else if (key == "seed") {
    cfg.seed = to_integer<std::uint64_t>(key, value);
  } else if (key == "stride") {
    cfg.stride = to_integer<int>(key, value);
    if (cfg.stride < 1) throw ConfigError("stride must be >= 1");
  } else if (key == "output") {
    std::filesystem::path p = value;
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    cfg.output = p;
  } else if (key == "lyapunov") {
    try {
      cfg.lyapunov = parse_lyapunov_kind(lower(value));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("lyapunov: ") + e.what());
    }
  } else if (key == "threshold") {
    cfg.threshold = to_double(key, value);
    if (!(cfg.threshold > 0.5 && cfg.threshold < 1.0)) {
      throw ConfigError("threshold must lie in (0.5, 1)");
    }
  } else if (key == "window.start") {
    cfg.window_start = to_double(key, value);
  } else if (key == "window.end") {
    cfg.window_end = to_double(key, value);
  } else if (key == "threads") {
    cfg.threads = to_integer<int>(key, value);
    if (cfg.threads < 0) throw ConfigError("threads must be >= 0");
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

ScenarioConfig parse_config(std::string_view text,
                            const std::filesystem::path& base_dir) {
  ScenarioConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    // Strip trailing comments outside quotes.
    bool quoted = false;
    for (size_t i = 0; i < view.size(); ++i) {
      if (view[i] == '"') quoted = !quoted;
      if (view[i] == '#' && !quoted) {
        view = trim(view.substr(0, i));
        break;
      }
    }
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    try {
      apply_setting(cfg, view.substr(0, eq), view.substr(eq + 1), base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (size_t c = 0; c < cfg.channels.size(); ++c) {
    const ChannelSpec& ch = cfg.channels[c];
    if (ch.kind == ChannelKind::kZ && ch.pattern.empty()) {
      throw ConfigError("channel." + std::to_string(c + 1) +
                        " has no pattern");
    }
  }
  for (size_t j = 0; j < cfg.controls.size(); ++j) {
    if (cfg.controls[j].empty()) {
      throw ConfigError("control." + std::to_string(j + 1) + " is missing");
    }
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  ScenarioConfig cfg = parse_config(buffer.str(), path.parent_path());
  if (cfg.name.empty()) cfg.name = path.stem().string();
  return cfg;
}

LyapunovKind effective_lyapunov(const ScenarioConfig& cfg) {
  if (cfg.lyapunov) return *cfg.lyapunov;
  if (std::holds_alternative<ZeroLaw>(cfg.law)) return LyapunovKind::kReduction;
  if (std::holds_alternative<MixedPower>(cfg.law)) return LyapunovKind::kMixed;
  return LyapunovKind::kFidelity;
}

SystemModel build_model(const ScenarioConfig& cfg) {
  const int n = cfg.qubits;
  try {
    std::vector<MeasurementChannel> channels;
    ComplexMatrix z_sum = ComplexMatrix::Zero(1 << n, 1 << n);
    for (const ChannelSpec& spec : cfg.channels) {
      if (spec.kind == ChannelKind::kX) {
        channels.emplace_back(build_x_operator(n), spec.strength,
                              spec.efficiency, ChannelKind::kX);
      } else {
        HermitianMatrix op(spec.weight * build_z_operator(n, spec.pattern).matrix());
        z_sum += op.matrix();
        channels.emplace_back(std::move(op), spec.strength, spec.efficiency,
                              ChannelKind::kZ);
      }
    }
    HermitianMatrix h0 = cfg.h0 ? parse_pauli_sum(n, *cfg.h0)
                                : HermitianMatrix(cfg.omega * z_sum);
    std::vector<HermitianMatrix> controls;
    for (const auto& text : cfg.controls) {
      controls.push_back(parse_pauli_sum(n, text));
    }
    return SystemModel(n, std::move(h0), std::move(channels),
                       std::move(controls));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

FeedbackLaw build_law(const ScenarioConfig& cfg) {
  if (cfg.target.k < 1 || cfg.target.k > (1 << (cfg.qubits - 1))) {
    throw ConfigError("target.k out of range for " +
                      std::to_string(cfg.qubits) + " qubits");
  }
  try {
    return FeedbackLaw(cfg.law, cfg.target);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("feedback: ") + e.what());
  }
}

ComplexMatrix read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file '" + path.string() + "'");
  std::vector<std::vector<Complex>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string token;
    std::vector<Complex> row;
    while (fields >> token) {
      const auto comma = token.find(',');
      const double re = to_double("matrix entry", token.substr(0, comma));
      const double im = comma == std::string::npos
                            ? 0.0
                            : to_double("matrix entry", token.substr(comma + 1));
      row.emplace_back(re, im);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const size_t n = rows.size();
  if (n == 0) throw ConfigError("matrix file '" + path.string() + "' is empty");
  ComplexMatrix m(n, n);
  for (size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw ConfigError("matrix file '" + path.string() + "' is not square");
    }
    for (size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

DensityMatrix build_initial_state(const ScenarioConfig& cfg,
                                  std::string* warning) {
  const int dim = 1 << cfg.qubits;
  switch (cfg.initial) {
    case InitialKind::kMixed:
      return DensityMatrix::maximally_mixed(dim);
    case InitialKind::kGhz:
      try {
        return DensityMatrix::pure(
            ghz_vector(cfg.qubits, cfg.initial_ghz.k, cfg.initial_ghz.sign));
      } catch (const std::out_of_range& e) {
        throw ConfigError(std::string("initial: ") + e.what());
      }
    case InitialKind::kFile: {
      ComplexMatrix m = read_matrix_file(cfg.initial_file);
      if (m.rows() != dim) {
        throw ConfigError("initial state is " + std::to_string(m.rows()) +
                          "-dimensional, expected " + std::to_string(dim));
      }
      try {
        return DensityMatrix::ingest(std::move(m), warning);
      } catch (const InvalidState& e) {
        throw ConfigError(std::string("initial: ") + e.what());
      }
    }
  }
  throw ConfigError("initial: unsupported kind");
}

}  // namespace ghzstab
