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

#ifndef GHZSTAB_SCENARIO_H_
#define GHZSTAB_SCENARIO_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ghzstab/analysis.h"
#include "ghzstab/control.h"
#include "ghzstab/dynamics.h"
#include "ghzstab/model.h"

namespace ghzstab {

/// Malformed or inconsistent scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChannelSpec {
  ChannelKind kind = ChannelKind::kZ;
  /// z-type only.
  ZPattern pattern;
  /// Scalar in front of the pattern product (z-type only).
  double weight = 1.0;
  double strength = 1.0;
  double efficiency = 1.0;
};

enum class InitialKind { kMixed, kGhz, kFile };

struct ScenarioConfig {
  std::string name;
  int qubits = 3;
  /// H0 = omega * (sum of the unscaled z-type operators) unless `h0` is set.
  double omega = 0.0;
  std::optional<std::string> h0;
  std::vector<ChannelSpec> channels;
  /// Pauli-sum text of each control Hamiltonian.
  std::vector<std::string> controls;
  GhzIndex target;
  LawVariant law = ZeroLaw{};
  InitialKind initial = InitialKind::kMixed;
  GhzIndex initial_ghz;
  std::filesystem::path initial_file;
  double dt = 1e-3;
  Scheme scheme = Scheme::kKraus;
  double horizon = 30.0;
  long trajectories = 10;
  std::uint64_t seed = 1;
  int stride = 100;
  std::filesystem::path output;
  /// Defaults follow the law: reduction (zero), fidelity (fidelity-power,
  /// two-hamiltonian), mixed (mixed-power).
  std::optional<LyapunovKind> lyapunov;
  double threshold = 0.99;
  /// Exponent-fit window; defaults to the last two thirds of the horizon.
  std::optional<double> window_start;
  std::optional<double> window_end;
  /// Worker threads; 0 means one per hardware thread.
  int threads = 0;
};

/// Parses the key = value grammar documented in the README. Relative file
/// paths are resolved against `base_dir`. Throws ConfigError.
ScenarioConfig parse_config(std::string_view text,
                            const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

/// Applies one "key = value" assignment on top of an existing config.
void apply_setting(ScenarioConfig& cfg, std::string_view key,
                   std::string_view value,
                   const std::filesystem::path& base_dir = {});

std::string law_name(const LawVariant& law);
LyapunovKind effective_lyapunov(const ScenarioConfig& cfg);

/// The model in the computational frame. Throws ConfigError.
SystemModel build_model(const ScenarioConfig& cfg);
FeedbackLaw build_law(const ScenarioConfig& cfg);
/// Computational-frame initial state. Appends ingest warnings to `warning`.
DensityMatrix build_initial_state(const ScenarioConfig& cfg,
                                  std::string* warning = nullptr);

/// Reads a whitespace-separated complex matrix; entries are "re" or "re,im".
ComplexMatrix read_matrix_file(const std::filesystem::path& path);

struct EnsembleResult {
  ScenarioConfig config;
  LyapunovKind lyapunov = LyapunovKind::kReduction;
  int controls = 1;
  long trajectories = 0;
  std::vector<double> times;

  /// Indexed [traj * samples + sample] (u: times controls).
  std::vector<double> v;
  std::vector<double> bures;
  std::vector<double> fidelity;
  std::vector<double> u;

  std::vector<double> mean_v;
  std::vector<double> mean_bures;
  std::vector<double> mean_fidelity;
  std::vector<double> mean_u;

  /// V(rho0) exp(exponent t); NaN without a proven rate.
  std::vector<double> reference;
  std::optional<double> reference_exponent;
  std::string reference_label;
  double v0 = 0.0;
  std::optional<RateBounds> bounds;

  std::optional<ExponentFit> fit_v;
  std::optional<ExponentFit> fit_bures;
  double window_start = 0.0;
  double window_end = 0.0;

  /// Final GHZ populations per trajectory (slot order).
  std::vector<RealVector> final_populations;
  std::vector<double> final_fidelity;
  /// Classification of each final state; -1 for unresolved.
  std::vector<int> final_class;
  /// Counts per slot, plus unresolved.
  std::vector<long> class_counts;
  long unresolved = 0;

  std::vector<TrajectoryDiagnostics> diagnostics;
  std::vector<std::string> warnings;

  size_t samples() const { return times.size(); }
  double at(const std::vector<double>& series, long traj, size_t sample) const {
    return series[static_cast<size_t>(traj) * samples() + sample];
  }
};

using ProgressCallback = std::function<void(long done, long total)>;

/// Runs the ensemble. Deterministic given the config (including seed),
/// independent of the worker count. Throws ConfigError for invalid configs
/// and IntegrationAbort when a trajectory fails.
EnsembleResult run_scenario(const ScenarioConfig& cfg,
                            const ProgressCallback& progress = {});

/// Fits the ensemble mean of `series` ("v" or "bures") over [t0, t1].
ExponentFit fit_mean(const EnsembleResult& r, const std::vector<double>& mean,
                     double t0, double t1);

/// 12 significant digits in plain decimal notation ("nan" for NaN).
std::string format_decimal(double x);

/// Header, one row per (trajectory, sample), then one mean row per sample.
std::string csv_text(const EnsembleResult& r);
/// Writes csv_text to `path`; throws std::runtime_error on I/O failure.
void emit_csv(const EnsembleResult& r, const std::filesystem::path& path);

/// Machine-readable run summary (JSON text).
std::string summary_json(const EnsembleResult& r);

/// Directory holding the built-in scenario_a.cfg and scenario_b.cfg.
std::filesystem::path builtin_scenario_dir();

}  // namespace ghzstab

#endif  // GHZSTAB_SCENARIO_H_
