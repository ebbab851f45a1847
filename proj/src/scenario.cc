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

#include "ghzstab/scenario.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "json.hpp"

#ifndef GHZSTAB_SCENARIO_DIR
#define GHZSTAB_SCENARIO_DIR "tools/scenarios"
#endif

namespace ghzstab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TrajectorySlot {
  std::vector<double> v, bures, fidelity, u;
  ComplexMatrix final_rho;
  TrajectoryDiagnostics diagnostics;
  std::exception_ptr error;
};

std::vector<double> ensemble_mean(const std::vector<double>& series,
                                  long trajectories, size_t width) {
  std::vector<double> mean(width, 0.0);
  if (trajectories == 0) return mean;
  for (long j = 0; j < trajectories; ++j) {
    for (size_t s = 0; s < width; ++s) {
      mean[s] += series[static_cast<size_t>(j) * width + s];
    }
  }
  for (double& m : mean) m /= static_cast<double>(trajectories);
  return mean;
}

std::optional<double> reference_exponent(const LawVariant& law,
                                         const RateBounds& b,
                                         std::string* label) {
  if (std::holds_alternative<ZeroLaw>(law)) {
    *label = "reduction: -Cbar";
    return b.reduction_exponent();
  }
  if (std::holds_alternative<FidelityPower>(law)) {
    if (b.c_plus_bar) {
      *label = "special: -2 Cbar+";
    } else if (b.c_minus_bar) {
      *label = "special: -2 Cbar-";
    }
    return b.special_exponent();
  }
  if (std::holds_alternative<MixedPower>(law)) {
    *label = "general: -Cbar";
    return b.general_exponent();
  }
  *label = "none (asymptotic stabilization only)";
  return std::nullopt;
}

double median(std::vector<double> x) {
  if (x.empty()) return kNaN;
  std::sort(x.begin(), x.end());
  const size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

nlohmann::json optional_number(const std::optional<double>& x) {
  return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

nlohmann::json fit_json(const std::optional<ExponentFit>& fit) {
  if (!fit) return nullptr;
  return {{"slope", fit->slope},
          {"intercept", fit->intercept},
          {"points", fit->points},
          {"clamped", fit->clamped}};
}

}  // namespace

EnsembleResult run_scenario(const ScenarioConfig& cfg,
                            const ProgressCallback& progress) {
  if (cfg.trajectories < 0) throw ConfigError("trajectories must be >= 0");
  const SystemModel model = build_model(cfg);
  const FeedbackLaw law = build_law(cfg);
  std::string ingest_warning;
  const DensityMatrix rho0 = build_initial_state(cfg, &ingest_warning);

  EnsembleResult r;
  r.config = cfg;
  r.lyapunov = effective_lyapunov(cfg);
  r.trajectories = cfg.trajectories;
  if (!ingest_warning.empty()) r.warnings.push_back(ingest_warning);
  if (r.lyapunov == LyapunovKind::kMixed && !model.has_x_channel()) {
    throw ConfigError("the mixed Lyapunov function needs an x-type channel");
  }
  try {
    r.controls = law.control_count(model);
    law.evaluate(rho0.matrix(), model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("feedback: ") + e.what());
  }

  // Integrate in the GHZ frame, where every z-type operator is diagonal.
  const SystemModel framed = model.in_frame(Frame::kGhz);
  const GhzBasis& basis = framed.basis();
  const ComplexMatrix start = model.basis().to_frame(rho0.matrix());
  const GhzIndex target = law.target();

  IntegratorConfig icfg;
  icfg.dt = cfg.dt;
  icfg.stride = cfg.stride;
  icfg.scheme = cfg.scheme;
  const long steps = std::lround(cfg.horizon / cfg.dt);
  for (long s = 0; s <= steps; s += cfg.stride) {
    r.times.push_back(static_cast<double>(s) * cfg.dt);
  }
  const size_t width = r.times.size();

  try {
    r.bounds = rate_bounds(model, target);
  } catch (const std::invalid_argument& e) {
    r.warnings.push_back(std::string("no rate bounds: ") + e.what());
  }
  r.v0 = lyapunov(r.lyapunov, start, framed, target);
  r.reference.assign(width, kNaN);
  if (r.bounds) {
    r.reference_exponent =
        reference_exponent(cfg.law, *r.bounds, &r.reference_label);
    if (r.reference_exponent) {
      for (size_t s = 0; s < width; ++s) {
        r.reference[s] = r.v0 * std::exp(*r.reference_exponent * r.times[s]);
      }
    }
  }

  const long n = cfg.trajectories;
  std::vector<TrajectorySlot> slots(static_cast<size_t>(n));
  std::atomic<long> next{0};
  std::atomic<long> done{0};
  std::atomic<bool> failed{false};
  std::mutex progress_mutex;
  const int controls = r.controls;

  auto worker = [&] {
    for (;;) {
      const long j = next.fetch_add(1);
      if (j >= n || failed.load()) return;
      TrajectorySlot& slot = slots[static_cast<size_t>(j)];
      slot.v.reserve(width);
      slot.bures.reserve(width);
      slot.fidelity.reserve(width);
      slot.u.reserve(width * controls);
      try {
        TrajectoryResult res = simulate_trajectory(
            framed, law, start, icfg, cfg.horizon, cfg.seed,
            static_cast<std::uint64_t>(j), [&](const SnapshotView& s) {
              slot.v.push_back(lyapunov(r.lyapunov, s.rho, framed, target));
              slot.bures.push_back(
                  lyapunov_distance(r.lyapunov, s.rho, basis, target));
              slot.fidelity.push_back(basis.population(s.rho, target));
              for (int c = 0; c < controls; ++c) {
                slot.u.push_back(c < static_cast<int>(s.u.size()) ? s.u[c]
                                                                   : 0.0);
              }
            });
        slot.final_rho = std::move(res.final_rho);
        slot.diagnostics = std::move(res.diagnostics);
      } catch (...) {
        slot.error = std::current_exception();
        failed.store(true);
        return;
      }
      const long finished = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(finished, n);
      }
    }
  };

  int threads = cfg.threads > 0
                    ? cfg.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp<int>(threads, 1, static_cast<int>(std::max(1L, n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
  }
  for (const TrajectorySlot& slot : slots) {
    if (slot.error) std::rethrow_exception(slot.error);
  }

  // Index-ordered reduction keeps the output independent of scheduling.
  r.v.reserve(n * width);
  r.bures.reserve(n * width);
  r.fidelity.reserve(n * width);
  r.u.reserve(n * width * controls);
  r.class_counts.assign(basis.dim(), 0);
  for (TrajectorySlot& slot : slots) {
    r.v.insert(r.v.end(), slot.v.begin(), slot.v.end());
    r.bures.insert(r.bures.end(), slot.bures.begin(), slot.bures.end());
    r.fidelity.insert(r.fidelity.end(), slot.fidelity.begin(),
                      slot.fidelity.end());
    r.u.insert(r.u.end(), slot.u.begin(), slot.u.end());
    r.final_populations.push_back(basis.populations(slot.final_rho));
    r.final_fidelity.push_back(basis.population(slot.final_rho, target));
    const auto cls = classify_limit(slot.final_rho, basis, cfg.threshold);
    if (cls) {
      const int s = basis.slot(*cls);
      r.final_class.push_back(s);
      ++r.class_counts[s];
    } else {
      r.final_class.push_back(-1);
      ++r.unresolved;
    }
    if (slot.diagnostics.max_clip >= 1e-6) {
      r.warnings.push_back("trajectory " +
                           std::to_string(&slot - slots.data()) +
                           ": projection clip " +
                           std::to_string(slot.diagnostics.max_clip));
    }
    r.diagnostics.push_back(std::move(slot.diagnostics));
  }
  r.mean_v = ensemble_mean(r.v, n, width);
  r.mean_bures = ensemble_mean(r.bures, n, width);
  r.mean_fidelity = ensemble_mean(r.fidelity, n, width);
  r.mean_u = ensemble_mean(r.u, n, width * controls);

  r.window_start = cfg.window_start.value_or(cfg.horizon / 3.0);
  r.window_end = cfg.window_end.value_or(cfg.horizon);
  if (n > 0) {
    try {
      r.fit_v = fit_mean(r, r.mean_v, r.window_start, r.window_end);
      r.fit_bures = fit_mean(r, r.mean_bures, r.window_start, r.window_end);
    } catch (const std::invalid_argument& e) {
      r.warnings.push_back(std::string("no exponent fit: ") + e.what());
    }
  }
  return r;
}

ExponentFit fit_mean(const EnsembleResult& r, const std::vector<double>& mean,
                     double t0, double t1) {
  return estimate_exponent(r.times, mean, t0, t1);
}

std::string format_decimal(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.11e", x);
  const int exponent = std::atoi(std::strchr(buf, 'e') + 1);
  const int precision = std::max(0, 11 - exponent);
  std::string out(static_cast<size_t>(precision) + 400, '\0');
  const int len =
      std::snprintf(out.data(), out.size(), "%.*f", precision, x);
  out.resize(static_cast<size_t>(len));
  return out;
}

std::string csv_text(const EnsembleResult& r) {
  std::string out = "t,traj,V,bures,fidelity";
  for (int c = 0; c < r.controls; ++c) out += ",u" + std::to_string(c + 1);
  out += ",ref\n";
  const size_t width = r.samples();
  auto row = [&](size_t s, const std::string& traj, double v, double bures,
                 double fid, const double* u) {
    out += format_decimal(r.times[s]);
    out += ',';
    out += traj;
    for (double x : {v, bures, fid}) {
      out += ',';
      out += format_decimal(x);
    }
    for (int c = 0; c < r.controls; ++c) {
      out += ',';
      out += format_decimal(u[c]);
    }
    out += ',';
    out += format_decimal(r.reference[s]);
    out += '\n';
  };
  for (long j = 0; j < r.trajectories; ++j) {
    const std::string traj = std::to_string(j);
    for (size_t s = 0; s < width; ++s) {
      const size_t i = static_cast<size_t>(j) * width + s;
      row(s, traj, r.v[i], r.bures[i], r.fidelity[i],
          r.u.data() + i * r.controls);
    }
  }
  if (r.trajectories > 0) {
    for (size_t s = 0; s < width; ++s) {
      row(s, "mean", r.mean_v[s], r.mean_bures[s], r.mean_fidelity[s],
          r.mean_u.data() + s * r.controls);
    }
  }
  return out;
}

void emit_csv(const EnsembleResult& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "'");
  const std::string text = csv_text(r);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string summary_json(const EnsembleResult& r) {
  using nlohmann::json;
  const ScenarioConfig& cfg = r.config;
  json j;
  j["scenario"] = cfg.name;
  j["qubits"] = cfg.qubits;
  j["law"] = law_name(cfg.law);
  j["target"] = to_string(cfg.target);
  j["lyapunov"] = to_string(r.lyapunov);
  j["trajectories"] = r.trajectories;
  j["dt"] = cfg.dt;
  j["scheme"] = to_string(cfg.scheme);
  j["horizon"] = cfg.horizon;
  j["seed"] = cfg.seed;
  j["samples_per_trajectory"] = r.samples();
  j["v0"] = r.v0;

  json theory;
  theory["exponent"] = optional_number(r.reference_exponent);
  theory["label"] = r.reference_label;
  if (r.bounds) {
    const RateBounds& b = *r.bounds;
    theory["c_bar"] = b.c_bar;
    theory["z_rate"] = b.z_rate;
    theory["x_rate"] = optional_number(b.x_rate);
    theory["c_plus"] = b.c_plus;
    theory["c_minus"] = b.c_minus;
    theory["c_plus_bar"] = optional_number(b.c_plus_bar);
    theory["c_minus_bar"] = optional_number(b.c_minus_bar);
    theory["ell"] = b.ell;
  }
  j["theoretical"] = theory;
  j["fitted"] = {{"window", {r.window_start, r.window_end}},
                 {"v", fit_json(r.fit_v)},
                 {"bures", fit_json(r.fit_bures)}};

  const GhzBasis basis(cfg.qubits);
  json counts = json::object();
  for (size_t s = 0; s < r.class_counts.size(); ++s) {
    counts[to_string(basis.index_at(static_cast<int>(s)))] = r.class_counts[s];
  }
  j["classes"] = {{"threshold", cfg.threshold},
                  {"counts", counts},
                  {"unresolved", r.unresolved}};
  if (!r.final_fidelity.empty()) {
    j["final_fidelity"] = {
        {"median", median(r.final_fidelity)},
        {"min", *std::min_element(r.final_fidelity.begin(),
                                  r.final_fidelity.end())}};
  }

  double max_clip = 0.0, min_eig = 0.0, max_trace = 0.0, max_herm = 0.0;
  long rank_decreases = 0, rank_decreases_clip = 0;
  for (const TrajectoryDiagnostics& d : r.diagnostics) {
    max_clip = std::max(max_clip, d.max_clip);
    min_eig = std::min(min_eig, d.min_eigenvalue);
    max_trace = std::max(max_trace, d.snapshot_max_trace_error);
    max_herm = std::max(max_herm, d.snapshot_max_hermitian_error);
    rank_decreases += d.rank_decreases;
    rank_decreases_clip += d.rank_decreases_with_clip;
  }
  j["diagnostics"] = {{"max_clip", max_clip},
                      {"min_pre_projection_eigenvalue", min_eig},
                      {"max_trace_error", max_trace},
                      {"max_hermitian_error", max_herm},
                      {"rank_decreases", rank_decreases},
                      {"rank_decreases_with_clip", rank_decreases_clip}};
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::filesystem::path builtin_scenario_dir() {
  if (const char* env = std::getenv("GHZSTAB_SCENARIO_DIR")) return env;
  return GHZSTAB_SCENARIO_DIR;
}

}  // namespace ghzstab
