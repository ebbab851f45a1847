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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. The full run takes several minutes on a
// single core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ghzstab/analysis.h"
#include "ghzstab/reachability.h"
#include "ghzstab/scenario.h"
#include "test_util.h"

namespace ghzstab {
namespace {

namespace fs = std::filesystem;

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("%s [%s] %s\n", pass ? "PASS" : "FAIL", id.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

ScenarioConfig builtin(const std::string& name) {
  return load_config(builtin_scenario_dir() / (name + ".cfg"));
}

EnsembleResult run(const ScenarioConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  EnsembleResult r = run_scenario(cfg);
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  std::printf("  ran %s: %ld trajectories, T = %g, %.1f s\n", cfg.name.c_str(),
              cfg.trajectories, cfg.horizon, secs);
  std::fflush(stdout);
  return r;
}

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

// Worst-case invariants across every trajectory of every acceptance run.
struct InvariantTally {
  double trace_error = 0.0;
  double hermitian_error = 0.0;
  double min_post_eigenvalue = 0.0;
  double min_snapshot_eigenvalue = 0.0;
  double max_clip = 0.0;
  double min_lambda = 1.0;
  double min_vx = 1.0;
  long rank_decreases = 0;
  long rank_trajectories = 0;
  long trajectories = 0;

  void add(const EnsembleResult& r, bool efficient_below_one) {
    for (const TrajectoryDiagnostics& d : r.diagnostics) {
      trace_error = std::max(trace_error, d.snapshot_max_trace_error);
      hermitian_error = std::max(hermitian_error, d.snapshot_max_hermitian_error);
      min_post_eigenvalue = std::min(min_post_eigenvalue, d.min_post_eigenvalue);
      min_snapshot_eigenvalue =
          std::min(min_snapshot_eigenvalue, d.snapshot_min_eigenvalue);
      max_clip = std::max(max_clip, d.max_clip);
      min_lambda = std::min(min_lambda, d.min_lambda);
      min_vx = std::min(min_vx, d.min_vx);
      if (efficient_below_one) {
        rank_decreases += d.rank_decreases;
        if (d.rank_decreases > 0) ++rank_trajectories;
      }
      ++trajectories;
    }
  }
};

bool all_below_one(const SystemModel& model) {
  for (const MeasurementChannel& c : model.channels()) {
    if (c.efficiency() >= 1.0) return false;
  }
  return true;
}

void criteria_1_to_3(InvariantTally& tally) {
  ScenarioConfig cfg = builtin("scenario_a");
  cfg.trajectories = 500;
  cfg.horizon = 30.0;
  cfg.dt = 1e-3;
  const EnsembleResult r = run(cfg);
  tally.add(r, all_below_one(build_model(cfg)));

  // 1. mean V below 2.5 e^{-0.3 t} (1 + 0.1) for t >= 1, and the fitted
  // exponent on [5, 30] at most -0.25.
  double worst_ratio = 0.0;
  double worst_t = 0.0;
  for (size_t s = 0; s < r.samples(); ++s) {
    if (r.times[s] < 1.0 - 1e-12) continue;
    const double bound = 2.5 * std::exp(-0.3 * r.times[s]) * 1.10;
    if (r.mean_v[s] / bound > worst_ratio) {
      worst_ratio = r.mean_v[s] / bound;
      worst_t = r.times[s];
    }
  }
  const ExponentFit fit = fit_mean(r, r.mean_v, 5.0, 30.0);
  report("1", std::abs(r.v0 - 2.5) < 1e-12 && worst_ratio <= 1.0 &&
                  fit.slope <= -0.25,
         fmt("reduction: V(rho0) = %.6f, max mean/bound = %.4f at t = %.1f, "
             "fitted exponent on [5,30] = %.4f (need <= -0.25)",
             r.v0, worst_ratio, worst_t, fit.slope));

  // Supplementary: final d_B <= 0.05 to some GHZ state in >= 95% of runs.
  const GhzBasis basis(cfg.qubits);
  long close = 0;
  for (long j = 0; j < r.trajectories; ++j) {
    if (r.at(r.bures, j, r.samples() - 1) <= 0.05) ++close;
  }
  report("1s", close >= 0.95 * r.trajectories,
         fmt("reduction: %ld/%ld final states within d_B 0.05 of a GHZ state "
             "(need >= 95%%)",
             close, r.trajectories));

  // 2. Each class within 62.5 +- 16.
  const double expected = r.trajectories / 8.0;
  bool classes_ok = r.unresolved == 0;
  std::string counts;
  for (size_t s = 0; s < r.class_counts.size(); ++s) {
    classes_ok = classes_ok && std::abs(r.class_counts[s] - expected) <= 16.0;
    counts += fmt("%s%s:%ld", s ? " " : "",
                  to_string(basis.index_at(static_cast<int>(s))).c_str(),
                  r.class_counts[s]);
  }
  report("2", classes_ok,
         fmt("convergence classes (expect 62.5 +- 16): %s; unresolved %ld",
             counts.c_str(), r.unresolved));

  // 3. |mean Tr(rho_T GHZ) - 1/8| <= 3 SE for every GHZ state.
  bool martingale_ok = true;
  double worst_z = 0.0;
  const double n = static_cast<double>(r.trajectories);
  for (int s = 0; s < 8; ++s) {
    double sum = 0.0, sum2 = 0.0;
    for (const RealVector& p : r.final_populations) {
      sum += p(s);
      sum2 += p(s) * p(s);
    }
    const double mean = sum / n;
    const double se = std::sqrt(std::max(sum2 / n - mean * mean, 0.0) *
                                n / (n - 1.0) / n);
    const double z = std::abs(mean - 0.125) / se;
    worst_z = std::max(worst_z, z);
    martingale_ok = martingale_ok && std::abs(mean - 0.125) <= 3.0 * se;
  }
  report("3", martingale_ok,
         fmt("martingale: max |mean population - 1/8| / SE = %.3f (need <= 3)",
             worst_z));
}

void criterion_4(InvariantTally& tally) {
  ScenarioConfig cfg = builtin("scenario_a_special");
  cfg.trajectories = 200;
  cfg.horizon = 60.0;
  const EnsembleResult r = run(cfg);
  tally.add(r, all_below_one(build_model(cfg)));
  const double min_fid =
      *std::min_element(r.final_fidelity.begin(), r.final_fidelity.end());
  const ExponentFit fit = fit_mean(r, r.mean_bures, 30.0, 60.0);
  const double bound = -(9.0 - 6.0 * std::sqrt(2.0)) / 5.0 + 0.03;
  report("4", min_fid >= 0.99 && fit.slope <= bound,
         fmt("fidelity-power to GHZ+_1 from GHZ-_4: min final fidelity = %.6f "
             "(need >= 0.99), d_B exponent on [30,60] = %.4f (need <= %.4f)",
             min_fid, fit.slope, bound));
}

void criterion_5(InvariantTally& tally) {
  ScenarioConfig cfg = builtin("scenario_a_general");
  cfg.trajectories = 200;
  cfg.horizon = 30.0;
  const EnsembleResult r = run(cfg);
  tally.add(r, all_below_one(build_model(cfg)));
  const ExponentFit fit_b = fit_mean(r, r.mean_bures, 10.0, 30.0);
  const ExponentFit fit_v = fit_mean(r, r.mean_v, 10.0, 30.0);
  report("5", fit_b.slope <= -0.25 && fit_v.slope <= -0.25,
         fmt("mixed-power to GHZ+_2 from 1/8: exponents on [10,30]: d_B %.4f, "
             "V %.4f (need <= -0.25); median final fidelity %.6f",
             fit_b.slope, fit_v.slope, median(r.final_fidelity)));
}

void criterion_6(InvariantTally& tally) {
  ScenarioConfig cfg = builtin("scenario_b");
  cfg.trajectories = 100;
  cfg.horizon = 100.0;
  const EnsembleResult r = run(cfg);
  tally.add(r, all_below_one(build_model(cfg)));
  const double med = median(r.final_fidelity);
  const double min_fid =
      *std::min_element(r.final_fidelity.begin(), r.final_fidelity.end());
  report("6", med >= 0.99,
         fmt("two-hamiltonian (z-only) to GHZ+_1 from GHZ-_4: median final "
             "fidelity = %.6f (need >= 0.99), min %.6f",
             med, min_fid));
}

void criterion_7() {
  const SystemModel model =
      build_model(builtin("scenario_a")).in_frame(Frame::kGhz);
  const GhzBasis& basis = model.basis();
  std::vector<StateFunctional> f;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 1; i <= 4; ++i) {
    for (int j = i + 1; j <= 4; ++j) {
      pairs.emplace_back(i, j);
      f.push_back([&basis, i, j](const ComplexMatrix& r) {
        return std::sqrt(std::max(lambda_k(r, basis, i), 0.0) *
                         std::max(lambda_k(r, basis, j), 0.0));
      });
    }
  }
  f.push_back(
      [&basis](const ComplexMatrix& r) { return std::sqrt(vx(r, basis)); });

  const ComplexMatrix mixed = ComplexMatrix::Identity(8, 8) / 8.0;
  const double pair12 = generator_reduction_pair(mixed, 1, 2, model);
  const double gvx = generator_vx(mixed, model);

  std::mt19937_64 rng(20260107);
  int checks = 0, agree = 0;
  double worst_z = 0.0;
  for (int state = 0; state < 10; ++state) {
    const ComplexMatrix rho = basis.to_frame(testing::random_state(8, rng));
    const std::vector<MonteCarloEstimate> est = monte_carlo_generator(
        model, rho, f, 1e-4, 100000, 1000 + static_cast<std::uint64_t>(state));
    for (size_t p = 0; p <= pairs.size(); ++p) {
      const double exact =
          p < pairs.size()
              ? generator_reduction_pair(rho, pairs[p].first, pairs[p].second,
                                         model)
              : generator_vx(rho, model);
      const double z = std::abs(est[p].mean - exact) / est[p].standard_error;
      worst_z = std::max(worst_z, z);
      ++checks;
      if (z <= 3.0) ++agree;
    }
  }
  report("7", agree == checks && std::abs(pair12 + 0.275) < 1e-12 &&
                  std::abs(gvx + 0.72) < 1e-12,
         fmt("generator oracle: %d/%d Monte-Carlo estimates within 3 SE (max "
             "|z| = %.2f); pair(1,2) at 1/8 = %.12f, sqrt(Vx) at 1/8 = %.12f",
             agree, checks, worst_z, pair12, gvx));
}

void criterion_8() {
  const SystemModel full = build_model(builtin("scenario_a"));
  const SystemModel z_only = build_model(builtin("scenario_b"));
  bool ranks_ok = true;
  std::string ranks;
  for (int s = 0; s < 8; ++s) {
    const GhzIndex idx = full.basis().index_at(s);
    const ComplexVector xi = full.basis().vector(idx);
    const int r_full =
        numeric_rank(build_rank_matrix(full, xi, 3, RankFlavor::kFull));
    const int r_z =
        numeric_rank(build_rank_matrix(z_only, xi, 4, RankFlavor::kZOnly));
    ranks_ok = ranks_ok && r_full == 8 && r_z == 8;
    ranks += fmt("%s%s:%d/%d", s ? " " : "", to_string(idx).c_str(), r_full, r_z);
  }
  const RateBounds b1 = rate_bounds(full, {1, Sign::kPlus});
  const RateBounds b4 = rate_bounds(full, {4, Sign::kMinus});
  const double sqrt2 = std::sqrt(2.0);
  const bool constants_ok = std::abs(b1.c_plus - (sqrt2 - 1.0)) <= 1e-12 &&
                            std::abs(b4.c_minus - (1.0 - sqrt2)) <= 1e-12 &&
                            std::abs(b1.ell - 2.0) <= 1e-12 &&
                            std::abs(b1.c_bar - 0.3) <= 1e-12;
  report("8", ranks_ok && constants_ok,
         fmt("ranks M_3 / M^z_4 per seed: %s; c+ = %.15f, c- = %.15f, "
             "ell = %.15f, Cbar = %.15f",
             ranks.c_str(), b1.c_plus, b4.c_minus, b1.ell, b1.c_bar));
}

void criterion_9(const InvariantTally& t) {
  // Purity from pure non-GHZ starts, all efficiencies below one.
  const SystemModel model =
      build_model(builtin("scenario_a")).in_frame(Frame::kGhz);
  IntegratorConfig icfg;
  icfg.stride = 1;
  std::mt19937_64 rng(20260109);
  const int starts = 100;
  int dropped = 0;
  for (int j = 0; j < starts; ++j) {
    const ComplexVector v =
        model.basis().vector_to_frame(testing::random_vector(8, rng));
    const TrajectoryResult r = simulate_trajectory(
        model, FeedbackLaw::zero(), v * v.adjoint(), icfg, 10 * icfg.dt,
        20260109, static_cast<std::uint64_t>(j));
    const long step = r.diagnostics.purity_drop_step;
    if (step >= 1 && step <= 10) ++dropped;
  }

  const Tolerances tol = kDefaultTolerances;
  const bool state_ok = t.trace_error <= tol.trace &&
                        t.hermitian_error <= tol.hermitian &&
                        t.min_post_eigenvalue >= -tol.psd &&
                        t.min_snapshot_eigenvalue >= -tol.psd;
  const bool positivity_ok = t.min_lambda >= -tol.psd && t.min_vx >= -tol.psd;
  const bool clip_ok = t.max_clip < 1e-6;
  const bool rank_ok = t.rank_decreases == 0;
  const bool purity_ok = dropped == starts;
  report("9", state_ok && positivity_ok && clip_ok && rank_ok && purity_ok,
         fmt("invariants over %ld trajectories: trace err %.2e, hermitian err "
             "%.2e, min eigenvalue %.2e; min Lambda %.2e, min Vx %.2e; max clip "
             "%.2e (need < 1e-6); rank decreases %ld in %ld trajectories (need "
             "0); purity below 1-1e-6 within 10 steps in %d/%d pure starts",
             t.trajectories, t.trace_error, t.hermitian_error,
             std::min(t.min_post_eigenvalue, t.min_snapshot_eigenvalue),
             t.min_lambda, t.min_vx, t.max_clip, t.rank_decreases,
             t.rank_trajectories, dropped, starts));
}

void criterion_10(InvariantTally& tally) {
  const fs::path dir = fs::temp_directory_path() / "ghzstab_acceptance";
  fs::create_directories(dir);
  ScenarioConfig cfg = builtin("scenario_a_special");
  cfg.trajectories = 8;
  cfg.horizon = 3.0;
  const auto emit = [&](const fs::path& path, int threads) {
    ScenarioConfig c = cfg;
    c.threads = threads;
    const EnsembleResult r = run_scenario(c);
    tally.add(r, all_below_one(build_model(c)));
    emit_csv(r, path);
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  const std::string a = emit(dir / "run1.csv", 1);
  const std::string b = emit(dir / "run2.csv", 1);
  const std::string c = emit(dir / "run3.csv", 4);
  report("10", !a.empty() && a == b && a == c,
         fmt("determinism: %zu-byte CSV identical across repeated runs and "
             "worker counts: %s",
             a.size(), a == b && a == c ? "yes" : "no"));
}

}  // namespace
}  // namespace ghzstab

int main() {
  using namespace ghzstab;
  InvariantTally tally;
  try {
    criterion_8();
    criterion_7();
    criterion_10(tally);
    criteria_1_to_3(tally);
    criterion_4(tally);
    criterion_5(tally);
    criterion_6(tally);
    criterion_9(tally);
  } catch (const std::exception& e) {
    report("abort", false, e.what());
  }
  std::printf("%d criterion line(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
