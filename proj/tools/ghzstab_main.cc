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

// ghzstab: run measurement-feedback scenarios from a config file.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical abort.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ghzstab/analysis.h"
#include "ghzstab/reachability.h"
#include "ghzstab/scenario.h"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace ghzstab;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> trajectories;
  std::string out;
  bool quiet = false;
  std::vector<std::string> set;
  std::optional<int> threads;
  // generator-check
  int states = 10;
  long pairs = 50000;
  double dt = 1e-4;
  // check-assumptions
  long samples = 10000;
};

// Accepts a path or the name of a built-in scenario ("scenario_a").
fs::path resolve_config(const std::string& name) {
  if (fs::exists(name)) return name;
  for (const fs::path& candidate :
       {builtin_scenario_dir() / name, builtin_scenario_dir() / (name + ".cfg")}) {
    if (fs::exists(candidate)) return candidate;
  }
  throw ConfigError("config '" + name + "' not found");
}

ScenarioConfig load(const Options& opt) {
  ScenarioConfig cfg = load_config(resolve_config(opt.config));
  for (const std::string& assignment : opt.set) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects KEY=VALUE, got '" + assignment + "'");
    }
    apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.trajectories) {
    if (*opt.trajectories < 1) throw ConfigError("--trajectories must be >= 1");
    cfg.trajectories = *opt.trajectories;
  }
  if (opt.threads) cfg.threads = *opt.threads;
  if (!opt.out.empty()) cfg.output = opt.out;
  return cfg;
}

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(6) << x;
  return s.str();
}

std::string fmt(const std::optional<double>& x) {
  return x ? fmt(*x) : std::string("n/a");
}

int run_ensemble(ScenarioConfig cfg, const Options& opt, bool reduce) {
  if (reduce) {
    cfg.law = ZeroLaw{};
    cfg.lyapunov = LyapunovKind::kReduction;
  } else if (std::holds_alternative<ZeroLaw>(cfg.law)) {
    throw ConfigError("stabilize needs a feedback law (feedback.law)");
  }
  if (cfg.output.empty()) {
    cfg.output = cfg.name + (reduce ? "_reduce.csv" : "_stabilize.csv");
  }
  ProgressCallback progress;
  if (!opt.quiet) {
    progress = [](long done, long total) {
      if (done == total || done % std::max(1L, total / 20) == 0) {
        std::cerr << "\r" << done << "/" << total << " trajectories"
                  << std::flush;
        if (done == total) std::cerr << "\n";
      }
    };
  }
  const EnsembleResult r = run_scenario(cfg, progress);
  emit_csv(r, cfg.output);
  fs::path summary_path = cfg.output;
  summary_path.replace_extension(".summary.json");
  std::ofstream(summary_path) << summary_json(r);

  if (!opt.quiet) {
    std::cout << "scenario " << cfg.name << ": " << law_name(cfg.law) << ", "
              << r.trajectories << " trajectories, T = " << cfg.horizon
              << ", dt = " << cfg.dt << "\n";
    std::cout << "Lyapunov function: " << to_string(r.lyapunov)
              << ", V(rho0) = " << fmt(r.v0) << "\n";
    std::cout << "theoretical exponent: " << fmt(r.reference_exponent);
    if (!r.reference_label.empty()) std::cout << " (" << r.reference_label << ")";
    std::cout << "\n";
    std::cout << "fitted exponent on [" << r.window_start << ", "
              << r.window_end << "]: V "
              << (r.fit_v ? fmt(r.fit_v->slope) : "n/a") << ", d_B "
              << (r.fit_bures ? fmt(r.fit_bures->slope) : "n/a") << "\n";
    const GhzBasis basis(cfg.qubits);
    std::cout << "final classes (fidelity >= " << cfg.threshold << "):";
    for (size_t s = 0; s < r.class_counts.size(); ++s) {
      std::cout << " " << to_string(basis.index_at(static_cast<int>(s))) << "="
                << r.class_counts[s];
    }
    std::cout << " unresolved=" << r.unresolved << "\n";
    for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
    std::cout << "wrote " << cfg.output.string() << " and "
              << summary_path.string() << "\n";
  }
  return 0;
}

const char* verdict_name(Verdict v) {
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

int check_assumptions_cmd(const ScenarioConfig& cfg, const Options& opt) {
  const SystemModel model = build_model(cfg);
  const FeedbackLaw law = build_law(cfg);
  ConditionOptions copt;
  copt.samples = opt.samples;
  copt.seed = cfg.seed;
  const ConditionsReport r = check_conditions(model, law, copt);
  if (!opt.quiet) std::cout << r.summary();

  using nlohmann::json;
  json seeds = json::array();
  for (const RankEntry& e : r.seed_ranks) {
    seeds.push_back({{"seed", to_string(e.seed)},
                     {"rank", e.rank},
                     {"depth", e.depth ? json(*e.depth) : json(nullptr)}});
  }
  json j = {
      {"scenario", cfg.name},
      {"law", r.law},
      {"target", to_string(r.target)},
      {"flavor", r.flavor == RankFlavor::kFull ? "full" : "z-only"},
      {"A0", r.assumptions.a0},
      {"A1", r.assumptions.a1},
      {"A2", verdict_name(r.a2)},
      {"A2_detail", r.a2_detail},
      {"u_at_target", r.u_at_target},
      {"control_drift_at_target", r.control_drift_at_target},
      {"cond_i", verdict_name(r.cond_i)},
      {"cond_i_detail", r.cond_i_detail},
      {"cond_ii", verdict_name(r.cond_ii)},
      {"target_rank", r.target_rank.rank},
      {"cond_c", verdict_name(r.cond_c)},
      {"seed_ranks", seeds},
      {"depth_cap", r.depth_cap},
      {"cond_iii", verdict_name(r.cond_iii)},
      {"cond_iii_samples", r.sampling.sampled},
      {"cond_iii_vacuous", r.sampling.vacuous},
      {"cond_iii_margin",
       r.sampling.margin ? json(*r.sampling.margin) : json(nullptr)},
      {"commuting_sum", verdict_name(r.commuting_sum)},
      {"extremal_target", r.extremal_target},
      {"pass", r.pass}};
  const fs::path path =
      opt.out.empty() ? fs::path(cfg.name + "_conditions.json") : fs::path(opt.out);
  std::ofstream(path) << j.dump(2) << "\n";
  if (!opt.quiet) std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int rate_cmd(const ScenarioConfig& cfg) {
  const SystemModel model = build_model(cfg);
  const GhzIndex target = cfg.target;
  RateBounds b;
  try {
    b = rate_bounds(model, target);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const SpectralData sd = spectral_data(model, target);
  std::cout << std::setprecision(12);
  std::cout << "target: " << to_string(target) << "\n";
  std::cout << "l:";
  for (double x : sd.l) std::cout << " " << x;
  std::cout << "\nell: " << b.ell << "\n";
  std::cout << "c+: " << b.c_plus << "\nc-: " << b.c_minus << "\n";
  std::cout << "z rate: " << b.z_rate << "\n";
  std::cout << "x rate: " << fmt(b.x_rate) << "\n";
  std::cout << "Cbar: " << b.c_bar << "\n";
  std::cout << "Cbar+: " << fmt(b.c_plus_bar) << "\n";
  std::cout << "Cbar-: " << fmt(b.c_minus_bar) << "\n";
  std::cout << "reduction exponent: " << b.reduction_exponent() << "\n";
  std::cout << "special-case exponent: " << fmt(b.special_exponent()) << "\n";
  std::cout << "general-case exponent: " << b.general_exponent() << "\n";
  return 0;
}

// Ginibre state of full rank.
ComplexMatrix random_state(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  ComplexMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = Complex(normal(rng), normal(rng));
  }
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return rho;
}

int generator_check_cmd(const ScenarioConfig& cfg, const Options& opt) {
  const SystemModel model = build_model(cfg).in_frame(Frame::kGhz);
  const GhzBasis& basis = model.basis();
  const int half = basis.half();
  std::vector<StateFunctional> functionals;
  std::vector<std::string> labels;
  for (int i = 1; i <= half; ++i) {
    for (int j = i + 1; j <= half; ++j) {
      functionals.push_back([&basis, i, j](const ComplexMatrix& rho) {
        return std::sqrt(std::max(lambda_k(rho, basis, i), 0.0) *
                         std::max(lambda_k(rho, basis, j), 0.0));
      });
      labels.push_back("pair(" + std::to_string(i) + "," + std::to_string(j) +
                       ")");
    }
  }
  if (model.has_x_channel()) {
    functionals.push_back([&basis](const ComplexMatrix& rho) {
      return std::sqrt(vx(rho, basis));
    });
    labels.push_back("sqrt(Vx)");
  }
  auto oracle = [&](const ComplexMatrix& rho, size_t f) {
    if (f + 1 == functionals.size() && model.has_x_channel()) {
      return generator_vx(rho, model);
    }
    int idx = 0;
    for (int i = 1; i <= half; ++i) {
      for (int j = i + 1; j <= half; ++j) {
        if (static_cast<size_t>(idx++) == f) {
          return generator_reduction_pair(rho, i, j, model);
        }
      }
    }
    return 0.0;
  };

  std::mt19937_64 rng(cfg.seed);
  int failures = 0;
  std::cout << std::setprecision(6);
  for (int s = 0; s <= opt.states; ++s) {
    const ComplexMatrix rho =
        s == 0 ? ComplexMatrix(ComplexMatrix::Identity(basis.dim(), basis.dim()) /
                               static_cast<double>(basis.dim()))
               : random_state(basis.dim(), rng);
    const auto est = monte_carlo_generator(model, rho, functionals, opt.dt,
                                           opt.pairs, cfg.seed + s);
    if (!opt.quiet) {
      std::cout << (s == 0 ? "state 0 (maximally mixed)" : "state " +
                                                               std::to_string(s))
                << "\n";
    }
    for (size_t f = 0; f < functionals.size(); ++f) {
      const double exact = oracle(rho, f);
      const double z =
          (est[f].mean - exact) / std::max(est[f].standard_error, 1e-300);
      const bool ok = std::abs(z) <= 3.0;
      failures += ok ? 0 : 1;
      if (!opt.quiet || !ok) {
        std::cout << "  " << std::left << std::setw(10) << labels[f]
                  << " closed form " << std::setw(12) << exact << " MC "
                  << std::setw(12) << est[f].mean << " SE " << std::setw(10)
                  << est[f].standard_error << " z " << std::setw(8) << z
                  << (ok ? "" : "  MISMATCH") << std::right << "\n";
      }
    }
  }
  std::cout << (failures == 0 ? "generator check: pass"
                              : "generator check: " + std::to_string(failures) +
                                    " mismatches beyond 3 SE")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measurement-based feedback stabilization of GHZ states"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool ensemble) {
    sub->add_option("--config", opt.config,
                    "Scenario file or built-in name (scenario_a, scenario_b)")
        ->required();
    sub->add_option("--seed", opt.seed, "Master seed");
    sub->add_option("--out", opt.out, "Output path");
    sub->add_flag("--quiet", opt.quiet, "Suppress progress and reports");
    sub->add_option("--set", opt.set, "Override a config key (KEY=VALUE)");
    if (ensemble) {
      sub->add_option("--trajectories", opt.trajectories, "Ensemble size");
      sub->add_option("--threads", opt.threads, "Worker threads (0 = all)");
    }
  };
  CLI::App* reduce = app.add_subcommand("reduce", "Ensemble without feedback");
  add_common(reduce, true);
  CLI::App* stabilize =
      app.add_subcommand("stabilize", "Ensemble with the configured feedback");
  add_common(stabilize, true);
  CLI::App* check = app.add_subcommand(
      "check-assumptions", "Model assumptions and stabilizability conditions");
  add_common(check, false);
  check->add_option("--samples", opt.samples, "Samples for condition (iii)");
  CLI::App* rate = app.add_subcommand("rate", "Print the rate bounds");
  add_common(rate, false);
  CLI::App* gen = app.add_subcommand(
      "generator-check", "Monte-Carlo generator estimates vs closed forms");
  add_common(gen, false);
  gen->add_option("--states", opt.states, "Random states besides 1/N");
  gen->add_option("--pairs", opt.pairs, "Antithetic sample pairs per state");
  gen->add_option("--dt", opt.dt, "Step of the one-step estimate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const ScenarioConfig cfg = load(opt);
    if (reduce->parsed()) return run_ensemble(cfg, opt, true);
    if (stabilize->parsed()) return run_ensemble(cfg, opt, false);
    if (check->parsed()) return check_assumptions_cmd(cfg, opt);
    if (rate->parsed()) return rate_cmd(cfg);
    if (gen->parsed()) return generator_check_cmd(cfg, opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
