// Copyright 2026 The specpart Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// specpart: command-line front end for the spectrum market solver.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specpart/experiments.hpp"
#include "specpart/json_io.hpp"
#include "specpart/monte_carlo.hpp"
#include "specpart/stackelberg.hpp"

namespace {

using namespace specpart;

struct CommonFlags {
  std::uint64_t seed = 1;
  double beta1 = 1.0;
  double beta2 = 0.99;
  std::int64_t r_min = 10000;
  std::int64_t r_max = 10000000;
  std::int64_t m_max = 0;
  std::string out;
  std::string format = "json";
  int threads = 1;

  McConfig mc() const {
    McConfig c;
    c.seed = seed;
    c.beta1 = beta1;
    c.beta2 = beta2;
    c.r_min = r_min;
    c.r_max = r_max;
    c.validate();
    return c;
  }
};

void emit(const CommonFlags& flags, const std::string& text) {
  if (flags.out.empty() || flags.out == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_file(flags.out, text);
  }
}

std::string join_ids(const IdSet& ids) {
  std::string s;
  for (OperatorId id : ids) {
    if (!s.empty()) s += ';';
    s += std::to_string(id);
  }
  return s;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

IdSet parse_ids(const std::string& text) {
  IdSet ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) ids.insert(static_cast<OperatorId>(std::stoul(item)));
  }
  return ids;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) grid.push_back(std::stod(item));
  }
  return grid;
}

ScenarioGenSpec load_spec(const std::string& path) {
  return path.empty() ? ScenarioGenSpec{} : gen_spec_from_json(load_json(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint spectrum partitioning and licensing solver"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonFlags flags;
  app.add_option("--seed", flags.seed, "Experiment seed")->envname("SPECPART_SEED");
  app.add_option("--beta1", flags.beta1, "Maximum percentage error")
      ->envname("SPECPART_BETA1");
  app.add_option("--beta2", flags.beta2, "Minimum confidence")->envname("SPECPART_BETA2");
  app.add_option("--rmin", flags.r_min, "Minimum sample count")->envname("SPECPART_RMIN");
  app.add_option("--rmax", flags.r_max, "Sample budget")->envname("SPECPART_RMAX");
  app.add_option("--mmax", flags.m_max, "Largest M searched (0: automatic)")
      ->envname("SPECPART_MMAX");
  app.add_option("--out", flags.out, "Output path (default stdout)")
      ->envname("SPECPART_OUT");
  app.add_option("--format", flags.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->envname("SPECPART_FORMAT");
  app.add_option("--threads", flags.threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->envname("SPECPART_THREADS");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate random market settings");
  std::string gen_spec_path;
  std::int64_t gen_markets = -1;
  gen->add_option("--spec", gen_spec_path, "Generation spec JSON")->check(CLI::ExistingFile);
  gen->add_option("--markets", gen_markets, "Override the number of markets");

  // solve
  auto* solve = app.add_subcommand("solve", "Optimize (M, P) for one scenario");
  std::string solve_path;
  solve->add_option("--scenario", solve_path, "Scenario JSON")
      ->required()
      ->check(CLI::ExistingFile);

  // stage2
  auto* stage2 = app.add_subcommand("stage2", "Market entry at a fixed (M, P)");
  std::string stage2_path;
  std::int64_t stage2_m = 0;
  std::int64_t stage2_p = -1;
  stage2->add_option("--scenario", stage2_path, "Scenario JSON")
      ->required()
      ->check(CLI::ExistingFile);
  stage2->add_option("--m", stage2_m, "Override M");
  stage2->add_option("--p", stage2_p, "Override P");

  // estimate
  auto* est = app.add_subcommand("estimate", "Monte Carlo estimates for fixed sets");
  std::string est_path;
  std::string est_sl;
  std::string est_su;
  std::string est_log;
  est->add_option("--scenario", est_path, "Scenario JSON")
      ->required()
      ->check(CLI::ExistingFile);
  est->add_option("--sl", est_sl, "Interested licensed ids, comma separated (default all)");
  est->add_option("--su", est_su, "Interested unlicensed ids (default all)");
  est->add_option("--sample-log", est_log, "Write per-sample CSV here");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Joint optimum against a sub-optimal rule");
  std::string bench_mode = "fixed-p";
  std::string bench_spec_path;
  std::string bench_osa = "overlay";
  int bench_phi = 1;
  std::int64_t bench_markets = -1;
  std::string bench_cdf;
  bench->add_option("--mode", bench_mode, "Sub-optimal rule")
      ->check(CLI::IsMember({"fixed-p", "fixed-m", "max-entrants"}));
  bench->add_option("--spec", bench_spec_path, "Generation spec JSON")
      ->check(CLI::ExistingFile);
  bench->add_option("--markets", bench_markets, "Override the number of markets");
  bench->add_option("--osa", bench_osa, "OSA strategy")
      ->check(CLI::IsMember({"overlay", "interweave"}));
  bench->add_option("--phi", bench_phi, "Tier-1 opportunistic participation")
      ->check(CLI::Range(0, 1));
  bench->add_option("--cdf-out", bench_cdf, "Also write the CDF of delta_u_pct here");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Interference parameter sweep");
  std::string sweep_kind = "alpha-joint";
  std::string sweep_grid;
  std::string sweep_path;
  std::string sweep_osa = "overlay";
  int sweep_phi = 0;
  double sweep_alpha_u = 0.9;
  sweep->add_option("--kind", sweep_kind, "Sweep kind")
      ->check(CLI::IsMember({"alpha-joint", "alpha-l"}));
  sweep->add_option("--grid", sweep_grid, "Comma separated alpha values");
  sweep->add_option("--scenario", sweep_path, "Base scenario JSON (default: built-in setup)")
      ->check(CLI::ExistingFile);
  sweep->add_option("--osa", sweep_osa, "OSA strategy")
      ->check(CLI::IsMember({"overlay", "interweave"}));
  sweep->add_option("--phi", sweep_phi, "Tier-1 opportunistic participation")
      ->check(CLI::Range(0, 1));
  sweep->add_option("--alpha-u", sweep_alpha_u, "Fixed alpha_U for alpha-l sweeps");

  CLI11_PARSE(app, argc, argv);

  try {
    const OutputFormat format = parse_format(flags.format);
    std::ostringstream os;

    if (*gen) {
      ScenarioGenSpec spec = load_spec(gen_spec_path);
      if (app.count("--seed") > 0 || std::getenv("SPECPART_SEED")) spec.seed = flags.seed;
      if (gen_markets >= 0) spec.n_markets = static_cast<std::size_t>(gen_markets);
      write_markets(os, generate_markets(spec), format);
    } else if (*solve) {
      const ScenarioDocument doc = scenario_from_json(load_json(solve_path));
      const std::int64_t m_max = flags.m_max > 0
                                     ? flags.m_max
                                     : default_m_max(doc.scenario, doc.params.d_total);
      MonteCarloEvaluator evaluator(flags.mc());
      const Stage1Solution sol =
          solve_stage1(doc.scenario, doc.params, evaluator, m_max, flags.threads);
      if (format == OutputFormat::kJson) {
        os << to_json(sol).dump(2) << '\n';
      } else {
        os << "m,p,u,u_se,s_l,s_u,optimal\n";
        for (const auto& c : sol.grid) {
          os << c.m << ',' << c.p << ',' << num(c.u) << ',' << num(c.u_se) << ','
             << join_ids(c.s_l) << ',' << join_ids(c.s_u) << ','
             << (c.m == sol.m_star && c.p == sol.p_star ? 1 : 0) << '\n';
        }
      }
    } else if (*stage2) {
      ScenarioDocument doc = scenario_from_json(load_json(stage2_path));
      if (stage2_m > 0) doc.params.m = stage2_m;
      if (stage2_p >= 0) doc.params.p = stage2_p;
      McConfig cfg = flags.mc();
      cfg.threads = flags.threads;
      const Stage2Solution sol = solve_stage2(doc.scenario, doc.params, cfg);
      if (format == OutputFormat::kJson) {
        os << to_json(sol).dump(2) << '\n';
      } else {
        os << "iteration,joined_licensed,confused_licensed,joined_unlicensed,"
              "confused_unlicensed\n";
        for (std::size_t i = 0; i < sol.trace.size(); ++i) {
          const auto& t = sol.trace[i];
          os << i << ',' << join_ids(t.joined_licensed) << ','
             << join_ids(t.confused_licensed) << ',' << join_ids(t.joined_unlicensed)
             << ',' << join_ids(t.confused_unlicensed) << '\n';
        }
      }
    } else if (*est) {
      const ScenarioDocument doc = scenario_from_json(load_json(est_path));
      const std::vector<OperatorId> all_l = doc.scenario.licensed_ids();
      const std::vector<OperatorId> all_u = doc.scenario.unlicensed_ids();
      const IdSet s_l = est->count("--sl") ? parse_ids(est_sl) : IdSet(all_l.begin(), all_l.end());
      const IdSet s_u = est->count("--su") ? parse_ids(est_su) : IdSet(all_u.begin(), all_u.end());
      McConfig cfg = flags.mc();
      cfg.threads = flags.threads;
      std::ofstream log;
      EstimateOptions options;
      if (!est_log.empty()) {
        log.open(est_log, std::ios::binary);
        if (!log) throw Error("cannot open '" + est_log + "' for writing");
        log.precision(17);
        options.sample_log = &log;
      }
      const McEstimates e = estimate(doc.scenario, s_l, s_u, doc.params, cfg, options);
      const ObjectiveAndRevenues values =
          objective_and_revenues(e, doc.scenario, s_l, s_u, doc.params);
      if (format == OutputFormat::kJson) {
        Json out = to_json(e);
        out["objective"] = values.objective;
        Json rev = Json::object();
        for (const auto& [id, r] : values.revenue) rev[std::to_string(id)] = r;
        out["revenue"] = std::move(rev);
        os << out.dump(2) << '\n';
      } else {
        os << "statistic,id,count,mean,var,se\n";
        auto row = [&](const char* name, const std::string& id, const RunningStat& s) {
          os << name << ',' << id << ',' << s.count << ',' << num(s.mean) << ','
             << num(s.var) << ',' << num(s.standard_error()) << '\n';
        };
        row("u", "", e.u_hat);
        for (const auto& [id, s] : e.u_op_hat) row("u_op", std::to_string(id), s);
        for (const auto& [id, s] : e.r_lc_hat) row("r_lc", std::to_string(id), s);
      }
    } else if (*bench) {
      ScenarioGenSpec spec = load_spec(bench_spec_path);
      if (bench_markets >= 0) spec.n_markets = static_cast<std::size_t>(bench_markets);
      BenchmarkOptions options;
      options.osa = parse_osa(bench_osa);
      options.phi = bench_phi;
      options.m_max = flags.m_max;
      options.threads = flags.threads;
      const auto rows = run_benchmark(generate_markets(spec), parse_benchmark_mode(bench_mode),
                                      flags.mc(), options);
      write_benchmark(os, rows, format);
      if (!bench_cdf.empty()) {
        std::vector<double> deltas;
        for (const auto& r : rows) deltas.push_back(r.delta_u_pct);
        std::ostringstream cdf;
        write_cdf(cdf, empirical_cdf(deltas), format);
        write_file(bench_cdf, cdf.str());
      }
    } else if (*sweep) {
      const SweepKind kind = parse_sweep_kind(sweep_kind);
      GeneratedMarket base =
          kind == SweepKind::kAlphaJoint ? homogeneous_licensed_market() : mixed_market();
      if (!sweep_path.empty()) {
        const ScenarioDocument doc = scenario_from_json(load_json(sweep_path));
        base.scenario = doc.scenario;
        base.params = doc.params;
      }
      std::vector<double> grid = parse_grid(sweep_grid);
      if (grid.empty()) {
        grid = kind == SweepKind::kAlphaJoint ? std::vector<double>{0.2, 0.4, 0.6, 0.8, 1.0}
                                              : std::vector<double>{0.0, 0.3, 0.6, 0.9};
      }
      SweepOptions options;
      options.osa = parse_osa(sweep_osa);
      options.phi = sweep_phi;
      options.fixed_alpha_u = sweep_alpha_u;
      options.m_max = flags.m_max;
      options.threads = flags.threads;
      write_sweep(os, run_sweep(base, kind, grid, flags.mc(), options), kind, format);
    }
    emit(flags, os.str());
  } catch (const specpart::Error& e) {
    std::cerr << "specpart: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "specpart: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
