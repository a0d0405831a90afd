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

// Acceptance checks. Run with no arguments for every criterion, or pass
// criterion numbers (1..12) to select a subset. Prints one line per
// criterion and exits non-zero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "specpart/allocation.hpp"
#include "specpart/experiments.hpp"
#include "specpart/json_io.hpp"
#include "specpart/market_model.hpp"
#include "specpart/monte_carlo.hpp"
#include "specpart/stackelberg.hpp"

using namespace specpart;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

OperatorProfile profile(OperatorId id, double mu, double sigma) {
  OperatorProfile p;
  p.id = id;
  p.mu_theta = mu;
  p.sigma_theta = sigma;
  p.revenue_slope = 1.0;
  p.revenue_cv = 0.5;
  p.rho = 0.8;
  p.omega = 0.9;
  return p;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// E[min(max(0, theta), c)] for theta ~ N(mu, sigma^2).
double clipped_mean(double mu, double sigma, double c) {
  const double a = -mu / sigma;
  const double b = (c - mu) / sigma;
  return mu * (normal_cdf(b) - normal_cdf(a)) + sigma * (normal_pdf(a) - normal_pdf(b)) +
         c * (1.0 - normal_cdf(b));
}

// 1. Worked waterfilling example.
Outcome c01() {
  const DemandMap demands{{1, 5.0}, {2, 9.0}, {3, 3.0}, {5, 7.0}, {7, 2.0}};
  const auto t0 = Clock::now();
  const DemandMap got = waterfill(17.0, demands);
  const double dt = seconds_since(t0);
  const DemandMap want{{1, 4.0}, {2, 4.0}, {3, 3.0}, {5, 4.0}, {7, 2.0}};
  return {got == want && dt < 1e-3, fmt("exact=%d time=%.1fus", got == want, dt * 1e6)};
}

// 2. Waterfilling against the bisection oracle.
Outcome c02() {
  std::mt19937_64 gen(20240611);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  int invariant_failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(unit(gen) * 10);
    DemandMap d;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = unit(gen) < 0.1 ? 0.0 : 5.0 * unit(gen);
      d[static_cast<OperatorId>(2 * i + 1)] = v;
      total += v;
    }
    const double cap = 1.2 * total * unit(gen);
    const auto got = waterfill(cap, d);
    const auto want = oracle::bisection_waterfill(cap, d);
    double served = 0.0;
    for (const auto& [id, x] : got) {
      worst = std::max(worst, std::fabs(x - want.at(id)));
      served += x;
      if (x < -1e-12 || x > d.at(id) + 1e-12) ++invariant_failures;
      if (x < d.at(id) - 1e-9) {
        for (const auto& [other, y] : got) {
          if (y > x + 1e-9) ++invariant_failures;
        }
      }
    }
    if (std::fabs(served - std::min(cap, total)) > 1e-9 * std::max(1.0, total)) {
      ++invariant_failures;
    }
  }
  return {worst <= 1e-9 && invariant_failures == 0,
          fmt("max_abs_diff=%.3g invariant_failures=%d", worst, invariant_failures)};
}

// 3. Served-demand moments against brute-force sampling.
Outcome c03() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int failures = 0;
  double worst_z = 0.0;
  for (int i = 0; i < 50; ++i) {
    // Keeps P(theta > 0) >= 0.16 so the sample resolves every moment.
    const double sigma = 0.25 + 1.25 * unit(gen);
    const double mu = -sigma + (2.0 + sigma) * unit(gen);
    const double cap = 0.2 + 2.8 * unit(gen);
    MarketParams mp;
    mp.m = 1;
    mp.p = 1;
    mp.d_total = cap;
    const auto m = licensed_served_moments(profile(1, mu, sigma), mp);
    const auto s = oracle::clipped_sample(mu, sigma, cap, 10000000, 1000 + i);
    const double z[] = {std::fabs(m.mu_x_lc_slot - s.mean) / s.mean_se,
                        std::fabs(m.sigma_x_lc_slot - s.sd) / s.sd_se,
                        std::fabs(m.phi_k - s.cov) / s.cov_se};
    for (double v : z) {
      worst_z = std::max(worst_z, v);
      if (!(v < 4.0)) ++failures;
    }
  }
  MarketParams wide;
  wide.m = 1;
  wide.p = 1;
  wide.d_total = 1e6;
  const double half_normal = licensed_served_moments(profile(1, 0.0, 1.0), wide).mu_x_lc_slot;
  const double expected = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const double rel = std::fabs(half_normal - expected) / expected;
  return {failures == 0 && rel < 1e-6,
          fmt("worst_z=%.2f failures=%d/150 half_normal_rel_err=%.2g", worst_z, failures, rel)};
}

// 4. Joint sampler covariance and conditional regression slopes.
Outcome c04() {
  int failures = 0;
  double worst_z = 0.0;
  const std::pair<double, double> cases[] = {{1.0, 0.5}, {0.8, 0.7}};
  for (const auto& [mu, sigma] : cases) {
    const auto p = profile(1, mu, sigma);
    MarketParams mp;
    mp.m = 1;
    mp.p = 1;
    mp.d_total = 1.0;
    const auto s = joint_sampler_params(p, mp, licensed_served_moments(p, mp));
    const int n = 1000000;
    std::vector<std::array<double, 3>> x(n);
    std::array<double, 3> mean{};
    for (int i = 0; i < n; ++i) {
      CounterStream stream(derive_key(4242, static_cast<std::uint64_t>(i)));
      const auto d = sample_joint(s, stream);
      x[i] = {d.theta, d.r_lc, d.bid};
      for (int a = 0; a < 3; ++a) mean[a] += x[i][a];
    }
    for (auto& v : mean) v /= n;
    std::array<std::array<double, 3>, 3> cov{};
    std::array<std::array<double, 3>, 3> sq{};
    for (const auto& v : x) {
      for (int a = 0; a < 3; ++a) {
        for (int b = a; b < 3; ++b) {
          const double q = (v[a] - mean[a]) * (v[b] - mean[b]);
          cov[a][b] += q;
          sq[a][b] += q * q;
        }
      }
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = a; b < 3; ++b) {
        const double m1 = cov[a][b] / n;
        const double se = std::sqrt((sq[a][b] / n - m1 * m1) / n);
        const double z = std::fabs(cov[a][b] / (n - 1.0) - s.sigma[a][b]) / se;
        worst_z = std::max(worst_z, z);
        if (!(z < 4.0)) ++failures;
      }
    }
    // Slope of column `y` on column `x0`, against the model slope.
    auto slope_check = [&](int x0, int y) {
      const double sxx = cov[x0][x0];
      const double sxy = x0 < y ? cov[x0][y] : cov[y][x0];
      const double slope = sxy / sxx;
      double resid = 0.0;
      for (const auto& v : x) {
        const double e = (v[y] - mean[y]) - slope * (v[x0] - mean[x0]);
        resid += e * e;
      }
      const double se = std::sqrt(resid / (n - 2.0) / sxx);
      const double model = (x0 < y ? s.sigma[x0][y] : s.sigma[y][x0]) / s.sigma[x0][x0];
      const double z = std::fabs(slope - model) / se;
      worst_z = std::max(worst_z, z);
      if (!(z < 4.0)) ++failures;
    };
    slope_check(0, 1);
    slope_check(1, 2);
  }
  return {failures == 0, fmt("worst_z=%.2f failures=%d/16", worst_z, failures)};
}

// 5. Recursive statistics against batch recomputation.
Outcome c05() {
  std::mt19937_64 gen(5);
  std::lognormal_distribution<double> dist(0.0, 0.75);
  std::vector<double> z(10000);
  for (auto& v : z) v = 3.0 + dist(gen);
  const auto batch = oracle::batch_moments(z);
  RunningStat s;
  double biased = 0.0;
  for (double v : z) {
    const double prev = s.mean;
    s = update_mean(s, v);
    biased = update_biased_variance(biased, s.count, prev, s.mean);
  }
  RunningStat w;
  for (double v : z) w = push_sample(w, v);
  double worst = 0.0;
  worst = std::max(worst, std::fabs(w.mean - batch.mean) / std::fabs(batch.mean));
  worst = std::max(worst, std::fabs(w.var - batch.var_unbiased) / batch.var_unbiased);
  worst = std::max(worst, std::fabs(biased - batch.var_biased) / batch.var_biased);

  // The estimator's own sample log.
  MarketScenario sc;
  sc.licensed_candidates = {profile(1, 1.0, 0.5), profile(2, 0.9, 0.6)};
  sc.unlicensed_candidates = {profile(3, 0.8, 0.4)};
  MarketParams mp;
  mp.m = 3;
  mp.p = 1;
  mp.d_total = 2.0;
  mp.alpha_l = 0.8;
  mp.alpha_u = 0.9;
  McConfig cfg;
  cfg.r_min = 10000;
  cfg.r_max = 10000;
  std::ostringstream log;
  EstimateOptions opts;
  opts.sample_log = &log;
  const auto est = estimate(sc, {1, 2}, {3}, mp, cfg, opts);
  std::istringstream in(log.str());
  std::string line;
  std::getline(in, line);
  std::vector<double> u;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    u.push_back(std::stod(line.substr(a + 1, b - a - 1)));
  }
  const auto lb = oracle::batch_moments(u);
  const double log_mean = std::fabs(est.u_hat.mean - lb.mean) / std::fabs(lb.mean);
  const double log_var = std::fabs(est.u_hat.var - lb.var_unbiased) / lb.var_unbiased;
  worst = std::max({worst, log_mean, log_var});
  const bool sized = u.size() == 10000 && est.u_hat.count == 10000;
  return {worst <= 1e-9 && sized, fmt("max_rel_err=%.3g log_rows=%zu", worst, u.size())};
}

// 6. Confidence contract on a closed-form single-operator market.
Outcome c06() {
  MarketScenario sc;
  sc.licensed_candidates = {profile(1, 1.0, 0.5)};
  MarketParams mp;
  mp.m = 1;
  mp.p = 1;
  mp.phi = 0;
  mp.d_total = 1.0;
  const double exact = clipped_mean(1.0, 0.5, 1.0);
  int within = 0;
  std::int64_t max_samples = 0;
  int converged = 0;
  for (int run = 0; run < 200; ++run) {
    McConfig cfg;
    cfg.beta1 = 1.0;
    cfg.beta2 = 0.99;
    cfg.r_min = 10000;
    cfg.seed = 1000 + static_cast<std::uint64_t>(run);
    const auto est = estimate(sc, {1}, {}, mp, cfg);
    if (std::fabs(est.u_hat.mean - exact) <= 0.01 * exact) ++within;
    converged += est.converged ? 1 : 0;
    max_samples = std::max(max_samples, est.samples_used);
  }
  return {within >= 190, fmt("within_1pct=%d/200 converged=%d exact_U=%.6f max_r=%lld", within,
                             converged, exact, static_cast<long long>(max_samples))};
}

// 7. Entry game against explicit elimination tables.
Outcome c07() {
  std::mt19937_64 gen(161803);
  int mismatches = 0;
  int missing_first_round = 0;
  MarketParams mp;
  mp.m = 1;
  mp.p = 0;
  mp.t_slots = 1;
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = oracle::random_synthetic_market(gen, 1 + trial % 4);
    FunctionEvaluator eval([&m](const MarketScenario&, const MarketParams&, const IdSet& s_l,
                                const IdSet& s_u) { return m.evaluate(s_l, s_u); });
    const auto sol = solve_stage2(m.scenario(), mp, eval);
    const auto want = oracle::brute_force_iesds(
        m.licensed, m.unlicensed, m.threshold,
        [&](OperatorId k, const IdSet& l, const IdSet& u) { return m.revenue(k, l, u); });
    if (sol.s_l != want.s_l || sol.s_u != want.s_u) ++mismatches;
    for (OperatorId k : want.first_round) {
      if (!sol.s_l.count(k) && !sol.s_u.count(k)) ++missing_first_round;
    }
  }
  return {mismatches == 0 && missing_first_round == 0,
          fmt("mismatches=%d/200 first_round_missing=%d", mismatches, missing_first_round)};
}

// 8. Grid search sanity.
Outcome c08() {
  MarketScenario sc;
  sc.licensed_candidates = {profile(1, 2.0, 1e-12)};
  MarketParams mp;
  mp.d_total = 2.0;
  mp.phi = 0;
  mp.alpha_l = 0.9;
  mp.alpha_u = 0.9;
  McConfig cfg;
  cfg.r_max = 20480;
  const auto one = solve_stage1(sc, mp, cfg, default_m_max(sc, mp.d_total));

  MarketScenario open;
  open.unlicensed_candidates = {profile(4, 1.0, 0.5), profile(5, 0.9, 0.4)};
  mp.d_total = 1.5;
  const auto none = solve_stage1(open, mp, cfg, default_m_max(open, mp.d_total));
  const bool ok = one.m_star == 1 && one.p_star == 1 && none.p_star == 0;
  return {ok, fmt("single=(%lld,%lld) U=%.6f unlicensed_only_P=%lld", (long long)one.m_star,
                  (long long)one.p_star, one.u_star, (long long)none.p_star)};
}

McConfig sweep_config() {
  McConfig cfg;
  cfg.r_max = 100000;
  cfg.seed = 1;
  return cfg;
}

// 9. Joint interference sweep, licensed-only market.
Outcome c09() {
  const auto rows = run_sweep(homogeneous_licensed_market(), SweepKind::kAlphaJoint,
                              {0.2, 0.4, 0.6, 0.8, 1.0}, sweep_config(), SweepOptions{});
  bool all_equal = true;
  int violations = 0;
  std::int64_t worst_rise = 0;
  std::string trace;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    all_equal = all_equal && rows[i].m_star == rows[i].p_star;
    trace += fmt("%s%.1f:(%lld,%lld)", i ? " " : "", rows[i].alpha, (long long)rows[i].m_star,
                 (long long)rows[i].p_star);
    if (i > 0 && rows[i].m_star > rows[i - 1].m_star) {
      ++violations;
      worst_rise = std::max(worst_rise, rows[i].m_star - rows[i - 1].m_star);
    }
  }
  const bool trend = violations == 0 || (violations == 1 && worst_rise == 1);
  return {all_equal && trend, fmt("M*=P*:%d non_increasing:%d alpha:(M*,P*) %s", all_equal,
                                  trend, trace.c_str())};
}

// 10. Licensed-alpha sweep, mixed market.
Outcome c10() {
  const auto rows = run_sweep(mixed_market(), SweepKind::kAlphaLOnly, {0.0, 0.3, 0.6, 0.9},
                              sweep_config(), SweepOptions{});
  int violations = 0;
  std::string trace;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    trace += fmt("%s%.1f:%.3f", i ? " " : "", rows[i].alpha, rows[i].unlicensed_ratio);
    if (i > 0 && rows[i].unlicensed_ratio > rows[i - 1].unlicensed_ratio) ++violations;
  }
  return {violations <= 1, fmt("violations=%d alpha_l:ratio %s", violations, trace.c_str())};
}

bool cdf_valid(const std::vector<CdfPoint>& cdf) {
  if (cdf.empty() || cdf.back().cumulative_probability != 1.0) return false;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    if (cdf[i].value < 0.0 || cdf[i].value > 100.0) return false;
    if (i > 0 && (cdf[i].value < cdf[i - 1].value ||
                  cdf[i].cumulative_probability < cdf[i - 1].cumulative_probability)) {
      return false;
    }
  }
  return true;
}

McConfig benchmark_config() {
  McConfig cfg;
  cfg.r_max = 100000;
  cfg.seed = 1;
  return cfg;
}

// 11. Dominance of the joint optimum and the competition study.
Outcome c11() {
  ScenarioGenSpec spec;
  spec.n_markets = 100;
  const auto markets = generate_markets(spec);
  int dominance_failures = 0;
  int invalid_cdfs = 0;
  std::string medians;
  for (OsaStrategy osa : {OsaStrategy::kOverlay, OsaStrategy::kInterweave}) {
    for (int phi : {0, 1}) {
      BenchmarkOptions opts;
      opts.osa = osa;
      opts.phi = phi;
      std::vector<std::vector<double>> deltas(3);
      for (const auto& m : markets) {
        MonteCarloEvaluator eval(benchmark_config());
        const auto rows = compare_market_all(m, opts, eval);
        for (std::size_t k = 0; k < rows.size(); ++k) {
          const auto& r = rows[k];
          const double band = 3.0 * std::hypot(r.optimum.u_se, r.suboptimum.u_se);
          if (r.u_opt < r.u_subopt - band) ++dominance_failures;
          deltas[k].push_back(r.delta_u_pct);
        }
      }
      for (std::size_t k = 0; k < 3; ++k) {
        if (!cdf_valid(empirical_cdf(deltas[k]))) ++invalid_cdfs;
        auto sorted = deltas[k];
        std::sort(sorted.begin(), sorted.end());
        medians += fmt("%s%.2f", medians.empty() ? "" : "/", sorted[sorted.size() / 2]);
      }
    }
  }

  ScenarioGenSpec comp;
  comp.n_markets = 200;
  comp.n_licensed = 3;
  comp.n_unlicensed = 3;
  comp.seed = 2;
  const auto rows = run_benchmark(generate_markets(comp), BenchmarkMode::kMaxEntrants,
                                  benchmark_config(), BenchmarkOptions{});
  int positive = 0;
  int significant = 0;
  double max_delta = 0.0;
  for (const auto& r : rows) {
    positive += r.delta_u_pct > 0.0 ? 1 : 0;
    significant += r.significant() ? 1 : 0;
    max_delta = std::max(max_delta, r.delta_u_pct);
  }
  // A market counts as improved only beyond the noise band.
  const double fraction = static_cast<double>(significant) / static_cast<double>(rows.size());
  const bool ok = dominance_failures == 0 && invalid_cdfs == 0 && fraction < 0.15 &&
                  max_delta <= 20.0;
  return {ok, fmt("dominance_failures=%d invalid_cdfs=%d/12 median_dU(p/m/e x4)=%s "
                  "competition: dU>0 beyond noise %d/200 (raw %d) max_dU=%.2f",
                  dominance_failures, invalid_cdfs, medians.c_str(), significant, positive,
                  max_delta)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 12. Byte-identical CLI output across runs and thread counts.
Outcome c12() {
  const fs::path work = fs::path(SPECPART_ACCEPT_WORK) / "determinism";
  fs::remove_all(work);
  fs::create_directories(work);
  auto scenario = mixed_market();
  scenario.params.m = 4;
  scenario.params.p = 2;
  {
    std::ofstream out(work / "scenario.json");
    out << to_json(scenario.scenario, scenario.params).dump(2) << '\n';
  }
  const std::string sc = (work / "scenario.json").string();
  const std::string mc = " --rmin 2048 --rmax 8192 --mmax 6 --seed 9";
  struct Job {
    std::string name;
    std::string args;
    bool sample_log = false;
  };
  const std::vector<Job> jobs = {
      {"gen", "gen --markets 5 --seed 3"},
      {"solve", "solve --scenario " + sc + mc},
      {"stage2", "stage2 --scenario " + sc + mc},
      {"estimate", "estimate --scenario " + sc + mc, true},
      {"benchmark", "benchmark --mode fixed-m --markets 3" + mc},
      {"sweep", "sweep --kind alpha-l --grid 0,0.9" + mc},
  };
  int differing = 0;
  int errors = 0;
  std::string bad;
  for (const auto& job : jobs) {
    for (const char* format : {"json", "csv"}) {
      std::vector<std::string> outputs;
      for (int threads : {1, 1, 3}) {
        const auto tag = fmt("%s_%s_%d_%zu", job.name.c_str(), format, threads, outputs.size());
        const fs::path out = work / (tag + ".out");
        const fs::path log = work / (tag + ".log");
        std::string cmd = std::string(SPECPART_CLI_PATH) + " " + job.args + " --format " +
                          format + " --threads " + std::to_string(threads) + " --out " +
                          out.string();
        if (job.sample_log) cmd += " --sample-log " + log.string();
        if (std::system((cmd + " > /dev/null 2>&1").c_str()) != 0) {
          ++errors;
          bad += " " + job.name + "(error)";
          continue;
        }
        std::string text = slurp(out);
        if (job.sample_log) text += slurp(log);
        if (text.empty()) ++errors;
        outputs.push_back(text);
      }
      for (const auto& o : outputs) {
        if (o != outputs.front()) {
          ++differing;
          bad += " " + job.name + "/" + format;
          break;
        }
      }
    }
  }
  return {differing == 0 && errors == 0,
          fmt("subcommands=%zu formats=2 differing=%d errors=%d%s", jobs.size(), differing,
              errors, bad.c_str())};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "waterfilling worked example", 1.0, c01},
      {2, "waterfilling oracle equivalence", 5.0, c02},
      {3, "served-demand moments", 60.0, c03},
      {4, "joint sampler covariance", 30.0, c04},
      {5, "running statistics", 5.0, c05},
      {6, "estimator confidence contract", 300.0, c06},
      {7, "entry game elimination tables", 60.0, c07},
      {8, "grid search sanity", 10.0, c08},
      {9, "joint alpha sweep trend", 1200.0, c09},
      {10, "licensed alpha sweep trend", 1200.0, c10},
      {11, "joint optimum dominance", 3600.0, c11},
      {12, "CLI determinism", 300.0, c12},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double dt = seconds_since(t0);
    const bool pass = out.pass && dt <= c.budget_s;
    if (!pass) ++failed;
    std::printf("[%s] C%02d %s (%.2fs, budget %.0fs): %s\n", pass ? "PASS" : "FAIL", c.id,
                c.name, dt, c.budget_s, out.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
