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

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "specpart/market_model.hpp"
#include "specpart/monte_carlo.hpp"
#include "specpart/stackelberg.hpp"

namespace specpart {

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const ParamRange&) const = default;
};

struct ScenarioGenSpec {
  std::size_t n_licensed = 4;
  std::size_t n_unlicensed = 0;
  ParamRange mu_theta{0.75, 1.0};
  ParamRange sigma_theta{0.25, 0.75};
  ParamRange revenue_slope{0.9, 1.1};
  ParamRange revenue_cv{0.25, 0.75};
  ParamRange rho{0.5, 0.9};
  ParamRange omega{0.85, 0.95};
  ParamRange mer_fraction{0.25, 1.0};
  ParamRange upsilon{0.5, 1.0};
  ParamRange alpha_l{0.75, 1.0};
  ParamRange alpha_u{0.75, 1.0};
  // Swap the two draws whenever alpha_l > alpha_u.
  bool enforce_alpha_order = true;
  std::size_t n_markets = 200;
  std::uint64_t seed = 1;
  std::int64_t t_slots = 52;

  void validate() const;
};

// One random market. params carries D, T and the alphas; M, P, OSA and phi
// are set by whoever consumes it.
struct GeneratedMarket {
  std::size_t index = 0;
  MarketScenario scenario;
  MarketParams params;
  double upsilon = 0.0;
};

// Market i depends only on (spec.seed, i). D = upsilon * sum of mu_theta.
std::vector<GeneratedMarket> generate_markets(const ScenarioGenSpec& spec);

// Eight homogeneous licensed candidates with zero MER, D = 6.4.
GeneratedMarket homogeneous_licensed_market();
// Four licensed and four unlicensed candidates, otherwise as above.
GeneratedMarket mixed_market();

enum class BenchmarkMode { kFixedP, kFixedM, kMaxEntrants };
std::string_view to_string(BenchmarkMode mode);
BenchmarkMode parse_benchmark_mode(std::string_view text);

struct Choice {
  std::int64_t m = 1;
  std::int64_t p = 0;
  double u = 0.0;
  double u_se = 0.0;
  std::size_t entrants = 0;
};

struct BenchmarkRow {
  std::size_t market_index = 0;
  double u_opt = 0.0;
  double u_subopt = 0.0;
  double delta_u_pct = 0.0;
  OsaStrategy osa = OsaStrategy::kOverlay;
  int phi = 0;
  BenchmarkMode mode = BenchmarkMode::kFixedP;
  Choice optimum;
  Choice suboptimum;
  // 3 * sqrt(se_opt^2 + se_sub^2); zero when both modes pick the same cell.
  double noise_band = 0.0;
  double d_total = 0.0;

  bool significant() const { return u_opt - u_subopt > noise_band; }
};

struct BenchmarkOptions {
  OsaStrategy osa = OsaStrategy::kOverlay;
  int phi = 1;
  // Zero selects default_m_max per market.
  std::int64_t m_max = 0;
  int threads = 1;
};

// Joint optimum and the sub-optimal choice of `mode`, for one market.
// fixed_p holds P = |S_L^C| (M >= P), fixed_m holds M = max(1, floor(D /
// mean mu_theta)), max_entrants maximizes |S_L| + |S_U| then U.
BenchmarkRow compare_market(const GeneratedMarket& market, BenchmarkMode mode,
                            const BenchmarkOptions& options, MarketEvaluator& evaluator);

// Every mode against one shared grid, in the order fixed_p, fixed_m,
// max_entrants.
std::vector<BenchmarkRow> compare_market_all(const GeneratedMarket& market,
                                             const BenchmarkOptions& options,
                                             MarketEvaluator& evaluator);

// Markets are processed concurrently; rows come back in market order.
std::vector<BenchmarkRow> run_benchmark(const std::vector<GeneratedMarket>& markets,
                                        BenchmarkMode mode, const McConfig& config,
                                        const BenchmarkOptions& options);

enum class SweepKind { kAlphaJoint, kAlphaLOnly };
std::string_view to_string(SweepKind kind);
SweepKind parse_sweep_kind(std::string_view text);

struct SweepRow {
  double alpha = 0.0;
  double alpha_l = 0.0;
  double alpha_u = 0.0;
  std::int64_t m_star = 1;
  std::int64_t p_star = 0;
  double unlicensed_ratio = 0.0;
  double u_star = 0.0;
  double u_star_se = 0.0;
};

struct SweepOptions {
  OsaStrategy osa = OsaStrategy::kOverlay;
  int phi = 0;
  double fixed_alpha_u = 0.9;
  std::int64_t m_max = 0;
  int threads = 1;
};

// alpha_joint sets alpha_L = alpha_U = alpha; alpha_l_only holds alpha_U at
// options.fixed_alpha_u and sweeps alpha_L.
std::vector<SweepRow> run_sweep(const GeneratedMarket& base, SweepKind kind,
                                const std::vector<double>& grid,
                                const McConfig& config, const SweepOptions& options);

struct CdfPoint {
  double value = 0.0;
  double cumulative_probability = 0.0;
};

// Empirical CDF: one point per distinct value, ascending.
std::vector<CdfPoint> empirical_cdf(std::vector<double> values);

enum class OutputFormat { kCsv, kJson };
OutputFormat parse_format(std::string_view text);

void write_benchmark(std::ostream& os, const std::vector<BenchmarkRow>& rows,
                     OutputFormat format);
void write_cdf(std::ostream& os, const std::vector<CdfPoint>& cdf, OutputFormat format);
void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows, SweepKind kind,
                 OutputFormat format);
void write_markets(std::ostream& os, const std::vector<GeneratedMarket>& markets,
                   OutputFormat format);

// Writes `text` to `path`, surfacing I/O failures with the path.
void write_file(const std::string& path, const std::string& text);

}  // namespace specpart
