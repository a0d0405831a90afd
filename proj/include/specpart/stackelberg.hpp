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
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "specpart/allocation.hpp"
#include "specpart/market_model.hpp"
#include "specpart/monte_carlo.hpp"

namespace specpart {

// Long-run number of epochs. Every revenue and the objective scale with it
// uniformly, so it never changes an optimizer and is kept for reference only.
inline constexpr std::int64_t kEpochsReference = 1;

// Objective and revenues for one (params, S_L, S_U) configuration.
struct SetEvaluation {
  double objective = 0.0;
  double objective_se = 0.0;
  std::map<OperatorId, double> revenue;
  std::map<OperatorId, double> revenue_se;
  bool converged = true;
  std::int64_t samples_used = 0;
};

// Source of objective and revenue values. Implementations must be safe to
// call concurrently and must return the same value for the same inputs.
class MarketEvaluator {
 public:
  virtual ~MarketEvaluator() = default;
  virtual SetEvaluation evaluate(const MarketScenario& scenario,
                                 const MarketParams& params, const IdSet& s_l,
                                 const IdSet& s_u) = 0;
};

// Monte Carlo backed evaluator with a memo cache. The sampling seed of every
// evaluation is derived from (config.seed, scenario digest, M, P), so the
// same operator sees the same draws whichever sets are being compared.
class MonteCarloEvaluator : public MarketEvaluator {
 public:
  explicit MonteCarloEvaluator(McConfig config);

  SetEvaluation evaluate(const MarketScenario& scenario, const MarketParams& params,
                         const IdSet& s_l, const IdSet& s_u) override;

  const McConfig& config() const { return config_; }
  std::size_t cache_size() const;
  std::int64_t estimator_calls() const;

 private:
  struct Key {
    std::uint64_t digest = 0;
    std::int64_t m = 0;
    std::int64_t p = 0;
    std::int64_t t_slots = 0;
    double d_total = 0.0;
    int phi = 0;
    double alpha_l = 0.0;
    double alpha_u = 0.0;
    int osa = 0;
    IdSet s_l;
    IdSet s_u;
    auto operator<=>(const Key&) const = default;
  };

  McConfig config_;
  mutable std::mutex mu_;
  std::map<Key, SetEvaluation> cache_;
  std::int64_t calls_ = 0;
};

// Wraps a deterministic function; used for closed-form and synthetic oracles.
class FunctionEvaluator : public MarketEvaluator {
 public:
  using Fn = std::function<SetEvaluation(const MarketScenario&, const MarketParams&,
                                         const IdSet&, const IdSet&)>;
  explicit FunctionEvaluator(Fn fn) : fn_(std::move(fn)) {}

  SetEvaluation evaluate(const MarketScenario& scenario, const MarketParams& params,
                         const IdSet& s_l, const IdSet& s_u) override {
    return fn_(scenario, params, s_l, s_u);
  }

 private:
  Fn fn_;
};

// Expected epoch revenue of every operator in s_l and s_u.
std::map<OperatorId, double> revenue_oracle(const MarketScenario& scenario,
                                            const IdSet& s_l, const IdSet& s_u,
                                            const MarketParams& params,
                                            const McConfig& config);

struct Stage2Iteration {
  IdSet joined_licensed;
  IdSet confused_licensed;
  IdSet joined_unlicensed;
  IdSet confused_unlicensed;
};

struct Stage2Solution {
  IdSet s_l;
  IdSet s_u;
  // trace[0] is the initial state; one entry per pass after that.
  std::vector<Stage2Iteration> trace;
  IdSet confused_at_convergence;
};

// Market entry by iterated elimination of strictly dominated strategies.
// Every pass compares against the sets of the previous pass. Operators that
// are still undecided when nothing changes stay out.
Stage2Solution solve_stage2(const MarketScenario& scenario, const MarketParams& params,
                            MarketEvaluator& evaluator);
Stage2Solution solve_stage2(const MarketScenario& scenario, const MarketParams& params,
                            const McConfig& config);

struct GridCell {
  std::int64_t m = 0;
  std::int64_t p = 0;
  double u = 0.0;
  double u_se = 0.0;
  IdSet s_l;
  IdSet s_u;
  bool converged = true;
};

struct Stage1Solution {
  std::int64_t m_star = 1;
  std::int64_t p_star = 0;
  IdSet s_l_star;
  IdSet s_u_star;
  double u_star = 0.0;
  double u_star_se = 0.0;
  // Row-major over M = 1..m_max, then P = 0..min(|S_L^C|, M).
  std::vector<GridCell> grid;

  const GridCell* cell(std::int64_t m, std::int64_t p) const;
};

// Solves the entry game at one (M, P) and evaluates the objective at the
// resulting sets. Empty sets give u = 0 without calling the evaluator.
GridCell evaluate_cell(const MarketScenario& scenario, const MarketParams& params,
                       MarketEvaluator& evaluator);

// Exhaustive search over M = 1..m_max and P = 0..min(|S_L^C|, M). Only a
// strictly larger objective replaces the incumbent, so the first cell in
// grid order wins ties. M and P of params_template are ignored.
Stage1Solution solve_stage1(const MarketScenario& scenario,
                            const MarketParams& params_template,
                            MarketEvaluator& evaluator, std::int64_t m_max,
                            int threads = 1);
Stage1Solution solve_stage1(const MarketScenario& scenario,
                            const MarketParams& params_template,
                            const McConfig& config, std::int64_t m_max);

// max(2 |S^C|, ceil(2 D / mean mu_theta)).
std::int64_t default_m_max(const MarketScenario& scenario, double d_total);

// Holder 0 is the regulator; any other holder is the operator with that id.
inline constexpr OperatorId kRegulator = 0;

class MissingBelief : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct BeliefSet {
  OperatorId holder = kRegulator;
  std::map<OperatorId, OperatorProfile> estimates;
};

struct IncompleteSolution {
  Stage1Solution regulator;
  // Decision of each candidate, made under its own beliefs at (M*, P*).
  std::map<OperatorId, bool> joins;
  IdSet s_l_true;
  IdSet s_u_true;
  double u_true = 0.0;
  double u_true_se = 0.0;
};

// The market as seen by one belief holder: candidate roles come from the
// true scenario, profiles from the holder's estimates, and an operator's
// own profile is always the true one.
MarketScenario believed_scenario(const MarketScenario& truth, const BeliefSet& beliefs);

IncompleteSolution solve_incomplete(const MarketScenario& truth,
                                    const std::vector<BeliefSet>& beliefs,
                                    const MarketParams& params_template,
                                    MarketEvaluator& evaluator, std::int64_t m_max);

struct MonotonicityViolation {
  OperatorId subject = 0;
  OperatorId added = 0;
  IdSet s_l;
  IdSet s_u;
  double revenue_smaller = 0.0;
  double revenue_larger = 0.0;
  double tolerance = 0.0;
};

struct MonotonicityReport {
  std::int64_t comparisons = 0;
  std::vector<MonotonicityViolation> violations;
  bool ok() const { return violations.empty(); }
};

// For every pair of nested configurations that differ by one added operator,
// checks that no incumbent's revenue rises by more than three combined
// standard errors. Intended for markets with at most 6 candidates.
MonotonicityReport check_monotonicity(const MarketScenario& scenario,
                                      const MarketParams& params,
                                      MarketEvaluator& evaluator);
MonotonicityReport check_monotonicity(const MarketScenario& scenario,
                                      const MarketParams& params,
                                      const McConfig& config);

}  // namespace specpart
