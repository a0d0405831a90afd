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

#include "specpart/stackelberg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace specpart {
namespace {

double revenue_of(const SetEvaluation& eval, OperatorId id) {
  const auto it = eval.revenue.find(id);
  return it == eval.revenue.end() ? 0.0 : it->second;
}

double revenue_se_of(const SetEvaluation& eval, OperatorId id) {
  const auto it = eval.revenue_se.find(id);
  return it == eval.revenue_se.end() ? 0.0 : it->second;
}

IdSet set_union(const IdSet& a, const IdSet& b) {
  IdSet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

IdSet with(IdSet s, OperatorId id) {
  s.insert(id);
  return s;
}

IdSet to_set(const std::vector<OperatorId>& ids) { return {ids.begin(), ids.end()}; }

}  // namespace

MonteCarloEvaluator::MonteCarloEvaluator(McConfig config) : config_(config) {
  config_.validate();
}

SetEvaluation MonteCarloEvaluator::evaluate(const MarketScenario& scenario,
                                            const MarketParams& params,
                                            const IdSet& s_l, const IdSet& s_u) {
  const std::uint64_t digest = scenario.digest();
  Key key{digest,         params.m,       params.p,
          params.t_slots, params.d_total, params.phi,
          params.alpha_l, params.alpha_u, static_cast<int>(params.osa),
          s_l,            s_u};
  {
    const std::lock_guard lock(mu_);
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }

  McConfig cfg = config_;
  cfg.seed = derive_key(config_.seed, digest, static_cast<std::uint64_t>(params.m),
                        static_cast<std::uint64_t>(params.p));
  const McEstimates est = estimate(scenario, s_l, s_u, params, cfg);
  const ObjectiveAndRevenues values = objective_and_revenues(est, scenario, s_l, s_u, params);
  SetEvaluation out;
  out.objective = values.objective;
  out.objective_se = values.objective_se;
  out.revenue = values.revenue;
  out.revenue_se = values.revenue_se;
  out.converged = est.converged;
  out.samples_used = est.samples_used;

  const std::lock_guard lock(mu_);
  ++calls_;
  cache_.emplace(std::move(key), out);
  return out;
}

std::size_t MonteCarloEvaluator::cache_size() const {
  const std::lock_guard lock(mu_);
  return cache_.size();
}

std::int64_t MonteCarloEvaluator::estimator_calls() const {
  const std::lock_guard lock(mu_);
  return calls_;
}

std::map<OperatorId, double> revenue_oracle(const MarketScenario& scenario,
                                            const IdSet& s_l, const IdSet& s_u,
                                            const MarketParams& params,
                                            const McConfig& config) {
  const McEstimates est = estimate(scenario, s_l, s_u, params, config);
  return objective_and_revenues(est, scenario, s_l, s_u, params).revenue;
}

Stage2Solution solve_stage2(const MarketScenario& scenario, const MarketParams& params,
                            MarketEvaluator& evaluator) {
  params.validate();
  Stage2Iteration state;
  state.confused_licensed = to_set(scenario.licensed_ids());
  state.confused_unlicensed = to_set(scenario.unlicensed_ids());

  Stage2Solution out;
  out.trace.push_back(state);
  auto threshold = [&](OperatorId id) {
    return scenario.profile(id).min_expected_revenue(params.t_slots);
  };

  for (;;) {
    const IdSet all_l = set_union(state.joined_licensed, state.confused_licensed);
    const IdSet all_u = set_union(state.joined_unlicensed, state.confused_unlicensed);
    std::optional<SetEvaluation> largest;
    auto best_case = [&](OperatorId id) {
      if (!largest) largest = evaluator.evaluate(scenario, params, all_l, all_u);
      return revenue_of(*largest, id);
    };

    Stage2Iteration next = state;
    bool changed = false;
    for (OperatorId k : state.confused_licensed) {
      const double lambda = threshold(k);
      if (best_case(k) > lambda) {
        next.joined_licensed.insert(k);
        next.confused_licensed.erase(k);
        changed = true;
        continue;
      }
      const SetEvaluation worst = evaluator.evaluate(
          scenario, params, with(state.joined_licensed, k), state.joined_unlicensed);
      if (revenue_of(worst, k) <= lambda) {
        next.confused_licensed.erase(k);
        changed = true;
      }
    }
    for (OperatorId k : state.confused_unlicensed) {
      const double lambda = threshold(k);
      if (best_case(k) > lambda) {
        next.joined_unlicensed.insert(k);
        next.confused_unlicensed.erase(k);
        changed = true;
        continue;
      }
      const SetEvaluation worst = evaluator.evaluate(
          scenario, params, state.joined_licensed, with(state.joined_unlicensed, k));
      if (revenue_of(worst, k) <= lambda) {
        next.confused_unlicensed.erase(k);
        changed = true;
      }
    }
    if (!changed) break;
    state = std::move(next);
    out.trace.push_back(state);
  }

  out.s_l = state.joined_licensed;
  out.s_u = state.joined_unlicensed;
  out.confused_at_convergence = set_union(state.confused_licensed, state.confused_unlicensed);
  return out;
}

Stage2Solution solve_stage2(const MarketScenario& scenario, const MarketParams& params,
                            const McConfig& config) {
  MonteCarloEvaluator evaluator(config);
  return solve_stage2(scenario, params, evaluator);
}

const GridCell* Stage1Solution::cell(std::int64_t m, std::int64_t p) const {
  for (const auto& c : grid) {
    if (c.m == m && c.p == p) return &c;
  }
  return nullptr;
}

GridCell evaluate_cell(const MarketScenario& scenario, const MarketParams& params,
                       MarketEvaluator& evaluator) {
  const Stage2Solution entry = solve_stage2(scenario, params, evaluator);
  GridCell cell;
  cell.m = params.m;
  cell.p = params.p;
  cell.s_l = entry.s_l;
  cell.s_u = entry.s_u;
  if (!entry.s_l.empty() || !entry.s_u.empty()) {
    const SetEvaluation eval = evaluator.evaluate(scenario, params, entry.s_l, entry.s_u);
    cell.u = eval.objective;
    cell.u_se = eval.objective_se;
    cell.converged = eval.converged;
  }
  return cell;
}

Stage1Solution solve_stage1(const MarketScenario& scenario,
                            const MarketParams& params_template,
                            MarketEvaluator& evaluator, std::int64_t m_max, int threads) {
  if (m_max < 1) throw InvalidInput("m_max must be >= 1");
  if (threads < 1) throw InvalidInput("threads must be >= 1");
  scenario.validate();
  const auto n_licensed = static_cast<std::int64_t>(scenario.licensed_candidates.size());

  std::vector<MarketParams> cells;
  for (std::int64_t m = 1; m <= m_max; ++m) {
    for (std::int64_t p = 0; p <= std::min(n_licensed, m); ++p) {
      MarketParams params = params_template;
      params.m = m;
      params.p = p;
      params.validate();
      cells.push_back(params);
    }
  }

  Stage1Solution out;
  out.grid.resize(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        out.grid[i] = evaluate_cell(scenario, cells[i], evaluator);
      } catch (...) {
        const std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(cells.size());
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);

  const GridCell* best = &out.grid.front();
  for (const auto& c : out.grid) {
    if (c.u > best->u) best = &c;
  }
  out.m_star = best->m;
  out.p_star = best->p;
  out.s_l_star = best->s_l;
  out.s_u_star = best->s_u;
  out.u_star = best->u;
  out.u_star_se = best->u_se;
  return out;
}

Stage1Solution solve_stage1(const MarketScenario& scenario,
                            const MarketParams& params_template,
                            const McConfig& config, std::int64_t m_max) {
  MonteCarloEvaluator evaluator(config);
  return solve_stage1(scenario, params_template, evaluator, m_max, config.threads);
}

std::int64_t default_m_max(const MarketScenario& scenario, double d_total) {
  const std::size_t n = scenario.candidate_count();
  if (n == 0) return 1;
  double sum = 0.0;
  for (const auto* group : {&scenario.licensed_candidates, &scenario.unlicensed_candidates}) {
    for (const auto& op : *group) sum += op.mu_theta;
  }
  const double mean = sum / static_cast<double>(n);
  auto by_demand = std::int64_t{1};
  if (mean > 0.0) by_demand = static_cast<std::int64_t>(std::ceil(2.0 * d_total / mean));
  return std::max({std::int64_t{1}, 2 * static_cast<std::int64_t>(n), by_demand});
}

MarketScenario believed_scenario(const MarketScenario& truth, const BeliefSet& beliefs) {
  MarketScenario out;
  auto believed = [&](const OperatorProfile& actual) {
    if (actual.id == beliefs.holder) return actual;
    const auto it = beliefs.estimates.find(actual.id);
    if (it == beliefs.estimates.end()) {
      throw MissingBelief("holder " + std::to_string(beliefs.holder) +
                          " has no estimate for operator " + std::to_string(actual.id));
    }
    OperatorProfile p = it->second;
    p.id = actual.id;
    return p;
  };
  for (const auto& op : truth.licensed_candidates) {
    out.licensed_candidates.push_back(believed(op));
  }
  for (const auto& op : truth.unlicensed_candidates) {
    out.unlicensed_candidates.push_back(believed(op));
  }
  return out;
}

IncompleteSolution solve_incomplete(const MarketScenario& truth,
                                    const std::vector<BeliefSet>& beliefs,
                                    const MarketParams& params_template,
                                    MarketEvaluator& evaluator, std::int64_t m_max) {
  truth.validate();
  auto find = [&](OperatorId holder) -> const BeliefSet& {
    for (const auto& b : beliefs) {
      if (b.holder == holder) return b;
    }
    throw MissingBelief(holder == kRegulator
                            ? std::string("no beliefs for the regulator")
                            : "no beliefs for operator " + std::to_string(holder));
  };
  const BeliefSet& regulator_view = find(kRegulator);
  for (const auto* group : {&truth.licensed_candidates, &truth.unlicensed_candidates}) {
    for (const auto& op : *group) {
      if (op.id == kRegulator) {
        throw InvalidInput("operator id 0 is reserved for the regulator");
      }
      find(op.id);
    }
  }

  IncompleteSolution out;
  out.regulator = solve_stage1(believed_scenario(truth, regulator_view), params_template,
                               evaluator, m_max);
  MarketParams params = params_template;
  params.m = out.regulator.m_star;
  params.p = out.regulator.p_star;

  for (const auto* group : {&truth.licensed_candidates, &truth.unlicensed_candidates}) {
    const bool licensed = group == &truth.licensed_candidates;
    for (const auto& op : *group) {
      const Stage2Solution own =
          solve_stage2(believed_scenario(truth, find(op.id)), params, evaluator);
      const bool joins = licensed ? own.s_l.count(op.id) > 0 : own.s_u.count(op.id) > 0;
      out.joins[op.id] = joins;
      if (joins) (licensed ? out.s_l_true : out.s_u_true).insert(op.id);
    }
  }
  if (!out.s_l_true.empty() || !out.s_u_true.empty()) {
    const SetEvaluation eval = evaluator.evaluate(truth, params, out.s_l_true, out.s_u_true);
    out.u_true = eval.objective;
    out.u_true_se = eval.objective_se;
  }
  return out;
}

MonotonicityReport check_monotonicity(const MarketScenario& scenario,
                                      const MarketParams& params,
                                      MarketEvaluator& evaluator) {
  scenario.validate();
  std::vector<OperatorId> ids = scenario.licensed_ids();
  const std::size_t n_licensed = ids.size();
  for (OperatorId id : scenario.unlicensed_ids()) ids.push_back(id);
  const std::size_t n = ids.size();
  if (n > 6) throw InvalidInput("monotonicity check supports at most 6 candidates");

  auto sets_of = [&](unsigned mask) {
    std::pair<IdSet, IdSet> sets;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) (i < n_licensed ? sets.first : sets.second).insert(ids[i]);
    }
    return sets;
  };
  std::map<unsigned, SetEvaluation> evals;
  auto eval_of = [&](unsigned mask) -> const SetEvaluation& {
    auto it = evals.find(mask);
    if (it == evals.end()) {
      const auto [s_l, s_u] = sets_of(mask);
      it = evals.emplace(mask, evaluator.evaluate(scenario, params, s_l, s_u)).first;
    }
    return it->second;
  };

  MonotonicityReport report;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    for (std::size_t j = 0; j < n; ++j) {
      if (mask & (1u << j)) continue;
      const unsigned larger = mask | (1u << j);
      for (std::size_t i = 0; i < n; ++i) {
        if (!(mask & (1u << i))) continue;
        const OperatorId k = ids[i];
        const SetEvaluation& small = eval_of(mask);
        const SetEvaluation& big = eval_of(larger);
        const double r_small = revenue_of(small, k);
        const double r_large = revenue_of(big, k);
        const double tol = 3.0 * std::hypot(revenue_se_of(small, k), revenue_se_of(big, k));
        ++report.comparisons;
        if (r_large > r_small + tol) {
          const auto [s_l, s_u] = sets_of(mask);
          report.violations.push_back({k, ids[j], s_l, s_u, r_small, r_large, tol});
        }
      }
    }
  }
  return report;
}

MonotonicityReport check_monotonicity(const MarketScenario& scenario,
                                      const MarketParams& params,
                                      const McConfig& config) {
  MonteCarloEvaluator evaluator(config);
  return check_monotonicity(scenario, params, evaluator);
}

}  // namespace specpart
