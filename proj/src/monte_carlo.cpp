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

#include "specpart/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <cassert>
#include <sstream>
#include <thread>
#include <vector>

namespace specpart {
namespace {

struct SampledOperator {
  OperatorId id = 0;
  bool licensed = false;
  std::uint64_t key = 0;
  JointSamplerParams sampler;
  double mu_theta = 0.0;
  double sigma_theta = 0.0;
};

// Shifted sums for one block; the shift is the block's first sample.
struct BlockSums {
  double shift = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;

  void add(double z, bool first) {
    if (first) shift = z;
    const double d = z - shift;
    s1 += d;
    s2 += d * d;
  }

  RunningStat finish(std::int64_t n) const {
    RunningStat out;
    out.count = n;
    if (n == 0) return out;
    const auto dn = static_cast<double>(n);
    out.mean = shift + s1 / dn;
    out.var = n > 1 ? std::max(0.0, (s2 - s1 * s1 / dn) / (dn - 1.0)) : 0.0;
    return out;
  }
};

struct BlockResult {
  RunningStat u;
  std::vector<RunningStat> op;
  std::vector<RunningStat> lc;
  std::string log;
};

// Draws and evaluates samples [first, first + count). Operators are laid out
// licensed first, each group in ascending id order.
class SlotSimulator {
 public:
  SlotSimulator(std::vector<SampledOperator> ops, std::size_t n_licensed,
                const MarketParams& params)
      : ops_(std::move(ops)),
        n_licensed_(n_licensed),
        params_(params),
        cap_(params.channel_capacity()),
        leased_(effective_licensed(n_licensed, params)),
        base_capacity_(params.alpha_u * static_cast<double>(params.m - leased_) *
                       cap_) {
    const std::size_t n = ops_.size();
    ids_.resize(n);
    for (std::size_t i = 0; i < n; ++i) ids_[i] = ops_[i].id;
    demand_.resize(n);
    modified_.resize(n);
    alloc_.resize(n);
    order_.resize(n);
    bid_.resize(n_licensed);
    revenue_.resize(n_licensed);
    rank_.resize(n_licensed);
    tier1_.resize(n_licensed);
  }

  BlockResult run_block(std::int64_t first, std::int64_t count, bool log) {
    BlockSums u;
    std::vector<BlockSums> op(ops_.size());
    std::vector<BlockSums> lc(n_licensed_);
    std::ostringstream rows;
    rows.precision(17);
    for (std::int64_t i = 0; i < count; ++i) {
      const std::int64_t index = first + i;
      const double total = simulate(static_cast<std::uint64_t>(index));
      const bool head = i == 0;
      u.add(total, head);
      for (std::size_t k = 0; k < ops_.size(); ++k) op[k].add(alloc_[k], head);
      for (std::size_t k = 0; k < n_licensed_; ++k) {
        lc[k].add(tier1_[k] ? revenue_[k] : 0.0, head);
      }
      if (log) write_row(rows, index, total);
    }
    BlockResult out;
    out.u = u.finish(count);
    for (const auto& b : op) out.op.push_back(b.finish(count));
    for (const auto& b : lc) out.lc.push_back(b.finish(count));
    if (log) out.log = rows.str();
    return out;
  }

  void write_header(std::ostream& os) const {
    os << "r,u";
    for (std::size_t k = 0; k < ops_.size(); ++k) {
      const auto id = ops_[k].id;
      os << ",x_" << id << ",lc_" << id << ",op_" << id;
      if (k < n_licensed_) os << ",rlc_" << id;
    }
    os << '\n';
  }

 private:
  double simulate(std::uint64_t index) {
    const std::size_t n = ops_.size();
    for (std::size_t k = 0; k < n_licensed_; ++k) {
      CounterStream stream(derive_key(ops_[k].key, index));
      const JointDraw d = sample_joint(ops_[k].sampler, stream);
      demand_[k] = std::max(0.0, d.theta);
      revenue_[k] = d.r_lc;
      bid_[k] = d.bid;
    }
    for (std::size_t k = n_licensed_; k < n; ++k) {
      CounterStream stream(derive_key(ops_[k].key, index));
      const double theta = ops_[k].mu_theta + ops_[k].sigma_theta * stream.next_normal();
      demand_[k] = std::max(0.0, theta);
    }

    // Auction: the `leased_` highest bids win, lower id on ties.
    std::fill(tier1_.begin(), tier1_.end(), 0);
    if (leased_ >= static_cast<std::int64_t>(n_licensed_)) {
      std::fill(tier1_.begin(), tier1_.end(), 1);
    } else if (leased_ > 0) {
      for (std::size_t i = 0; i < n_licensed_; ++i) rank_[i] = i;
      const auto cmp = [this](std::size_t a, std::size_t b) {
        return bid_[a] > bid_[b] || (bid_[a] == bid_[b] && ops_[a].id < ops_[b].id);
      };
      std::partial_sort(rank_.begin(), rank_.begin() + leased_, rank_.end(), cmp);
      for (std::int64_t i = 0; i < leased_; ++i) tier1_[rank_[i]] = 1;
    }

    double pool = base_capacity_;
    double licensed_served = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const bool is_tier1 = k < n_licensed_ && tier1_[k];
      if (is_tier1) {
        licensed_served += std::min(demand_[k], cap_);
        pool += residual_capacity(demand_[k], params_);
      }
      modified_[k] = modified_demand(demand_[k], is_tier1, params_);
    }
    waterfill_into(pool, modified_, ids_, alloc_, order_);
    double opportunistic = 0.0;
    for (std::size_t k = 0; k < n; ++k) opportunistic += alloc_[k];
    assert(opportunistic <= pool + 1e-9);
    return licensed_served + opportunistic;
  }

  void write_row(std::ostream& os, std::int64_t index, double total) const {
    os << index + 1 << ',' << total;
    for (std::size_t k = 0; k < ops_.size(); ++k) {
      const bool is_tier1 = k < n_licensed_ && tier1_[k];
      os << ',' << demand_[k] << ',' << (is_tier1 ? std::min(demand_[k], cap_) : 0.0)
         << ',' << alloc_[k];
      if (k < n_licensed_) os << ',' << (is_tier1 ? revenue_[k] : 0.0);
    }
    os << '\n';
  }

  std::vector<SampledOperator> ops_;
  std::size_t n_licensed_;
  MarketParams params_;
  double cap_;
  std::int64_t leased_;
  double base_capacity_;
  std::vector<OperatorId> ids_;
  std::vector<double> demand_, modified_, alloc_, bid_, revenue_;
  std::vector<std::size_t> order_, rank_;
  std::vector<char> tier1_;
};

void check_subset(const MarketScenario& scenario, const IdSet& ids, bool licensed) {
  for (OperatorId id : ids) {
    const bool found = licensed ? scenario.is_licensed_candidate(id)
                                : std::any_of(scenario.unlicensed_candidates.begin(),
                                              scenario.unlicensed_candidates.end(),
                                              [id](const OperatorProfile& op) {
                                                return op.id == id;
                                              });
    if (!found) {
      throw InvalidInput("operator " + std::to_string(id) + " is not a candidate " +
                         (licensed ? "licensed" : "unlicensed") + " operator");
    }
  }
}

}  // namespace

RunningStat merge(const RunningStat& a, const RunningStat& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  const auto na = static_cast<double>(a.count);
  const auto nb = static_cast<double>(b.count);
  const double n = na + nb;
  const double delta = b.mean - a.mean;
  RunningStat out;
  out.count = a.count + b.count;
  out.mean = a.mean + delta * nb / n;
  const double m2 = a.var * (na - 1.0) + b.var * (nb - 1.0) + delta * delta * na * nb / n;
  out.var = out.count > 1 ? m2 / (n - 1.0) : 0.0;
  return out;
}

void McConfig::validate() const {
  if (!(beta1 > 0.0)) throw ConfigInvalid("beta1 must be > 0");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigInvalid("beta2 must lie in (0, 1)");
  if (r_min < 1 || r_max < r_min) throw ConfigInvalid("need 1 <= r_min <= r_max");
  if (block_size < 1) throw ConfigInvalid("block_size must be >= 1");
  if (threads < 1) throw ConfigInvalid("threads must be >= 1");
}

bool precision_reached(const RunningStat& stat, const McConfig& config) {
  if (stat.var == 0.0) return true;
  const double lhs = 1e4 * stat.var;
  const double rhs = static_cast<double>(stat.count) * config.beta1 * config.beta1 *
                     stat.mean * stat.mean * (1.0 - config.beta2);
  return lhs <= rhs;
}

bool criteria_met(const McEstimates& estimates, const McConfig& config) {
  if (estimates.samples_used < config.r_min) return false;
  if (!precision_reached(estimates.u_hat, config)) return false;
  for (const auto& [id, stat] : estimates.u_op_hat) {
    if (!precision_reached(stat, config)) return false;
  }
  for (const auto& [id, stat] : estimates.r_lc_hat) {
    if (!precision_reached(stat, config)) return false;
  }
  return true;
}

bool should_stop(const McEstimates& estimates, const McConfig& config) {
  return estimates.samples_used >= config.r_max || criteria_met(estimates, config);
}

McEstimates estimate(const MarketScenario& scenario, const IdSet& s_l,
                     const IdSet& s_u, const MarketParams& params,
                     const McConfig& config, const EstimateOptions& options) {
  config.validate();
  params.validate();
  check_subset(scenario, s_l, true);
  check_subset(scenario, s_u, false);

  McEstimates est;
  if (s_l.empty() && s_u.empty()) {
    est.converged = true;
    return est;
  }

  std::vector<SampledOperator> ops;
  for (OperatorId id : s_l) {
    const auto& prof = scenario.profile(id);
    SampledOperator op;
    op.id = id;
    op.licensed = true;
    op.key = derive_key(config.seed, id);
    op.sampler = joint_sampler_params(prof, params, licensed_served_moments(prof, params));
    op.mu_theta = prof.mu_theta;
    op.sigma_theta = prof.sigma_theta;
    ops.push_back(op);
  }
  for (OperatorId id : s_u) {
    const auto& prof = scenario.profile(id);
    SampledOperator op;
    op.id = id;
    op.key = derive_key(config.seed, id);
    op.mu_theta = prof.mu_theta;
    op.sigma_theta = prof.sigma_theta;
    ops.push_back(op);
  }
  const std::size_t n = ops.size();
  const std::size_t n_licensed = s_l.size();

  for (OperatorId id : s_l) est.r_lc_hat[id] = {};
  for (OperatorId id : s_l) est.u_op_hat[id] = {};
  for (OperatorId id : s_u) est.u_op_hat[id] = {};

  const bool log = options.sample_log != nullptr;
  const int workers = config.threads;
  std::vector<SlotSimulator> sims;
  sims.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) sims.emplace_back(ops, n_licensed, params);
  if (log) sims.front().write_header(*options.sample_log);

  RunningStat u;
  std::vector<RunningStat> op_stats(n);
  std::vector<RunningStat> lc_stats(n_licensed);
  std::int64_t next_block = 0;
  bool done = false;
  std::vector<BlockResult> batch(static_cast<std::size_t>(workers));
  std::vector<std::int64_t> batch_len(static_cast<std::size_t>(workers));

  while (!done) {
    // Blocks are a fixed partition of the sample index space, so the merged
    // result does not depend on how many run concurrently.
    int in_batch = 0;
    for (int w = 0; w < workers; ++w) {
      const std::int64_t first = (next_block + w) * config.block_size;
      if (first >= config.r_max) break;
      batch_len[w] = std::min(config.block_size, config.r_max - first);
      ++in_batch;
    }
    auto run = [&](int w) {
      batch[w] = sims[w].run_block((next_block + w) * config.block_size,
                                   batch_len[w], log);
    };
    if (in_batch == 1) {
      run(0);
    } else {
      std::vector<std::jthread> pool;
      for (int w = 1; w < in_batch; ++w) pool.emplace_back(run, w);
      run(0);
    }
    for (int w = 0; w < in_batch && !done; ++w) {
      const auto& block = batch[w];
      u = merge(u, block.u);
      for (std::size_t k = 0; k < n; ++k) op_stats[k] = merge(op_stats[k], block.op[k]);
      for (std::size_t k = 0; k < n_licensed; ++k) {
        lc_stats[k] = merge(lc_stats[k], block.lc[k]);
      }
      if (log) *options.sample_log << block.log;

      est.u_hat = u;
      for (std::size_t k = 0; k < n; ++k) est.u_op_hat[ops[k].id] = op_stats[k];
      for (std::size_t k = 0; k < n_licensed; ++k) est.r_lc_hat[ops[k].id] = lc_stats[k];
      est.samples_used = u.count;
      done = should_stop(est, config);
    }
    next_block += in_batch;
  }
  est.converged = criteria_met(est, config);
  return est;
}

ObjectiveAndRevenues objective_and_revenues(const McEstimates& estimates,
                                            const MarketScenario& scenario,
                                            const IdSet& s_l, const IdSet& s_u,
                                            const MarketParams& params) {
  ObjectiveAndRevenues out;
  out.objective = estimates.u_hat.mean;
  out.objective_se = estimates.u_hat.standard_error();
  const auto t = static_cast<double>(params.t_slots);
  auto opportunistic = [&](OperatorId id) {
    const auto it = estimates.u_op_hat.find(id);
    return it == estimates.u_op_hat.end() ? RunningStat{} : it->second;
  };
  for (OperatorId id : s_l) {
    const auto& prof = scenario.profile(id);
    const RunningStat op = opportunistic(id);
    const auto it = estimates.r_lc_hat.find(id);
    const RunningStat lc = it == estimates.r_lc_hat.end() ? RunningStat{} : it->second;
    out.revenue[id] = lc.mean + prof.revenue(op.mean * t);
    const double op_se = prof.revenue(op.standard_error() * t);
    out.revenue_se[id] = std::hypot(lc.standard_error(), op_se);
  }
  for (OperatorId id : s_u) {
    const auto& prof = scenario.profile(id);
    const RunningStat op = opportunistic(id);
    out.revenue[id] = prof.revenue(op.mean * t);
    out.revenue_se[id] = prof.revenue(op.standard_error() * t);
  }
  return out;
}

}  // namespace specpart
