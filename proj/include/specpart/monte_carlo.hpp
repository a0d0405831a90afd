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

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>

#include "specpart/allocation.hpp"
#include "specpart/market_model.hpp"

namespace specpart {

class ConfigInvalid : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Streaming mean and unbiased sample variance.
struct RunningStat {
  std::int64_t count = 0;
  double mean = 0.0;
  double var = 0.0;

  double standard_error() const {
    return count > 0 ? std::sqrt(var / static_cast<double>(count)) : 0.0;
  }
  bool operator==(const RunningStat&) const = default;
};

// Adds one sample to the mean: mean_r = ((r - 1) mean_{r-1} + z) / r.
inline RunningStat update_mean(RunningStat stat, double z) {
  ++stat.count;
  const auto r = static_cast<double>(stat.count);
  stat.mean = ((r - 1.0) * stat.mean + z) / r;
  return stat;
}

// Unbiased recursion, applied after update_mean has advanced the count:
// var_r = (r - 2) / (r - 1) var_{r-1} + r (mean_r - mean_{r-1})^2.
// The first sample resets the accumulator to zero.
inline RunningStat update_variance(RunningStat stat, double prev_mean,
                                   double new_mean) {
  if (stat.count <= 1) {
    stat.var = 0.0;
    return stat;
  }
  const auto r = static_cast<double>(stat.count);
  const double step = new_mean - prev_mean;
  stat.var = (r - 2.0) / (r - 1.0) * stat.var + r * step * step;
  return stat;
}

// Divide-by-r counterpart: var_r = (r - 1) / r var_{r-1} + (r - 1) step^2.
inline double update_biased_variance(double prev_var, std::int64_t count,
                                     double prev_mean, double new_mean) {
  if (count <= 1) return 0.0;
  const auto r = static_cast<double>(count);
  const double step = new_mean - prev_mean;
  return (r - 1.0) / r * prev_var + (r - 1.0) * step * step;
}

inline RunningStat push_sample(const RunningStat& stat, double z) {
  const RunningStat next = update_mean(stat, z);
  return update_variance(next, stat.mean, next.mean);
}

// Exact pairwise combination of two disjoint sample sets.
RunningStat merge(const RunningStat& a, const RunningStat& b);

struct McConfig {
  double beta1 = 1.0;
  double beta2 = 0.99;
  std::int64_t r_min = 10000;
  std::int64_t r_max = 10000000;
  std::uint64_t seed = 1;
  // Stopping is evaluated at block boundaries.
  std::int64_t block_size = 1024;
  int threads = 1;

  void validate() const;
};

struct McEstimates {
  RunningStat u_hat;
  std::map<OperatorId, RunningStat> u_op_hat;
  std::map<OperatorId, RunningStat> r_lc_hat;
  bool converged = false;
  std::int64_t samples_used = 0;
};

// True when the Chebyshev precision target holds for this statistic. A
// statistic with zero sample variance is always accepted.
bool precision_reached(const RunningStat& stat, const McConfig& config);

// Every statistic meets its precision target and r >= r_min.
bool criteria_met(const McEstimates& estimates, const McConfig& config);

// criteria_met, or the sample budget r_max is exhausted.
bool should_stop(const McEstimates& estimates, const McConfig& config);

struct EstimateOptions {
  // When set, one CSV row per sample is written here.
  std::ostream* sample_log = nullptr;
};

McEstimates estimate(const MarketScenario& scenario, const IdSet& s_l,
                     const IdSet& s_u, const MarketParams& params,
                     const McConfig& config, const EstimateOptions& options = {});

struct ObjectiveAndRevenues {
  double objective = 0.0;
  double objective_se = 0.0;
  std::map<OperatorId, double> revenue;
  std::map<OperatorId, double> revenue_se;
};

ObjectiveAndRevenues objective_and_revenues(const McEstimates& estimates,
                                            const MarketScenario& scenario,
                                            const IdSet& s_l, const IdSet& s_u,
                                            const MarketParams& params);

}  // namespace specpart
