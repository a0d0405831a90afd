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

#include "specpart/allocation.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace specpart {

double residual_capacity(double d, const MarketParams& params) {
  const double cap = params.channel_capacity();
  if (params.osa == OsaStrategy::kOverlay) {
    return params.alpha_l * std::max(0.0, cap - d);
  }
  return d == 0.0 ? params.alpha_l * cap : 0.0;
}

double modified_demand(double x, bool is_tier1, const MarketParams& params) {
  if (!is_tier1) return x;
  return params.phi * std::max(0.0, x - params.channel_capacity());
}

double opportunistic_capacity(const DemandMap& tier1_demands,
                              std::size_t n_interested_licensed,
                              const MarketParams& params) {
  const auto leased = effective_licensed(n_interested_licensed, params);
  double total = params.alpha_u * static_cast<double>(params.m - leased) *
                 params.channel_capacity();
  for (const auto& [id, d] : tier1_demands) total += residual_capacity(d, params);
  return total;
}

void waterfill_into(double capacity, std::span<const double> demands,
                    std::span<const OperatorId> ids, std::span<double> out,
                    std::span<std::size_t> order) {
  const std::size_t n = demands.size();
  std::iota(order.begin(), order.begin() + n, std::size_t{0});
  // Insertion sort: n is small and the input is often nearly sorted.
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t v = order[i];
    std::size_t j = i;
    while (j > 0) {
      const std::size_t u = order[j - 1];
      const bool after = demands[u] > demands[v] ||
                         (demands[u] == demands[v] && ids[u] > ids[v]);
      if (!after) break;
      order[j] = u;
      --j;
    }
    order[j] = v;
  }
  double remaining = capacity;
  std::size_t left = n;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = order[j];
    const double share = std::min(demands[k], remaining / static_cast<double>(left));
    out[k] = share;
    remaining -= share;
    --left;
  }
}

DemandMap waterfill(double capacity, const DemandMap& demands) {
  std::vector<double> d;
  std::vector<OperatorId> ids;
  for (const auto& [id, v] : demands) {
    ids.push_back(id);
    d.push_back(v);
  }
  std::vector<double> alloc(d.size());
  std::vector<std::size_t> order(d.size());
  waterfill_into(capacity, d, ids, alloc, order);
  DemandMap out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], alloc[i]);
  return out;
}

TierAssignment assign_tiers(const DemandMap& bids, std::int64_t p) {
  std::vector<std::pair<OperatorId, double>> ranked(bids.begin(), bids.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  const auto winners = static_cast<std::size_t>(
      std::clamp<std::int64_t>(p, 0, static_cast<std::int64_t>(ranked.size())));
  TierAssignment out;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    (i < winners ? out.tier1 : out.tier2).insert(ranked[i].first);
  }
  return out;
}

}  // namespace specpart
