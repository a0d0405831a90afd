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

#include <cstddef>
#include <map>
#include <set>
#include <span>

#include "specpart/market_model.hpp"

namespace specpart {

using IdSet = std::set<OperatorId>;
using DemandMap = std::map<OperatorId, double>;

struct TierAssignment {
  IdSet tier1;
  IdSet tier2;
};

struct SlotAllocation {
  DemandMap served_licensed;
  DemandMap served_opportunistic;
};

// Capacity a licensed channel leaves for opportunistic use when its Tier-1
// holder has demand d.
double residual_capacity(double d, const MarketParams& params);

// Demand that must be served opportunistically.
double modified_demand(double x, bool is_tier1, const MarketParams& params);

// Opportunistic pool for one slot: unlicensed channels plus the residual of
// every Tier-1 licensed channel. Licensed channels with no interested
// licensee count as unlicensed.
double opportunistic_capacity(const DemandMap& tier1_demands,
                              std::size_t n_interested_licensed,
                              const MarketParams& params);

// Max-min fair waterfilling. Operators are visited in ascending order of
// (demand, id); each receives min(demand, remaining / operators_left).
DemandMap waterfill(double capacity, const DemandMap& demands);

// Allocation-free form used by the sampler. `order` is scratch space of the
// same length as `demands` and is left holding the visiting order.
void waterfill_into(double capacity, std::span<const double> demands,
                    std::span<const OperatorId> ids, std::span<double> out,
                    std::span<std::size_t> order);

// The min(P, |bids|) highest bids win a licensed channel; equal bids go to
// the lower id. tier2 is filled with the remaining bidders.
TierAssignment assign_tiers(const DemandMap& bids, std::int64_t p);

// Number of licensed channels that can actually be leased.
inline std::int64_t effective_licensed(std::size_t n_interested_licensed,
                                       const MarketParams& params) {
  return std::min<std::int64_t>(static_cast<std::int64_t>(n_interested_licensed),
                                params.p);
}

}  // namespace specpart
