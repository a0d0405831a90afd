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

#include <string>

#include <json.hpp>

#include "specpart/experiments.hpp"
#include "specpart/market_model.hpp"
#include "specpart/monte_carlo.hpp"
#include "specpart/stackelberg.hpp"

namespace specpart {

using Json = nlohmann::ordered_json;

// Scenario documents:
//   {"market": {"m", "p", "t_slots", "d_total", "phi", "alpha_l", "alpha_u",
//               "osa", "bandwidth_hz"},
//    "operators": [{"id", "kind": "licensed" | "unlicensed", "mu_theta",
//                   "sigma_theta", "revenue_slope", "revenue_cv", "rho",
//                   "omega", "mer_fraction"}, ...]}
// Missing market fields keep their MarketParams defaults.
struct ScenarioDocument {
  MarketScenario scenario;
  MarketParams params;
};

ScenarioDocument scenario_from_json(const Json& doc);
Json to_json(const MarketScenario& scenario, const MarketParams& params);
Json to_json(const MarketParams& params);
Json to_json(const OperatorProfile& profile, bool licensed);

// Generation specs use the ScenarioGenSpec field names; ranges are [lo, hi].
ScenarioGenSpec gen_spec_from_json(const Json& doc);
Json to_json(const ScenarioGenSpec& spec);

Json to_json(const RunningStat& stat);
Json to_json(const McEstimates& estimates);
Json to_json(const Stage2Solution& solution);
Json to_json(const Stage1Solution& solution);
Json to_json(const IncompleteSolution& solution);

// Reads and parses a JSON file; errors name the path.
Json load_json(const std::string& path);

}  // namespace specpart
