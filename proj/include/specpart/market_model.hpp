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

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "specpart/rng.hpp"

namespace specpart {

using OperatorId = std::uint32_t;

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// The trivariate covariance could not be factored even after jitter.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

enum class OsaStrategy { kOverlay, kInterweave };

std::string_view to_string(OsaStrategy osa);
OsaStrategy parse_osa(std::string_view text);

// Everything that characterises one wireless operator. The revenue map is
// affine through the origin, h(mu) = revenue_slope * mu, and the minimum
// expected revenue is mer_fraction * h(mu_theta * T).
struct OperatorProfile {
  OperatorId id = 0;
  double mu_theta = 0.0;
  double sigma_theta = 1.0;
  double revenue_slope = 1.0;
  double revenue_cv = 0.0;
  double rho = 0.0;
  double omega = 0.0;
  double mer_fraction = 0.0;

  // Mean epoch revenue earned from mean epoch served demand.
  double revenue(double mean_served) const { return revenue_slope * mean_served; }
  double revenue_sd(double mean_served) const {
    return revenue_cv * revenue(mean_served);
  }
  double min_expected_revenue(std::int64_t t_slots) const {
    return mer_fraction * revenue(mu_theta * static_cast<double>(t_slots));
  }

  void validate() const;
  bool operator==(const OperatorProfile&) const = default;
};

struct MarketParams {
  std::int64_t m = 1;
  std::int64_t p = 0;
  std::int64_t t_slots = 52;
  double d_total = 1.0;
  int phi = 1;
  double alpha_l = 1.0;
  double alpha_u = 1.0;
  OsaStrategy osa = OsaStrategy::kOverlay;
  // Informational only; capacity is expressed through d_total.
  std::optional<double> bandwidth_hz;

  double channel_capacity() const { return d_total / static_cast<double>(m); }
  void validate() const;
  bool operator==(const MarketParams&) const = default;
};

struct MarketScenario {
  std::vector<OperatorProfile> licensed_candidates;
  std::vector<OperatorProfile> unlicensed_candidates;

  // Throws InvalidInput on overlapping or duplicate ids.
  void validate() const;
  const OperatorProfile& profile(OperatorId id) const;
  bool is_licensed_candidate(OperatorId id) const;
  std::vector<OperatorId> licensed_ids() const;
  std::vector<OperatorId> unlicensed_ids() const;
  std::size_t candidate_count() const {
    return licensed_candidates.size() + unlicensed_candidates.size();
  }
  // Stable 64-bit digest of every profile field, used for seeding and caching.
  std::uint64_t digest() const;
  bool operator==(const MarketScenario&) const = default;
};

// Per-slot and per-epoch moments of the demand served through a licensed
// channel, min(max(0, theta), D/M), plus its covariance with theta.
struct LicensedMoments {
  double mu_x_lc_slot = 0.0;
  double sigma_x_lc_slot = 0.0;
  double mu_x_lc_epoch = 0.0;
  double sigma_x_lc_epoch = 0.0;
  double phi_k = 0.0;
  std::int64_t t_slots = 1;
};

LicensedMoments licensed_served_moments(const OperatorProfile& profile,
                                        const MarketParams& params);

// Mean and factored covariance of (theta, licensed revenue, bid).
struct JointSamplerParams {
  std::array<double, 3> psi{};
  std::array<std::array<double, 3>, 3> sigma{};
  std::array<std::array<double, 3>, 3> chol{};
  bool jittered = false;
};

JointSamplerParams joint_sampler_params(const OperatorProfile& profile,
                                        const MarketParams& params,
                                        const LicensedMoments& moments);

// Lower-triangular factor of a 3x3 symmetric positive semidefinite matrix.
// Zero pivots are accepted when the rest of their column vanishes. Returns
// nullopt when the matrix is not PSD within a trace-relative tolerance.
std::optional<std::array<std::array<double, 3>, 3>> factor_psd3(
    const std::array<std::array<double, 3>, 3>& a);

struct JointDraw {
  double theta = 0.0;
  double r_lc = 0.0;
  double bid = 0.0;
};

JointDraw sample_joint(const JointSamplerParams& sampler, CounterStream& stream);

// Probability that the Gaussian epoch approximation of licensed served demand
// goes negative.
double prob_negative_served(const LicensedMoments& moments);

}  // namespace specpart
