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

#include "specpart/market_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <set>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace specpart {
namespace {

constexpr double kZRange = 40.0;
constexpr double kQuadTolerance = 1e-14;
constexpr unsigned kQuadMaxDepth = 20;

bool all_finite(std::initializer_list<double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

// Upper tail of the standard normal, P[Z > z].
double upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

template <typename F>
double integrate_std_normal(F&& g, double lo, double hi) {
  if (!(lo < hi)) return 0.0;
  auto integrand = [&](double z) { return g(z) * std_normal_pdf(z); };
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      integrand, lo, hi, kQuadMaxDepth, kQuadTolerance);
}

std::uint64_t fold(std::uint64_t h, double v) {
  return derive_key(h, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t fold(std::uint64_t h, std::uint64_t v) { return derive_key(h, v); }

}  // namespace

std::string_view to_string(OsaStrategy osa) {
  return osa == OsaStrategy::kOverlay ? "overlay" : "interweave";
}

OsaStrategy parse_osa(std::string_view text) {
  if (text == "overlay") return OsaStrategy::kOverlay;
  if (text == "interweave") return OsaStrategy::kInterweave;
  throw InvalidInput("unknown OSA strategy '" + std::string(text) + "'");
}

void OperatorProfile::validate() const {
  const std::string who = "operator " + std::to_string(id) + ": ";
  if (!all_finite({mu_theta, sigma_theta, revenue_slope, revenue_cv, rho, omega,
                   mer_fraction})) {
    throw InvalidInput(who + "non-finite parameter");
  }
  if (!(sigma_theta > 0.0)) throw InvalidInput(who + "sigma_theta must be > 0");
  if (!(revenue_slope > 0.0)) throw InvalidInput(who + "revenue_slope must be > 0");
  if (revenue_cv < 0.0) throw InvalidInput(who + "revenue_cv must be >= 0");
  if (rho < 0.0 || rho >= 1.0) throw InvalidInput(who + "rho must lie in [0, 1)");
  if (omega < 0.0 || omega >= 1.0) {
    throw InvalidInput(who + "omega must lie in [0, 1)");
  }
  if (mer_fraction < 0.0 || mer_fraction > 1.0) {
    throw InvalidInput(who + "mer_fraction must lie in [0, 1]");
  }
}

void MarketParams::validate() const {
  if (m < 1) throw InvalidInput("M must be >= 1");
  if (p < 0 || p > m) throw InvalidInput("P must lie in [0, M]");
  if (t_slots < 1) throw InvalidInput("T must be >= 1");
  if (!std::isfinite(d_total) || !(d_total > 0.0)) {
    throw InvalidInput("D must be finite and > 0");
  }
  if (phi != 0 && phi != 1) throw InvalidInput("phi must be 0 or 1");
  for (double a : {alpha_l, alpha_u}) {
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidInput("alphas must lie in [0, 1]");
  }
}

void MarketScenario::validate() const {
  std::set<OperatorId> seen;
  for (const auto* group : {&licensed_candidates, &unlicensed_candidates}) {
    for (const auto& op : *group) {
      op.validate();
      if (!seen.insert(op.id).second) {
        throw InvalidInput("operator id " + std::to_string(op.id) +
                           " appears more than once");
      }
    }
  }
}

const OperatorProfile& MarketScenario::profile(OperatorId id) const {
  for (const auto* group : {&licensed_candidates, &unlicensed_candidates}) {
    for (const auto& op : *group) {
      if (op.id == id) return op;
    }
  }
  throw InvalidInput("unknown operator id " + std::to_string(id));
}

bool MarketScenario::is_licensed_candidate(OperatorId id) const {
  return std::any_of(licensed_candidates.begin(), licensed_candidates.end(),
                     [id](const OperatorProfile& op) { return op.id == id; });
}

std::vector<OperatorId> MarketScenario::licensed_ids() const {
  std::vector<OperatorId> ids;
  for (const auto& op : licensed_candidates) ids.push_back(op.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<OperatorId> MarketScenario::unlicensed_ids() const {
  std::vector<OperatorId> ids;
  for (const auto& op : unlicensed_candidates) ids.push_back(op.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::uint64_t MarketScenario::digest() const {
  std::uint64_t h = 0x5ca1ab1e0ddba11ULL;
  for (const auto* group : {&licensed_candidates, &unlicensed_candidates}) {
    h = fold(h, static_cast<std::uint64_t>(group->size()));
    for (const auto& op : *group) {
      h = fold(h, static_cast<std::uint64_t>(op.id));
      for (double v : {op.mu_theta, op.sigma_theta, op.revenue_slope,
                       op.revenue_cv, op.rho, op.omega, op.mer_fraction}) {
        h = fold(h, v);
      }
    }
  }
  return h;
}

LicensedMoments licensed_served_moments(const OperatorProfile& profile,
                                        const MarketParams& params) {
  if (!all_finite({profile.mu_theta, profile.sigma_theta})) {
    throw InvalidInput("non-finite demand parameters");
  }
  if (!(profile.sigma_theta > 0.0)) throw InvalidInput("sigma_theta must be > 0");
  if (params.m < 1 || params.t_slots < 1) throw InvalidInput("invalid M or T");
  const double cap = params.channel_capacity();
  if (!std::isfinite(cap) || !(cap > 0.0)) throw InvalidInput("D/M must be > 0");

  const double mu = profile.mu_theta;
  const double sd = profile.sigma_theta;
  // Work in standardized coordinates so that arbitrarily narrow densities
  // stay resolvable: theta = mu + sd * z.
  const double z_zero = -mu / sd;
  const double z_cap = (cap - mu) / sd;
  const double lo = std::max(z_zero, -kZRange);
  const double hi = std::min(z_cap, kZRange);
  const double above_cap = upper_tail(z_cap);
  const double below_zero = upper_tail(-z_zero);

  auto theta = [&](double z) { return mu + sd * z; };

  const double mean =
      integrate_std_normal(theta, lo, hi) + cap * above_cap;

  const double var =
      integrate_std_normal(
          [&](double z) {
            const double d = theta(z) - mean;
            return d * d;
          },
          lo, hi) +
      (cap - mean) * (cap - mean) * above_cap + mean * mean * below_zero;

  // Cov(theta, served) = sd * E[z * served]; the theta-below-zero piece
  // contributes nothing because served demand is zero there.
  const double cov =
      sd * (integrate_std_normal([&](double z) { return z * theta(z); }, lo, hi) +
            cap * std_normal_pdf(z_cap));

  LicensedMoments out;
  out.t_slots = params.t_slots;
  out.mu_x_lc_slot = std::clamp(mean, 0.0, cap);
  out.sigma_x_lc_slot = std::sqrt(std::max(var, 0.0));
  out.mu_x_lc_epoch = out.mu_x_lc_slot * static_cast<double>(params.t_slots);
  out.sigma_x_lc_epoch =
      out.sigma_x_lc_slot * std::sqrt(static_cast<double>(params.t_slots));
  out.phi_k = std::max(cov, 0.0);
  return out;
}

std::optional<std::array<std::array<double, 3>, 3>> factor_psd3(
    const std::array<std::array<double, 3>, 3>& a) {
  const double trace = a[0][0] + a[1][1] + a[2][2];
  const double tol = 1e-12 * std::max(trace, 0.0);
  std::array<std::array<double, 3>, 3> l{};
  for (int j = 0; j < 3; ++j) {
    double d = a[j][j];
    for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (d > tol) {
      l[j][j] = std::sqrt(d);
      for (int i = j + 1; i < 3; ++i) {
        double s = a[i][j];
        for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
        l[i][j] = s / l[j][j];
      }
    } else {
      if (d < -tol) return std::nullopt;
      // Zero pivot: the remaining column must vanish too.
      for (int i = j + 1; i < 3; ++i) {
        double s = a[i][j];
        for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
        if (std::fabs(s) > std::sqrt(tol * std::max(a[i][i], 0.0)) + tol) {
          return std::nullopt;
        }
      }
    }
  }
  return l;
}

JointSamplerParams joint_sampler_params(const OperatorProfile& profile,
                                        [[maybe_unused]] const MarketParams& params,
                                        const LicensedMoments& moments) {
  JointSamplerParams out;
  const double mean_revenue = profile.revenue(moments.mu_x_lc_epoch);
  const double sd_revenue = profile.revenue_sd(moments.mu_x_lc_epoch);
  out.psi = {profile.mu_theta, mean_revenue, mean_revenue};

  double theta_revenue = 0.0;
  if (moments.sigma_x_lc_epoch > 0.0) {
    theta_revenue =
        profile.rho * sd_revenue / moments.sigma_x_lc_epoch * moments.phi_k;
  }
  const double rev_var = sd_revenue * sd_revenue;
  auto& s = out.sigma;
  s[0] = {profile.sigma_theta * profile.sigma_theta, theta_revenue,
          profile.omega * theta_revenue};
  s[1] = {theta_revenue, rev_var, profile.omega * rev_var};
  s[2] = {profile.omega * theta_revenue, profile.omega * rev_var, rev_var};

  if (auto l = factor_psd3(s)) {
    out.chol = *l;
    return out;
  }
  auto jittered = s;
  const double eps = 1e-12 * (s[0][0] + s[1][1] + s[2][2]) / 3.0;
  for (int i = 0; i < 3; ++i) jittered[i][i] += eps;
  if (auto l = factor_psd3(jittered)) {
    out.chol = *l;
    out.jittered = true;
    return out;
  }
  throw IllConditioned("covariance of (theta, revenue, bid) for operator " +
                       std::to_string(profile.id) +
                       " is not positive semidefinite");
}

JointDraw sample_joint(const JointSamplerParams& sampler, CounterStream& stream) {
  const double z0 = stream.next_normal();
  const double z1 = stream.next_normal();
  const double z2 = stream.next_normal();
  const auto& l = sampler.chol;
  return {sampler.psi[0] + l[0][0] * z0,
          sampler.psi[1] + l[1][0] * z0 + l[1][1] * z1,
          sampler.psi[2] + l[2][0] * z0 + l[2][1] * z1 + l[2][2] * z2};
}

double prob_negative_served(const LicensedMoments& moments) {
  if (moments.mu_x_lc_slot == 0.0) return 0.5;
  if (!(moments.sigma_x_lc_slot > 0.0)) return moments.mu_x_lc_slot > 0.0 ? 0.0 : 1.0;
  const double ratio = moments.mu_x_lc_slot *
                       std::sqrt(static_cast<double>(moments.t_slots)) /
                       (std::numbers::sqrt2 * moments.sigma_x_lc_slot);
  return 0.5 * std::erfc(ratio);
}

}  // namespace specpart
