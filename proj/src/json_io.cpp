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

#include "specpart/json_io.hpp"

#include <fstream>
#include <sstream>

namespace specpart {
namespace {

template <typename T>
void read_opt(const Json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

ParamRange range_from(const Json& v) {
  if (!v.is_array() || v.size() != 2) throw InvalidInput("range must be [lo, hi]");
  return {v[0].get<double>(), v[1].get<double>()};
}

Json ids(const IdSet& s) { return Json(std::vector<OperatorId>(s.begin(), s.end())); }

template <typename V>
Json id_map(const std::map<OperatorId, V>& m) {
  Json out = Json::object();
  for (const auto& [id, v] : m) out[std::to_string(id)] = to_json(v);
  return out;
}

}  // namespace

ScenarioDocument scenario_from_json(const Json& doc) {
  ScenarioDocument out;
  try {
    if (doc.contains("market")) {
      const Json& mk = doc.at("market");
      auto& p = out.params;
      read_opt(mk, "m", p.m);
      read_opt(mk, "p", p.p);
      read_opt(mk, "t_slots", p.t_slots);
      read_opt(mk, "d_total", p.d_total);
      read_opt(mk, "phi", p.phi);
      read_opt(mk, "alpha_l", p.alpha_l);
      read_opt(mk, "alpha_u", p.alpha_u);
      if (mk.contains("osa")) p.osa = parse_osa(mk.at("osa").get<std::string>());
      if (mk.contains("bandwidth_hz") && !mk.at("bandwidth_hz").is_null()) {
        p.bandwidth_hz = mk.at("bandwidth_hz").get<double>();
      }
    }
    for (const Json& op : doc.at("operators")) {
      OperatorProfile prof;
      prof.id = op.at("id").get<OperatorId>();
      prof.mu_theta = op.at("mu_theta").get<double>();
      prof.sigma_theta = op.at("sigma_theta").get<double>();
      prof.revenue_slope = op.at("revenue_slope").get<double>();
      prof.revenue_cv = op.at("revenue_cv").get<double>();
      prof.rho = op.at("rho").get<double>();
      prof.omega = op.at("omega").get<double>();
      prof.mer_fraction = op.at("mer_fraction").get<double>();
      const std::string kind = op.value("kind", std::string("licensed"));
      if (kind == "licensed") {
        out.scenario.licensed_candidates.push_back(prof);
      } else if (kind == "unlicensed") {
        out.scenario.unlicensed_candidates.push_back(prof);
      } else {
        throw InvalidInput("unknown operator kind '" + kind + "'");
      }
    }
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed scenario document: ") + e.what());
  }
  out.scenario.validate();
  return out;
}

Json to_json(const MarketParams& params) {
  Json mk;
  mk["m"] = params.m;
  mk["p"] = params.p;
  mk["t_slots"] = params.t_slots;
  mk["d_total"] = params.d_total;
  mk["phi"] = params.phi;
  mk["alpha_l"] = params.alpha_l;
  mk["alpha_u"] = params.alpha_u;
  mk["osa"] = std::string(to_string(params.osa));
  mk["bandwidth_hz"] = params.bandwidth_hz ? Json(*params.bandwidth_hz) : Json(nullptr);
  return mk;
}

Json to_json(const OperatorProfile& profile, bool licensed) {
  Json op;
  op["id"] = profile.id;
  op["kind"] = licensed ? "licensed" : "unlicensed";
  op["mu_theta"] = profile.mu_theta;
  op["sigma_theta"] = profile.sigma_theta;
  op["revenue_slope"] = profile.revenue_slope;
  op["revenue_cv"] = profile.revenue_cv;
  op["rho"] = profile.rho;
  op["omega"] = profile.omega;
  op["mer_fraction"] = profile.mer_fraction;
  return op;
}

Json to_json(const MarketScenario& scenario, const MarketParams& params) {
  Json doc;
  doc["market"] = to_json(params);
  Json ops = Json::array();
  for (const auto& op : scenario.licensed_candidates) ops.push_back(to_json(op, true));
  for (const auto& op : scenario.unlicensed_candidates) ops.push_back(to_json(op, false));
  doc["operators"] = std::move(ops);
  return doc;
}

ScenarioGenSpec gen_spec_from_json(const Json& doc) {
  ScenarioGenSpec spec;
  try {
    read_opt(doc, "n_licensed", spec.n_licensed);
    read_opt(doc, "n_unlicensed", spec.n_unlicensed);
    read_opt(doc, "n_markets", spec.n_markets);
    read_opt(doc, "seed", spec.seed);
    read_opt(doc, "t_slots", spec.t_slots);
    read_opt(doc, "enforce_alpha_order", spec.enforce_alpha_order);
    if (doc.contains("ranges")) {
      const Json& r = doc.at("ranges");
      const std::pair<const char*, ParamRange*> fields[] = {
          {"mu_theta", &spec.mu_theta},         {"sigma_theta", &spec.sigma_theta},
          {"revenue_slope", &spec.revenue_slope}, {"revenue_cv", &spec.revenue_cv},
          {"rho", &spec.rho},                   {"omega", &spec.omega},
          {"mer_fraction", &spec.mer_fraction}, {"upsilon", &spec.upsilon},
          {"alpha_l", &spec.alpha_l},           {"alpha_u", &spec.alpha_u}};
      for (const auto& [name, target] : fields) {
        if (r.contains(name)) *target = range_from(r.at(name));
      }
    }
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed generation spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

Json to_json(const ScenarioGenSpec& spec) {
  Json doc;
  doc["n_licensed"] = spec.n_licensed;
  doc["n_unlicensed"] = spec.n_unlicensed;
  doc["n_markets"] = spec.n_markets;
  doc["seed"] = spec.seed;
  doc["t_slots"] = spec.t_slots;
  doc["enforce_alpha_order"] = spec.enforce_alpha_order;
  Json r;
  auto put = [&](const char* name, const ParamRange& range) {
    r[name] = Json::array({range.lo, range.hi});
  };
  put("mu_theta", spec.mu_theta);
  put("sigma_theta", spec.sigma_theta);
  put("revenue_slope", spec.revenue_slope);
  put("revenue_cv", spec.revenue_cv);
  put("rho", spec.rho);
  put("omega", spec.omega);
  put("mer_fraction", spec.mer_fraction);
  put("upsilon", spec.upsilon);
  put("alpha_l", spec.alpha_l);
  put("alpha_u", spec.alpha_u);
  doc["ranges"] = std::move(r);
  return doc;
}

Json to_json(const RunningStat& stat) {
  return Json{{"count", stat.count},
              {"mean", stat.mean},
              {"var", stat.var},
              {"se", stat.standard_error()}};
}

Json to_json(const McEstimates& estimates) {
  Json doc;
  doc["u_hat"] = to_json(estimates.u_hat);
  doc["u_op_hat"] = id_map(estimates.u_op_hat);
  doc["r_lc_hat"] = id_map(estimates.r_lc_hat);
  doc["converged"] = estimates.converged;
  doc["samples_used"] = estimates.samples_used;
  return doc;
}

Json to_json(const Stage2Solution& solution) {
  Json doc;
  doc["s_l"] = ids(solution.s_l);
  doc["s_u"] = ids(solution.s_u);
  doc["confused_at_convergence"] = ids(solution.confused_at_convergence);
  Json trace = Json::array();
  for (const auto& it : solution.trace) {
    trace.push_back(Json{{"joined_licensed", ids(it.joined_licensed)},
                         {"confused_licensed", ids(it.confused_licensed)},
                         {"joined_unlicensed", ids(it.joined_unlicensed)},
                         {"confused_unlicensed", ids(it.confused_unlicensed)}});
  }
  doc["trace"] = std::move(trace);
  return doc;
}

Json to_json(const Stage1Solution& solution) {
  Json doc;
  doc["m_star"] = solution.m_star;
  doc["p_star"] = solution.p_star;
  doc["s_l_star"] = ids(solution.s_l_star);
  doc["s_u_star"] = ids(solution.s_u_star);
  doc["u_star"] = solution.u_star;
  doc["u_star_se"] = solution.u_star_se;
  Json grid = Json::array();
  for (const auto& c : solution.grid) {
    grid.push_back(Json{{"m", c.m},
                        {"p", c.p},
                        {"u", c.u},
                        {"u_se", c.u_se},
                        {"s_l", ids(c.s_l)},
                        {"s_u", ids(c.s_u)},
                        {"converged", c.converged}});
  }
  doc["grid"] = std::move(grid);
  return doc;
}

Json to_json(const IncompleteSolution& solution) {
  Json doc;
  doc["regulator"] = to_json(solution.regulator);
  Json joins = Json::object();
  for (const auto& [id, j] : solution.joins) joins[std::to_string(id)] = j;
  doc["joins"] = std::move(joins);
  doc["s_l_true"] = ids(solution.s_l_true);
  doc["s_u_true"] = ids(solution.s_u_true);
  doc["u_true"] = solution.u_true;
  doc["u_true_se"] = solution.u_true_se;
  return doc;
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InvalidInput("'" + path + "': " + e.what());
  }
}

}  // namespace specpart
