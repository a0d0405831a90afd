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

#include "specpart/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "specpart/json_io.hpp"

namespace specpart {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double draw(CounterStream& stream, const ParamRange& range) {
  const double u = stream.next_uniform();
  if (range.lo == range.hi) return range.lo;
  return range.lo + (range.hi - range.lo) * u;
}

void check_range(const char* name, const ParamRange& r, double min, double max,
                 bool max_open) {
  const bool ok = std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi &&
                  r.lo >= min && (max_open ? r.hi < max : r.hi <= max);
  if (!ok) throw InvalidInput(std::string("invalid range for ") + name);
}

double mean_mu_theta(const MarketScenario& scenario) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto* group : {&scenario.licensed_candidates, &scenario.unlicensed_candidates}) {
    for (const auto& op : *group) {
      sum += op.mu_theta;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

Choice choice_of(const GridCell& cell) {
  return {cell.m, cell.p, cell.u, cell.u_se, cell.s_l.size() + cell.s_u.size()};
}

// First cell with strictly larger u among those accepted by `keep`.
const GridCell* best_where(const std::vector<GridCell>& cells,
                           const std::function<bool(const GridCell&)>& keep) {
  const GridCell* best = nullptr;
  for (const auto& c : cells) {
    if (!keep(c)) continue;
    if (best == nullptr || c.u > best->u) best = &c;
  }
  return best;
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
}

MarketParams market_params(const GeneratedMarket& market, OsaStrategy osa, int phi) {
  MarketParams params = market.params;
  params.osa = osa;
  params.phi = phi;
  params.m = 1;
  params.p = 0;
  return params;
}

GeneratedMarket homogeneous(std::size_t n_licensed, std::size_t n_unlicensed) {
  GeneratedMarket market;
  market.upsilon = 0.8;
  for (std::size_t i = 0; i < n_licensed + n_unlicensed; ++i) {
    OperatorProfile op;
    op.id = static_cast<OperatorId>(i + 1);
    op.mu_theta = 1.0;
    op.sigma_theta = 0.5;
    op.revenue_slope = 1.0;
    op.revenue_cv = 0.5;
    op.rho = 0.8;
    op.omega = 0.9;
    op.mer_fraction = 0.0;
    (i < n_licensed ? market.scenario.licensed_candidates
                    : market.scenario.unlicensed_candidates)
        .push_back(op);
  }
  market.params.t_slots = 52;
  market.params.d_total =
      market.upsilon * static_cast<double>(n_licensed + n_unlicensed);
  return market;
}

}  // namespace

void ScenarioGenSpec::validate() const {
  if (n_licensed + n_unlicensed == 0) throw InvalidInput("need at least one candidate");
  if (t_slots < 1) throw InvalidInput("t_slots must be >= 1");
  const double inf = INFINITY;
  check_range("mu_theta", mu_theta, 0.0, inf, false);
  check_range("sigma_theta", sigma_theta, 0.0, inf, false);
  if (!(sigma_theta.lo > 0.0)) throw InvalidInput("sigma_theta must be > 0");
  check_range("revenue_slope", revenue_slope, 0.0, inf, false);
  if (!(revenue_slope.lo > 0.0)) throw InvalidInput("revenue_slope must be > 0");
  check_range("revenue_cv", revenue_cv, 0.0, inf, false);
  check_range("rho", rho, 0.0, 1.0, true);
  check_range("omega", omega, 0.0, 1.0, true);
  check_range("mer_fraction", mer_fraction, 0.0, 1.0, false);
  check_range("upsilon", upsilon, 0.0, inf, false);
  if (!(upsilon.lo > 0.0)) throw InvalidInput("upsilon must be > 0");
  check_range("alpha_l", alpha_l, 0.0, 1.0, false);
  check_range("alpha_u", alpha_u, 0.0, 1.0, false);
}

std::vector<GeneratedMarket> generate_markets(const ScenarioGenSpec& spec) {
  spec.validate();
  std::vector<GeneratedMarket> out;
  out.reserve(spec.n_markets);
  const std::size_t n = spec.n_licensed + spec.n_unlicensed;
  for (std::size_t i = 0; i < spec.n_markets; ++i) {
    CounterStream stream(derive_key(spec.seed, i));
    GeneratedMarket market;
    market.index = i;
    double sum_mu = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      OperatorProfile op;
      op.id = static_cast<OperatorId>(k + 1);
      op.mu_theta = draw(stream, spec.mu_theta);
      op.sigma_theta = draw(stream, spec.sigma_theta);
      op.revenue_slope = draw(stream, spec.revenue_slope);
      op.revenue_cv = draw(stream, spec.revenue_cv);
      op.rho = draw(stream, spec.rho);
      op.omega = draw(stream, spec.omega);
      op.mer_fraction = draw(stream, spec.mer_fraction);
      sum_mu += op.mu_theta;
      (k < spec.n_licensed ? market.scenario.licensed_candidates
                           : market.scenario.unlicensed_candidates)
          .push_back(op);
    }
    market.upsilon = draw(stream, spec.upsilon);
    double a_l = draw(stream, spec.alpha_l);
    double a_u = draw(stream, spec.alpha_u);
    if (spec.enforce_alpha_order && a_l > a_u) std::swap(a_l, a_u);
    market.params.t_slots = spec.t_slots;
    market.params.d_total = market.upsilon * sum_mu;
    market.params.alpha_l = a_l;
    market.params.alpha_u = a_u;
    out.push_back(std::move(market));
  }
  return out;
}

GeneratedMarket homogeneous_licensed_market() { return homogeneous(8, 0); }

GeneratedMarket mixed_market() {
  GeneratedMarket market = homogeneous(4, 4);
  market.params.alpha_u = 0.9;
  return market;
}

std::string_view to_string(BenchmarkMode mode) {
  switch (mode) {
    case BenchmarkMode::kFixedP: return "fixed-p";
    case BenchmarkMode::kFixedM: return "fixed-m";
    case BenchmarkMode::kMaxEntrants: return "max-entrants";
  }
  return "fixed-p";
}

BenchmarkMode parse_benchmark_mode(std::string_view text) {
  if (text == "fixed-p" || text == "fixed_p") return BenchmarkMode::kFixedP;
  if (text == "fixed-m" || text == "fixed_m") return BenchmarkMode::kFixedM;
  if (text == "max-entrants" || text == "max_entrants") return BenchmarkMode::kMaxEntrants;
  throw InvalidInput("unknown benchmark mode '" + std::string(text) + "'");
}

std::vector<BenchmarkRow> compare_market_all(const GeneratedMarket& market,
                                             const BenchmarkOptions& options,
                                             MarketEvaluator& evaluator) {
  const MarketScenario& scenario = market.scenario;
  const MarketParams params = market_params(market, options.osa, options.phi);
  const std::int64_t m_max =
      options.m_max > 0 ? options.m_max : default_m_max(scenario, params.d_total);
  const Stage1Solution joint =
      solve_stage1(scenario, params, evaluator, m_max, options.threads);
  const GridCell* opt = joint.cell(joint.m_star, joint.p_star);
  const auto n_licensed = static_cast<std::int64_t>(scenario.licensed_candidates.size());

  auto extra_cells = [&](std::int64_t m, std::int64_t p_lo, std::int64_t p_hi) {
    std::vector<GridCell> cells;
    for (std::int64_t p = p_lo; p <= p_hi; ++p) {
      MarketParams at = params;
      at.m = m;
      at.p = p;
      cells.push_back(evaluate_cell(scenario, at, evaluator));
    }
    return cells;
  };

  std::vector<BenchmarkRow> rows;
  for (BenchmarkMode mode :
       {BenchmarkMode::kFixedP, BenchmarkMode::kFixedM, BenchmarkMode::kMaxEntrants}) {
    std::vector<GridCell> extra;
    const GridCell* sub = nullptr;
    switch (mode) {
      case BenchmarkMode::kFixedP:
        sub = best_where(joint.grid, [&](const GridCell& c) { return c.p == n_licensed; });
        if (sub == nullptr) {
          extra = extra_cells(n_licensed, n_licensed, n_licensed);
          sub = &extra.front();
        }
        break;
      case BenchmarkMode::kFixedM: {
        const double theta = mean_mu_theta(scenario);
        const auto m = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::floor(params.d_total / theta)));
        if (m <= m_max) {
          sub = best_where(joint.grid, [&](const GridCell& c) { return c.m == m; });
        } else {
          extra = extra_cells(m, 0, std::min(n_licensed, m));
          sub = best_where(extra, [](const GridCell&) { return true; });
        }
        break;
      }
      case BenchmarkMode::kMaxEntrants:
        for (const auto& c : joint.grid) {
          const std::size_t n = c.s_l.size() + c.s_u.size();
          const std::size_t best_n = sub ? sub->s_l.size() + sub->s_u.size() : 0;
          if (sub == nullptr || n > best_n || (n == best_n && c.u > sub->u)) sub = &c;
        }
        break;
    }
    BenchmarkRow row;
    row.market_index = market.index;
    row.mode = mode;
    row.osa = options.osa;
    row.phi = options.phi;
    row.d_total = params.d_total;
    row.optimum = choice_of(*opt);
    row.suboptimum = choice_of(*sub);
    row.u_opt = opt->u;
    row.u_subopt = sub->u;
    row.delta_u_pct = 100.0 * (row.u_opt - row.u_subopt) / params.d_total;
    const bool same_cell = opt->m == sub->m && opt->p == sub->p;
    row.noise_band = same_cell ? 0.0 : 3.0 * std::hypot(opt->u_se, sub->u_se);
    rows.push_back(row);
  }
  return rows;
}

BenchmarkRow compare_market(const GeneratedMarket& market, BenchmarkMode mode,
                            const BenchmarkOptions& options, MarketEvaluator& evaluator) {
  for (auto& row : compare_market_all(market, options, evaluator)) {
    if (row.mode == mode) return row;
  }
  throw Error("benchmark mode missing");
}

std::vector<BenchmarkRow> run_benchmark(const std::vector<GeneratedMarket>& markets,
                                        BenchmarkMode mode, const McConfig& config,
                                        const BenchmarkOptions& options) {
  std::vector<BenchmarkRow> rows(markets.size());
  BenchmarkOptions inner = options;
  inner.threads = 1;
  parallel_for(markets.size(), options.threads, [&](std::size_t i) {
    MonteCarloEvaluator evaluator(config);
    rows[i] = compare_market(markets[i], mode, inner, evaluator);
  });
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.market_index < b.market_index;
  });
  return rows;
}

std::string_view to_string(SweepKind kind) {
  return kind == SweepKind::kAlphaJoint ? "alpha-joint" : "alpha-l";
}

SweepKind parse_sweep_kind(std::string_view text) {
  if (text == "alpha-joint" || text == "alpha_joint") return SweepKind::kAlphaJoint;
  if (text == "alpha-l" || text == "alpha_l_only" || text == "alpha-l-only") {
    return SweepKind::kAlphaLOnly;
  }
  throw InvalidInput("unknown sweep kind '" + std::string(text) + "'");
}

std::vector<SweepRow> run_sweep(const GeneratedMarket& base, SweepKind kind,
                                const std::vector<double>& grid,
                                const McConfig& config, const SweepOptions& options) {
  if (grid.empty()) throw InvalidInput("sweep grid is empty");
  const std::int64_t m_max = options.m_max > 0
                                 ? options.m_max
                                 : default_m_max(base.scenario, base.params.d_total);
  MonteCarloEvaluator evaluator(config);
  std::vector<SweepRow> rows;
  for (double alpha : grid) {
    MarketParams params = market_params(base, options.osa, options.phi);
    params.alpha_l = alpha;
    params.alpha_u = kind == SweepKind::kAlphaJoint ? alpha : options.fixed_alpha_u;
    const Stage1Solution sol =
        solve_stage1(base.scenario, params, evaluator, m_max, options.threads);
    SweepRow row;
    row.alpha = alpha;
    row.alpha_l = params.alpha_l;
    row.alpha_u = params.alpha_u;
    row.m_star = sol.m_star;
    row.p_star = sol.p_star;
    row.unlicensed_ratio =
        static_cast<double>(sol.m_star - sol.p_star) / static_cast<double>(sol.m_star);
    row.u_star = sol.u_star;
    row.u_star_se = sol.u_star_se;
    rows.push_back(row);
  }
  return rows;
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<CdfPoint> out;
  const auto n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

OutputFormat parse_format(std::string_view text) {
  if (text == "csv") return OutputFormat::kCsv;
  if (text == "json") return OutputFormat::kJson;
  throw InvalidInput("unknown format '" + std::string(text) + "'");
}

void write_benchmark(std::ostream& os, const std::vector<BenchmarkRow>& rows,
                     OutputFormat format) {
  if (format == OutputFormat::kCsv) {
    os << "market_index,u_opt,u_subopt,delta_u_pct,osa,phi\n";
    for (const auto& r : rows) {
      os << r.market_index << ',' << num(r.u_opt) << ',' << num(r.u_subopt) << ','
         << num(r.delta_u_pct) << ',' << to_string(r.osa) << ',' << r.phi << '\n';
    }
    return;
  }
  Json doc = Json::array();
  for (const auto& r : rows) {
    auto choice = [](const Choice& c) {
      return Json{{"m", c.m}, {"p", c.p}, {"u", c.u}, {"u_se", c.u_se},
                  {"entrants", c.entrants}};
    };
    doc.push_back(Json{{"market_index", r.market_index},
                       {"mode", std::string(to_string(r.mode))},
                       {"u_opt", r.u_opt},
                       {"u_subopt", r.u_subopt},
                       {"delta_u_pct", r.delta_u_pct},
                       {"osa", std::string(to_string(r.osa))},
                       {"phi", r.phi},
                       {"d_total", r.d_total},
                       {"noise_band", r.noise_band},
                       {"significant", r.significant()},
                       {"optimum", choice(r.optimum)},
                       {"suboptimum", choice(r.suboptimum)}});
  }
  os << doc.dump(2) << '\n';
}

void write_cdf(std::ostream& os, const std::vector<CdfPoint>& cdf, OutputFormat format) {
  if (format == OutputFormat::kCsv) {
    os << "value,cumulative_probability\n";
    for (const auto& p : cdf) os << num(p.value) << ',' << num(p.cumulative_probability) << '\n';
    return;
  }
  Json doc = Json::array();
  for (const auto& p : cdf) {
    doc.push_back(Json{{"value", p.value}, {"cumulative_probability", p.cumulative_probability}});
  }
  os << doc.dump(2) << '\n';
}

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows, SweepKind kind,
                 OutputFormat format) {
  if (format == OutputFormat::kCsv) {
    os << "kind,alpha,alpha_l,alpha_u,m_star,p_star,unlicensed_ratio,u_star,u_star_se\n";
    for (const auto& r : rows) {
      os << to_string(kind) << ',' << num(r.alpha) << ',' << num(r.alpha_l) << ','
         << num(r.alpha_u) << ',' << r.m_star << ',' << r.p_star << ','
         << num(r.unlicensed_ratio) << ',' << num(r.u_star) << ',' << num(r.u_star_se)
         << '\n';
    }
    return;
  }
  Json doc = Json::array();
  for (const auto& r : rows) {
    doc.push_back(Json{{"kind", std::string(to_string(kind))},
                       {"alpha", r.alpha},
                       {"alpha_l", r.alpha_l},
                       {"alpha_u", r.alpha_u},
                       {"m_star", r.m_star},
                       {"p_star", r.p_star},
                       {"unlicensed_ratio", r.unlicensed_ratio},
                       {"u_star", r.u_star},
                       {"u_star_se", r.u_star_se}});
  }
  os << doc.dump(2) << '\n';
}

void write_markets(std::ostream& os, const std::vector<GeneratedMarket>& markets,
                   OutputFormat format) {
  if (format == OutputFormat::kCsv) {
    os << "market_index,id,kind,mu_theta,sigma_theta,revenue_slope,revenue_cv,rho,"
          "omega,mer_fraction,upsilon,d_total,alpha_l,alpha_u,t_slots\n";
    for (const auto& m : markets) {
      for (const auto* group :
           {&m.scenario.licensed_candidates, &m.scenario.unlicensed_candidates}) {
        const bool licensed = group == &m.scenario.licensed_candidates;
        for (const auto& op : *group) {
          os << m.index << ',' << op.id << ',' << (licensed ? "licensed" : "unlicensed")
             << ',' << num(op.mu_theta) << ',' << num(op.sigma_theta) << ','
             << num(op.revenue_slope) << ',' << num(op.revenue_cv) << ',' << num(op.rho)
             << ',' << num(op.omega) << ',' << num(op.mer_fraction) << ','
             << num(m.upsilon) << ',' << num(m.params.d_total) << ','
             << num(m.params.alpha_l) << ',' << num(m.params.alpha_u) << ','
             << m.params.t_slots << '\n';
        }
      }
    }
    return;
  }
  Json doc = Json::array();
  for (const auto& m : markets) {
    Json item = to_json(m.scenario, m.params);
    item["market_index"] = m.index;
    item["upsilon"] = m.upsilon;
    doc.push_back(std::move(item));
  }
  os << doc.dump(2) << '\n';
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace specpart
