#include "nettomo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "nettomo/error.hpp"
#include "nettomo/rng.hpp"

namespace nettomo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMuStream = ~std::uint64_t{0};

Allocation true_optimum(const ProbeSet& probes, const Eigen::VectorXd& mu, const CriterionSpec& criterion) {
  return Allocator(probes, criterion, 100, 10000)(mu);
}

std::size_t cell_index(std::size_t p, std::size_t s, std::size_t r, std::size_t S, std::size_t R) {
  return (p * S + s) * R + r;
}

}  // namespace

Scenario make_scenario(Topology topology, ProbeSet probes, LinkParams mu, CriterionSpec criterion, std::size_t id) {
  if (mu.size() != probes.link_count()) throw Error(ErrorKind::Configuration, "mu length does not match the link count");
  auto phi_star = true_optimum(probes, mu.values(), criterion);
  const double f_star = criterion_value(mu.values(), phi_star.values(), probes, criterion);
  return Scenario{id, std::move(topology), std::move(probes), std::move(mu), criterion, std::move(phi_star), f_star};
}

ProbeSet build_probes(const SimConfig& config, const Topology& topology) {
  if (config.probe_mode == ProbeMode::RIMulticast) return ri_multicast_probes(topology);
  if (topology.kind() == TopologyKind::Star && topology.link_count() >= 3) return canonical_star_unicast_probes(topology);
  std::vector<std::size_t> monitors = config.monitors;
  if (monitors.empty()) {
    monitors.resize(topology.node_count());
    for (std::size_t v = 0; v < monitors.size(); ++v) monitors[v] = v;
  }
  return general_unicast_probes(topology, monitors, config.max_probes);
}

Topology build_topology(const SimConfig& config, std::size_t id, std::optional<std::vector<double>>* file_mu) {
  const auto& tc = config.topology;
  switch (tc.kind) {
    case TopologySource::Star:
      return build_star(tc.links);
    case TopologySource::Er:
      return build_er(tc.nodes, tc.edge_prob, mix64(tc.seed ^ mix64(id + 1)));
    case TopologySource::EdgeList: {
      auto loaded = load_edge_list_file(tc.path);
      if (file_mu != nullptr) *file_mu = std::move(loaded.mu);
      return std::move(loaded.topology);
    }
  }
  throw Error(ErrorKind::Internal, "unknown topology source");
}

Scenario build_scenario(const SimConfig& config, std::size_t id) {
  std::optional<std::vector<double>> file_mu;
  auto topology = build_topology(config, id, &file_mu);
  auto probes = build_probes(config, topology);
  const auto L = topology.link_count();

  std::vector<double> mu;
  switch (config.mu.source) {
    case MuSource::Uniform: {
      const double lo = config.mu.effective_low(config.probe_mode);
      const double hi = config.mu.effective_high(config.probe_mode);
      RngStream rng(config.seed, StreamKey{id, kMuStream, 0});
      mu.resize(L);
      for (auto& v : mu) v = std::min(lo + (hi - lo) * rng.uniform(), std::nextafter(1.0, 0.0));
      break;
    }
    case MuSource::File:
      if (!file_mu) throw Error(ErrorKind::Configuration, "edge list has no mu column");
      mu = *file_mu;
      break;
    case MuSource::Fixed:
      if (config.mu.values.size() != L) throw Error(ErrorKind::Configuration, "fixed mu length does not match the link count");
      mu = config.mu.values;
      break;
  }
  if (config.horizon < static_cast<std::int64_t>(probes.size())) {
    throw Error(ErrorKind::Configuration, "horizon is shorter than the number of probes");
  }
  return make_scenario(std::move(topology), std::move(probes), LinkParams(std::move(mu)), config.criterion, id);
}

RunOptions run_options(const SimConfig& config) {
  RunOptions o;
  o.horizon = config.horizon;
  o.stride = config.effective_stride();
  o.estimator = config.estimator;
  o.allocator_iterations = config.allocator_iterations;
  o.master_seed = config.seed;
  return o;
}

std::vector<std::int64_t> recorded_rounds(std::int64_t horizon, std::int64_t stride) {
  if (stride < 1) throw Error(ErrorKind::InvalidArgument, "stride must be positive");
  std::vector<std::int64_t> out;
  for (std::int64_t t = stride; t <= horizon; t += stride) out.push_back(t);
  if (out.empty() || out.back() != horizon) out.push_back(horizon);
  return out;
}

RunSeries run_once(const Scenario& scenario, const PolicyConfig& policy_config, std::size_t policy_index,
                   std::size_t run_id, const RunOptions& opts) {
  const auto& probes = scenario.probes;
  const auto M = probes.size();
  const auto L = probes.link_count();
  const Allocator allocator(probes, scenario.criterion, opts.allocator_iterations);
  PolicyContext ctx;
  ctx.probes = &probes;
  ctx.allocator = &allocator;
  ctx.estimator = opts.estimator;
  ctx.horizon = opts.horizon;
  ctx.true_optimum = &scenario.phi_star;
  auto policy = make_policy(policy_config, ctx);

  const Objective objective(probes, scenario.mu.values(), scenario.criterion.kind);
  TallyState tally(probes.mode, M, L);
  RngStream rng(opts.master_seed, StreamKey{scenario.id, run_id, policy_index});

  RunSeries series;
  series.policy = policy_config.name.empty() ? default_policy_name(policy_config) : policy_config.name;
  series.scenario = scenario.id;
  series.run = run_id;
  const auto rounds = recorded_rounds(opts.horizon, opts.stride);
  series.t = rounds;
  series.regret.reserve(rounds.size());
  series.dist_actual.reserve(rounds.size());
  series.dist_estimated.reserve(rounds.size());
  series.mse.reserve(rounds.size());
  if (opts.record_choices) series.choices.reserve(static_cast<std::size_t>(opts.horizon));

  std::optional<Allocation> side_estimate;
  std::vector<std::uint8_t> outcome;
  Eigen::VectorXd phi_t(static_cast<Eigen::Index>(M));
  std::size_t next = 0;
  for (std::int64_t t = 1; t <= opts.horizon; ++t) {
    const auto m = policy->select(t, tally, rng);
    if (m >= M) throw Error(ErrorKind::Internal, "policy returned an invalid probe index");
    perform_probe(probes, m, scenario.mu, rng, outcome);
    tally.record(m, outcome);
    if (opts.record_choices) series.choices.push_back(static_cast<std::uint32_t>(m));
    if (t != rounds[next]) continue;
    ++next;

    const double td = static_cast<double>(t);
    for (std::size_t k = 0; k < M; ++k) phi_t[static_cast<Eigen::Index>(k)] = static_cast<double>(tally.samples(k)) / td;
    const double f = objective.value(phi_t);
    series.regret.push_back(std::isfinite(f) ? f - scenario.f_star : kInf);
    series.dist_actual.push_back((scenario.phi_star.values() - phi_t).norm());

    std::optional<Eigen::VectorXd> mu_hat;
    try {
      mu_hat = link_mle(tally, probes, opts.estimator).mu_hat;
    } catch (const Error&) {
    }
    series.mse.push_back(mu_hat ? (*mu_hat - scenario.mu.values()).squaredNorm() : kInf);

    double dist_est = kInf;
    if (const auto& est = policy->estimated_optimum()) {
      dist_est = (scenario.phi_star.values() - est->values()).norm();
    } else if (mu_hat) {
      try {
        side_estimate = allocator(*mu_hat, side_estimate ? &*side_estimate : nullptr);
        dist_est = (scenario.phi_star.values() - side_estimate->values()).norm();
      } catch (const Error&) {
      }
    }
    series.dist_estimated.push_back(dist_est);
  }
  series.final_counts = tally.sample_counts();
  series.refreshes = policy->refreshes();
  return series;
}

MetricStats aggregate_metric(const std::vector<std::vector<double>>& by_scenario) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& runs : by_scenario) {
    for (double v : runs) {
      if (!std::isfinite(v)) return {kInf, kInf};
      sum += v;
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "nothing to aggregate");
  double ss = 0.0;
  std::size_t dof = 0;
  for (const auto& runs : by_scenario) {
    if (runs.size() < 2) continue;
    double m = 0.0;
    for (double v : runs) m += v;
    m /= static_cast<double>(runs.size());
    for (double v : runs) ss += (v - m) * (v - m);
    dof += runs.size() - 1;
  }
  return {sum / static_cast<double>(n), dof > 0 ? std::sqrt(ss / static_cast<double>(dof)) : 0.0};
}

ExperimentResult aggregate_runs(const std::vector<std::string>& policy_names, std::size_t scenario_count,
                                std::size_t run_count, const std::vector<RunSeries>& cells) {
  const auto P = policy_names.size();
  const auto S = scenario_count;
  const auto R = run_count;
  if (cells.size() != P * S * R || cells.empty()) throw Error(ErrorKind::InvalidArgument, "cell count mismatch");
  const auto& grid = cells.front().t;
  for (const auto& c : cells) {
    if (c.t != grid) throw Error(ErrorKind::InvalidArgument, "cells use different recorded rounds");
  }

  using Member = const std::vector<double> RunSeries::*;
  const Member members[4] = {&RunSeries::regret, &RunSeries::dist_actual, &RunSeries::dist_estimated, &RunSeries::mse};

  ExperimentResult result;
  result.final_regret.assign(P, std::vector<std::vector<double>>(S, std::vector<double>(R)));
  result.final_mse = result.final_regret;
  std::vector<std::vector<double>> buf(S, std::vector<double>(R));
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      AggregateRow row;
      row.policy = policy_names[p];
      row.t = grid[k];
      MetricStats* targets[4] = {&row.regret, &row.dist_actual, &row.dist_estimated, &row.mse};
      std::vector<AggregateRow> per_scenario(S, row);
      for (int q = 0; q < 4; ++q) {
        for (std::size_t s = 0; s < S; ++s) {
          for (std::size_t r = 0; r < R; ++r) buf[s][r] = (cells[cell_index(p, s, r, S, R)].*members[q])[k];
          MetricStats* st[4] = {&per_scenario[s].regret, &per_scenario[s].dist_actual,
                                &per_scenario[s].dist_estimated, &per_scenario[s].mse};
          *st[q] = aggregate_metric({buf[s]});
        }
        *targets[q] = aggregate_metric(buf);
      }
      result.aggregate.push_back(row);
      for (std::size_t s = 0; s < S; ++s) result.scenarios.push_back(ScenarioRow{cells[cell_index(p, s, 0, S, R)].scenario, per_scenario[s]});
    }
    PolicySummary summary;
    summary.name = policy_names[p];
    summary.final = result.aggregate.back();
    std::vector<double> means;
    for (std::size_t k = 0; k < grid.size(); ++k) means.push_back(result.aggregate[p * grid.size() + k].regret.mean);
    try {
      summary.regret_slope = fit_regret_slope(grid, means);
    } catch (const Error&) {
    }
    double refreshes = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t r = 0; r < R; ++r) {
        const auto& c = cells[cell_index(p, s, r, S, R)];
        refreshes += static_cast<double>(c.refreshes);
        result.final_regret[p][s][r] = c.regret.back();
        result.final_mse[p][s][r] = c.mse.back();
      }
    }
    summary.mean_refreshes = refreshes / static_cast<double>(S * R);
    result.summary.push_back(std::move(summary));
  }
  return result;
}

ExperimentResult run_experiment(const SimConfig& config) {
  if (config.policies.empty()) throw Error(ErrorKind::Configuration, "no policies configured");
  std::vector<Scenario> scenarios;
  scenarios.reserve(config.scenarios);
  for (std::size_t s = 0; s < config.scenarios; ++s) scenarios.push_back(build_scenario(config, s));
  for (const auto& p : config.policies) {
    if (p.kind == PolicyKind::Opal || p.kind == PolicyKind::OpalLazy) {
      resolve_xi(p.xi, config.horizon, scenarios.front().probes.size());
    }
  }

  const auto P = config.policies.size();
  const auto S = config.scenarios;
  const auto R = config.mc_runs;
  const auto opts = run_options(config);
  std::vector<RunSeries> cells(P * S * R);

  unsigned workers = config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, cells.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const auto p = i / (S * R);
      const auto s = (i / R) % S;
      const auto r = i % R;
      try {
        cells[i] = run_once(scenarios[s], config.policies[p], p, r, opts);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cells.size());
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<std::string> names;
  for (const auto& p : config.policies) names.push_back(p.name.empty() ? default_policy_name(p) : p.name);
  auto result = aggregate_runs(names, S, R, cells);
  if (!config.output.empty()) write_outputs(config.output, config, result);
  return result;
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void write_stats(std::ostream& out, const AggregateRow& row) {
  for (const auto* m : {&row.regret, &row.dist_actual, &row.dist_estimated, &row.mse}) {
    out << ',' << format_number(m->mean) << ',' << format_number(m->std);
  }
  out << '\n';
}

constexpr const char* kMetricHeader =
    "regret_mean,regret_std,dist_act_mean,dist_act_std,dist_est_mean,dist_est_std,mse_mean,mse_std";

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

}  // namespace

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "policy,t," << kMetricHeader << '\n';
  for (const auto& row : rows) {
    out << row.policy << ',' << row.t;
    write_stats(out, row);
  }
}

void write_scenarios_csv(std::ostream& out, const std::vector<ScenarioRow>& rows) {
  out << "scenario,policy,t," << kMetricHeader << '\n';
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.row.policy << ',' << r.row.t;
    write_stats(out, r.row);
  }
}

void write_summary_json(std::ostream& out, const SimConfig& config, const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["T"] = config.horizon;
  j["mc_runs"] = config.mc_runs;
  j["scenarios"] = config.scenarios;
  j["seed"] = config.seed;
  auto& policies = j["policies"] = nlohmann::ordered_json::array();
  for (std::size_t p = 0; p < result.summary.size(); ++p) {
    const auto& s = result.summary[p];
    nlohmann::ordered_json entry;
    entry["name"] = s.name;
    if (p < config.policies.size()) entry["kind"] = to_string(config.policies[p].kind);
    entry["t"] = s.final.t;
    entry["regret_mean"] = json_number(s.final.regret.mean);
    entry["regret_std"] = json_number(s.final.regret.std);
    entry["dist_act_mean"] = json_number(s.final.dist_actual.mean);
    entry["dist_act_std"] = json_number(s.final.dist_actual.std);
    entry["dist_est_mean"] = json_number(s.final.dist_estimated.mean);
    entry["dist_est_std"] = json_number(s.final.dist_estimated.std);
    entry["mse_mean"] = json_number(s.final.mse.mean);
    entry["mse_std"] = json_number(s.final.mse.std);
    entry["regret_slope"] = s.regret_slope ? nlohmann::ordered_json(*s.regret_slope) : nlohmann::ordered_json();
    entry["mean_refreshes"] = s.mean_refreshes;
    policies.push_back(std::move(entry));
  }
  out << j.dump(2) << '\n';
}

void write_outputs(const std::string& dir, const SimConfig& config, const ExperimentResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + dir + ": " + ec.message());
  auto open = [&](const char* name) {
    const auto path = (std::filesystem::path(dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
    return std::make_pair(std::move(f), path);
  };
  auto check = [](std::ofstream& f, const std::string& path) {
    f.flush();
    if (!f) throw Error(ErrorKind::Io, "write failed for " + path);
  };
  {
    auto [f, path] = open("aggregate.csv");
    write_aggregate_csv(f, result.aggregate);
    check(f, path);
  }
  {
    auto [f, path] = open("scenarios.csv");
    write_scenarios_csv(f, result.scenarios);
    check(f, path);
  }
  {
    auto [f, path] = open("summary.json");
    write_summary_json(f, config, result);
    check(f, path);
  }
}

double fit_regret_slope(const std::vector<std::int64_t>& t, const std::vector<double>& values, double window) {
  if (t.size() != values.size()) throw Error(ErrorKind::InvalidArgument, "length mismatch");
  if (t.empty()) throw Error(ErrorKind::InsufficientData, "empty series");
  if (!(window > 1.0)) throw Error(ErrorKind::InvalidArgument, "window must exceed 1");
  const double t_max = static_cast<double>(*std::max_element(t.begin(), t.end()));
  const double t_min = t_max / window;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ti = static_cast<double>(t[i]);
    if (ti < t_min || !(values[i] > 0.0) || !std::isfinite(values[i])) continue;
    const double x = std::log(ti), y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double nd = static_cast<double>(n);
  const double denom = nd * sxx - sx * sx;
  if (n < 2 || !(denom > 0.0)) throw Error(ErrorKind::InsufficientData, "not enough points to fit a slope");
  return (nd * sxy - sx * sy) / denom;
}

std::vector<std::pair<std::string, double>> fit_slopes_from_csv(std::istream& in, double window) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "empty CSV");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::Parse, "CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto c_policy = column("policy"), c_t = column("t"), c_regret = column("regret_mean");

  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<std::int64_t>, std::vector<double>>> series;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": wrong number of fields");
    char* end = nullptr;
    const auto t = std::strtoll(cells[c_t].c_str(), &end, 10);
    if (*end != '\0') throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad t");
    const double v = std::strtod(cells[c_regret].c_str(), &end);
    if (*end != '\0') throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad regret_mean");
    auto [it, fresh] = series.try_emplace(cells[c_policy]);
    if (fresh) order.push_back(cells[c_policy]);
    it->second.first.push_back(t);
    it->second.second.push_back(v);
  }
  std::vector<std::pair<std::string, double>> out;
  for (const auto& name : order) {
    const auto& [ts, vs] = series.at(name);
    out.emplace_back(name, fit_regret_slope(ts, vs, window));
  }
  return out;
}

}  // namespace nettomo
