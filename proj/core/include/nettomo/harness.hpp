#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nettomo/config.hpp"
#include "nettomo/estimators.hpp"
#include "nettomo/oed.hpp"
#include "nettomo/policies.hpp"
#include "nettomo/probes.hpp"
#include "nettomo/topology.hpp"

namespace nettomo {

/// One network instance with its ground truth.
struct Scenario {
  std::size_t id = 0;
  Topology topology;
  ProbeSet probes;
  LinkParams mu;
  CriterionSpec criterion;
  Allocation phi_star;
  double f_star = 0.0;
};

/// Computes phi* (closed form, or Frank-Wolfe with 10^4 iterations) and F*.
Scenario make_scenario(Topology topology, ProbeSet probes, LinkParams mu, CriterionSpec criterion,
                       std::size_t id = 0);

/// Topology for scenario `id`; ER graphs are redrawn per scenario. `file_mu`
/// receives the edge list's mu column when requested.
Topology build_topology(const SimConfig& config, std::size_t id,
                        std::optional<std::vector<double>>* file_mu = nullptr);

/// Probe set implied by the config for a given topology.
ProbeSet build_probes(const SimConfig& config, const Topology& topology);

/// Topology, probes and mu for scenario `id`. ER graphs and uniform mu are
/// redrawn per scenario from the config seeds.
Scenario build_scenario(const SimConfig& config, std::size_t id);

struct RunOptions {
  std::int64_t horizon = 1000;
  std::int64_t stride = 1;
  EstimatorOptions estimator;
  int allocator_iterations = 100;
  std::uint64_t master_seed = 1;
  /// Keep every selected probe index in RunSeries::choices.
  bool record_choices = false;
};

RunOptions run_options(const SimConfig& config);

/// Metric traces of one (scenario, run, policy) cell.
struct RunSeries {
  std::string policy;
  std::size_t scenario = 0;
  std::size_t run = 0;
  std::vector<std::int64_t> t;
  std::vector<double> regret;
  std::vector<double> dist_actual;
  std::vector<double> dist_estimated;
  std::vector<double> mse;
  std::vector<std::int64_t> final_counts;
  std::int64_t refreshes = 0;
  std::vector<std::uint32_t> choices;
};

/// Recorded rounds: stride, 2 stride, ..., and always T.
std::vector<std::int64_t> recorded_rounds(std::int64_t horizon, std::int64_t stride);

RunSeries run_once(const Scenario& scenario, const PolicyConfig& policy, std::size_t policy_index,
                   std::size_t run_id, const RunOptions& opts);

struct MetricStats {
  double mean = 0.0;
  double std = 0.0;
};

struct AggregateRow {
  std::string policy;
  std::int64_t t = 0;
  MetricStats regret, dist_actual, dist_estimated, mse;
};

struct ScenarioRow {
  std::size_t scenario = 0;
  AggregateRow row;
};

struct PolicySummary {
  std::string name;
  AggregateRow final;
  /// Unset when the fit is undefined.
  std::optional<double> regret_slope;
  double mean_refreshes = 0.0;
};

struct ExperimentResult {
  std::vector<AggregateRow> aggregate;
  std::vector<ScenarioRow> scenarios;
  std::vector<PolicySummary> summary;
  /// Final-round regret of every cell, indexed [policy][scenario][run].
  std::vector<std::vector<std::vector<double>>> final_regret;
  /// Final-round mse of every cell, indexed [policy][scenario][run].
  std::vector<std::vector<std::vector<double>>> final_mse;
};

/// Mean over all runs of all scenarios; std is the pooled within-scenario
/// sample standard deviation (0 when every scenario has a single run). Any
/// infinite value makes both entries infinite.
MetricStats aggregate_metric(const std::vector<std::vector<double>>& by_scenario);

/// Reduces cells that all share one recorded grid, in a fixed order.
ExperimentResult aggregate_runs(const std::vector<std::string>& policy_names, std::size_t scenario_count,
                                std::size_t run_count, const std::vector<RunSeries>& cells);

/// Runs every (scenario, run, policy) cell on a thread pool and reduces.
/// Writes aggregate.csv, scenarios.csv and summary.json when config.output
/// is set.
ExperimentResult run_experiment(const SimConfig& config);

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_scenarios_csv(std::ostream& out, const std::vector<ScenarioRow>& rows);
void write_summary_json(std::ostream& out, const SimConfig& config, const ExperimentResult& result);
void write_outputs(const std::string& dir, const SimConfig& config, const ExperimentResult& result);

/// Least-squares slope of log(value) on log(t) over points with
/// t >= t_max / window. Throws InsufficientData with fewer than two usable
/// (finite, positive) points.
double fit_regret_slope(const std::vector<std::int64_t>& t, const std::vector<double>& values, double window = 10.0);

/// Reads an aggregate CSV and fits the regret slope of each policy.
std::vector<std::pair<std::string, double>> fit_slopes_from_csv(std::istream& in, double window = 10.0);

/// Shortest round-trip decimal, "inf" for +infinity.
std::string format_number(double v);

}  // namespace nettomo
