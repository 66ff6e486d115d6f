#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nettomo/estimators.hpp"
#include "nettomo/oed.hpp"
#include "nettomo/policies.hpp"
#include "nettomo/topology.hpp"

namespace nettomo {

enum class TopologySource { Star, Er, EdgeList };

struct TopologyConfig {
  TopologySource kind = TopologySource::Star;
  std::size_t links = 5;
  std::size_t nodes = 20;
  double edge_prob = 35.0 / 190.0;
  std::uint64_t seed = 1;
  std::string path;
};

enum class MuSource { Uniform, File, Fixed };

struct MuConfig {
  MuSource source = MuSource::Uniform;
  /// Uniform range; defaults depend on the probe mode when unset.
  double low = 0.0;
  double high = 0.0;
  bool range_set = false;
  std::vector<double> values;

  double effective_low(ProbeMode mode) const noexcept;
  double effective_high(ProbeMode mode) const noexcept;
};

struct SimConfig {
  TopologyConfig topology;
  ProbeMode probe_mode = ProbeMode::Unicast;
  /// 0-based node ids; empty means every node.
  std::vector<std::size_t> monitors;
  std::size_t max_probes = 0;
  MuConfig mu;
  std::int64_t horizon = 1000;
  std::size_t mc_runs = 1;
  std::size_t scenarios = 1;
  std::vector<PolicyConfig> policies;
  CriterionSpec criterion;
  /// 0 selects max(1, T / 500).
  std::int64_t metric_stride = 0;
  std::string output;
  std::uint64_t seed = 1;
  /// 0 selects the hardware concurrency.
  unsigned threads = 0;
  EstimatorOptions estimator;
  int allocator_iterations = 100;

  std::int64_t effective_stride() const noexcept;
};

/// Parses a JSON document. Unknown keys and bad values raise Configuration;
/// malformed JSON raises Parse. Relative edge-list paths resolve against
/// `base_dir` when it is nonempty.
SimConfig parse_config(const std::string& text, const std::string& base_dir = {});
SimConfig load_config_file(const std::string& path);

}  // namespace nettomo
