#include "nettomo/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nettomo/error.hpp"

namespace nettomo {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::Configuration, msg); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where + " must be an object");
  for (const auto& item : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
      fail("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail("bad value for '" + std::string(key) + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

std::int64_t positive(const json& obj, const char* key, const std::string& where, std::int64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail("'" + std::string(key) + "' in " + where + " must be an integer");
  const auto n = v.get<std::int64_t>();
  if (n < 1) fail("'" + std::string(key) + "' in " + where + " must be positive");
  return n;
}

TopologyConfig parse_topology(const json& j, const std::string& base_dir) {
  const std::string where = "topology";
  check_keys(j, where, {"kind", "links", "nodes", "edge_prob", "seed", "path"});
  TopologyConfig t;
  const auto kind = get<std::string>(j, "kind", where);
  if (kind == "star") {
    t.kind = TopologySource::Star;
  } else if (kind == "er") {
    t.kind = TopologySource::Er;
  } else if (kind == "edge_list") {
    t.kind = TopologySource::EdgeList;
  } else {
    fail("unknown topology kind '" + kind + "'");
  }
  t.links = static_cast<std::size_t>(positive(j, "links", where, static_cast<std::int64_t>(t.links)));
  t.nodes = static_cast<std::size_t>(positive(j, "nodes", where, static_cast<std::int64_t>(t.nodes)));
  read_opt(j, "edge_prob", where, t.edge_prob);
  read_opt(j, "seed", where, t.seed);
  read_opt(j, "path", where, t.path);
  if (t.kind == TopologySource::EdgeList) {
    if (t.path.empty()) fail("edge_list topology needs a path");
    if (!base_dir.empty() && std::filesystem::path(t.path).is_relative()) {
      t.path = (std::filesystem::path(base_dir) / t.path).string();
    }
  }
  if (t.kind == TopologySource::Er && !(t.edge_prob > 0.0 && t.edge_prob < 1.0)) fail("edge_prob must lie in (0,1)");
  return t;
}

MuConfig parse_mu(const json& j) {
  const std::string where = "mu";
  check_keys(j, where, {"source", "low", "high", "values"});
  MuConfig mu;
  const auto source = get<std::string>(j, "source", where);
  if (source == "uniform") {
    mu.source = MuSource::Uniform;
  } else if (source == "file") {
    mu.source = MuSource::File;
  } else if (source == "fixed") {
    mu.source = MuSource::Fixed;
  } else {
    fail("unknown mu source '" + source + "'");
  }
  if (j.contains("low") != j.contains("high")) fail("mu needs both low and high");
  if (j.contains("low")) {
    mu.low = get<double>(j, "low", where);
    mu.high = get<double>(j, "high", where);
    mu.range_set = true;
    if (!(mu.low > 0.0 && mu.low < mu.high && mu.high <= 1.0)) fail("mu range must satisfy 0 < low < high <= 1");
  }
  read_opt(j, "values", where, mu.values);
  if (mu.source == MuSource::Fixed) {
    if (mu.values.empty()) fail("fixed mu needs values");
    for (double v : mu.values) {
      if (!(v > 0.0 && v < 1.0)) fail("mu values must lie in (0,1)");
    }
  }
  return mu;
}

PolicyConfig parse_policy(const json& j, std::size_t index) {
  const std::string where = "policies[" + std::to_string(index) + "]";
  check_keys(j, where, {"kind", "name", "xi", "lazy_batch", "iter_batch", "chase"});
  PolicyConfig p;
  const auto kind = get<std::string>(j, "kind", where);
  if (kind == "opal") {
    p.kind = PolicyKind::Opal;
  } else if (kind == "opal_lazy") {
    p.kind = PolicyKind::OpalLazy;
  } else if (kind == "uniform") {
    p.kind = PolicyKind::Uniform;
  } else if (kind == "oracle") {
    p.kind = PolicyKind::Oracle;
  } else if (kind == "iterative") {
    p.kind = PolicyKind::Iterative;
  } else {
    fail("unknown policy kind '" + kind + "'");
  }
  if (j.contains("xi")) {
    const auto& xi = j.at("xi");
    if (xi.is_string()) {
      if (xi.get<std::string>() != "T^(-1/3)") fail("xi must be a number or \"T^(-1/3)\"");
      p.xi.cube_root_schedule = true;
    } else if (xi.is_number()) {
      p.xi.fraction = xi.get<double>();
      if (!(p.xi.fraction >= 0.0 && p.xi.fraction < 1.0)) fail("xi must lie in [0,1)");
    } else {
      fail("xi must be a number or \"T^(-1/3)\"");
    }
  }
  p.lazy_batch = positive(j, "lazy_batch", where, p.lazy_batch);
  p.iter_batch = positive(j, "iter_batch", where, p.iter_batch);
  if (j.contains("chase")) {
    const auto rule = get<std::string>(j, "chase", where);
    if (rule == "quota") {
      p.chase = ChaseRule::Quota;
    } else if (rule == "max_deficit") {
      p.chase = ChaseRule::MaxDeficit;
    } else {
      fail("unknown chase rule '" + rule + "'");
    }
  }
  p.name = j.contains("name") ? get<std::string>(j, "name", where) : default_policy_name(p);
  if (p.name.empty() || p.name.find_first_of(",\"\r\n") != std::string::npos) {
    fail("policy name must be nonempty and free of commas, quotes and newlines");
  }
  return p;
}

}  // namespace

double MuConfig::effective_low(ProbeMode) const noexcept { return range_set ? low : 0.1; }

double MuConfig::effective_high(ProbeMode mode) const noexcept {
  if (range_set) return high;
  return mode == ProbeMode::RIMulticast ? 1.0 : 0.9;
}

std::int64_t SimConfig::effective_stride() const noexcept {
  return metric_stride > 0 ? metric_stride : std::max<std::int64_t>(1, horizon / 500);
}

SimConfig parse_config(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"topology", "probe_mode", "monitors", "max_probes", "mu", "T", "mc_runs", "scenarios", "policies",
              "criterion", "metric_stride", "output", "seed", "threads", "estimator", "allocator_iterations"});
  SimConfig c;
  if (!root.contains("topology")) fail("config needs a topology");
  c.topology = parse_topology(root.at("topology"), base_dir);

  if (root.contains("probe_mode")) {
    const auto mode = get<std::string>(root, "probe_mode", "config");
    if (mode == "unicast") {
      c.probe_mode = ProbeMode::Unicast;
    } else if (mode == "ri_multicast") {
      c.probe_mode = ProbeMode::RIMulticast;
    } else {
      fail("unknown probe_mode '" + mode + "'");
    }
  }
  if (root.contains("monitors")) {
    for (auto id : get<std::vector<std::int64_t>>(root, "monitors", "config")) {
      if (id < 1) fail("monitor ids are 1-based");
      c.monitors.push_back(static_cast<std::size_t>(id - 1));
    }
  }
  if (root.contains("max_probes")) {
    const auto n = get<std::int64_t>(root, "max_probes", "config");
    if (n < 0) fail("max_probes must be nonnegative");
    c.max_probes = static_cast<std::size_t>(n);
  }
  if (root.contains("mu")) c.mu = parse_mu(root.at("mu"));
  if (c.mu.source == MuSource::File && c.topology.kind != TopologySource::EdgeList) {
    fail("mu source 'file' needs an edge_list topology");
  }
  c.horizon = positive(root, "T", "config", c.horizon);
  c.mc_runs = static_cast<std::size_t>(positive(root, "mc_runs", "config", 1));
  c.scenarios = static_cast<std::size_t>(positive(root, "scenarios", "config", 1));

  if (!root.contains("policies") || !root.at("policies").is_array() || root.at("policies").empty()) {
    fail("config needs a nonempty policies list");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < root.at("policies").size(); ++i) {
    auto p = parse_policy(root.at("policies")[i], i);
    if (!names.insert(p.name).second) fail("duplicate policy name '" + p.name + "'");
    c.policies.push_back(std::move(p));
  }

  if (root.contains("criterion")) {
    const auto& j = root.at("criterion");
    check_keys(j, "criterion", {"kind", "floor"});
    if (j.contains("kind")) {
      const auto kind = get<std::string>(j, "kind", "criterion");
      if (kind == "a_optimal") {
        c.criterion.kind = CriterionKind::AOptimal;
      } else if (kind == "d_optimal") {
        c.criterion.kind = CriterionKind::DOptimal;
      } else {
        fail("unknown criterion kind '" + kind + "'");
      }
    }
    read_opt(j, "floor", "criterion", c.criterion.floor);
    if (!(c.criterion.floor >= 0.0)) fail("criterion floor must be nonnegative");
  }
  if (root.contains("metric_stride")) c.metric_stride = positive(root, "metric_stride", "config", 1);
  read_opt(root, "output", "config", c.output);
  read_opt(root, "seed", "config", c.seed);
  read_opt(root, "threads", "config", c.threads);
  if (root.contains("estimator")) {
    const auto& j = root.at("estimator");
    check_keys(j, "estimator", {"smoothing", "clip"});
    read_opt(j, "smoothing", "estimator", c.estimator.smoothing);
    read_opt(j, "clip", "estimator", c.estimator.clip);
    if (!(c.estimator.clip >= 0.0 && c.estimator.clip < 0.5)) fail("estimator clip must lie in [0, 0.5)");
  }
  if (root.contains("allocator_iterations")) {
    c.allocator_iterations = static_cast<int>(positive(root, "allocator_iterations", "config", 100));
  }
  return c;
}

SimConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::filesystem::path(path).parent_path().string());
}

}  // namespace nettomo
