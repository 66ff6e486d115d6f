#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nettomo/config.hpp"
#include "nettomo/error.hpp"
#include "nettomo/harness.hpp"
#include "nettomo/topology.hpp"

namespace {

using namespace nettomo;

int cmd_simulate(const std::string& config_path, const std::string& output) {
  auto config = load_config_file(config_path);
  if (!output.empty()) config.output = output;
  const auto result = run_experiment(config);
  for (const auto& s : result.summary) {
    std::cout << s.name << ": regret " << format_number(s.final.regret.mean) << " (std "
              << format_number(s.final.regret.std) << "), mse " << format_number(s.final.mse.mean);
    if (s.regret_slope) std::cout << ", slope " << format_number(*s.regret_slope);
    std::cout << '\n';
  }
  if (!config.output.empty()) std::cout << "wrote " << config.output << '\n';
  return 0;
}

int cmd_topology(const std::string& config_path, std::size_t scenario) {
  const auto config = load_config_file(config_path);
  const auto topo = build_topology(config, scenario);
  const auto probes = build_probes(config, topo);
  std::cout << "nodes " << topo.node_count() << "\nlinks " << topo.link_count() << "\nkind "
            << (topo.kind() == TopologyKind::Star ? "star" : "general") << "\nprobes " << probes.size()
            << "\nrank " << probes.matrix.rank() << '\n';
  for (std::size_t m = 0; m < probes.size(); ++m) {
    const auto& p = probes.probes[m];
    std::cout << "probe " << m + 1 << ':';
    if (p.mode == ProbeMode::Unicast) {
      std::cout << " path";
      for (auto v : p.path_nodes) std::cout << ' ' << v + 1;
      std::cout << " links";
      for (auto l : p.path_links) std::cout << ' ' << l + 1;
    } else {
      std::cout << " root " << p.root_link + 1 << " destinations";
      for (auto v : p.destinations) std::cout << ' ' << v + 1;
    }
    std::cout << '\n';
  }
  if (probes.matrix.is_square()) {
    std::cout << "inverse\n";
    const auto& k = probes.matrix.kappa();
    for (Eigen::Index r = 0; r < k.rows(); ++r) {
      for (Eigen::Index c = 0; c < k.cols(); ++c) {
        double v = k(r, c);
        if (std::abs(v) < 1e-12) v = 0.0;
        std::cout << (c ? " " : "") << format_number(v);
      }
      std::cout << '\n';
    }
  }
  return 0;
}

int cmd_slope(const std::string& input, double window) {
  std::ifstream in(input);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + input);
  for (const auto& [name, slope] : fit_slopes_from_csv(in, window)) {
    std::cout << name << ' ' << format_number(slope) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online probe allocation for network tomography"};
  app.require_subcommand(1);

  std::string config_path, output, input;
  std::size_t scenario = 0;
  double window = 10.0;

  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo experiment");
  sim->add_option("--config", config_path, "JSON config file")->required();
  sim->add_option("--output", output, "Output directory (overrides the config)");

  auto* topo = app.add_subcommand("topology", "Inspect the topology and probe set");
  topo->add_option("--config", config_path, "JSON config file")->required();
  topo->add_option("--scenario", scenario, "Scenario index for redrawn graphs");

  auto* slope = app.add_subcommand("slope", "Fit log-log regret slopes from an aggregate CSV");
  slope->add_option("--input", input, "aggregate.csv")->required();
  slope->add_option("--window", window, "Fit over t >= t_max / window");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(config_path, output);
    if (*topo) return cmd_topology(config_path, scenario);
    if (*slope) return cmd_slope(input, window);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
