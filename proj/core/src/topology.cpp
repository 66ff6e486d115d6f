#include "nettomo/topology.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

#include "nettomo/error.hpp"
#include "nettomo/rng.hpp"

namespace nettomo {

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

bool connected(std::size_t n, const std::vector<Link>& links) {
  if (n == 0) return false;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = n;
  for (const auto& e : links) {
    const auto ra = find(e.a), rb = find(e.b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components == 1;
}

std::vector<std::size_t> bfs_distances(const Topology& topo, std::size_t from) {
  constexpr auto kUnreached = static_cast<std::size_t>(-1);
  std::vector<std::size_t> dist(topo.node_count(), kUnreached);
  std::queue<std::size_t> q;
  dist[from] = 0;
  q.push(from);
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (const auto& [v, l] : topo.neighbours(u)) {
      (void)l;
      if (dist[v] == kUnreached) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  return dist;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

ProbeDescriptor unicast_from_nodes(const Topology& topo, std::vector<std::size_t> nodes) {
  ProbeDescriptor p;
  p.mode = ProbeMode::Unicast;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const auto l = topo.link_between(nodes[i], nodes[i + 1]);
    if (!l) fail(ErrorKind::Internal, "unicast path uses a missing link");
    p.path_links.push_back(*l);
  }
  p.destinations = {nodes.back()};
  p.path_nodes = std::move(nodes);
  return p;
}

Eigen::MatrixXd incidence(const std::vector<ProbeDescriptor>& probes, std::size_t link_count) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(probes.size()),
                                            static_cast<Eigen::Index>(link_count));
  for (std::size_t m = 0; m < probes.size(); ++m) {
    for (auto l : probes[m].observed_links(link_count)) {
      q(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l)) = 1.0;
    }
  }
  return q;
}

}  // namespace

// ---------------------------------------------------------------------------
// Topology

Topology::Topology(std::size_t node_count, std::vector<Link> links)
    : node_count_(node_count), links_(std::move(links)), adjacency_(node_count) {
  if (node_count_ < 2) fail(ErrorKind::InvalidArgument, "topology needs at least 2 nodes");
  if (links_.empty()) fail(ErrorKind::InvalidArgument, "topology needs at least one link");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t l = 0; l < links_.size(); ++l) {
    const auto& e = links_[l];
    if (e.a >= node_count_ || e.b >= node_count_) {
      fail(ErrorKind::InvalidArgument, "link " + std::to_string(l + 1) + " has an endpoint out of range");
    }
    if (e.a == e.b) fail(ErrorKind::InvalidArgument, "link " + std::to_string(l + 1) + " is a self loop");
    if (!seen.emplace(std::min(e.a, e.b), std::max(e.a, e.b)).second) {
      fail(ErrorKind::InvalidArgument, "duplicate link " + std::to_string(e.a + 1) + "-" + std::to_string(e.b + 1));
    }
    adjacency_[e.a].emplace_back(e.b, l);
    adjacency_[e.b].emplace_back(e.a, l);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
  if (!connected(node_count_, links_)) fail(ErrorKind::InvalidArgument, "topology is not connected");

  if (links_.size() >= 2 && node_count_ == links_.size() + 1) {
    for (std::size_t v = 0; v < node_count_; ++v) {
      if (adjacency_[v].size() == links_.size()) {
        kind_ = TopologyKind::Star;
        hub_ = v;
        break;
      }
    }
  }
}

std::size_t Topology::hub() const {
  if (kind_ != TopologyKind::Star) fail(ErrorKind::UnsupportedTopology, "topology is not a star");
  return hub_;
}

std::size_t Topology::leaf_of(std::size_t l) const {
  const auto& e = link(l);
  return e.a == hub() ? e.b : e.a;
}

std::optional<std::size_t> Topology::link_between(std::size_t u, std::size_t v) const {
  if (u >= node_count_) return std::nullopt;
  const auto& adj = adjacency_[u];
  auto it = std::lower_bound(adj.begin(), adj.end(), std::make_pair(v, std::size_t{0}));
  if (it != adj.end() && it->first == v) return it->second;
  return std::nullopt;
}

Topology build_star(std::size_t link_count) {
  if (link_count < 2) fail(ErrorKind::InvalidArgument, "a star needs at least 2 links");
  std::vector<Link> links;
  links.reserve(link_count);
  for (std::size_t l = 0; l < link_count; ++l) links.push_back({l, link_count});
  return Topology(link_count + 1, std::move(links));
}

Topology build_er(std::size_t node_count, double edge_prob, std::uint64_t seed, int max_retries) {
  if (node_count < 2) fail(ErrorKind::InvalidArgument, "ER graph needs at least 2 nodes");
  if (!(edge_prob > 0.0 && edge_prob < 1.0)) fail(ErrorKind::InvalidArgument, "ER edge probability must be in (0,1)");
  RngStream rng(seed);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::vector<Link> links;
    for (std::size_t i = 0; i < node_count; ++i) {
      for (std::size_t j = i + 1; j < node_count; ++j) {
        if (rng.bernoulli(edge_prob)) links.push_back({i, j});
      }
    }
    if (!links.empty() && connected(node_count, links)) return Topology(node_count, std::move(links));
  }
  fail(ErrorKind::GenerationFailure,
       "no connected ER graph after " + std::to_string(max_retries) + " attempts");
}

LoadedTopology load_edge_list(std::istream& in) {
  std::vector<Link> links;
  std::vector<double> mu;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::size_t max_node = 0;
  std::optional<bool> has_mu;
  std::string raw;
  std::size_t line_no = 0;

  auto parse_error = [&](const std::string& msg) {
    fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + msg);
  };
  auto parse_node = [&](const std::string& field) {
    std::size_t v = 0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || field.empty()) parse_error("bad node id '" + field + "'");
    if (v == 0) parse_error("node ids are 1-based");
    return v;
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 2 && fields.size() != 3) parse_error("expected 'u,v' or 'u,v,mu'");
    const bool row_has_mu = fields.size() == 3;
    if (!has_mu) has_mu = row_has_mu;
    if (*has_mu != row_has_mu) parse_error("mu column must be present on every line or none");

    const auto u = parse_node(fields[0]);
    const auto v = parse_node(fields[1]);
    if (u == v) parse_error("self loop");
    double m = 0.0;
    if (row_has_mu) {
      const auto& s = fields[2];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), m);
      if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) parse_error("bad mu '" + s + "'");
      if (!(m > 0.0 && m < 1.0)) parse_error("mu must lie in (0,1)");
    }
    if (!seen.emplace(std::min(u, v), std::max(u, v)).second) continue;
    links.push_back({u - 1, v - 1});
    if (row_has_mu) mu.push_back(m);
    max_node = std::max({max_node, u, v});
  }
  if (links.empty()) fail(ErrorKind::Parse, "edge list is empty");
  if (!connected(max_node, links)) fail(ErrorKind::InvalidArgument, "edge list graph is not connected");
  LoadedTopology out{Topology(max_node, std::move(links)), std::nullopt};
  if (has_mu.value_or(false)) out.mu = std::move(mu);
  return out;
}

LoadedTopology load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open edge list '" + path + "'");
  try {
    return load_edge_list(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void write_edge_list(std::ostream& out, const Topology& topo, const std::vector<double>* mu) {
  if (mu && mu->size() != topo.link_count()) fail(ErrorKind::InvalidArgument, "mu length does not match link count");
  char buf[64];
  for (std::size_t l = 0; l < topo.link_count(); ++l) {
    const auto& e = topo.link(l);
    out << e.a + 1 << ',' << e.b + 1;
    if (mu) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, (*mu)[l]);
      (void)ec;
      out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Probes

std::vector<std::size_t> ProbeDescriptor::observed_links(std::size_t link_count) const {
  if (mode == ProbeMode::Unicast) {
    auto links = path_links;
    std::sort(links.begin(), links.end());
    return links;
  }
  std::vector<std::size_t> links;
  links.reserve(link_count - 1);
  for (std::size_t l = 0; l < link_count; ++l) {
    if (l != root_link) links.push_back(l);
  }
  return links;
}

Eigen::Index matrix_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  lu.setThreshold(1e-9);
  return lu.rank();
}

MeasurementMatrix::MeasurementMatrix(Eigen::MatrixXd q) : q_(std::move(q)) {
  for (Eigen::Index i = 0; i < q_.size(); ++i) {
    const double v = q_.data()[i];
    if (v != 0.0 && v != 1.0) fail(ErrorKind::InvalidArgument, "measurement matrix must be binary");
  }
  rank_ = matrix_rank(q_);
  if (rank_ < q_.cols()) {
    fail(ErrorKind::Identifiability, "measurement matrix has rank " + std::to_string(rank_) + " < " +
                                         std::to_string(q_.cols()) + " links");
  }
  const auto m = q_.rows();
  if (is_square()) {
    kappa_ = q_.fullPivLu().inverse();
  } else {
    kappa_ = q_.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(m, m));
  }
}

std::vector<std::size_t> shortest_path_nodes(const Topology& topo, std::size_t src, std::size_t dst) {
  const auto dist = bfs_distances(topo, dst);
  std::vector<std::size_t> nodes{src};
  std::size_t cur = src;
  while (cur != dst) {
    // neighbours are sorted, so the first one that moves closer is the
    // lexicographically smallest continuation.
    for (const auto& [v, l] : topo.neighbours(cur)) {
      (void)l;
      if (dist[v] + 1 == dist[cur]) {
        cur = v;
        break;
      }
    }
    nodes.push_back(cur);
  }
  return nodes;
}

ProbeSet canonical_star_unicast_probes(const Topology& topo) {
  if (topo.kind() != TopologyKind::Star) fail(ErrorKind::UnsupportedTopology, "canonical unicast probes need a star");
  const std::size_t L = topo.link_count();
  if (L < 3) fail(ErrorKind::Identifiability, "a 2-link star has no identifiable unicast probe set");
  const std::size_t cycle = (L % 2 == 1) ? L : L - 1;
  const auto hub = topo.hub();
  std::vector<ProbeDescriptor> probes;
  probes.reserve(L);
  for (std::size_t m = 0; m < L; ++m) {
    const std::size_t first = m;
    const std::size_t second = (m < cycle) ? (m + 1) % cycle : 0;
    std::vector<std::size_t> nodes{topo.leaf_of(first), hub, topo.leaf_of(second)};
    probes.push_back(unicast_from_nodes(topo, std::move(nodes)));
  }
  auto q = incidence(probes, L);
  return ProbeSet{ProbeMode::Unicast, std::move(probes), MeasurementMatrix(std::move(q))};
}

ProbeSet general_unicast_probes(const Topology& topo, const std::vector<std::size_t>& monitors,
                                std::size_t max_probes) {
  if (monitors.empty()) fail(ErrorKind::InvalidArgument, "monitor set is empty");
  const std::size_t L = topo.link_count();
  if (max_probes == 0) max_probes = L;
  if (max_probes < L) fail(ErrorKind::InvalidArgument, "max_probes must be at least the number of links");

  std::vector<std::size_t> mons(monitors);
  std::sort(mons.begin(), mons.end());
  mons.erase(std::unique(mons.begin(), mons.end()), mons.end());
  for (auto v : mons) {
    if (v >= topo.node_count()) fail(ErrorKind::InvalidArgument, "monitor " + std::to_string(v + 1) + " out of range");
  }

  std::vector<std::vector<std::size_t>> candidates;
  for (std::size_t i = 0; i < mons.size(); ++i) {
    for (std::size_t j = i + 1; j < mons.size(); ++j) {
      candidates.push_back(shortest_path_nodes(topo, mons[i], mons[j]));
    }
  }

  std::vector<ProbeDescriptor> chosen;
  std::vector<bool> used(candidates.size(), false);
  Eigen::MatrixXd rows(0, static_cast<Eigen::Index>(L));
  Eigen::Index rank = 0;
  for (std::size_t c = 0; c < candidates.size() && rank < static_cast<Eigen::Index>(L); ++c) {
    auto probe = unicast_from_nodes(topo, candidates[c]);
    Eigen::MatrixXd trial(rows.rows() + 1, rows.cols());
    trial << rows, incidence({probe}, L);
    const auto r = matrix_rank(trial);
    if (r > rank) {
      rows = std::move(trial);
      rank = r;
      used[c] = true;
      chosen.push_back(std::move(probe));
    }
  }

  if (rank < static_cast<Eigen::Index>(L)) {
    std::string names;
    for (std::size_t l = 0; l < L; ++l) {
      Eigen::MatrixXd probe_row(rows.rows() + 1, rows.cols());
      probe_row << rows, Eigen::RowVectorXd::Unit(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(l));
      if (matrix_rank(probe_row) > rank) names += (names.empty() ? "" : ",") + std::to_string(l + 1);
    }
    fail(ErrorKind::Identifiability, "monitor paths reach rank " + std::to_string(rank) + " < " +
                                         std::to_string(L) + "; unidentifiable links: " + names);
  }

  for (std::size_t c = 0; c < candidates.size() && chosen.size() < max_probes; ++c) {
    if (!used[c]) chosen.push_back(unicast_from_nodes(topo, candidates[c]));
  }
  auto q = incidence(chosen, L);
  return ProbeSet{ProbeMode::Unicast, std::move(chosen), MeasurementMatrix(std::move(q))};
}

ProbeSet ri_multicast_probes(const Topology& topo) {
  if (topo.kind() != TopologyKind::Star) fail(ErrorKind::UnsupportedTopology, "RI multicast probes need a star");
  const std::size_t L = topo.link_count();
  std::vector<ProbeDescriptor> probes;
  probes.reserve(L);
  for (std::size_t m = 0; m < L; ++m) {
    ProbeDescriptor p;
    p.mode = ProbeMode::RIMulticast;
    p.root_link = m;
    for (std::size_t l = 0; l < L; ++l) {
      if (l != m) p.destinations.push_back(topo.leaf_of(l));
    }
    probes.push_back(std::move(p));
  }
  auto q = incidence(probes, L);
  return ProbeSet{ProbeMode::RIMulticast, std::move(probes), MeasurementMatrix(std::move(q))};
}

}  // namespace nettomo
