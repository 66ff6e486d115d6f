#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nettomo {

// Node and link indices are 0-based throughout the library. Text formats and
// CLI output use 1-based ids.

enum class TopologyKind { Star, General };

struct Link {
  std::size_t a = 0;
  std::size_t b = 0;
};

/// Undirected, connected simple graph. Immutable after construction.
class Topology {
 public:
  /// Throws InvalidArgument on bad endpoints, self loops, duplicate links or a
  /// disconnected graph. The kind is Star when one node touches every link and
  /// there are no other nodes.
  Topology(std::size_t node_count, std::vector<Link> links);

  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t link_count() const noexcept { return links_.size(); }
  const std::vector<Link>& links() const noexcept { return links_; }
  const Link& link(std::size_t l) const { return links_.at(l); }
  TopologyKind kind() const noexcept { return kind_; }

  /// Central node of a star; throws UnsupportedTopology otherwise.
  std::size_t hub() const;
  /// The non-hub end of link l in a star.
  std::size_t leaf_of(std::size_t l) const;

  /// (neighbour, link) pairs sorted by neighbour id.
  const std::vector<std::pair<std::size_t, std::size_t>>& neighbours(std::size_t node) const {
    return adjacency_.at(node);
  }
  std::optional<std::size_t> link_between(std::size_t u, std::size_t v) const;

 private:
  std::size_t node_count_;
  std::vector<Link> links_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency_;
  TopologyKind kind_ = TopologyKind::General;
  std::size_t hub_ = 0;
};

/// L leaves around a hub: node L is the hub, link l joins node l to it.
Topology build_star(std::size_t link_count);

/// G(n, p) resampled until connected. Deterministic in (n, p, seed).
Topology build_er(std::size_t node_count, double edge_prob, std::uint64_t seed,
                  int max_retries = 1000);

struct LoadedTopology {
  Topology topology;
  /// Present when every line carried a third column.
  std::optional<std::vector<double>> mu;
};

/// Reads "u,v[,mu]" lines with 1-based node ids. Blank lines and lines starting
/// with '#' are skipped; repeated undirected edges keep the first occurrence.
LoadedTopology load_edge_list(std::istream& in);
LoadedTopology load_edge_list_file(const std::string& path);

void write_edge_list(std::ostream& out, const Topology& topo,
                     const std::vector<double>* mu = nullptr);

// ---------------------------------------------------------------------------
// Probes and the measurement matrix

enum class ProbeMode { Unicast, RIMulticast };

struct ProbeDescriptor {
  ProbeMode mode = ProbeMode::Unicast;
  /// Unicast: links in order from source to destination.
  std::vector<std::size_t> path_links;
  /// Unicast: nodes from source to destination.
  std::vector<std::size_t> path_nodes;
  /// RI multicast: the link whose end node prepares the state.
  std::size_t root_link = 0;
  std::vector<std::size_t> destinations;

  /// Links whose state the probe's feedback depends on, ascending.
  std::vector<std::size_t> observed_links(std::size_t link_count) const;
};

/// M x L binary incidence matrix Q together with kappa = Q^-1 (square case)
/// or the left pseudo-inverse (Q^T Q)^-1 Q^T (tall case).
class MeasurementMatrix {
 public:
  /// Throws InvalidArgument on non-binary entries and Identifiability when
  /// rank(Q) < L.
  explicit MeasurementMatrix(Eigen::MatrixXd q);

  Eigen::Index rows() const noexcept { return q_.rows(); }
  Eigen::Index cols() const noexcept { return q_.cols(); }
  const Eigen::MatrixXd& entries() const noexcept { return q_; }
  bool is_square() const noexcept { return q_.rows() == q_.cols(); }
  Eigen::Index rank() const noexcept { return rank_; }
  /// L x M matrix of kappa entries.
  const Eigen::MatrixXd& kappa() const noexcept { return kappa_; }

 private:
  Eigen::MatrixXd q_;
  Eigen::Index rank_ = 0;
  Eigen::MatrixXd kappa_;
};

/// Numerical column rank of a small dense matrix.
Eigen::Index matrix_rank(const Eigen::MatrixXd& m);

struct ProbeSet {
  ProbeMode mode = ProbeMode::Unicast;
  std::vector<ProbeDescriptor> probes;
  MeasurementMatrix matrix;

  std::size_t size() const noexcept { return probes.size(); }
  std::size_t link_count() const noexcept { return static_cast<std::size_t>(matrix.cols()); }
};

/// Square, invertible unicast set on a star with L >= 3 links. For odd L probe
/// m pairs links (m, m+1 mod L); for even L the first L-1 links form an odd
/// cycle and the last probe pairs link L with link 1.
ProbeSet canonical_star_unicast_probes(const Topology& topo);

/// Shortest paths between monitor pairs, in lexicographic pair order, added greedily while
/// they raise rank(Q); afterwards further pairs are appended until
/// max_probes is reached (0 means stop at L).
ProbeSet general_unicast_probes(const Topology& topo, const std::vector<std::size_t>& monitors,
                                std::size_t max_probes = 0);

/// One root-independent multicast probe per link of a star.
ProbeSet ri_multicast_probes(const Topology& topo);

/// Lexicographically smallest shortest node sequence from src to dst.
std::vector<std::size_t> shortest_path_nodes(const Topology& topo, std::size_t src, std::size_t dst);

}  // namespace nettomo
