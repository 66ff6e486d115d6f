#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "exact.hpp"
#include "nettomo/error.hpp"
#include "nettomo/topology.hpp"

using namespace nettomo;
using testing_support::bareiss_det;
using testing_support::exact_inverse;
using testing_support::Frac;
using testing_support::IntMatrix;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Internal;
}

IntMatrix to_int(const Eigen::MatrixXd& m) {
  IntMatrix out(static_cast<std::size_t>(m.rows()), std::vector<std::int64_t>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = static_cast<std::int64_t>(m(i, j));
  }
  return out;
}

std::vector<std::size_t> bfs_dist(const Topology& t, std::size_t src) {
  std::vector<std::size_t> d(t.node_count(), SIZE_MAX);
  std::queue<std::size_t> q;
  d[src] = 0;
  q.push(src);
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (auto [v, l] : t.neighbours(u)) {
      if (d[v] == SIZE_MAX) {
        d[v] = d[u] + 1;
        q.push(v);
      }
    }
  }
  return d;
}

}  // namespace

TEST(BuildStar, ThreeLinks) {
  auto t = build_star(3);
  EXPECT_EQ(t.node_count(), 4u);
  ASSERT_EQ(t.link_count(), 3u);
  EXPECT_EQ(t.kind(), TopologyKind::Star);
  EXPECT_EQ(t.hub(), 3u);
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_EQ(t.link(l).a, l);
    EXPECT_EQ(t.link(l).b, 3u);
    EXPECT_EQ(t.leaf_of(l), l);
  }
}

TEST(BuildStar, SizesAndErrors) {
  EXPECT_EQ(build_star(2).link_count(), 2u);
  EXPECT_EQ(build_star(39).node_count(), 40u);
  EXPECT_EQ(kind_of([] { build_star(1); }), ErrorKind::InvalidArgument);
}

TEST(TopologyCtor, RejectsBadGraphs) {
  EXPECT_EQ(kind_of([] { Topology(3, {{0, 1}, {1, 0}}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { Topology(3, {{0, 0}, {1, 2}}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { Topology(3, {{0, 5}}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { Topology(4, {{0, 1}, {2, 3}}); }), ErrorKind::InvalidArgument);
}

TEST(TopologyCtor, KindDetection) {
  Topology path(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(path.kind(), TopologyKind::Star);  // a 2-link path is a 2-link star
  Topology square(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  EXPECT_EQ(square.kind(), TopologyKind::General);
  EXPECT_EQ(kind_of([&] { square.hub(); }), ErrorKind::UnsupportedTopology);
  EXPECT_EQ(square.link_between(0, 3), std::optional<std::size_t>(3));
  EXPECT_FALSE(square.link_between(0, 2).has_value());
}

TEST(BuildEr, DeterministicAndConnected) {
  const double p = 35.0 / 190.0;
  auto a = build_er(20, p, 11);
  auto b = build_er(20, p, 11);
  ASSERT_EQ(a.link_count(), b.link_count());
  for (std::size_t l = 0; l < a.link_count(); ++l) {
    EXPECT_EQ(a.link(l).a, b.link(l).a);
    EXPECT_EQ(a.link(l).b, b.link(l).b);
  }
  const auto d = bfs_dist(a, 0);
  EXPECT_TRUE(std::none_of(d.begin(), d.end(), [](auto x) { return x == SIZE_MAX; }));
  EXPECT_EQ(a.node_count(), 20u);
}

TEST(BuildEr, ForcedEdgeAndFailure) {
  auto t = build_er(2, 0.99, 1);
  EXPECT_EQ(t.link_count(), 1u);
  EXPECT_EQ(kind_of([] { build_er(20, 0.001, 1, 3); }), ErrorKind::GenerationFailure);
  EXPECT_EQ(kind_of([] { build_er(1, 0.5, 1); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { build_er(5, 1.0, 1); }), ErrorKind::InvalidArgument);
}

TEST(EdgeList, PathGraph) {
  std::istringstream in("1,2\n2,3\n");
  auto loaded = load_edge_list(in);
  EXPECT_EQ(loaded.topology.node_count(), 3u);
  EXPECT_EQ(loaded.topology.link_count(), 2u);
  EXPECT_FALSE(loaded.mu.has_value());
}

TEST(EdgeList, MuColumn) {
  std::istringstream in("# header\n1,2,0.9\n\n2,3,0.8\n2,1,0.5\n");
  auto loaded = load_edge_list(in);
  ASSERT_TRUE(loaded.mu.has_value());
  EXPECT_EQ(*loaded.mu, (std::vector<double>{0.9, 0.8}));
  EXPECT_EQ(loaded.topology.link_count(), 2u);
}

TEST(EdgeList, ParseErrorsCarryLineNumbers) {
  std::istringstream bad("1,2\n2,x\n");
  try {
    load_edge_list(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream mixed("1,2,0.5\n2,3\n");
  EXPECT_EQ(kind_of([&] { load_edge_list(mixed); }), ErrorKind::Parse);
  std::istringstream range("1,2,1.5\n");
  EXPECT_EQ(kind_of([&] { load_edge_list(range); }), ErrorKind::Parse);
  std::istringstream zero("0,1\n");
  EXPECT_EQ(kind_of([&] { load_edge_list(zero); }), ErrorKind::Parse);
  std::istringstream disconnected("1,2\n3,4\n");
  EXPECT_EQ(kind_of([&] { load_edge_list(disconnected); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { load_edge_list_file("/nonexistent/file.csv"); }), ErrorKind::Io);
}

TEST(EdgeList, RoundTrip) {
  auto t = build_er(12, 0.3, 5);
  std::vector<double> mu;
  for (std::size_t l = 0; l < t.link_count(); ++l) mu.push_back(0.1 + 0.8 / (1.0 + static_cast<double>(l)) + 1e-13 * l);
  std::stringstream buf;
  write_edge_list(buf, t, &mu);
  auto back = load_edge_list(buf);
  ASSERT_EQ(back.topology.link_count(), t.link_count());
  EXPECT_EQ(back.topology.node_count(), t.node_count());
  for (std::size_t l = 0; l < t.link_count(); ++l) {
    EXPECT_EQ(back.topology.link(l).a, t.link(l).a);
    EXPECT_EQ(back.topology.link(l).b, t.link(l).b);
  }
  EXPECT_EQ(*back.mu, mu);
}

TEST(EdgeList, SyntheticMeshFile) {
  auto loaded = load_edge_list_file(std::string(NETTOMO_TEST_DATA) + "/mesh37.csv");
  EXPECT_EQ(loaded.topology.node_count(), 37u);
  EXPECT_EQ(loaded.topology.link_count(), 114u);
  ASSERT_TRUE(loaded.mu.has_value());
  EXPECT_EQ(loaded.mu->size(), 114u);
}

TEST(CanonicalStar, ThreeLinkRowsAndInverse) {
  auto ps = canonical_star_unicast_probes(build_star(3));
  ASSERT_EQ(ps.size(), 3u);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& p : ps.probes) {
    ASSERT_EQ(p.path_links.size(), 2u);
    pairs.emplace(std::min(p.path_links[0], p.path_links[1]), std::max(p.path_links[0], p.path_links[1]));
  }
  EXPECT_EQ(pairs, (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}, {1, 2}}));

  // The listed-order matrix and its inverse.
  const IntMatrix listed = {{1, 1, 0}, {1, 0, 1}, {0, 1, 1}};
  const auto inv = exact_inverse(listed);
  ASSERT_TRUE(inv.has_value());
  const std::vector<std::vector<Frac>> expected = {
      {Frac(1, 2), Frac(1, 2), Frac(-1, 2)}, {Frac(1, 2), Frac(-1, 2), Frac(1, 2)}, {Frac(-1, 2), Frac(1, 2), Frac(1, 2)}};
  EXPECT_TRUE(*inv == expected);

  // Our row order: kappa must equal the exact inverse of our own Q.
  const auto ours = exact_inverse(to_int(ps.matrix.entries()));
  ASSERT_TRUE(ours.has_value());
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(ps.matrix.kappa()(i, j), (*ours)[i][j].value(), 1e-12);
    }
  }
}

TEST(CanonicalStar, StructuralInvariantsAcrossSizes) {
  for (std::size_t L = 3; L <= 12; ++L) {
    auto ps = canonical_star_unicast_probes(build_star(L));
    const auto q = to_int(ps.matrix.entries());
    ASSERT_EQ(q.size(), L);
    for (const auto& row : q) EXPECT_EQ(std::count(row.begin(), row.end(), 1), 2);
    EXPECT_EQ(std::abs(bareiss_det(q)), 2) << "L=" << L;
    const auto inv = exact_inverse(q);
    ASSERT_TRUE(inv.has_value());
    for (const auto& row : *inv) {
      for (const auto& x : row) {
        const bool allowed = x.zero() || (x.den == 1 && std::abs(x.num) == 1) || (x.den == 2 && std::abs(x.num) == 1);
        EXPECT_TRUE(allowed) << "L=" << L << " entry " << x.num << "/" << x.den;
      }
    }
    const auto& kappa = ps.matrix.kappa();
    for (Eigen::Index i = 0; i < kappa.rows(); ++i) {
      for (Eigen::Index j = 0; j < kappa.cols(); ++j) {
        const double k = std::abs(kappa(i, j));
        EXPECT_TRUE(k < 1e-12 || std::abs(k - 0.5) < 1e-12 || std::abs(k - 1.0) < 1e-12);
      }
    }
  }
}

TEST(CanonicalStar, Errors) {
  EXPECT_EQ(kind_of([] { canonical_star_unicast_probes(build_star(2)); }), ErrorKind::Identifiability);
  Topology square(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  EXPECT_EQ(kind_of([&] { canonical_star_unicast_probes(square); }), ErrorKind::UnsupportedTopology);
}

TEST(GeneralUnicast, StarLeavesRecoverRank) {
  auto t = build_star(6);
  auto ps = general_unicast_probes(t, {0, 1, 2, 3, 4, 5});
  EXPECT_EQ(ps.matrix.rank(), 6);
  EXPECT_EQ(ps.size(), 6u);
}

TEST(GeneralUnicast, PathGraphIsUnidentifiable) {
  Topology path(3, {{0, 1}, {1, 2}});
  try {
    general_unicast_probes(path, {0, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Identifiability);
    EXPECT_NE(std::string(e.what()).find("unidentifiable links"), std::string::npos);
  }
}

TEST(GeneralUnicast, ErFullRankWithShortestPaths) {
  auto t = build_er(20, 35.0 / 190.0, 3);
  std::vector<std::size_t> all(20);
  for (std::size_t v = 0; v < 20; ++v) all[v] = v;
  auto ps = general_unicast_probes(t, all);
  EXPECT_EQ(ps.matrix.rank(), static_cast<Eigen::Index>(t.link_count()));
  EXPECT_TRUE(ps.matrix.is_square());
  for (const auto& p : ps.probes) {
    const auto& nodes = p.path_nodes;
    ASSERT_EQ(nodes.size(), p.path_links.size() + 1);
    EXPECT_EQ(bfs_dist(t, nodes.front())[nodes.back()], p.path_links.size());
    std::set<std::size_t> distinct(nodes.begin(), nodes.end());
    EXPECT_EQ(distinct.size(), nodes.size());
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      EXPECT_EQ(t.link_between(nodes[i], nodes[i + 1]), std::optional<std::size_t>(p.path_links[i]));
    }
  }
  auto tall = general_unicast_probes(t, all, t.link_count() + 5);
  EXPECT_EQ(tall.size(), t.link_count() + 5);
  EXPECT_FALSE(tall.matrix.is_square());
}

TEST(GeneralUnicast, PairOrderAndExtraRows) {
  Topology path(3, {{0, 1}, {1, 2}});
  auto ps = general_unicast_probes(path, {0, 1, 2});
  ASSERT_EQ(ps.size(), 2u);
  EXPECT_EQ(ps.probes[0].path_nodes, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(ps.probes[1].path_nodes, (std::vector<std::size_t>{0, 1, 2}));

  auto tall = general_unicast_probes(path, {0, 1, 2}, 3);
  ASSERT_EQ(tall.size(), 3u);
  EXPECT_EQ(tall.probes[2].path_nodes, (std::vector<std::size_t>{1, 2}));
  EXPECT_FALSE(tall.matrix.is_square());
}

TEST(GeneralUnicast, LexicographicTieBreak) {
  Topology square(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  EXPECT_EQ(shortest_path_nodes(square, 0, 3), (std::vector<std::size_t>{0, 1, 3}));
  EXPECT_EQ(shortest_path_nodes(square, 3, 0), (std::vector<std::size_t>{3, 1, 0}));
}

TEST(RiMulticast, Matrices) {
  auto ps = ri_multicast_probes(build_star(3));
  Eigen::MatrixXd expected(3, 3);
  expected << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  EXPECT_EQ(ps.matrix.entries(), expected);
  auto two = ri_multicast_probes(build_star(2));
  Eigen::MatrixXd e2(2, 2);
  e2 << 0, 1, 1, 0;
  EXPECT_EQ(two.matrix.entries(), e2);
  auto big = ri_multicast_probes(build_star(39));
  ASSERT_EQ(big.size(), 39u);
  for (std::size_t m = 0; m < 39; ++m) {
    EXPECT_EQ(big.probes[m].root_link, m);
    EXPECT_EQ(big.probes[m].destinations.size(), 38u);
    EXPECT_EQ(big.probes[m].observed_links(39).size(), 38u);
  }
  Topology square(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  EXPECT_EQ(kind_of([&] { ri_multicast_probes(square); }), ErrorKind::UnsupportedTopology);
}

TEST(MeasurementMatrixTest, ValidatesAndInverts) {
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 0, 1;
  EXPECT_EQ(kind_of([&] { MeasurementMatrix m(bad); }), ErrorKind::InvalidArgument);
  Eigen::MatrixXd singular(2, 2);
  singular << 1, 1, 1, 1;
  EXPECT_EQ(kind_of([&] { MeasurementMatrix m(singular); }), ErrorKind::Identifiability);

  Eigen::MatrixXd tall(4, 3);
  tall << 1, 1, 0, 0, 1, 1, 1, 0, 1, 1, 1, 1;
  MeasurementMatrix m(tall);
  const Eigen::MatrixXd oracle = (tall.transpose() * tall).inverse() * tall.transpose();
  EXPECT_LT((m.kappa() - oracle).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(m.rank(), 3);
}
