#include <gtest/gtest.h>

#include <cmath>

#include "nettomo/error.hpp"
#include "nettomo/oed.hpp"

using namespace nettomo;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Eigen::VectorXd random_simplex(RngStream& rng, Eigen::Index M) {
  Eigen::VectorXd phi(M);
  for (Eigen::Index m = 0; m < M; ++m) phi[m] = -std::log(1.0 - rng.uniform()) + 1e-3;
  return phi / phi.sum();
}

Eigen::VectorXd random_mu(RngStream& rng, Eigen::Index L, double lo, double hi) {
  Eigen::VectorXd mu(L);
  for (Eigen::Index l = 0; l < L; ++l) mu[l] = lo + (hi - lo) * rng.uniform();
  return mu;
}

ProbeSet tall_er_probes(std::size_t extra) {
  auto topo = build_er(8, 0.45, 4);
  std::vector<std::size_t> all(8);
  for (std::size_t v = 0; v < 8; ++v) all[v] = v;
  return general_unicast_probes(topo, all, topo.link_count() + extra);
}

}  // namespace

TEST(AllocationTest, Validation) {
  EXPECT_NO_THROW(Allocation(vec({0.25, 0.75})));
  EXPECT_THROW(Allocation(vec({0.5, 0.6})), Error);
  EXPECT_THROW(Allocation(vec({-0.1, 1.1})), Error);
  const auto u = Allocation::uniform(4);
  EXPECT_DOUBLE_EQ(u[2], 0.25);
}

TEST(ProbeFim, UnicastEntryAndRank) {
  auto ps = canonical_star_unicast_probes(build_star(3));
  const auto mu = vec({0.9, 0.8, 0.7});
  std::size_t m12 = 0;
  for (std::size_t m = 0; m < 3; ++m) {
    const auto& l = ps.probes[m].path_links;
    if ((l[0] == 0 && l[1] == 1) || (l[0] == 1 && l[1] == 0)) m12 = m;
  }
  const auto fim = probe_fim(ps.probes[m12], mu);
  EXPECT_NEAR(fim(0, 0), (0.72 / 0.28) / 0.81, 1e-12);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(fim);
  lu.setThreshold(1e-10);
  EXPECT_EQ(lu.rank(), 1);
}

TEST(ProbeFim, UnicastMatchesScoreCovariance) {
  auto ps = canonical_star_unicast_probes(build_star(3));
  const auto mu = vec({0.9, 0.8, 0.7});
  const auto& probe = ps.probes[0];
  double nu = 1.0;
  for (auto l : probe.path_links) nu *= mu[static_cast<Eigen::Index>(l)];
  RngStream rng(99);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  constexpr int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.bernoulli(nu) ? 1.0 : 0.0;
    Eigen::VectorXd score = Eigen::VectorXd::Zero(3);
    const double dlog = (x - nu) / (nu * (1.0 - nu));
    for (auto l : probe.path_links) score[static_cast<Eigen::Index>(l)] = dlog * nu / mu[static_cast<Eigen::Index>(l)];
    cov += score * score.transpose();
  }
  cov /= n;
  const auto fim = probe_fim(probe, mu);
  for (auto a : probe.path_links) {
    for (auto b : probe.path_links) {
      EXPECT_NEAR(cov(a, b) / fim(a, b), 1.0, 0.01);
    }
  }
}

TEST(ProbeFim, RiDiagonal) {
  auto ps = ri_multicast_probes(build_star(3));
  const auto fim = probe_fim(ps.probes[0], vec({0.3, 0.5, 0.5}));
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
  expected(1, 1) = 4;
  expected(2, 2) = 4;
  EXPECT_LT((fim - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MixFim, VertexUniformAndLinearity) {
  auto ps = ri_multicast_probes(build_star(3));
  const auto mu = vec({0.5, 0.5, 0.5});
  const auto fims = probe_fims(ps, mu);
  EXPECT_LT((mix_fim(fims, vec({0, 1, 0})) - fims[1]).cwiseAbs().maxCoeff(), 1e-15);
  const auto uni = mix_fim(fims, Eigen::VectorXd::Constant(3, 1.0 / 3));
  EXPECT_LT((uni - Eigen::MatrixXd::Identity(3, 3) * (8.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-12);

  RngStream rng(1);
  auto cs = canonical_star_unicast_probes(build_star(5));
  const auto cf = probe_fims(cs, random_mu(rng, 5, 0.2, 0.9));
  const auto a = random_simplex(rng, 5), b = random_simplex(rng, 5);
  const double lambda = 0.3;
  const Eigen::MatrixXd lhs = mix_fim(cf, lambda * a + (1 - lambda) * b);
  const Eigen::MatrixXd rhs = lambda * mix_fim(cf, a) + (1 - lambda) * mix_fim(cf, b);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MixFim, PositiveSemidefinite) {
  RngStream rng(2);
  auto ps = tall_er_probes(4);
  const auto L = static_cast<Eigen::Index>(ps.link_count());
  for (int trial = 0; trial < 20; ++trial) {
    const auto fim = mix_fim(probe_fims(ps, random_mu(rng, L, 0.1, 0.95)),
                             random_simplex(rng, static_cast<Eigen::Index>(ps.size())));
    EXPECT_LT((fim - fim.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd x(L);
      for (Eigen::Index i = 0; i < L; ++i) x[i] = rng.uniform() - 0.5;
      EXPECT_GE(x.dot(fim * x), -1e-9);
    }
  }
}

TEST(Criterion, QuantumWorkedValue) {
  auto ps = ri_multicast_probes(build_star(3));
  const auto mu = vec({0.5, 0.5, 0.5});
  const auto phi = Eigen::VectorXd::Constant(3, 1.0 / 3);
  EXPECT_NEAR(criterion_value(mu, phi, ps, {}), 1.125, 1e-12);
  EXPECT_NEAR(generic_criterion_value(probe_fims(ps, mu), phi, CriterionKind::AOptimal), 1.125, 1e-12);
}

TEST(Criterion, ClosedFormsMatchGenericTrace) {
  RngStream rng(3);
  for (std::size_t L : {3u, 4u, 6u}) {
    auto cs = canonical_star_unicast_probes(build_star(L));
    auto rs = ri_multicast_probes(build_star(L));
    for (int trial = 0; trial < 20; ++trial) {
      const auto n = static_cast<Eigen::Index>(L);
      const auto mu = random_mu(rng, n, 0.1, 0.95);
      const auto phi = random_simplex(rng, n);
      const double a = criterion_value(mu, phi, cs, {});
      const double b = generic_criterion_value(probe_fims(cs, mu), phi, CriterionKind::AOptimal);
      EXPECT_NEAR(a / b, 1.0, 1e-8);
      const double c = criterion_value(mu, phi, rs, {});
      const double d = generic_criterion_value(probe_fims(rs, mu), phi, CriterionKind::AOptimal);
      EXPECT_NEAR(c / d, 1.0, 1e-8);
    }
  }
}

TEST(Criterion, DOptimalIsReciprocalDeterminant) {
  RngStream rng(4);
  auto cs = canonical_star_unicast_probes(build_star(4));
  const auto mu = random_mu(rng, 4, 0.2, 0.9);
  const auto phi = random_simplex(rng, 4);
  const double det = mix_fim(probe_fims(cs, mu), phi).determinant();
  EXPECT_NEAR(criterion_value(mu, phi, cs, {CriterionKind::DOptimal, 1e-6}) * det, 1.0, 1e-9);
}

TEST(Criterion, SingularIsInfinite) {
  auto cs = canonical_star_unicast_probes(build_star(3));
  const auto mu = vec({0.9, 0.8, 0.7});
  EXPECT_TRUE(std::isinf(criterion_value(mu, vec({0.5, 0.5, 0.0}), cs, {})));
  EXPECT_TRUE(std::isinf(generic_criterion_value(probe_fims(cs, mu), vec({0.5, 0.5, 0.0}), CriterionKind::AOptimal)));
  auto rs = ri_multicast_probes(build_star(3));
  EXPECT_TRUE(std::isinf(criterion_value(mu, vec({1.0, 0.0, 0.0}), rs, {})));
}

TEST(Criterion, ConvexAlongSegments) {
  RngStream rng(5);
  auto ps = tall_er_probes(3);
  const auto M = static_cast<Eigen::Index>(ps.size());
  const auto L = static_cast<Eigen::Index>(ps.link_count());
  for (auto kind : {CriterionKind::AOptimal, CriterionKind::DOptimal}) {
    for (int trial = 0; trial < 30; ++trial) {
      const auto mu = random_mu(rng, L, 0.2, 0.95);
      const Objective obj(ps, mu, kind);
      const auto a = random_simplex(rng, M), b = random_simplex(rng, M);
      const double fa = obj.value(a), fb = obj.value(b), fm = obj.value(0.5 * (a + b));
      if (kind == CriterionKind::DOptimal) {
        // 1/det is log-convex; check -log det, which is what the optimizer uses.
        EXPECT_LE(std::log(fm), 0.5 * (std::log(fa) + std::log(fb)) + 1e-9);
      } else {
        EXPECT_LE(fm, 0.5 * (fa + fb) * (1 + 1e-12));
      }
    }
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  RngStream rng(6);
  auto tall = tall_er_probes(3);
  auto rs = ri_multicast_probes(build_star(5));
  auto cs = canonical_star_unicast_probes(build_star(5));
  struct Case {
    const ProbeSet* ps;
    CriterionKind kind;
  };
  for (const auto& c : {Case{&tall, CriterionKind::AOptimal}, Case{&tall, CriterionKind::DOptimal},
                        Case{&rs, CriterionKind::DOptimal}, Case{&cs, CriterionKind::AOptimal},
                        Case{&rs, CriterionKind::AOptimal}}) {
    const auto M = static_cast<Eigen::Index>(c.ps->size());
    const auto mu = random_mu(rng, static_cast<Eigen::Index>(c.ps->link_count()), 0.2, 0.9);
    const Objective obj(*c.ps, mu, c.kind);
    const auto phi = random_simplex(rng, M);
    Eigen::VectorXd g;
    obj.gradient(phi, g);
    auto f = [&](const Eigen::VectorXd& p) {
      const double v = obj.value(p);
      return c.kind == CriterionKind::DOptimal ? std::log(v) : v;
    };
    // Directional derivatives along simplex-preserving directions e_i - e_j.
    for (Eigen::Index i = 0; i + 1 < M; ++i) {
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(M);
      dir[i] = 1;
      dir[i + 1] = -1;
      const double h = 1e-6;
      const double fd = (f(phi + h * dir) - f(phi - h * dir)) / (2 * h);
      EXPECT_NEAR(g.dot(dir), fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(StarAllocation, SymmetricAndNormalized) {
  for (std::size_t L : {3u, 5u, 9u}) {
    auto cs = canonical_star_unicast_probes(build_star(L));
    const auto n = static_cast<Eigen::Index>(L);
    const auto phi = star_a_optimal_allocation(Eigen::VectorXd::Constant(n, 0.8), cs.matrix);
    EXPECT_LT((phi.values().array() - 1.0 / static_cast<double>(L)).abs().maxCoeff(), 1e-12);
  }
  RngStream rng(7);
  auto cs = canonical_star_unicast_probes(build_star(6));
  const auto phi = star_a_optimal_allocation(random_mu(rng, 6, 0.1, 0.9), cs.matrix);
  EXPECT_NEAR(phi.values().sum(), 1.0, 1e-12);
  EXPECT_GT(phi.values().minCoeff(), 0.0);
}

TEST(StarAllocation, MatchesFrankWolfe) {
  auto cs = canonical_star_unicast_probes(build_star(3));
  const auto mu = vec({0.9, 0.8, 0.7});
  const auto closed = star_a_optimal_allocation(mu, cs.matrix);
  const auto fw = simplex_optimize(mu, cs, {}, {2000, nullptr, 0});
  EXPECT_LT((closed.values() - fw.values()).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(StarAllocation, ScalingInvariance) {
  RngStream rng(8);
  auto cs = canonical_star_unicast_probes(build_star(5));
  const auto mu = random_mu(rng, 5, 0.1, 0.9);
  const auto A = square_unicast_weights(mu, cs.matrix);
  const auto phi = star_a_optimal_allocation(mu, cs.matrix);
  Eigen::VectorXd scaled = (7.5 * A).cwiseSqrt();
  scaled /= scaled.sum();
  EXPECT_LT((scaled - phi.values()).cwiseAbs().maxCoeff(), 1e-14);
  // phi* minimizes sum A_m / phi_m: no random point does better.
  const double best = (A.array() / phi.values().array()).sum();
  for (int k = 0; k < 200; ++k) {
    const auto p = random_simplex(rng, 5);
    EXPECT_GE((A.array() / p.array()).sum(), best * (1 - 1e-12));
  }
}

TEST(QuantumAllocation, WorkedExamples) {
  const auto sym = quantum_a_optimal_allocation(vec({0.5, 0.5, 0.5}));
  EXPECT_LT((sym.values().array() - 1.0 / 3).abs().maxCoeff(), 1e-15);
  const auto elim = quantum_a_optimal_allocation(vec({0.5, 0.99, 0.99}));
  EXPECT_EQ(elim[0], 0.0);
  EXPECT_EQ(elim[1], 0.5);
  EXPECT_EQ(elim[2], 0.5);
}

TEST(QuantumAllocation, KktConditionsAndImprovement) {
  RngStream rng(9);
  auto rs = ri_multicast_probes(build_star(6));
  int eliminated = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd mu = random_mu(rng, 6, 0.1, 1.0).cwiseMin(0.999999);
    const auto phi = quantum_a_optimal_allocation(mu);
    const auto& p = phi.values();
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_LE(p.maxCoeff(), 1.0);
    const Eigen::ArrayXd s = (mu.array() * (1 - mu.array())).sqrt();
    double level = -1.0;
    for (Eigen::Index l = 0; l < 6; ++l) {
      if (p[l] > 0) {
        const double r = s[l] / (1 - p[l]);
        if (level < 0) level = r;
        EXPECT_NEAR(r, level, 1e-9 * level);
      }
    }
    for (Eigen::Index l = 0; l < 6; ++l) {
      if (p[l] == 0) {
        ++eliminated;
        EXPECT_GE(s[l], level * (1 - 1e-12));
      }
    }
    EXPECT_LE(criterion_value(mu, p, rs, {}), criterion_value(mu, Eigen::VectorXd::Constant(6, 1.0 / 6), rs, {}) + 1e-12);
  }
  EXPECT_GT(eliminated, 0);
}

TEST(SimplexOptimize, QuantumInteriorOptimum) {
  auto rs = ri_multicast_probes(build_star(4));
  const auto mu = vec({0.4, 0.6, 0.7, 0.5});
  const auto exact = quantum_a_optimal_allocation(mu);
  ASSERT_GT(exact.values().minCoeff(), 0.0);
  const auto fw = simplex_optimize(mu, rs, {}, {2000, nullptr, 0});
  EXPECT_LT((exact.values() - fw.values()).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(SimplexOptimize, DOptimalSymmetricIsUniform) {
  auto cs = canonical_star_unicast_probes(build_star(5));
  const auto fw = simplex_optimize(Eigen::VectorXd::Constant(5, 0.7), cs, {CriterionKind::DOptimal, 1e-6}, {2000, nullptr, 0});
  EXPECT_LT((fw.values().array() - 0.2).abs().maxCoeff(), 1e-3);
}

TEST(SimplexOptimize, TallSetSatisfiesOptimality) {
  RngStream rng(10);
  auto ps = tall_er_probes(4);
  const auto M = static_cast<Eigen::Index>(ps.size());
  const auto mu = random_mu(rng, static_cast<Eigen::Index>(ps.link_count()), 0.3, 0.95);
  const CriterionSpec spec{};
  const auto fw = simplex_optimize(mu, ps, spec, {20000, nullptr, 0});
  const Objective obj(ps, mu, spec.kind);
  const double f = obj.value(fw.values());
  for (int k = 0; k < 200; ++k) {
    EXPECT_GE(obj.value(random_simplex(rng, M)), f * (1 - 1e-9));
  }
  // Warm start from the optimum stays put.
  const auto again = simplex_optimize(mu, ps, spec, {100, &fw.values(), 100});
  EXPECT_LE(obj.value(again.values()), f * 1.01);
  EXPECT_TRUE(Allocator(ps, spec).closed_form() == false);
}

TEST(SimplexOptimize, DeterministicAndFloored) {
  auto ps = tall_er_probes(2);
  const auto mu = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(ps.link_count()), 0.8);
  const auto a = simplex_optimize(mu, ps, {}, {500, nullptr, 0});
  const auto b = simplex_optimize(mu, ps, {}, {500, nullptr, 0});
  EXPECT_EQ(a.values(), b.values());
  EXPECT_GE(a.values().minCoeff(), 1e-6 * (1 - 1e-9));
  EXPECT_THROW(simplex_optimize(mu, ps, {CriterionKind::AOptimal, 0.5}, {}), Error);
}

TEST(AllocatorTest, Dispatch) {
  auto cs = canonical_star_unicast_probes(build_star(5));
  auto rs = ri_multicast_probes(build_star(5));
  EXPECT_TRUE(Allocator(cs, {}).closed_form());
  EXPECT_TRUE(Allocator(rs, {}).closed_form());
  EXPECT_FALSE(Allocator(cs, {CriterionKind::DOptimal, 1e-6}).closed_form());
  const auto mu = vec({0.3, 0.5, 0.7, 0.9, 0.6});
  EXPECT_EQ(Allocator(rs, {})(mu).values(), quantum_a_optimal_allocation(mu).values());
  EXPECT_EQ(Allocator(cs, {})(mu).values(), star_a_optimal_allocation(mu, cs.matrix).values());
}
