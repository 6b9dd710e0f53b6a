#include <cstdio>
#include <random>

#include <gtest/gtest.h>

#include "gsd/spectral.hpp"
#include "gsd/uniform.hpp"
#include "support/oracles.hpp"

using gsd::Graph;
using gsd::Index;

namespace {

Graph edge() { return Graph::from_edges(2, {{0, 1, 1.0}}); }

double pair_loss(double kappa, double f0, double f1) { return kappa * (f0 - f1) * (f0 - f1) + std::log(f0) + std::log(f1); }

oracle::GridMin pair_grid(double kappa, double g0, double g1) {
  return oracle::grid_minimize_2d([&](double a, double b) { return pair_loss(kappa, a, b); }, g0, g0 + 5.0, g1, g1 + 5.0, 1e-3);
}

// Ground truth from the prior (shifted positive), observed through uniform scaling.
struct Instance {
  Graph graph;
  Eigen::VectorXd truth;
  Eigen::VectorXd observed;
};

Instance prior_instance(Index side, double kappa, std::uint64_t seed) {
  Graph g = gsd::build_grid_graph(side, side);
  const auto basis = gsd::eigendecompose(g);
  std::mt19937_64 rng(seed);
  Eigen::VectorXd f = gsd::sample_prior(basis, kappa, 100.0 * static_cast<double>(side), rng);
  f = f.cwiseMax(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd obs = f;
  for (Index a = 0; a < f.size(); ++a) obs(a) *= u(rng);
  return {std::move(g), std::move(f), std::move(obs)};
}

}  // namespace

TEST(UniformLoss, Examples) {
  EXPECT_DOUBLE_EQ(gsd::uniform_loss(Eigen::Vector2d(1.0, 1.0), edge(), 1.0), 0.0);
  EXPECT_NEAR(gsd::uniform_loss(Eigen::Vector2d(std::exp(1.0), std::exp(1.0)), edge(), 1.0), 2.0, 1e-15);
}

TEST(UniformLoss, DenseOracle) {
  std::mt19937_64 rng(51);
  const Graph g = oracle::random_connected_graph(20, 30, rng);
  const Eigen::MatrixXd l = oracle::dense_laplacian(g);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd f = oracle::random_vector(20, rng, 2.0);
    f(3) = 0.0;
    double expected = 0.7 * f.dot(l * f);
    for (Index a = 0; a < 20; ++a) expected += f(a) != 0.0 ? std::log(std::abs(f(a))) : 0.0;
    EXPECT_NEAR(gsd::uniform_loss(f, g, 0.7), expected, 1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST(UniformLoss, RejectsInfeasible) {
  EXPECT_THROW(gsd::uniform_loss(Eigen::Vector2d(0.5, 1.0), edge(), 1.0, Eigen::Vector2d(1.0, 1.0)), gsd::InvalidArgument);
  EXPECT_THROW(gsd::uniform_loss(Eigen::Vector2d(-1.0, 1.0), edge(), 1.0, Eigen::Vector2d(1.0, 1.0)), gsd::InvalidArgument);
  EXPECT_THROW(gsd::uniform_loss(Eigen::Vector2d(1.0, 0.1), edge(), 1.0, Eigen::Vector2d(1.0, 0.0)), gsd::InvalidArgument);
  EXPECT_NO_THROW(gsd::uniform_loss(Eigen::Vector2d(-2.0, 0.0), edge(), 1.0, Eigen::Vector2d(-1.0, 0.0)));
}

TEST(FeasibleRegion, ContainsObservationAndProjects) {
  const Eigen::Vector3d g(2.0, -1.0, 0.0);
  const auto r = gsd::UniformFeasibleRegion::from_observation(g);
  EXPECT_TRUE(r.contains(g));
  EXPECT_EQ(r.project(Eigen::Vector3d(1.0, 3.0, 4.0)), g);
  EXPECT_EQ(r.project(Eigen::Vector3d(5.0, -7.0, 0.0)), Eigen::Vector3d(5.0, -7.0, 0.0));
}

TEST(Ccp, ConstantPositiveObservationIsStationary) {
  const Graph g = gsd::build_grid_graph(4, 4);
  const Eigen::VectorXd obs = Eigen::VectorXd::Constant(16, 3.0);
  const auto res = gsd::ccp_denoise(obs, g, 1.0);
  EXPECT_LT((res.signal - obs).cwiseAbs().maxCoeff(), 1e-9);
  // First-order conditions at the lower corner: gradient 1/f > 0 points into the box.
  const Eigen::VectorXd grad = 2.0 * gsd::laplacian_apply(g, obs) + obs.cwiseInverse();
  EXPECT_GT(grad.minCoeff(), 0.0);
}

TEST(Ccp, TwoVertexInstancesMatchGridSearch) {
  for (const auto& [kappa, g0, g1] : {std::tuple{1.0, 1.0, 0.2}, std::tuple{5.0, 1.0, 0.2}, std::tuple{2.0, 0.5, 1.5},
                                      std::tuple{10.0, 0.3, 2.0}}) {
    const auto res = gsd::ccp_denoise(Eigen::Vector2d(g0, g1), edge(), kappa);
    const auto best = pair_grid(kappa, g0, g1);
    EXPECT_NEAR(res.signal(0), best.x, 1e-2) << "kappa " << kappa;
    EXPECT_NEAR(res.signal(1), best.y, 1e-2) << "kappa " << kappa;
    EXPECT_LE(gsd::uniform_loss(res.signal, edge(), kappa), best.value + 1e-6);
  }
}

TEST(Ccp, ThreeVertexPathMatchesCoarseSearch) {
  const Graph g = Graph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const Eigen::Vector3d obs(1.0, 0.3, 0.8);
  const double kappa = 4.0;
  const auto res = gsd::ccp_denoise(obs, g, kappa);
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector3d arg;
  for (double a = obs(0); a <= obs(0) + 2.0; a += 5e-3) {
    for (double b = obs(1); b <= obs(1) + 2.0; b += 5e-3) {
      for (double c = obs(2); c <= obs(2) + 2.0; c += 5e-3) {
        const double v = gsd::uniform_loss(Eigen::Vector3d(a, b, c), g, kappa);
        if (v < best) {
          best = v;
          arg = Eigen::Vector3d(a, b, c);
        }
      }
    }
  }
  EXPECT_LT((res.signal - arg).cwiseAbs().maxCoeff(), 1e-2);
  EXPECT_LE(gsd::uniform_loss(res.signal, g, kappa), best + 1e-6);
}

TEST(Ccp, ZerosStayZeroAndNegativesStayNegative) {
  const Graph g = gsd::build_grid_graph(3, 3);
  Eigen::VectorXd obs(9);
  obs << 1.0, 0.0, 2.0, -1.0, 0.5, 0.0, -0.3, 1.5, 2.0;
  const auto res = gsd::ccp_denoise(obs, g, 0.5);
  const auto box = gsd::UniformFeasibleRegion::from_observation(obs);
  EXPECT_TRUE(box.contains(res.signal));
  EXPECT_EQ(res.signal(1), 0.0);
  EXPECT_EQ(res.signal(5), 0.0);
}

TEST(Ccp, DescentAndFeasibilityOnRandomInstances) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = oracle::random_connected_graph(30, 40, rng);
    Eigen::VectorXd obs = oracle::random_vector(30, rng, 3.0);
    obs(0) = 0.0;
    gsd::CcpOptions opt;
    opt.jitter = 0.5;
    opt.seed = static_cast<std::uint64_t>(trial);
    const auto res = gsd::ccp_denoise(obs, g, 0.3, opt);
    EXPECT_TRUE(gsd::UniformFeasibleRegion::from_observation(obs).contains(res.signal));
    for (std::size_t t = 1; t < res.trace.size(); ++t) EXPECT_LE(res.trace[t].loss, res.trace[t - 1].loss + 1e-12);
    EXPECT_NEAR(gsd::uniform_loss(res.signal, g, 0.3), res.trace.back().loss, 1e-9 * std::abs(res.trace.back().loss) + 1e-12);
  }
}

TEST(Ccp, SeedMakesJitterDeterministic) {
  const Graph g = gsd::build_grid_graph(5, 5);
  const Eigen::VectorXd obs = Eigen::VectorXd::LinSpaced(25, 0.5, 3.0);
  gsd::CcpOptions opt;
  opt.jitter = 1.0;
  opt.seed = 99;
  EXPECT_EQ(gsd::ccp_denoise(obs, g, 1.0, opt).signal, gsd::ccp_denoise(obs, g, 1.0, opt).signal);
}

TEST(Ccp, RejectsBadKappa) {
  EXPECT_THROW(gsd::ccp_denoise(Eigen::Vector2d(1.0, 1.0), edge(), 0.0), gsd::InvalidArgument);
  EXPECT_THROW(gsd::projected_gradient_denoise(Eigen::Vector2d(1.0, 1.0), edge(), -1.0), gsd::InvalidArgument);
}

TEST(ProjectedGradient, ZeroIterationsReturnsStrictlyFeasibleStart) {
  const Eigen::Vector3d obs(1.0, -2.0, 0.0);
  const Graph g = Graph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  gsd::ProjectedGradientOptions opt;
  opt.max_iter = 0;
  const auto res = gsd::projected_gradient_denoise(obs, g, 1.0, opt);
  EXPECT_GT(res.signal(0), 1.0);
  EXPECT_LT(res.signal(1), -2.0);
  EXPECT_EQ(res.signal(2), 0.0);
  EXPECT_EQ(res.trace.size(), 1u);
}

TEST(ProjectedGradient, OptimalInputStaysPut) {
  const double kappa = 1.0;
  const auto best = pair_grid(kappa, 1.0, 0.2);
  const auto res = gsd::projected_gradient_denoise(Eigen::Vector2d(best.x, best.y), edge(), kappa);
  EXPECT_NEAR(res.signal(0), best.x, 1e-2);
  EXPECT_NEAR(res.signal(1), best.y, 1e-2);
}

TEST(ProjectedGradient, FinalLossNotAboveInitial) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = oracle::random_connected_graph(25, 30, rng);
    const Eigen::VectorXd obs = oracle::random_vector(25, rng, 5.0);
    gsd::ProjectedGradientOptions opt;
    opt.step = 0.05;
    const auto res = gsd::projected_gradient_denoise(obs, g, 0.2, opt);
    EXPECT_LE(gsd::uniform_loss(res.signal, g, 0.2), res.trace.front().loss);
    EXPECT_TRUE(gsd::UniformFeasibleRegion::from_observation(obs).contains(res.signal));
  }
}

TEST(ProjectedGradient, DivergenceCarriesTrace) {
  // A huge step on a tiny observation blows the iterate up until the loss overflows.
  const Graph g = gsd::build_grid_graph(3, 3);
  Eigen::VectorXd obs = Eigen::VectorXd::Constant(9, 1e-300);
  obs(4) = 1e300;
  gsd::ProjectedGradientOptions opt;
  opt.step = 1e10;
  try {
    gsd::projected_gradient_denoise(obs, g, 1e10, opt);
    FAIL() << "expected DivergenceError";
  } catch (const gsd::DivergenceError& e) {
    EXPECT_FALSE(e.trace().empty());
  }
}

// A vertex is trapped when its observation kept under 1% of the truth and the
// solver left it on its lower bound.
bool has_trapped_vertex(const Instance& inst, const Eigen::VectorXd& f) {
  for (Index a = 0; a < f.size(); ++a)
    if (f(a) == inst.observed(a) && inst.observed(a) < 0.01 * inst.truth(a)) return true;
  return false;
}

TEST(UniformBenchmarkProperty, BothMethodsBeatTheGroundTruthLoss) {
  // Holds unless a near-zero observation traps the iterate (see the next test).
  const double kappa = 0.01;
  int beaten = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto inst = prior_instance(30, kappa, seed);
    const double truth_loss = gsd::uniform_loss(inst.truth, inst.graph, kappa);
    const auto ccp = gsd::ccp_denoise(inst.observed, inst.graph, kappa);
    const auto pg = gsd::projected_gradient_denoise(inst.observed, inst.graph, kappa);
    const double lc = gsd::uniform_loss(ccp.signal, inst.graph, kappa);
    const double lp = gsd::uniform_loss(pg.signal, inst.graph, kappa);
    if (lc <= truth_loss && lp <= truth_loss) {
      ++beaten;
    } else {
      EXPECT_TRUE(has_trapped_vertex(inst, ccp.signal)) << "seed " << seed;
    }
  }
  std::printf("ground truth beaten on %d of 6 seeds\n", beaten);
  EXPECT_GE(beaten, 3);
}

TEST(UniformBenchmarkProperty, TinyObservationTrapsTheIterate) {
  // The log term is concave, so a vertex whose observation is near zero is a
  // local minimum at its lower bound once 1/g exceeds the smoothing pull.
  // On a small grid that single vertex can cost more than the truth saves.
  const double kappa = 0.01;
  const auto inst = prior_instance(10, kappa, 2);
  const auto ccp = gsd::ccp_denoise(inst.observed, inst.graph, kappa);
  Index trapped = -1;
  for (Index a = 0; a < inst.observed.size(); ++a)
    if (inst.observed(a) < 1.0 && ccp.signal(a) == inst.observed(a)) trapped = a;
  ASSERT_GE(trapped, 0);
  const Eigen::VectorXd grad = 2.0 * kappa * gsd::laplacian_apply(inst.graph, ccp.signal) +
                               ccp.signal.cwiseInverse();
  EXPECT_GT(grad(trapped), 0.0);
  EXPECT_GT(gsd::uniform_loss(ccp.signal, inst.graph, kappa), gsd::uniform_loss(inst.truth, inst.graph, kappa));
}
