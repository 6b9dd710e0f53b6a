#include <random>

#include <gtest/gtest.h>

#include "gsd/linsolve.hpp"
#include "support/oracles.hpp"

using gsd::Graph;
using gsd::Index;
using gsd::SddOperator;
using gsd::VertexSet;

namespace {

Graph path3() { return Graph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}}); }

Eigen::MatrixXd dense_principal(const Eigen::MatrixXd& m, const VertexSet& u) {
  Eigen::MatrixXd out(u.size(), u.size());
  for (Index i = 0; i < u.size(); ++i) {
    for (Index j = 0; j < u.size(); ++j) out(i, j) = m(u[i], u[j]);
  }
  return out;
}

}  // namespace

TEST(Pcg, SolvesDenseSpdSystem) {
  std::mt19937_64 rng(31);
  const Eigen::MatrixXd r = Eigen::MatrixXd::NullaryExpr(30, 30, [&] { return std::normal_distribution<double>()(rng); });
  const Eigen::MatrixXd a = r * r.transpose() + 30.0 * Eigen::MatrixXd::Identity(30, 30);
  const Eigen::VectorXd b = oracle::random_vector(30, rng);
  const auto rep = gsd::pcg([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(a * x); }, b, a.diagonal());
  EXPECT_TRUE(rep.converged);
  EXPECT_LT(oracle::relative_diff(rep.solution, a.ldlt().solve(b)), 1e-8);
}

TEST(Pcg, ZeroRhsAndCapBehaviour) {
  const Eigen::MatrixXd a = Eigen::Vector3d(1.0, 10.0, 100.0).asDiagonal();
  auto apply = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(a * x); };
  const auto zero = gsd::pcg(apply, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3));
  EXPECT_TRUE(zero.converged);
  EXPECT_EQ(zero.solution, Eigen::VectorXd::Zero(3));
  const auto capped = gsd::pcg(apply, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3), gsd::CgOptions{1e-14, 1});
  EXPECT_FALSE(capped.converged);
  EXPECT_EQ(capped.iterations, 1);
  EXPECT_GT(capped.relative_residual, 0.0);
}

TEST(Pcg, DetectsIndefiniteOperator) {
  const Eigen::MatrixXd a = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  EXPECT_THROW(gsd::pcg([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(a * x); }, Eigen::Vector2d(0.0, 1.0),
                        Eigen::VectorXd::Ones(2)),
               gsd::NotPositiveDefinite);
}

TEST(SddOperatorTest, ShiftedMatchesDense) {
  std::mt19937_64 rng(32);
  const Graph g = oracle::random_connected_graph(20, 30, rng);
  Eigen::VectorXd d = oracle::random_vector(20, rng).cwiseAbs();
  const auto op = SddOperator::shifted(g, d, 0.8);
  const Eigen::MatrixXd m = Eigen::MatrixXd(d.asDiagonal()) + 0.8 * oracle::dense_laplacian(g);
  const Eigen::VectorXd x = oracle::random_vector(20, rng);
  EXPECT_LT(oracle::relative_diff(op.apply(x), m * x), 1e-12);
  EXPECT_LT((op.diagonal() - m.diagonal()).norm(), 1e-12);
}

TEST(SddOperatorTest, PositiveDefinitenessAgreesWithEigenvalues) {
  std::mt19937_64 rng(33);
  int pd = 0, singular = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = 3 + static_cast<Index>(rng() % 10);
    const Graph g = oracle::random_connected_graph(n, static_cast<Index>(rng() % n), rng);
    const auto u = VertexSet::where(n, [&](Index) { return rng() % 3 != 0; });
    if (u.empty()) continue;
    Eigen::VectorXd d = Eigen::VectorXd::Zero(u.size());
    if (rng() % 2) d(static_cast<Index>(rng() % u.size())) = 0.5;
    const double tau = (rng() % 5 == 0) ? 0.0 : 1.3;
    const auto op = SddOperator::principal(g, u, tau, d);
    const Eigen::MatrixXd m = Eigen::MatrixXd(d.asDiagonal()) + tau * dense_principal(oracle::dense_laplacian(g), u);
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
    const bool expected = lmin > 1e-9;
    EXPECT_EQ(op.positive_definite(), expected) << "trial " << trial << " lmin " << lmin;
    (expected ? pd : singular)++;
  }
  EXPECT_GT(pd, 20);
  EXPECT_GT(singular, 20);
}

TEST(SddOperatorTest, RejectsBadArguments) {
  const Graph g = path3();
  EXPECT_THROW(SddOperator::shifted(g, Eigen::VectorXd::Zero(2), 1.0), gsd::InvalidArgument);
  EXPECT_THROW(SddOperator::shifted(g, Eigen::VectorXd::Zero(3), -1.0), gsd::InvalidArgument);
  EXPECT_THROW(SddOperator::shifted(g, -Eigen::VectorXd::Ones(3), 1.0), gsd::InvalidArgument);
}

TEST(CgSolve, PrincipalSubmatrixAgainstDenseSolve) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 30; ++trial) {
    const Graph g = oracle::random_connected_graph(40, 60, rng);
    const auto u = VertexSet::where(40, [&](Index) { return rng() % 4 != 0; });
    const auto op = SddOperator::principal(g, u);
    if (!op.positive_definite()) continue;
    const Eigen::VectorXd b = oracle::random_vector(u.size(), rng);
    const Eigen::MatrixXd m = dense_principal(oracle::dense_laplacian(g), u);
    const auto rep = gsd::cg_solve(op, b, 1e-12);
    EXPECT_LT(oracle::relative_diff(rep.solution, m.ldlt().solve(b)), 1e-8);
  }
}

TEST(CgSolve, SingularAndCapErrors) {
  const Graph g = path3();
  EXPECT_THROW(gsd::cg_solve(SddOperator::principal(g, VertexSet::all(3)), Eigen::VectorXd::Ones(3)), gsd::NotPositiveDefinite);
  const Graph big = gsd::build_grid_graph(20, 20);
  const auto op = SddOperator::shifted(big, Eigen::VectorXd::Constant(400, 1e-3), 1.0);
  try {
    gsd::cg_solve(op, Eigen::VectorXd::LinSpaced(400, -1.0, 1.0), 1e-12, 2);
    FAIL() << "expected MaxIterationsReached";
  } catch (const gsd::MaxIterationsReached& e) {
    EXPECT_EQ(e.best().iterations, 2);
    EXPECT_FALSE(e.best().converged);
    EXPECT_EQ(e.best().solution.size(), 400);
  }
}

TEST(Harmonic, PathExamples) {
  const Graph g = path3();
  const auto ends = VertexSet::from_ids({0, 2}, 3);
  EXPECT_LT((gsd::harmonic_interpolate(g, ends, Eigen::Vector2d(0.0, 2.0)) - Eigen::Vector3d(0.0, 1.0, 2.0)).norm(), 1e-10);
  const auto all = VertexSet::all(3);
  EXPECT_EQ(gsd::harmonic_interpolate(g, all, Eigen::Vector3d(4.0, 5.0, 6.0)), Eigen::Vector3d(4.0, 5.0, 6.0));
  EXPECT_THROW(gsd::harmonic_interpolate(g, VertexSet::none(3), Eigen::VectorXd(0)), gsd::SingularSystem);
}

TEST(Harmonic, ConstantsAreReproducedAndMaximumPrincipleHolds) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = oracle::random_connected_graph(30, 40, rng);
    const auto s = VertexSet::where(30, [&](Index a) { return a == 0 || rng() % 3 == 0; });
    const Eigen::VectorXd c = gsd::harmonic_interpolate(g, s, Eigen::VectorXd::Constant(s.size(), 3.25));
    EXPECT_LT((c.array() - 3.25).abs().maxCoeff(), 1e-9);
    const Eigen::VectorXd obs = oracle::random_vector(s.size(), rng);
    const Eigen::VectorXd f = gsd::harmonic_interpolate(g, s, obs);
    EXPECT_LE(f.maxCoeff(), obs.maxCoeff() + 1e-9);
    EXPECT_GE(f.minCoeff(), obs.minCoeff() - 1e-9);
    const Eigen::VectorXd lf = gsd::laplacian_apply(g, f);
    for (Index a : s.complement().members()) EXPECT_NEAR(lf(a), 0.0, 1e-8);
  }
}
