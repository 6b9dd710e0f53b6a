#include <random>

#include <gtest/gtest.h>

#include "gsd/spectral.hpp"
#include "support/oracles.hpp"

using gsd::Graph;
using gsd::Index;

namespace {

Graph path3() { return Graph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}}); }

}  // namespace

TEST(Eigendecompose, PathOfThree) {
  const auto basis = gsd::eigendecompose(path3());
  EXPECT_NEAR(basis.lambdas(0), 0.0, 1e-15);
  EXPECT_NEAR(basis.lambdas(1), 1.0, 1e-12);
  EXPECT_NEAR(basis.lambdas(2), 3.0, 1e-12);
  for (Index i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(basis.psi(i, 0), 1.0 / std::sqrt(3.0));
  const Eigen::Vector3d psi1(1.0 / std::sqrt(2.0), 0.0, -1.0 / std::sqrt(2.0));
  EXPECT_LT(std::min((basis.psi.col(1) - psi1).norm(), (basis.psi.col(1) + psi1).norm()), 1e-12);
}

TEST(Eigendecompose, OrthonormalAndDiagonalisesDenseOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = oracle::random_connected_graph(10 + trial * 4, 20 + trial * 5, rng);
    const auto basis = gsd::eigendecompose(g);
    const Index n = g.num_vertices();
    EXPECT_LT((basis.psi.transpose() * basis.psi - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
    const Eigen::MatrixXd l = oracle::dense_laplacian(g);
    EXPECT_LT((l * basis.psi - basis.psi * basis.lambdas.asDiagonal()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(basis.lambdas(0), 0.0);
    for (Index i = 1; i < n; ++i) {
      EXPECT_GE(basis.lambdas(i), basis.lambdas(i - 1));
      Index arg = 0;
      basis.psi.col(i).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(basis.psi(arg, i), 0.0) << "sign convention, column " << i;
    }
  }
}

TEST(Eigendecompose, RespectsDenseCap) {
  const Graph g = gsd::build_grid_graph(4, 4);
  EXPECT_THROW(gsd::eigendecompose(g, 15), gsd::TooLarge);
  EXPECT_NO_THROW(gsd::eigendecompose(g, 16));
}

TEST(Gft, RoundTripAndParseval) {
  std::mt19937_64 rng(22);
  const Graph g = oracle::random_connected_graph(30, 50, rng);
  const auto basis = gsd::eigendecompose(g);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd f = oracle::random_vector(30, rng);
    const Eigen::VectorXd c = gsd::gft(basis, f);
    EXPECT_LT(oracle::relative_diff(gsd::igft(basis, c), f), 1e-10);
    EXPECT_NEAR(c.norm(), f.norm(), 1e-10 * f.norm());
    EXPECT_NEAR(c(0), f.sum() / std::sqrt(30.0), 1e-10 * f.norm());
  }
}

TEST(Gft, ConstantSignalHasOnlyDcCoefficient) {
  const auto basis = gsd::eigendecompose(path3());
  const Eigen::VectorXd c = gsd::gft(basis, Eigen::VectorXd::Constant(3, 2.0));
  EXPECT_NEAR(c(0), 2.0 * std::sqrt(3.0), 1e-12);
  EXPECT_LT(c.tail(2).norm(), 1e-12);
}

TEST(Gft, DirichletEnergyIsWeightedSpectrum) {
  std::mt19937_64 rng(23);
  const Graph g = oracle::random_connected_graph(25, 30, rng);
  const auto basis = gsd::eigendecompose(g);
  const Eigen::VectorXd f = oracle::random_vector(25, rng);
  const Eigen::VectorXd c = gsd::gft(basis, f);
  const double e = gsd::dirichlet_energy(g, f);
  EXPECT_NEAR(e, basis.lambdas.dot(c.cwiseAbs2()), 1e-10 * e);
}

TEST(Filters, IdentityFiltersReturnInput) {
  std::mt19937_64 rng(24);
  const Graph g = oracle::random_connected_graph(20, 25, rng);
  const auto basis = gsd::eigendecompose(g);
  const Eigen::VectorXd f = oracle::random_vector(20, rng);
  EXPECT_LT(oracle::relative_diff(gsd::apply_filter(basis, gsd::filters::GaussianMap{0.0}, f), f), 1e-10);
  EXPECT_LT(oracle::relative_diff(gsd::apply_filter(basis, gsd::filters::Magic{0}, f), f), 1e-10);
  EXPECT_LT(oracle::relative_diff(gsd::apply_filter(basis, gsd::filters::BandLow{20}, f), f), 1e-10);
  EXPECT_LT(oracle::relative_diff(gsd::apply_filter(basis, gsd::filters::BandHigh{20}, f), f), 1e-10);
}

TEST(Filters, GaussianMapMatchesDenseSolve) {
  std::mt19937_64 rng(25);
  const Graph g = oracle::random_connected_graph(20, 25, rng);
  const auto basis = gsd::eigendecompose(g);
  const Eigen::VectorXd f = oracle::random_vector(20, rng);
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(20, 20) + 0.7 * oracle::dense_laplacian(g);
  EXPECT_LT(oracle::relative_diff(gsd::apply_filter(basis, gsd::filters::GaussianMap{0.7}, f), m.ldlt().solve(f)), 1e-10);
}

TEST(Filters, BandsSplitTheSignal) {
  std::mt19937_64 rng(26);
  const Graph g = oracle::random_connected_graph(20, 25, rng);
  const auto basis = gsd::eigendecompose(g);
  const Eigen::VectorXd f = oracle::random_vector(20, rng);
  const Eigen::VectorXd low = gsd::apply_filter(basis, gsd::filters::BandLow{7}, f);
  const Eigen::VectorXd high = gsd::apply_filter(basis, gsd::filters::BandHigh{13}, f);
  EXPECT_LT(oracle::relative_diff(low + high, f), 1e-10);
  EXPECT_NEAR(low.dot(high), 0.0, 1e-10 * f.squaredNorm());
}

TEST(Filters, TableAndFunctionAgree) {
  const auto basis = gsd::eigendecompose(gsd::build_grid_graph(3, 4));
  std::vector<double> table(12);
  for (Index i = 0; i < 12; ++i) table[static_cast<std::size_t>(i)] = std::exp(-basis.lambdas(i));
  const auto a = gsd::filter_response(basis, gsd::filters::Table{table});
  const auto b = gsd::filter_response(basis, gsd::filters::Function{[](double l) { return std::exp(-l); }});
  EXPECT_LT((a - b).norm(), 1e-15);
}

TEST(Filters, RejectsInvalidSpecs) {
  const auto basis = gsd::eigendecompose(path3());
  EXPECT_THROW(gsd::filter_response(basis, gsd::filters::GaussianMap{-1.0}), gsd::InvalidArgument);
  EXPECT_THROW(gsd::filter_response(basis, gsd::filters::BandLow{4}), gsd::InvalidArgument);
  EXPECT_THROW(gsd::filter_response(basis, gsd::filters::Table{{1.0, 2.0}}), gsd::InvalidArgument);
  EXPECT_THROW(gsd::filter_response(basis, gsd::filters::Function{[](double l) { return 1.0 / l; }}),
               gsd::InvalidArgument);
}

TEST(Prior, SampleHasRequestedMeanAndIsReproducible) {
  const auto basis = gsd::eigendecompose(gsd::build_grid_graph(6, 6));
  const auto a = gsd::sample_prior(basis, 0.5, 12.0, std::uint64_t{7});
  const auto b = gsd::sample_prior(basis, 0.5, 12.0, std::uint64_t{7});
  EXPECT_EQ(a, b);
  EXPECT_NEAR(a.mean(), 12.0 / 6.0, 1e-12);
  EXPECT_THROW(gsd::sample_prior(basis, 0.0, 0.0, std::uint64_t{1}), gsd::InvalidArgument);
}

TEST(Prior, EmpiricalEnergyMatchesExpectation) {
  // E[f'Lf] = sum_{i>=1} lambda_i / (2 kappa lambda_i) = (n - 1) / (2 kappa).
  const Graph g = gsd::build_grid_graph(5, 5);
  const auto basis = gsd::eigendecompose(g);
  const double kappa = 2.0;
  std::mt19937_64 rng(27);
  double acc = 0.0;
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) acc += gsd::dirichlet_energy(g, gsd::sample_prior(basis, kappa, 0.0, rng));
  EXPECT_NEAR(acc / draws, 24.0 / (2.0 * kappa), 0.05 * 24.0 / (2.0 * kappa));
}

TEST(MapErrorCovariance, FormulaAndLimits) {
  const auto basis = gsd::eigendecompose(path3());
  const auto d = gsd::map_error_covariance_diag(basis, 0.5, 2.0);
  EXPECT_EQ(d(0), 0.0);
  EXPECT_NEAR(d(1), 2.0 / (2.0 * 0.5 * 2.0 * 1.0 + 1.0), 1e-12);
  EXPECT_NEAR(d(2), 2.0 / (2.0 * 0.5 * 2.0 * 3.0 + 1.0), 1e-12);
  const auto z = gsd::map_error_covariance_diag(basis, 0.0, 2.0);
  EXPECT_NEAR(z(2), 2.0, 1e-15);
}
