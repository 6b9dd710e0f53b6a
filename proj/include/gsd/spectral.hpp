#pragma once

// Dense reference path: full eigendecomposition of L, graph Fourier
// transform, spectral filters, prior sampling.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gsd/errors.hpp"
#include "gsd/graph.hpp"

namespace gsd {

inline constexpr Index kDefaultDenseCap = 3000;

/// Eigenvalues ascending (lambdas(0) = 0) and orthonormal eigenvectors as columns.
struct SpectralBasis {
  Eigen::VectorXd lambdas;
  Eigen::MatrixXd psi;

  Index size() const noexcept { return lambdas.size(); }
};

/// Dense n x n Laplacian. Reference path only.
inline Eigen::MatrixXd dense_laplacian(const Graph& g, Index cap = kDefaultDenseCap) {
  const Index n = g.num_vertices();
  if (n > cap) {
    throw TooLarge("dense Laplacian requested for n=" + std::to_string(n) + " (cap " + std::to_string(cap) +
                   "); use the iterative solver path instead");
  }
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges()) {
    l(e.a, e.b) -= e.w;
    l(e.b, e.a) -= e.w;
    l(e.a, e.a) += e.w;
    l(e.b, e.b) += e.w;
  }
  return l;
}

/**
 * @brief Full eigendecomposition of the graph Laplacian.
 *
 * Column 0 is set to exactly 1/sqrt(n) with eigenvalue 0; every other column
 * has its largest-magnitude entry made positive.
 * @throws TooLarge when n exceeds @p cap.
 */
inline SpectralBasis eigendecompose(const Graph& g, Index cap = kDefaultDenseCap) {
  const Eigen::MatrixXd l = dense_laplacian(g, cap);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigendecomposition did not converge");
  SpectralBasis basis{es.eigenvalues(), es.eigenvectors()};
  const Index n = basis.size();
  basis.lambdas(0) = 0.0;
  basis.psi.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  for (Index i = 1; i < n; ++i) {
    basis.lambdas(i) = std::max(basis.lambdas(i), 0.0);
    Index arg = 0;
    basis.psi.col(i).cwiseAbs().maxCoeff(&arg);
    if (basis.psi(arg, i) < 0.0) basis.psi.col(i) *= -1.0;
  }
  return basis;
}

/// f_hat(i) = <f, psi_i>.
inline Eigen::VectorXd gft(const SpectralBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& f) {
  detail::require_length(f, basis.size(), "gft");
  return basis.psi.transpose() * f;
}

inline Signal igft(const SpectralBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  detail::require_length(coeffs, basis.size(), "igft");
  return basis.psi * coeffs;
}

namespace filters {

/// h(lambda) = 1 / (1 + tau lambda).
struct GaussianMap {
  double tau = 0.0;
};
/// h(lambda) = (1 - lambda/2)^t.
struct Magic {
  int t = 0;
};
/// Keeps the k lowest-frequency coefficients.
struct BandLow {
  Index k = 0;
};
/// Keeps the k highest-frequency coefficients.
struct BandHigh {
  Index k = 0;
};
/// One response value per eigen-index.
struct Table {
  std::vector<double> h;
};
/// Arbitrary h(lambda).
struct Function {
  std::function<double(double)> h;
};

}  // namespace filters

using FilterSpec =
    std::variant<filters::GaussianMap, filters::Magic, filters::BandLow, filters::BandHigh, filters::Table, filters::Function>;

/// Per-index response h_i of a filter on the given basis.
inline Eigen::VectorXd filter_response(const SpectralBasis& basis, const FilterSpec& spec) {
  const Index n = basis.size();
  Eigen::VectorXd h(n);
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, filters::GaussianMap>) {
          if (s.tau < 0.0) throw InvalidArgument("gaussian-map filter needs tau >= 0");
          for (Index i = 0; i < n; ++i) h(i) = 1.0 / (1.0 + s.tau * basis.lambdas(i));
        } else if constexpr (std::is_same_v<S, filters::Magic>) {
          if (s.t < 0) throw InvalidArgument("magic filter needs t >= 0");
          for (Index i = 0; i < n; ++i) h(i) = std::pow(1.0 - 0.5 * basis.lambdas(i), s.t);
        } else if constexpr (std::is_same_v<S, filters::BandLow>) {
          if (s.k < 0 || s.k > n) throw InvalidArgument("band filter k out of range");
          for (Index i = 0; i < n; ++i) h(i) = i < s.k ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<S, filters::BandHigh>) {
          if (s.k < 0 || s.k > n) throw InvalidArgument("band filter k out of range");
          for (Index i = 0; i < n; ++i) h(i) = i >= n - s.k ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<S, filters::Table>) {
          if (static_cast<Index>(s.h.size()) != n) throw InvalidArgument("filter table length must equal n");
          for (Index i = 0; i < n; ++i) h(i) = s.h[static_cast<std::size_t>(i)];
        } else {
          if (!s.h) throw InvalidArgument("empty filter function");
          for (Index i = 0; i < n; ++i) h(i) = s.h(basis.lambdas(i));
        }
      },
      spec);
  if (!h.allFinite()) throw InvalidArgument("filter response is not finite on the spectrum");
  return h;
}

/// sum_i h(lambda_i) f_hat(i) psi_i.
inline Signal apply_filter(const SpectralBasis& basis, const FilterSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& f) {
  const Eigen::VectorXd h = filter_response(basis, spec);
  return igft(basis, h.cwiseProduct(gft(basis, f)));
}

/**
 * Draw from the smoothness prior: coefficient i >= 1 is N(0, 1/(2 kappa lambda_i)),
 * coefficient 0 is fixed to @p mean_coeff.
 */
template <class Engine>
Signal sample_prior(const SpectralBasis& basis, double kappa, double mean_coeff, Engine& rng) {
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd c(basis.size());
  c(0) = mean_coeff;
  for (Index i = 1; i < basis.size(); ++i) {
    if (!(basis.lambdas(i) > 0.0)) throw NumericalFailure("zero eigenvalue beyond index 0; graph spectrum is degenerate");
    c(i) = normal(rng) / std::sqrt(2.0 * kappa * basis.lambdas(i));
  }
  return igft(basis, c);
}

inline Signal sample_prior(const SpectralBasis& basis, double kappa, double mean_coeff, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_prior(basis, kappa, mean_coeff, rng);
}

/// Diagonal of the spectral covariance of the MAP error: sigma2 / (2 kappa sigma2 lambda_i + 1), 0 at i = 0.
inline Eigen::VectorXd map_error_covariance_diag(const SpectralBasis& basis, double kappa, double sigma2) {
  if (kappa < 0.0) throw InvalidArgument("kappa must be nonnegative");
  if (sigma2 < 0.0) throw InvalidArgument("sigma2 must be nonnegative");
  Eigen::VectorXd d(basis.size());
  d(0) = 0.0;
  for (Index i = 1; i < basis.size(); ++i) d(i) = sigma2 / (2.0 * kappa * sigma2 * basis.lambdas(i) + 1.0);
  return d;
}

}  // namespace gsd
