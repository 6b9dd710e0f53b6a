#pragma once

// Comparison denoisers: neighbourhood averaging, lazy diffusion (MAGIC-style),
// band-limit projections and nuclear-norm shrinkage of grid signals.

#include <Eigen/Dense>

#include "gsd/errors.hpp"
#include "gsd/graph.hpp"
#include "gsd/spectral.hpp"

namespace gsd {

struct GridShape {
  Index height = 0;
  Index width = 0;
  Index size() const noexcept { return height * width; }
};

/// t rounds of f(a) <- sum_b w(a,b) f(b) / deg(a).
inline Signal local_average(const Eigen::Ref<const Eigen::VectorXd>& g, const Graph& graph, int t) {
  detail::require_length(g, graph.num_vertices(), "local_average");
  if (t < 0) throw InvalidArgument("t must be >= 0");
  Signal f = g;
  const Eigen::ArrayXd inv_deg = graph.degrees().array().inverse();
  for (int i = 0; i < t; ++i) f = (adjacency_apply(graph, f).array() * inv_deg).matrix();
  return f;
}

/// ((I + D^{-1} A) / 2)^t g: (1 - lambda/2)^t on the random-walk normalised spectrum.
inline Signal magic_filter(const Eigen::Ref<const Eigen::VectorXd>& g, const Graph& graph, int t) {
  detail::require_length(g, graph.num_vertices(), "magic_filter");
  if (t < 0) throw InvalidArgument("t must be >= 0");
  Signal f = g;
  const Eigen::ArrayXd inv_deg = graph.degrees().array().inverse();
  for (int i = 0; i < t; ++i) f = 0.5 * (f.array() + adjacency_apply(graph, f).array() * inv_deg).matrix();
  return f;
}

enum class Band { low, high };

/// Keeps the k lowest or highest frequency coefficients.
inline Signal band_filter(const Eigen::Ref<const Eigen::VectorXd>& g, const SpectralBasis& basis, Index k, Band keep) {
  if (keep == Band::low) return apply_filter(basis, filters::BandLow{k}, g);
  return apply_filter(basis, filters::BandHigh{k}, g);
}

/// Row-major reshape: vertex id r * width + c.
inline Eigen::MatrixXd as_grid_matrix(const Eigen::Ref<const Eigen::VectorXd>& g, const GridShape& shape) {
  if (shape.height < 1 || shape.width < 1 || shape.size() != g.size()) {
    throw InvalidArgument("grid shape does not match the signal length");
  }
  Eigen::MatrixXd m(shape.height, shape.width);
  for (Index r = 0; r < shape.height; ++r) {
    for (Index c = 0; c < shape.width; ++c) m(r, c) = g(r * shape.width + c);
  }
  return m;
}

inline Signal from_grid_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Signal g(m.size());
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) g(r * m.cols() + c) = m(r, c);
  }
  return g;
}

/// argmin 0.5 ||f - g||_F^2 + tau ||f||_* by singular value soft-thresholding.
inline Signal nuclear_norm_denoise(const Eigen::Ref<const Eigen::VectorXd>& g, const GridShape& shape, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("tau must be >= 0");
  const Eigen::MatrixXd m = as_grid_matrix(g, shape);
  if (tau == 0.0) return g;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = (svd.singularValues().array() - tau).cwiseMax(0.0).matrix();
  return from_grid_matrix(svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose());
}

}  // namespace gsd
