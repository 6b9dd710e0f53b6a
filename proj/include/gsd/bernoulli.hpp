#pragma once

// MAP denoising under Bernoulli dropout on a suspicion set zeta.
//
// With tau = (log(1-p) - log p) / kappa > 0 the update x = f(zeta) - g(zeta)
// minimises ||B(:,zeta) x + B g||^2 + tau * penalty(x), penalty = l1 or l0.
// With tau <= 0 the suspected values are discarded and refilled harmonically
// from the trusted set.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gsd/errors.hpp"
#include "gsd/graph.hpp"
#include "gsd/linsolve.hpp"
#include "gsd/result.hpp"

namespace gsd {

/// Column-access interface shared by the incidence restriction and dense test designs.
template <class D>
concept Design = requires(const D& d, Index j, const Eigen::VectorXd& v) {
  { d.rows() } -> std::convertible_to<Index>;
  { d.cols() } -> std::convertible_to<Index>;
  { d.column_norm2(j) } -> std::convertible_to<double>;
  { d.apply(v) } -> std::convertible_to<Eigen::VectorXd>;
  { d.transpose_apply(v) } -> std::convertible_to<Eigen::VectorXd>;
  d.for_each_in_column(j, [](Index, double) {});
};

/// Dense matrix adapter for the Design interface.
class DenseDesign {
 public:
  explicit DenseDesign(Eigen::MatrixXd m) : m_(std::move(m)) {}
  Index rows() const noexcept { return m_.rows(); }
  Index cols() const noexcept { return m_.cols(); }
  double column_norm2(Index j) const { return m_.col(j).squaredNorm(); }
  template <class Fn>
  void for_each_in_column(Index j, Fn&& fn) const {
    for (Index i = 0; i < m_.rows(); ++i) {
      if (m_(i, j) != 0.0) fn(i, m_(i, j));
    }
  }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return m_ * x; }
  Eigen::VectorXd transpose_apply(const Eigen::VectorXd& y) const { return m_.transpose() * y; }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }

 private:
  Eigen::MatrixXd m_;
};

static_assert(Design<DenseDesign>);
static_assert(Design<IncidenceColumns>);

/// Entries with |x| at or below this are reported (and stored) as exact zeros.
inline constexpr double kSupportThreshold = 1e-10;

struct SparseUpdate {
  Eigen::VectorXd x;
  std::vector<Index> support;
  /// ||design x - target||^2 + tau * penalty(x).
  double objective = 0.0;
  int iterations = 0;
  bool converged = true;
  std::vector<TracePoint> trace;
};

namespace detail {

template <Design D>
double column_dot(const D& d, Index j, const Eigen::VectorXd& v) {
  double s = 0.0;
  d.for_each_in_column(j, [&](Index i, double a) { s += a * v(i); });
  return s;
}

template <Design D>
void column_axpy(const D& d, Index j, double alpha, Eigen::VectorXd& v) {
  d.for_each_in_column(j, [&](Index i, double a) { v(i) += alpha * a; });
}

inline void finalize_support(SparseUpdate& u) {
  u.support.clear();
  for (Index j = 0; j < u.x.size(); ++j) {
    if (std::abs(u.x(j)) <= kSupportThreshold) {
      u.x(j) = 0.0;
    } else {
      u.support.push_back(j);
    }
  }
}

inline void require_design_shape(Index rows, const Eigen::VectorXd& target) {
  if (target.size() != rows) throw InvalidArgument("target length must equal the number of design rows");
}

}  // namespace detail

/// Worst violation of the l1 optimality conditions, with grad = 2 D'(Dx - t).
template <Design D>
double lasso_kkt_violation(const D& d, const Eigen::VectorXd& target, double tau, const Eigen::VectorXd& x) {
  const Eigen::VectorXd grad = 2.0 * d.transpose_apply(d.apply(x) - target);
  double worst = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    const double v = x(j) != 0.0 ? std::abs(grad(j) + tau * (x(j) > 0.0 ? 1.0 : -1.0)) : std::max(0.0, std::abs(grad(j)) - tau);
    worst = std::max(worst, v);
  }
  return worst;
}

/**
 * Cyclic coordinate descent for min ||D x - t||^2 + tau ||x||_1.
 *
 * Stops when the KKT violation is at most @p tol (floored at round-off
 * level for the problem's scale) or after @p max_sweeps, flagging the result.
 */
template <Design D>
SparseUpdate lasso_coordinate_descent(const D& d, const Eigen::VectorXd& target, double tau, double tol = 1e-9,
                                      int max_sweeps = 100000) {
  detail::require_design_shape(d.rows(), target);
  if (!(tau > 0.0)) throw InvalidArgument("lasso needs tau > 0");
  detail::Stopwatch clock;
  const Index p = d.cols();
  SparseUpdate u;
  u.x = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = target;  // residual t - D x
  std::vector<double> norm2(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) norm2[static_cast<std::size_t>(j)] = d.column_norm2(j);
  const double scale = 2.0 * d.transpose_apply(target).cwiseAbs().maxCoeff();
  const double stop = std::max(tol, 1e-13 * std::max(scale, tau));

  auto objective = [&] { return r.squaredNorm() + tau * u.x.lpNorm<1>(); };
  u.converged = false;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (Index j = 0; j < p; ++j) {
      const double nj = norm2[static_cast<std::size_t>(j)];
      if (nj == 0.0) continue;
      const double old = u.x(j);
      const double rho = detail::column_dot(d, j, r) + nj * old;
      const double mag = std::max(std::abs(rho) - 0.5 * tau, 0.0);
      const double next = (rho > 0.0 ? mag : -mag) / nj;
      if (next != old) {
        detail::column_axpy(d, j, old - next, r);
        u.x(j) = next;
      }
    }
    u.iterations = sweep;
    u.trace.push_back({sweep, objective(), clock.seconds(), 0});
    if (!std::isfinite(u.trace.back().loss)) throw NumericalFailure("lasso diverged");
    if (lasso_kkt_violation(d, target, tau, u.x) <= stop) {
      u.converged = true;
      break;
    }
  }
  detail::finalize_support(u);
  r = target - d.apply(u.x);
  u.objective = objective();
  return u;
}

/**
 * Forward stepwise selection for min ||D x - t||^2 + tau ||x||_0.
 *
 * Adds the column with the largest drop in residual sum of squares, (D_j' r)^2 / ||(I - QQ') D_j||^2,
 * while that drop is at least tau. Columns in the span of the current support
 * are never added. Coefficients are the least-squares fit on the final support.
 */
template <Design D>
SparseUpdate l0_greedy(const D& d, const Eigen::VectorXd& target, double tau) {
  detail::require_design_shape(d.rows(), target);
  if (!(tau > 0.0)) throw InvalidArgument("l0 greedy needs tau > 0");
  detail::Stopwatch clock;
  const Index p = d.cols();
  const Index m = d.rows();

  std::vector<double> norm2(static_cast<std::size_t>(p)), proj2(static_cast<std::size_t>(p), 0.0);
  for (Index j = 0; j < p; ++j) norm2[static_cast<std::size_t>(j)] = d.column_norm2(j);
  std::vector<char> chosen(static_cast<std::size_t>(p), 0);
  std::vector<Index> support;
  std::vector<Eigen::VectorXd> q;  // orthonormal basis of the chosen columns
  Eigen::MatrixXd rfac;            // D_S = Q R
  Eigen::VectorXd r = target;

  SparseUpdate u;
  u.trace.push_back({0, r.squaredNorm(), clock.seconds(), 0});
  while (static_cast<Index>(support.size()) < std::min(p, m)) {
    Index best = -1;
    double best_gain = 0.0;
    for (Index j = 0; j < p; ++j) {
      const auto js = static_cast<std::size_t>(j);
      if (chosen[js]) continue;
      const double resid2 = norm2[js] - proj2[js];
      if (!(resid2 > 1e-10 * norm2[js])) continue;  // dependent on the support
      const double c = detail::column_dot(d, j, r);
      const double gain = c * c / resid2;
      if (gain > best_gain) {
        best_gain = gain;
        best = j;
      }
    }
    if (best < 0 || best_gain < tau) break;

    // Gram-Schmidt twice for the new basis vector.
    Eigen::VectorXd col = Eigen::VectorXd::Zero(m);
    detail::column_axpy(d, best, 1.0, col);
    const Index k = static_cast<Index>(q.size());
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(k + 1);
    Eigen::VectorXd v = col;
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < k; ++i) {
        const double h = q[static_cast<std::size_t>(i)].dot(v);
        coef(i) += h;
        v.noalias() -= h * q[static_cast<std::size_t>(i)];
      }
    }
    const double vn = v.norm();
    if (!(vn > 0.0)) break;
    coef(k) = vn;
    v /= vn;
    Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(k + 1, k + 1);
    grown.topLeftCorner(k, k) = rfac;
    grown.col(k) = coef;
    rfac = std::move(grown);

    r.noalias() -= v.dot(r) * v;
    for (Index j = 0; j < p; ++j) {
      const double c = detail::column_dot(d, j, v);
      proj2[static_cast<std::size_t>(j)] += c * c;
    }
    q.push_back(std::move(v));
    chosen[static_cast<std::size_t>(best)] = 1;
    support.push_back(best);
    u.trace.push_back({static_cast<int>(support.size()), r.squaredNorm() + tau * static_cast<double>(support.size()),
                       clock.seconds(), 0});
  }
  u.iterations = static_cast<int>(support.size());

  u.x = Eigen::VectorXd::Zero(p);
  if (!support.empty()) {
    const Index k = static_cast<Index>(support.size());
    Eigen::VectorXd qt(k);
    for (Index i = 0; i < k; ++i) qt(i) = q[static_cast<std::size_t>(i)].dot(target);
    Eigen::VectorXd xs = rfac.triangularView<Eigen::Upper>().solve(qt);
    // Polish on the support's normal equations.
    auto normal = [&](const Eigen::VectorXd& z) {
      Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
      for (Index i = 0; i < k; ++i) detail::column_axpy(d, support[static_cast<std::size_t>(i)], z(i), y);
      Eigen::VectorXd out(k);
      for (Index i = 0; i < k; ++i) out(i) = detail::column_dot(d, support[static_cast<std::size_t>(i)], y);
      return out;
    };
    Eigen::VectorXd rhs(k), diag(k);
    for (Index i = 0; i < k; ++i) {
      rhs(i) = detail::column_dot(d, support[static_cast<std::size_t>(i)], target);
      diag(i) = norm2[static_cast<std::size_t>(support[static_cast<std::size_t>(i)])];
    }
    try {
      auto rep = pcg(normal, rhs, diag, CgOptions{1e-13, static_cast<int>(10 * k + 10)}, &xs);
      if (rep.relative_residual <= 1e-8) xs = rep.solution;
    } catch (const NumericalFailure&) {
      // Keep the triangular solve.
    }
    for (Index i = 0; i < k; ++i) u.x(support[static_cast<std::size_t>(i)]) = xs(i);
  }
  detail::finalize_support(u);
  u.objective = (d.apply(u.x) - target).squaredNorm() + tau * static_cast<double>(u.support.size());
  return u;
}

enum class SparseMode { l1, l0 };

struct BernoulliConfig {
  VertexSet zeta;
  std::optional<double> tau;
  std::optional<double> p;
  std::optional<double> kappa;
  SparseMode mode = SparseMode::l1;
  double tol = 1e-9;
  int max_sweeps = 100000;

  static BernoulliConfig with_tau(VertexSet zeta, double tau, SparseMode mode = SparseMode::l1) {
    BernoulliConfig c;
    c.zeta = std::move(zeta);
    c.tau = tau;
    c.mode = mode;
    return c;
  }

  static BernoulliConfig with_probability(VertexSet zeta, double p, double kappa, SparseMode mode = SparseMode::l1) {
    BernoulliConfig c;
    c.zeta = std::move(zeta);
    c.p = p;
    c.kappa = kappa;
    c.mode = mode;
    return c;
  }

  /// tau itself, or (log(1-p) - log p) / kappa.
  double resolved_tau() const {
    const bool has_pk = p.has_value() || kappa.has_value();
    if (tau.has_value() == has_pk) throw InvalidArgument("give either tau or (p, kappa), not both");
    if (tau) {
      if (std::isnan(*tau)) throw InvalidArgument("tau is NaN");
      return *tau;
    }
    if (!p || !kappa) throw InvalidArgument("p and kappa must be given together");
    if (!(*p > 0.0 && *p < 1.0)) throw InvalidArgument("p must lie in (0, 1)");
    if (!(*kappa > 0.0)) throw InvalidArgument("kappa must be positive");
    return (std::log1p(-*p) - std::log(*p)) / *kappa;
  }
};

namespace detail {

inline DenoiseResult sparse_incidence_denoise(const Eigen::Ref<const Eigen::VectorXd>& g, const Graph& graph,
                                              const VertexSet& zeta, double tau, SparseMode mode, double tol, int max_sweeps) {
  const IncidenceColumns design(graph, zeta);
  const Eigen::VectorXd target = -incidence_apply(graph, g);
  SparseUpdate u = mode == SparseMode::l1 ? lasso_coordinate_descent(design, target, tau, tol, max_sweeps)
                                          : l0_greedy(design, target, tau);
  DenoiseResult out;
  out.signal = g;
  for (Index i = 0; i < zeta.size(); ++i) out.signal(zeta[i]) += u.x(i);
  out.iterations = u.iterations;
  out.converged = u.converged;
  out.trace = std::move(u.trace);
  if (!u.converged) out.warnings.push_back("coordinate descent reached max_sweeps before the KKT tolerance");
  return out;
}

}  // namespace detail

/// Denoise under dropout on cfg.zeta. Values outside zeta are returned unchanged.
inline DenoiseResult bernoulli_denoise(const Eigen::Ref<const Eigen::VectorXd>& g, const Graph& graph, const BernoulliConfig& cfg) {
  detail::require_length(g, graph.num_vertices(), "bernoulli_denoise");
  if (cfg.zeta.universe() != graph.num_vertices()) throw InvalidArgument("zeta universe does not match the graph");
  if (!g.allFinite()) throw InvalidArgument("input signal has non-finite entries");
  const double tau = cfg.resolved_tau();
  if (cfg.zeta.empty()) return DenoiseResult{Signal(g), {}, 0, true, {}};
  if (tau <= 0.0) {
    if (cfg.zeta.size() == graph.num_vertices()) {
      throw InvalidArgument("p >= 1/2 with every vertex suspected leaves nothing to interpolate from");
    }
    const VertexSet trusted = cfg.zeta.complement();
    DenoiseResult out;
    out.signal = harmonic_interpolate(graph, trusted, trusted.gather(g));
    return out;
  }
  return detail::sparse_incidence_denoise(g, graph, cfg.zeta, tau, cfg.mode, cfg.tol, cfg.max_sweeps);
}

/// Every vertex suspected: f = g + x with x from the sparse regression over all of V.
inline DenoiseResult no_trust_denoise(const Eigen::Ref<const Eigen::VectorXd>& g, const Graph& graph, double tau,
                                      SparseMode mode = SparseMode::l0, double tol = 1e-9, int max_sweeps = 100000) {
  detail::require_length(g, graph.num_vertices(), "no_trust_denoise");
  if (!(tau > 0.0)) throw InvalidArgument("no-trust denoising needs tau > 0");
  if (!g.allFinite()) throw InvalidArgument("input signal has non-finite entries");
  return detail::sparse_incidence_denoise(g, graph, VertexSet::all(graph.num_vertices()), tau, mode, tol, max_sweeps);
}

/// Default suspicion set for count data: the zero entries.
inline VertexSet zeros_of(const Eigen::Ref<const Eigen::VectorXd>& g) {
  return VertexSet::where(g.size(), [&](Index a) { return g(a) == 0.0; });
}

}  // namespace gsd
