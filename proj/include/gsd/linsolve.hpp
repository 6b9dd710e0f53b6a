#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gsd/errors.hpp"
#include "gsd/graph.hpp"

namespace gsd {

struct SolveReport {
  Eigen::VectorXd solution;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

struct CgOptions {
  double tol = 1e-10;
  /// Negative means 10 * dimension.
  int max_iter = -1;
};

/// Thrown by cg_solve when the iteration cap is hit; carries the best iterate.
class MaxIterationsReached : public NumericalFailure {
 public:
  explicit MaxIterationsReached(SolveReport best)
      : NumericalFailure("conjugate gradient hit the iteration cap at relative residual " +
                         std::to_string(best.relative_residual)),
        best_(std::move(best)) {}
  const SolveReport& best() const noexcept { return best_; }

 private:
  SolveReport best_;
};

/**
 * Jacobi-preconditioned conjugate gradient for an SPD operator given as a callable.
 *
 * Never throws on the iteration cap: `converged` is false and the iterate with
 * the smallest residual is returned. Throws NumericalFailure on NaN and
 * NotPositiveDefinite when a search direction has nonpositive curvature.
 */
template <class Apply>
SolveReport pcg(Apply&& apply, const Eigen::Ref<const Eigen::VectorXd>& b, const Eigen::Ref<const Eigen::VectorXd>& diag,
                const CgOptions& opt = {}, const Eigen::VectorXd* x0 = nullptr) {
  const Index n = b.size();
  if (!(opt.tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (diag.size() != n) throw InvalidArgument("preconditioner length mismatch");
  const int max_iter = opt.max_iter < 0 ? static_cast<int>(10 * std::max<Index>(n, 1)) : opt.max_iter;

  SolveReport rep;
  const double bnorm = b.norm();
  if (!std::isfinite(bnorm)) throw NumericalFailure("right-hand side is not finite");
  if (bnorm == 0.0) {
    rep.solution = Eigen::VectorXd::Zero(n);
    rep.converged = true;
    return rep;
  }

  Eigen::VectorXd inv_diag(n);
  for (Index i = 0; i < n; ++i) inv_diag(i) = diag(i) > 0.0 ? 1.0 / diag(i) : 1.0;

  Eigen::VectorXd x = x0 ? *x0 : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = x0 ? Eigen::VectorXd(b - apply(x)) : Eigen::VectorXd(b);
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);

  Eigen::VectorXd best = x;
  double best_res = r.norm() / bnorm;
  int it = 0;
  while (best_res > opt.tol && it < max_iter) {
    const Eigen::VectorXd ap = apply(p);
    const double curv = p.dot(ap);
    if (!std::isfinite(curv)) throw NumericalFailure("conjugate gradient produced a non-finite value");
    if (curv <= 0.0) throw NotPositiveDefinite("operator is not positive definite (nonpositive curvature)");
    const double alpha = rz / curv;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    ++it;
    const double res = r.norm() / bnorm;
    if (!std::isfinite(res)) throw NumericalFailure("conjugate gradient diverged");
    if (res < best_res) {
      best_res = res;
      best = x;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  rep.solution = std::move(best);
  rep.iterations = it;
  rep.relative_residual = best_res;
  rep.converged = best_res <= opt.tol;
  return rep;
}

/**
 * (diag(d) + tau L)(U, U): a shifted Laplacian or one of its principal submatrices.
 * d is indexed by position in U and must be nonnegative.
 */
class SddOperator {
 public:
  /// diag(d) + tau L over all of V.
  static SddOperator shifted(const Graph& g, Eigen::VectorXd d, double tau) {
    return SddOperator(g, VertexSet::all(g.num_vertices()), std::move(d), tau);
  }

  /// (diag(d) + tau L)(U, U); d defaults to zero.
  static SddOperator principal(const Graph& g, VertexSet u, double tau = 1.0, std::optional<Eigen::VectorXd> d = std::nullopt) {
    Eigen::VectorXd dd = d ? std::move(*d) : Eigen::VectorXd::Zero(u.size());
    return SddOperator(g, std::move(u), std::move(dd), tau);
  }

  Index size() const noexcept { return u_.size(); }
  const VertexSet& support() const noexcept { return u_; }
  const Eigen::VectorXd& shift() const noexcept { return d_; }
  double tau() const noexcept { return tau_; }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    detail::require_length(x, size(), "SddOperator::apply");
    Eigen::VectorXd y(size());
    for (Index i = 0; i < size(); ++i) {
      const Index a = u_[i];
      double acc = (d_(i) + tau_ * g_->degree(a)) * x(i);
      if (tau_ != 0.0) {
        const auto nb = g_->neighbors(a);
        const auto wt = g_->neighbor_weights(a);
        double off = 0.0;
        for (std::size_t k = 0; k < nb.size(); ++k) {
          const Index p = pos_[static_cast<std::size_t>(nb[k])];
          if (p >= 0) off += wt[k] * x(p);
        }
        acc -= tau_ * off;
      }
      y(i) = acc;
    }
    return y;
  }

  Eigen::VectorXd diagonal() const {
    Eigen::VectorXd dg(size());
    for (Index i = 0; i < size(); ++i) dg(i) = d_(i) + tau_ * g_->degree(u_[i]);
    return dg;
  }

  /// Exact structural test: every component of the subgraph induced on U
  /// needs a positive shift or an edge leaving U.
  bool positive_definite() const {
    if (size() == 0) return true;
    if (tau_ == 0.0) return (d_.array() > 0.0).all();
    const Index n = g_->num_vertices();
    std::vector<char> keep(static_cast<std::size_t>(n), 0);
    for (Index a : u_.members()) keep[static_cast<std::size_t>(a)] = 1;
    std::vector<int> label;
    const int k = component_labels(*g_, keep, label);
    std::vector<char> anchored(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < size(); ++i) {
      const Index a = u_[i];
      const auto c = static_cast<std::size_t>(label[static_cast<std::size_t>(a)]);
      if (d_(i) > 0.0) anchored[c] = 1;
      for (Index b : g_->neighbors(a)) {
        if (!keep[static_cast<std::size_t>(b)]) anchored[c] = 1;
      }
    }
    for (char c : anchored) {
      if (!c) return false;
    }
    return true;
  }

 private:
  SddOperator(const Graph& g, VertexSet u, Eigen::VectorXd d, double tau)
      : g_(&g), u_(std::move(u)), d_(std::move(d)), tau_(tau), pos_(u_.positions()) {
    if (u_.universe() != g.num_vertices()) throw InvalidArgument("SddOperator: vertex set universe mismatch");
    if (d_.size() != u_.size()) throw InvalidArgument("SddOperator: shift length must equal |U|");
    if (!(tau_ >= 0.0) || !std::isfinite(tau_)) throw InvalidArgument("SddOperator: tau must be finite and >= 0");
    if (!(d_.array() >= 0.0).all() || !d_.allFinite()) throw InvalidArgument("SddOperator: shift must be finite and >= 0");
  }

  const Graph* g_;
  VertexSet u_;
  Eigen::VectorXd d_;
  double tau_;
  std::vector<Index> pos_;
};

/// Solves op x = b. Throws NotPositiveDefinite for singular operators and
/// MaxIterationsReached if the tolerance is not met.
inline SolveReport cg_solve(const SddOperator& op, const Eigen::Ref<const Eigen::VectorXd>& b, double tol = 1e-10,
                            int max_iter = -1) {
  detail::require_length(b, op.size(), "cg_solve");
  if (!op.positive_definite()) throw NotPositiveDefinite("operator is singular: a component has no shift and no boundary");
  auto rep = pcg([&](const Eigen::VectorXd& x) { return op.apply(x); }, b, op.diagonal(), CgOptions{tol, max_iter});
  if (!rep.converged) throw MaxIterationsReached(std::move(rep));
  return rep;
}

/**
 * Harmonic extension of @p obs (given on S, in S's member order) to all of V:
 * f(S^c) = L(S^c, S^c)^{-1} A(S^c, S) obs.
 */
inline Signal harmonic_interpolate(const Graph& g, const VertexSet& s, const Eigen::Ref<const Eigen::VectorXd>& obs,
                                   double tol = 1e-12) {
  if (s.universe() != g.num_vertices()) throw InvalidArgument("harmonic_interpolate: vertex set universe mismatch");
  detail::require_length(obs, s.size(), "harmonic_interpolate");
  if (s.empty()) throw SingularSystem("harmonic interpolation needs at least one known vertex");
  Signal f(g.num_vertices());
  for (Index i = 0; i < s.size(); ++i) f(s[i]) = obs(i);
  if (s.size() == g.num_vertices()) return f;

  const VertexSet u = s.complement();
  const auto op = SddOperator::principal(g, u);
  if (!op.positive_definite()) throw SingularSystem("an unknown component has no edge to the known set");
  const Eigen::VectorXd rhs = restrict(g, Block::adjacency, u, s).apply(obs);
  auto rep = pcg([&](const Eigen::VectorXd& x) { return op.apply(x); }, rhs, op.diagonal(), CgOptions{tol, -1});
  if (!rep.converged && rep.relative_residual > 1e-8) throw MaxIterationsReached(std::move(rep));
  for (Index i = 0; i < u.size(); ++i) f(u[i]) = rep.solution(i);
  return f;
}

}  // namespace gsd
