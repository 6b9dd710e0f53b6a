#pragma once

// MAP denoising under uniform scaling noise g(a) = u(a) f(a), u ~ U[0,1].
// Loss: kappa f'Lf + sum_{g(a) != 0} log|f(a)| over the box |f| >= |g|, sign(f) = sign(g).

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gsd/detail/box_qp.hpp"
#include "gsd/errors.hpp"
#include "gsd/graph.hpp"
#include "gsd/result.hpp"

namespace gsd {

/// Per-vertex interval: [g, inf) if g > 0, (-inf, g] if g < 0, {0} if g = 0.
struct UniformFeasibleRegion {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static UniformFeasibleRegion from_observation(const Eigen::Ref<const Eigen::VectorXd>& g) {
    if (!g.allFinite()) throw InvalidArgument("observation has non-finite entries");
    constexpr double kInf = std::numeric_limits<double>::infinity();
    UniformFeasibleRegion r{Eigen::VectorXd(g.size()), Eigen::VectorXd(g.size())};
    for (Index a = 0; a < g.size(); ++a) {
      r.lo(a) = g(a) > 0.0 ? g(a) : (g(a) < 0.0 ? -kInf : 0.0);
      r.hi(a) = g(a) < 0.0 ? g(a) : (g(a) > 0.0 ? kInf : 0.0);
    }
    return r;
  }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    if (f.size() != lo.size()) return false;
    for (Index a = 0; a < f.size(); ++a) {
      if (!(f(a) >= lo(a) && f(a) <= hi(a))) return false;
    }
    return true;
  }

  Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& f) const { return f.cwiseMax(lo).cwiseMin(hi); }
};

/// kappa f'Lf + sum of log|f(a)| over nonzero entries (zeros are taken as fixed).
inline double uniform_loss(const Eigen::Ref<const Eigen::VectorXd>& f, const Graph& graph, double kappa) {
  detail::require_length(f, graph.num_vertices(), "uniform_loss");
  if (!f.allFinite()) throw InvalidArgument("uniform_loss: signal has non-finite entries");
  double s = kappa * dirichlet_energy(graph, f);
  for (Index a = 0; a < f.size(); ++a) {
    if (f(a) != 0.0) s += std::log(std::abs(f(a)));
  }
  return s;
}

/// Same as above, but checks f against the region implied by the observation g.
inline double uniform_loss(const Eigen::Ref<const Eigen::VectorXd>& f, const Graph& graph, double kappa,
                           const Eigen::Ref<const Eigen::VectorXd>& g) {
  detail::require_length(g, graph.num_vertices(), "uniform_loss");
  if (!UniformFeasibleRegion::from_observation(g).contains(f)) throw InvalidArgument("uniform_loss: f is infeasible for g");
  return uniform_loss(f, graph, kappa);
}

/// Carries the trace up to the failing iteration.
class DivergenceError : public NumericalFailure {
 public:
  DivergenceError(const std::string& what, std::vector<TracePoint> trace)
      : NumericalFailure(what), trace_(std::move(trace)) {}
  const std::vector<TracePoint>& trace() const noexcept { return trace_; }

 private:
  std::vector<TracePoint> trace_;
};

struct CcpOptions {
  int max_outer = 100;
  /// Stop when |loss change| <= tol * |initial loss|.
  double tol = 1e-7;
  /// Initial point g * (1 + init_offset * (1 + jitter * u)), u ~ U[0,1) from the seed.
  double init_offset = 1e-3;
  double jitter = 0.0;
  std::uint64_t seed = 0;
  detail::BoxQpOptions inner{};
};

namespace detail {

inline Signal uniform_initial_point(const Eigen::Ref<const Eigen::VectorXd>& g, double offset, double jitter, std::uint64_t seed) {
  Signal f = g;
  if (jitter > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index a = 0; a < f.size(); ++a) f(a) *= 1.0 + offset * (1.0 + jitter * unif(rng));
  } else {
    f *= 1.0 + offset;
  }
  return f;
}

inline void require_kappa(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidArgument("kappa must be positive and finite");
}

}  // namespace detail

/**
 * Constrained convex-concave procedure.
 *
 * Each outer step linearises the log term at f^t and solves the box QP
 * min kappa f'Lf + sum sign(g(a)) f(a) / |f^t(a)| over the feasible region.
 * trace[0] is the initial point; trace[t].inner_iterations counts inner CG steps.
 */
inline DenoiseResult ccp_denoise(const Eigen::Ref<const Eigen::VectorXd>& g, const Graph& graph, double kappa,
                                 const CcpOptions& opt = {}) {
  detail::require_length(g, graph.num_vertices(), "ccp_denoise");
  detail::require_kappa(kappa);
  if (opt.max_outer < 0) throw InvalidArgument("max_outer must be >= 0");
  const auto box = UniformFeasibleRegion::from_observation(g);
  detail::Stopwatch clock;

  DenoiseResult out;
  Signal f = detail::uniform_initial_point(g, opt.init_offset, opt.jitter, opt.seed);
  double loss = uniform_loss(f, graph, kappa);
  const double loss0 = loss;
  out.trace.push_back({0, loss, clock.seconds(), 0});
  out.converged = false;

  auto h = [&](const Eigen::VectorXd& x) { Eigen::VectorXd y = laplacian_apply(graph, x); return Eigen::VectorXd(2.0 * kappa * y); };
  const Eigen::VectorXd hdiag = 2.0 * kappa * graph.degrees();
  Eigen::VectorXd c(g.size());

  for (int t = 1; t <= opt.max_outer; ++t) {
    for (Index a = 0; a < g.size(); ++a) c(a) = g(a) == 0.0 ? 0.0 : (g(a) > 0.0 ? 1.0 : -1.0) / std::abs(f(a));
    detail::BoxQpOptions inner = opt.inner;
    inner.eps = opt.inner.eps * std::max(1.0, c.lpNorm<Eigen::Infinity>());
    auto qp = detail::solve_box_qp(h, hdiag, c, box.lo, box.hi, f, inner);
    if (!qp.x.allFinite()) throw DivergenceError("CCP produced a non-finite iterate", out.trace);
    const double next = uniform_loss(qp.x, graph, kappa);
    out.iterations = t;
    if (!qp.converged) out.warnings.push_back("inner QP hit its iteration cap at outer step " + std::to_string(t));
    if (next > loss) {
      // Inexact inner solve overshot; keep the previous iterate.
      out.warnings.push_back("outer step " + std::to_string(t) + " did not decrease the loss; stopped");
      out.converged = true;
      break;
    }
    const double change = loss - next;
    f = std::move(qp.x);
    loss = next;
    out.trace.push_back({t, loss, clock.seconds(), qp.cg_iterations});
    if (change <= opt.tol * std::abs(loss0)) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged && opt.max_outer > 0) out.warnings.push_back("CCP reached max_outer without meeting the tolerance");
  if (opt.max_outer == 0) out.converged = true;
  out.signal = std::move(f);
  return out;
}

struct ProjectedGradientOptions {
  double step = 1.0;
  int max_iter = 1000;
  double tol = 1e-7;
  double init_offset = 1e-3;
};

/**
 * Projected gradient descent on the uniform loss with a fixed step.
 * Returns the lowest-loss iterate; trace[0] is the initial point.
 */
inline DenoiseResult projected_gradient_denoise(const Eigen::Ref<const Eigen::VectorXd>& g, const Graph& graph, double kappa,
                                                const ProjectedGradientOptions& opt = {}) {
  detail::require_length(g, graph.num_vertices(), "projected_gradient_denoise");
  detail::require_kappa(kappa);
  if (!(opt.step > 0.0)) throw InvalidArgument("step must be positive");
  if (opt.max_iter < 0) throw InvalidArgument("max_iter must be >= 0");
  const auto box = UniformFeasibleRegion::from_observation(g);
  detail::Stopwatch clock;

  DenoiseResult out;
  Signal f = detail::uniform_initial_point(g, opt.init_offset, 0.0, 0);
  double loss = uniform_loss(f, graph, kappa);
  const double loss0 = loss;
  Signal best = f;
  double best_loss = loss;
  out.trace.push_back({0, loss, clock.seconds(), 0});
  out.converged = opt.max_iter == 0;

  Signal grad(g.size());
  for (int t = 1; t <= opt.max_iter; ++t) {
    grad = 2.0 * kappa * laplacian_apply(graph, f);
    for (Index a = 0; a < g.size(); ++a) {
      if (g(a) != 0.0) grad(a) += 1.0 / f(a);
    }
    f = box.project(f - opt.step * grad);
    if (!f.allFinite()) throw DivergenceError("projected gradient produced a non-finite iterate", out.trace);
    const double next = uniform_loss(f, graph, kappa);
    if (!std::isfinite(next)) throw DivergenceError("projected gradient loss is not finite", out.trace);
    out.iterations = t;
    out.trace.push_back({t, next, clock.seconds(), 0});
    if (next < best_loss) {
      best_loss = next;
      best = f;
    }
    const double change = std::abs(loss - next);
    loss = next;
    if (change <= opt.tol * std::abs(loss0)) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) out.warnings.push_back("projected gradient reached max_iter without meeting the tolerance");
  out.signal = std::move(best);
  return out;
}

}  // namespace gsd
