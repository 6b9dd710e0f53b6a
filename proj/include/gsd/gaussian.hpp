#pragma once

// MAP denoising under additive Gaussian noise: f = (I + tau L)^{-1} g, and the
// method-of-moments estimate of tau = 2 kappa sigma^2.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsd/errors.hpp"
#include "gsd/graph.hpp"
#include "gsd/linsolve.hpp"
#include "gsd/result.hpp"

namespace gsd {

struct GaussianParams {
  double tau = 0.0;
  std::optional<double> kappa;
  std::optional<double> sigma2;

  static GaussianParams from_model(double kappa, double sigma2) {
    if (!(kappa > 0.0) || sigma2 < 0.0) throw InvalidArgument("need kappa > 0 and sigma2 >= 0");
    return {2.0 * kappa * sigma2, kappa, sigma2};
  }
};

/**
 * Solves (I + tau L) f = g by preconditioned CG.
 *
 * tau = 0 returns g; tau = +inf returns the constant signal at the mean of g
 * (the limit of the filter). The sum of f equals the sum of g.
 */
inline DenoiseResult denoise_gaussian(const Eigen::Ref<const Eigen::VectorXd>& g, const Graph& graph, double tau,
                                      double tol = 1e-12) {
  detail::require_length(g, graph.num_vertices(), "denoise_gaussian");
  if (std::isnan(tau) || tau < 0.0) throw InvalidArgument("tau must be >= 0");
  if (!g.allFinite()) throw InvalidArgument("input signal has non-finite entries");
  detail::Stopwatch clock;
  DenoiseResult out;
  if (tau == 0.0) {
    out.signal = g;
    return out;
  }
  if (std::isinf(tau)) {
    out.signal = Signal::Constant(g.size(), g.mean());
    return out;
  }
  const auto op = SddOperator::shifted(graph, Eigen::VectorXd::Ones(g.size()), tau);
  auto rep = pcg([&](const Eigen::VectorXd& x) { return op.apply(x); }, g, op.diagonal(), CgOptions{tol, -1});
  if (!rep.converged && rep.relative_residual > 1e-8) throw MaxIterationsReached(std::move(rep));
  out.signal = std::move(rep.solution);
  // The exact solution has the same sum as g; remove CG round-off along 1.
  out.signal.array() += g.mean() - out.signal.mean();
  out.iterations = rep.iterations;
  out.converged = rep.converged;
  out.trace.push_back({rep.iterations, rep.relative_residual, clock.seconds(), rep.iterations});
  if (!rep.converged) out.warnings.push_back("CG stopped at relative residual " + std::to_string(rep.relative_residual));
  return out;
}

/// Quadratic forms g^T L g and (Lg)^T (Lg).
struct Moments {
  double m1 = 0.0;
  double m2 = 0.0;
};

inline Moments signal_moments(const Eigen::Ref<const Eigen::VectorXd>& g, const Graph& graph) {
  const Signal lg = laplacian_apply(graph, g);
  return {g.dot(lg), lg.squaredNorm()};
}

/// Nonnegative fit of E[m1] = sigma2 tr(L) + s (n-1), E[m2] = sigma2 tr(L^2) + s tr(L), s = 1/(2 kappa).
struct MomentFit {
  double sigma2 = 0.0;
  double inv2kappa = 0.0;
  double residual = 0.0;
  /// True when the unconstrained solution was rejected and a boundary point used.
  bool constrained = false;
};

namespace detail {

struct MomentSystem {
  double tr_l = 0.0;
  double tr_l2 = 0.0;
  double n_minus_1 = 0.0;

  explicit MomentSystem(const Graph& g)
      : tr_l(trace_L(g)), tr_l2(trace_L2(g)), n_minus_1(static_cast<double>(g.num_vertices() - 1)) {}

  double residual(double s2, double s, double m1, double m2) const {
    return std::hypot(tr_l * s2 + n_minus_1 * s - m1, tr_l2 * s2 + tr_l * s - m2);
  }
  double det() const { return tr_l * tr_l - n_minus_1 * tr_l2; }
  bool well_posed() const { return std::abs(det()) > 1e-12 * (tr_l * tr_l + n_minus_1 * tr_l2); }
};

/// Exact two-variable NNLS: compare the interior point, both single-column fits and the origin.
inline MomentFit nnls_2x2(const MomentSystem& sys, double m1, double m2) {
  MomentFit best{0.0, 0.0, std::hypot(m1, m2), true};
  auto consider = [&](double s2, double s) {
    const double r = sys.residual(s2, s, m1, m2);
    if (r < best.residual) best = {s2, s, r, true};
  };
  if (sys.well_posed()) {
    const double d = sys.det();
    const double s2 = (sys.tr_l * m1 - sys.n_minus_1 * m2) / d;
    const double s = (sys.tr_l * m2 - sys.tr_l2 * m1) / d;
    if (s2 >= 0.0 && s >= 0.0) consider(s2, s);
  }
  const double c1 = sys.tr_l * sys.tr_l + sys.tr_l2 * sys.tr_l2;
  consider(std::max(0.0, (sys.tr_l * m1 + sys.tr_l2 * m2) / c1), 0.0);
  const double c2 = sys.n_minus_1 * sys.n_minus_1 + sys.tr_l * sys.tr_l;
  consider(0.0, std::max(0.0, (sys.n_minus_1 * m1 + sys.tr_l * m2) / c2));
  return best;
}

}  // namespace detail

/// Least-squares fit of (sigma2, 1/(2 kappa)) to the moment targets subject to both being >= 0.
inline MomentFit nonneg_moment_fit(double m1, double m2, const Graph& graph) {
  if (!std::isfinite(m1) || !std::isfinite(m2)) throw InvalidArgument("moment targets must be finite");
  return detail::nnls_2x2(detail::MomentSystem(graph), m1, m2);
}

struct TauEstimate {
  double tau = 0.0;
  double sigma2 = 0.0;
  double inv2kappa = 0.0;
  Moments moments;
  /// The closed-form solution had a nonpositive component and the nonnegative fit was used.
  bool fallback = false;
  std::vector<std::string> warnings;
};

/// Estimate from averaged moments.
inline TauEstimate estimate_tau_from_moments(const Moments& mom, const Graph& graph) {
  const detail::MomentSystem sys(graph);
  TauEstimate est;
  est.moments = mom;
  bool closed_form = false;
  if (sys.well_posed()) {
    const double d = sys.det();
    const double s2 = (sys.tr_l * mom.m1 - sys.n_minus_1 * mom.m2) / d;
    const double s = (sys.tr_l * mom.m2 - sys.tr_l2 * mom.m1) / d;
    if (s2 > 0.0 && s > 0.0) {
      est.sigma2 = s2;
      est.inv2kappa = s;
      // Same ratio as ((n-1) m2 - tr(L) m1) / (tr(L^2) m1 - tr(L) m2).
      est.tau = s2 / s;
      closed_form = true;
    }
  }
  if (!closed_form) {
    const MomentFit fit = detail::nnls_2x2(sys, mom.m1, mom.m2);
    est.fallback = true;
    est.sigma2 = fit.sigma2;
    est.inv2kappa = fit.inv2kappa;
    if (fit.sigma2 == 0.0) {
      est.tau = 0.0;
      if (fit.inv2kappa == 0.0) est.warnings.push_back("moment fit returned zero noise and zero prior variance; using tau = 0");
    } else if (fit.inv2kappa == 0.0) {
      est.tau = std::numeric_limits<double>::infinity();
      est.warnings.push_back("moment fit returned zero prior variance; tau is infinite (output is the mean)");
    } else {
      est.tau = fit.sigma2 / fit.inv2kappa;
    }
  }
  return est;
}

namespace detail {

inline bool is_constant(const Eigen::Ref<const Eigen::VectorXd>& g) {
  if (g.size() == 0) return true;
  return g.maxCoeff() - g.minCoeff() <= 1e-14 * std::max(1.0, g.cwiseAbs().maxCoeff());
}

}  // namespace detail

inline TauEstimate estimate_tau_detailed(const Eigen::Ref<const Eigen::VectorXd>& g, const Graph& graph) {
  detail::require_length(g, graph.num_vertices(), "estimate_tau");
  if (detail::is_constant(g)) throw DegenerateSignal("cannot estimate tau from a constant signal");
  return estimate_tau_from_moments(signal_moments(g, graph), graph);
}

/// Method-of-moments estimate of tau from one signal.
inline double estimate_tau(const Eigen::Ref<const Eigen::VectorXd>& g, const Graph& graph) {
  return estimate_tau_detailed(g, graph).tau;
}

/// Pooled estimate: moments are averaged over all signals before solving.
inline TauEstimate estimate_tau_multi_detailed(std::span<const Signal> signals, const Graph& graph) {
  if (signals.empty()) throw InvalidArgument("estimate_tau_multi needs at least one signal");
  Moments acc;
  bool any_varying = false;
  for (const auto& g : signals) {
    detail::require_length(g, graph.num_vertices(), "estimate_tau_multi");
    any_varying = any_varying || !detail::is_constant(g);
    const Moments m = signal_moments(g, graph);
    acc.m1 += m.m1;
    acc.m2 += m.m2;
  }
  if (!any_varying) throw DegenerateSignal("all signals are constant");
  const double k = static_cast<double>(signals.size());
  acc.m1 /= k;
  acc.m2 /= k;
  return estimate_tau_from_moments(acc, graph);
}

inline double estimate_tau_multi(std::span<const Signal> signals, const Graph& graph) {
  return estimate_tau_multi_detailed(signals, graph).tau;
}

}  // namespace gsd
