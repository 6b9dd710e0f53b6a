#pragma once

// Bound-constrained convex QP: min 0.5 x'Hx + c'x  s.t.  lo <= x <= hi.
// Gradient projection to settle the active face, then CG on the free
// variables (Moré–Toraldo style).

#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "gsd/errors.hpp"

namespace gsd::detail {

struct BoxQpOptions {
  /// Stop when the projected gradient's infinity norm is at most this.
  double eps = 1e-8;
  int max_iter = 1000;
  int max_projection_steps = 25;
};

struct BoxQpResult {
  Eigen::VectorXd x;
  int iterations = 0;
  int cg_iterations = 0;
  double projected_gradient = 0.0;
  bool converged = false;
};

template <class HApply>
BoxQpResult solve_box_qp(const HApply& h, const Eigen::VectorXd& hdiag, const Eigen::VectorXd& c, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi, Eigen::VectorXd x, const BoxQpOptions& opt = {}) {
  using Vec = Eigen::VectorXd;
  const Eigen::Index n = c.size();
  constexpr double kMu = 1e-4;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  auto project = [&](const Vec& v) -> Vec { return v.cwiseMax(lo).cwiseMin(hi); };
  auto value = [&](const Vec& v, Vec& hv) {
    hv = h(v);
    return 0.5 * v.dot(hv) + c.dot(v);
  };
  auto projected_gradient = [&](const Vec& v, const Vec& gr) {
    Vec pg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (lo(i) == hi(i) || (v(i) <= lo(i) && gr(i) > 0.0) || (v(i) >= hi(i) && gr(i) < 0.0)) {
        pg(i) = 0.0;
      } else {
        pg(i) = gr(i);
      }
    }
    return pg;
  };
  // Smallest positive step along d that reaches a finite bound, or +inf.
  auto first_breakpoint = [&](const Vec& v, const Vec& d) {
    double t = kInf;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d(i) > 0.0 && std::isfinite(hi(i))) t = std::min(t, (hi(i) - v(i)) / d(i));
      if (d(i) < 0.0 && std::isfinite(lo(i))) t = std::min(t, (lo(i) - v(i)) / d(i));
    }
    return t;
  };
  auto is_free = [&](const Vec& v, Eigen::Index i) { return lo(i) < v(i) && v(i) < hi(i); };
  // Projected backtracking search along the path P(x + alpha d).
  auto search = [&](const Vec& v, double fv, const Vec& gr, const Vec& d, double alpha, Vec& out, Vec& hout, double& fout) {
    for (int ls = 0; ls < 60; ++ls) {
      out = project(v + alpha * d);
      fout = value(out, hout);
      if (!std::isfinite(fout)) throw NumericalFailure("box QP produced a non-finite objective");
      if (fout <= fv + kMu * gr.dot(out - v)) return true;
      alpha *= 0.5;
    }
    return false;
  };

  BoxQpResult res;
  const double hscale = std::max(hdiag.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  x = project(x);
  Vec hx;
  double fx = value(x, hx);
  Vec gr = hx + c;
  Vec y, hy;
  double fy = 0.0;

  for (; res.iterations < opt.max_iter; ++res.iterations) {
    Vec pg = projected_gradient(x, gr);
    res.projected_gradient = pg.lpNorm<Eigen::Infinity>();
    if (res.projected_gradient <= opt.eps) {
      res.converged = true;
      break;
    }

    // Gradient projection phase.
    double best_drop = 0.0;
    for (int k = 0; k < opt.max_projection_steps; ++k) {
      if (k > 0) {
        pg = projected_gradient(x, gr);
        if (pg.lpNorm<Eigen::Infinity>() <= opt.eps) break;
      }
      const Vec hpg = h(pg);
      const double curv = pg.dot(hpg);
      double alpha = curv > 1e-14 * hscale * pg.squaredNorm() ? pg.squaredNorm() / curv : first_breakpoint(x, -pg);
      if (!std::isfinite(alpha)) alpha = 1.0;
      if (!search(x, fx, gr, -gr, alpha, y, hy, fy)) break;
      bool face_changed = false;
      for (Eigen::Index i = 0; i < n && !face_changed; ++i) face_changed = is_free(x, i) != is_free(y, i);
      const double drop = fx - fy;
      x.swap(y);
      hx.swap(hy);
      fx = fy;
      gr = hx + c;
      best_drop = std::max(best_drop, drop);
      if (!face_changed || drop <= 0.1 * best_drop) break;
    }

    // Subspace phase: truncated PCG on the free variables.
    Vec mask(n);
    for (Eigen::Index i = 0; i < n; ++i) mask(i) = is_free(x, i) ? 1.0 : 0.0;
    if (mask.sum() == 0.0) continue;
    Vec d = Vec::Zero(n);
    Vec r = -gr.cwiseProduct(mask);
    const double r0 = r.norm();
    if (r0 == 0.0) continue;
    Vec z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = mask(i) * r(i) / (hdiag(i) > 0.0 ? hdiag(i) : 1.0);
    Vec p = z;
    double rz = r.dot(z);
    const int cg_cap = static_cast<int>(10 * mask.sum()) + 10;
    for (int j = 0; j < cg_cap; ++j) {
      const Vec hp = h(p).cwiseProduct(mask);
      const double curv = p.dot(hp);
      ++res.cg_iterations;
      if (curv <= 1e-14 * hscale * p.squaredNorm()) {
        // Flat direction: the objective is linear along p, move to the first bound.
        if (d.isZero(0.0)) {
          const double t = first_breakpoint(x, p);
          d = std::isfinite(t) ? Vec(t * p) : p;
        }
        break;
      }
      const double a = rz / curv;
      d.noalias() += a * p;
      r.noalias() -= a * hp;
      if (r.norm() <= 1e-12 * r0) break;
      for (Eigen::Index i = 0; i < n; ++i) z(i) = mask(i) * r(i) / (hdiag(i) > 0.0 ? hdiag(i) : 1.0);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    if (search(x, fx, gr, d, 1.0, y, hy, fy) && fy <= fx) {
      x.swap(y);
      hx.swap(hy);
      fx = fy;
      gr = hx + c;
    }
  }
  if (!res.converged) res.projected_gradient = projected_gradient(x, gr).template lpNorm<Eigen::Infinity>();
  res.converged = res.converged || res.projected_gradient <= opt.eps;
  res.x = std::move(x);
  return res;
}

}  // namespace gsd::detail
