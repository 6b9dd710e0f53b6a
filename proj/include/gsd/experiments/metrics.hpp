#pragma once

#include <algorithm>
#include <cmath>

#include "gsd/errors.hpp"
#include "gsd/graph.hpp"

namespace gsd::experiments {

/// ||f_true - f_est|| / ||f_true||.
inline double relative_error(const Eigen::Ref<const Eigen::VectorXd>& f_true, const Eigen::Ref<const Eigen::VectorXd>& f_est) {
  if (f_true.size() != f_est.size()) throw InvalidArgument("relative_error: length mismatch");
  const double denom = f_true.norm();
  if (denom == 0.0) throw DegenerateSignal("relative_error: reference signal is zero");
  return (f_true - f_est).norm() / denom;
}

inline double pearson_correlation(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw InvalidArgument("pearson_correlation: length mismatch");
  if (x.size() < 2) throw InvalidArgument("pearson_correlation: need at least two entries");
  const Eigen::ArrayXd xc = x.array() - x.mean();
  const Eigen::ArrayXd yc = y.array() - y.mean();
  const double sx = std::sqrt((xc * xc).sum());
  const double sy = std::sqrt((yc * yc).sum());
  if (sx == 0.0 || sy == 0.0) throw DegenerateSignal("pearson_correlation: a constant signal has no correlation");
  return std::clamp((xc * yc).sum() / (sx * sy), -1.0, 1.0);
}

}  // namespace gsd::experiments
