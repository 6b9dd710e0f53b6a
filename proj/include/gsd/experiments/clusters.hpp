#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "gsd/errors.hpp"
#include "gsd/experiments/rng.hpp"
#include "gsd/graph.hpp"

namespace gsd::experiments {

struct ClusterOptions {
  int clusters = 5;
  int per_cluster = 200;
  /// Standard deviation of each isotropic Gaussian cluster.
  double spread = 1.0;
  /// Distance between neighbouring centres, in units of spread.
  double separation = 3.5;
  int dims = 2;
  /// Number of low- and high-frequency signals to draw.
  int signals = 1;
};

struct ClusterData {
  Eigen::MatrixXd points;
  std::vector<int> labels;
  /// Constant on each cluster: cos(2 pi c / C + phase).
  std::vector<Signal> low_freq;
  /// sin(omega * first local coordinate + phase), omega = pi / spread.
  std::vector<Signal> high_freq;
};

/// Gaussian clusters with centres evenly spaced on a circle in the first two coordinates.
inline ClusterData make_cluster_data(const ClusterOptions& opt, std::uint64_t seed) {
  if (opt.clusters < 1 || opt.per_cluster < 1) throw InvalidArgument("need at least one cluster with one point");
  if (!(opt.spread > 0.0) || !(opt.separation >= 0.0)) throw InvalidArgument("spread must be positive, separation >= 0");
  if (opt.dims < 2) throw InvalidArgument("cluster points need at least 2 dimensions");
  if (opt.signals < 0) throw InvalidArgument("signal count must be >= 0");
  constexpr double kPi = std::numbers::pi;
  const int c_count = opt.clusters;
  const Index n = static_cast<Index>(c_count) * opt.per_cluster;
  const double radius = c_count == 1 ? 0.0 : opt.separation * opt.spread / (2.0 * std::sin(kPi / c_count));

  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(c_count, opt.dims);
  for (int c = 0; c < c_count; ++c) {
    centers(c, 0) = radius * std::cos(2.0 * kPi * c / c_count);
    centers(c, 1) = radius * std::sin(2.0 * kPi * c / c_count);
  }

  ClusterData data;
  data.points.resize(n, opt.dims);
  data.labels.resize(static_cast<std::size_t>(n));
  Engine rng = make_engine(seed, {kGraph});
  std::normal_distribution<double> normal(0.0, opt.spread);
  for (Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i / opt.per_cluster);
    data.labels[static_cast<std::size_t>(i)] = c;
    for (int d = 0; d < opt.dims; ++d) data.points(i, d) = centers(c, d) + normal(rng);
  }

  const double omega = kPi / opt.spread;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  for (int s = 0; s < opt.signals; ++s) {
    Engine srng = make_engine(seed, {kSignal, static_cast<std::uint64_t>(s)});
    const double phi_low = phase(srng);
    const double phi_high = phase(srng);
    Signal low(n), high(n);
    for (Index i = 0; i < n; ++i) {
      const int c = data.labels[static_cast<std::size_t>(i)];
      low(i) = std::cos(2.0 * kPi * c / c_count + phi_low);
      high(i) = std::sin(omega * (data.points(i, 0) - centers(c, 0)) + phi_high);
    }
    data.low_freq.push_back(std::move(low));
    data.high_freq.push_back(std::move(high));
  }
  return data;
}

}  // namespace gsd::experiments
