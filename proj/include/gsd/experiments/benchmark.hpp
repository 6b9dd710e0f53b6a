#pragma once

#include <cstdint>

#include "gsd/experiments/noise.hpp"
#include "gsd/experiments/rng.hpp"
#include "gsd/result.hpp"
#include "gsd/uniform.hpp"

namespace gsd::experiments {

struct BenchmarkReport {
  Signal truth;
  Signal noisy;
  double truth_loss = 0.0;
  DenoiseResult ccp;
  DenoiseResult pg;
  double ccp_seconds = 0.0;
  double pg_seconds = 0.0;

  double ccp_loss() const { return ccp.trace.back().loss; }
  /// Lowest loss reached by projected gradient (its returned iterate).
  double pg_loss() const {
    double best = pg.trace.front().loss;
    for (const auto& t : pg.trace) best = std::min(best, t.loss);
    return best;
  }
};

/// Corrupts `truth` with uniform scaling noise and runs both uniform-noise solvers on it.
inline BenchmarkReport ccp_vs_pg_benchmark(const Signal& truth, const Graph& graph, double kappa, std::uint64_t seed,
                                           const CcpOptions& ccp_opt = {}, const ProjectedGradientOptions& pg_opt = {}) {
  BenchmarkReport rep;
  rep.truth = truth;
  rep.noisy = add_noise(truth, NoiseSpec{noise::UniformScale{}, derive_seed(seed, {kNoise})});
  rep.truth_loss = uniform_loss(truth, graph, kappa);
  detail::Stopwatch t0;
  rep.ccp = ccp_denoise(rep.noisy, graph, kappa, ccp_opt);
  rep.ccp_seconds = t0.seconds();
  detail::Stopwatch t1;
  rep.pg = projected_gradient_denoise(rep.noisy, graph, kappa, pg_opt);
  rep.pg_seconds = t1.seconds();
  return rep;
}

}  // namespace gsd::experiments
