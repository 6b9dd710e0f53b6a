#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "gsd/graph.hpp"

namespace gsd {

struct TracePoint {
  int iteration = 0;
  /// Objective value (or residual, for linear solves) after this iteration.
  double loss = 0.0;
  double elapsed_s = 0.0;
  /// Work done inside the step, e.g. inner solver iterations. 0 if not applicable.
  int inner_iterations = 0;
};

struct DenoiseResult {
  Signal signal;
  std::vector<TracePoint> trace;
  int iterations = 0;
  bool converged = true;
  /// Non-fatal notes (fallbacks taken, iteration caps hit).
  std::vector<std::string> warnings;
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

}  // namespace gsd
