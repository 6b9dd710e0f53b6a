#pragma once

#include <stdexcept>
#include <string>

namespace gsd {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller input: wrong lengths, out-of-range parameters, malformed sets.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A graph whose edges do not span a single connected component.
class GraphDisconnected : public InvalidArgument {
 public:
  GraphDisconnected(std::string what, int components)
      : InvalidArgument(std::move(what)), components_(components) {}
  int components() const noexcept { return components_; }

 private:
  int components_;
};

/// Reference-path computations that would allocate dense n x n storage over the cap.
class TooLarge : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A signal without the variation an estimator needs (e.g. constant input).
class DegenerateSignal : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Iterative method produced NaN/Inf or diverged.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Linear operator handed to a solver is singular (or not positive definite).
class NotPositiveDefinite : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// Harmonic extension requested from a set that does not pin down the solution.
class SingularSystem : public NotPositiveDefinite {
 public:
  using NotPositiveDefinite::NotPositiveDefinite;
};

}  // namespace gsd
