#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <variant>

#include "gsd/errors.hpp"
#include "gsd/experiments/rng.hpp"
#include "gsd/graph.hpp"

namespace gsd::experiments {

namespace noise {

/// g = f + N(0, sigma^2) per vertex.
struct Gaussian {
  double sigma = 0.0;
};
/// g(a) = u(a) f(a), u ~ U[0, 1].
struct UniformScale {};
/// Each entry replaced by `fill` with probability p.
struct BernoulliDropout {
  double p = 0.0;
  double fill = 0.0;
};
/// Each entry replaced with probability p, by lo or hi with equal chance.
struct SaltPepper {
  double p = 0.0;
  double lo = 0.0;
  double hi = 1.0;
};

}  // namespace noise

using NoiseKind = std::variant<noise::Gaussian, noise::UniformScale, noise::BernoulliDropout, noise::SaltPepper>;

struct NoiseSpec {
  NoiseKind kind;
  std::uint64_t seed = 0;
};

inline std::string noise_name(const NoiseKind& k) {
  switch (k.index()) {
    case 0: return "gaussian";
    case 1: return "uniform";
    case 2: return "bernoulli";
    default: return "salt-pepper";
  }
}

/// The swept parameter of a noise kind (sigma or p); 1 for uniform scaling.
inline double noise_level(const NoiseKind& k) {
  if (auto* g = std::get_if<noise::Gaussian>(&k)) return g->sigma;
  if (auto* b = std::get_if<noise::BernoulliDropout>(&k)) return b->p;
  if (auto* s = std::get_if<noise::SaltPepper>(&k)) return s->p;
  return 1.0;
}

inline void validate(const NoiseKind& k) {
  auto prob = [](double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("noise probability must lie in [0, 1]");
  };
  if (auto* g = std::get_if<noise::Gaussian>(&k)) {
    if (!(g->sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  } else if (auto* b = std::get_if<noise::BernoulliDropout>(&k)) {
    prob(b->p);
  } else if (auto* s = std::get_if<noise::SaltPepper>(&k)) {
    prob(s->p);
  }
}

/// Corrupted copy of f. `corrupted`, if given, receives a 0/1 mask of replaced entries.
inline Signal add_noise(const Eigen::Ref<const Eigen::VectorXd>& f, const NoiseSpec& spec, std::vector<char>* corrupted = nullptr) {
  validate(spec.kind);
  Engine rng(spec.seed);
  Signal g = f;
  if (corrupted) corrupted->assign(static_cast<std::size_t>(f.size()), 0);
  if (auto* k = std::get_if<noise::Gaussian>(&spec.kind)) {
    if (k->sigma == 0.0) return g;
    std::normal_distribution<double> normal(0.0, k->sigma);
    for (Index a = 0; a < g.size(); ++a) g(a) += normal(rng);
  } else if (std::holds_alternative<noise::UniformScale>(spec.kind)) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index a = 0; a < g.size(); ++a) g(a) *= unif(rng);
  } else if (auto* k = std::get_if<noise::BernoulliDropout>(&spec.kind)) {
    std::bernoulli_distribution drop(k->p);
    for (Index a = 0; a < g.size(); ++a) {
      if (drop(rng)) {
        g(a) = k->fill;
        if (corrupted) (*corrupted)[static_cast<std::size_t>(a)] = 1;
      }
    }
  } else if (auto* k = std::get_if<noise::SaltPepper>(&spec.kind)) {
    std::bernoulli_distribution hit(k->p);
    std::bernoulli_distribution coin(0.5);
    for (Index a = 0; a < g.size(); ++a) {
      if (hit(rng)) {
        g(a) = coin(rng) ? k->hi : k->lo;
        if (corrupted) (*corrupted)[static_cast<std::size_t>(a)] = 1;
      }
    }
  }
  return g;
}

}  // namespace gsd::experiments
