#pragma once

#include "gsd/baselines.hpp"
#include "gsd/bernoulli.hpp"
#include "gsd/errors.hpp"
#include "gsd/gaussian.hpp"
#include "gsd/graph.hpp"
#include "gsd/linsolve.hpp"
#include "gsd/result.hpp"
#include "gsd/spectral.hpp"
#include "gsd/uniform.hpp"
