#pragma once

#include "lqglab/rng.hpp"

namespace lqg {

// Exact transition of a squared Bessel process of dimension `dim` > 0:
// returns X_{t+h} given X_t = x, i.e. h * chi'^2_dim(x / h).
double squared_bessel_step(double x, double dim, double h, Rng& rng);

}  // namespace lqg
