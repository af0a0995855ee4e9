#pragma once

#include <cmath>

#include "bsps/rng.hpp"

namespace bsps {

// Exact draw from PG(1, c) by the alternating-series accept/reject method on
// the tilted Jacobi density; depends on c only through |c|. Throws
// SamplerStall after 1e4 proposal rounds (never observed in practice).
double sample_pg1(double c, Rng& rng);

// E[PG(1,c)] = tanh(c/2) / (2c), continuous at c = 0 with value 1/4.
inline double pg1_mean(double c) {
  if (std::abs(c) < 1e-8) return 0.25 - c * c / 48.0;
  return std::tanh(c / 2.0) / (2.0 * c);
}

}  // namespace bsps
