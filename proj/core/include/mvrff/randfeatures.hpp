#pragma once

#include <cstdint>

#include "mvrff/types.hpp"

namespace mvrff {

// Frozen random Fourier feature map for one view: frequencies, phases and the
// per-variable scaling vector gamma.  Features are
//   z_m(x) = sqrt(2) * cos(eps_m . (gamma (.) x) + b_m),
// so (1/M) z(x).z(x') approximates the Gaussian kernel with bandwidth nu once
// gamma is all ones.
struct RandomFeatureMap {
  Matrix eps;    // M x p, rows ~ N(0, (1/nu^2) I)
  Vector b;      // M, ~ U[0, 2pi)
  Vector gamma;  // p
  double nu = 1.0;

  int n_features() const { return static_cast<int>(eps.rows()); }
  int n_vars() const { return static_cast<int>(eps.cols()); }
};

// Median of pairwise Euclidean distances (lower median).  All pairs when
// n(n-1)/2 <= max_pairs, otherwise a seeded uniform subsample of max_pairs
// pairs.  Zero median falls back to the smallest positive sampled distance.
double median_heuristic_bandwidth(const Matrix& X,
                                  std::int64_t max_pairs = 500000,
                                  std::uint64_t seed = 0);

// Draws eps and b for given dimensions; gamma starts at all ones.
RandomFeatureMap sample_frequencies(int p, int M, double nu, std::uint64_t seed);

// n x M feature matrix for X under the map (uses map.gamma).
Matrix feature_map(const Matrix& X, const RandomFeatureMap& map);

// K(i,j) = exp(-||x_i - x_j||^2 / (2 nu^2)); test oracle, not a fit path.
Matrix exact_gaussian_gram(const Matrix& X, double nu);

}  // namespace mvrff
