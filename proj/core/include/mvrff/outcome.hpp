#pragma once

#include <span>
#include <vector>

#include "mvrff/types.hpp"

namespace mvrff {

// Optimal-scoring code for a categorical outcome with labels 1..K.
// Ybar = W B where W is the n x K indicator matrix; columns satisfy
// Ybar'Ybar = n I_{K-1} and Ybar'1 = 0.
struct OptimalScoring {
  Matrix B;     // K x (K-1)
  Matrix Ybar;  // n x (K-1)
  std::vector<int> counts;  // per class
};

OptimalScoring build_optimal_scores(std::span<const int> labels);

// (1/2n) || target - G Theta ||_F^2
double association_loss(const Matrix& target, const Matrix& G, const Matrix& Theta);

// Per-row nearest class centroid in score space; centroids are class means of
// U_train rows.  Ties go to the smallest class index.
std::vector<int> nearest_centroid(const Matrix& U_target, const Matrix& U_train,
                                  std::span<const int> train_labels);

}  // namespace mvrff
