#include "mvrff/outcome.hpp"

#include <algorithm>
#include <cmath>

namespace mvrff {

OptimalScoring build_optimal_scores(std::span<const int> labels) {
  int K = 0;
  for (int l : labels) {
    require(l >= 1, "InvalidArgument", "class labels must start at 1");
    K = std::max(K, l);
  }
  require(K >= 2, "SingleClass", "optimal scoring needs at least two classes");

  std::vector<int> counts(static_cast<size_t>(K), 0);
  for (int l : labels) counts[static_cast<size_t>(l - 1)]++;
  for (int k = 0; k < K; ++k)
    require(counts[static_cast<size_t>(k)] > 0, "EmptyClass",
            "class " + std::to_string(k + 1) + " has no samples");

  const double n = static_cast<double>(labels.size());
  std::vector<double> s(static_cast<size_t>(K), 0.0);  // s_k = n_1 + ... + n_k
  double run = 0.0;
  for (int k = 0; k < K; ++k) {
    run += counts[static_cast<size_t>(k)];
    s[static_cast<size_t>(k)] = run;
  }

  // column l (1-based): first l entries sqrt(n n_{l+1}) / sqrt(s_l s_{l+1}),
  // entry l+1 is -sqrt(n s_l) / sqrt(n_{l+1} s_{l+1}), zeros below
  Matrix B = Matrix::Zero(K, K - 1);
  for (int l = 1; l <= K - 1; ++l) {
    const double n_next = counts[static_cast<size_t>(l)];
    const double s_l = s[static_cast<size_t>(l - 1)];
    const double s_next = s[static_cast<size_t>(l)];
    const double head = std::sqrt(n * n_next) / std::sqrt(s_l * s_next);
    for (int k = 0; k < l; ++k) B(k, l - 1) = head;
    B(l, l - 1) = -std::sqrt(n * s_l) / std::sqrt(n_next * s_next);
  }

  OptimalScoring out;
  out.B = B;
  out.counts.assign(counts.begin(), counts.end());
  out.Ybar.resize(static_cast<Eigen::Index>(labels.size()), K - 1);
  for (size_t i = 0; i < labels.size(); ++i)
    out.Ybar.row(static_cast<Eigen::Index>(i)) = B.row(labels[i] - 1);
  return out;
}

double association_loss(const Matrix& target, const Matrix& G, const Matrix& Theta) {
  require(G.rows() == target.rows() && G.cols() == Theta.rows() &&
              Theta.cols() == target.cols(),
          "DimensionMismatch",
          "loss expects target n x q, G n x r, Theta r x q");
  const double n = static_cast<double>(target.rows());
  return (target - G * Theta).squaredNorm() / (2.0 * n);
}

std::vector<int> nearest_centroid(const Matrix& U_target, const Matrix& U_train,
                                  std::span<const int> train_labels) {
  require(U_target.cols() == U_train.cols(), "DimensionMismatch",
          "score spaces differ in dimension");
  require(static_cast<size_t>(U_train.rows()) == train_labels.size(),
          "DimensionMismatch", "one label per training row required");

  int K = 0;
  for (int l : train_labels) {
    require(l >= 1, "InvalidArgument", "class labels must start at 1");
    K = std::max(K, l);
  }
  Matrix centroids = Matrix::Zero(K, U_train.cols());
  std::vector<int> counts(static_cast<size_t>(K), 0);
  for (size_t i = 0; i < train_labels.size(); ++i) {
    centroids.row(train_labels[i] - 1) += U_train.row(static_cast<Eigen::Index>(i));
    counts[static_cast<size_t>(train_labels[i] - 1)]++;
  }
  for (int k = 0; k < K; ++k) {
    require(counts[static_cast<size_t>(k)] > 0, "EmptyClass",
            "class " + std::to_string(k + 1) + " has no training rows");
    centroids.row(k) /= counts[static_cast<size_t>(k)];
  }

  std::vector<int> out(static_cast<size_t>(U_target.rows()));
  for (Eigen::Index i = 0; i < U_target.rows(); ++i) {
    int best = 1;
    double best_d = (U_target.row(i) - centroids.row(0)).squaredNorm();
    for (int k = 1; k < K; ++k) {
      double d = (U_target.row(i) - centroids.row(k)).squaredNorm();
      if (d < best_d) {  // strict: ties keep the smaller class index
        best_d = d;
        best = k + 1;
      }
    }
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

}  // namespace mvrff
