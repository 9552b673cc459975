#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvrff/optimizer.hpp"
#include "mvrff/types.hpp"

namespace mvrff {

struct FittedModel {
  ModelState state;
  Matrix U_train;  // G * Theta on the training rows
  // Column standardization applied at ingest; empty when data was used as-is.
  std::vector<RowVector> view_center;
  std::vector<RowVector> view_scale;
};

FittedModel make_model(ModelState state);

// Eigen-gap rule on a descending spectrum: the shared dimension is r'-1 where
// r' >= 2 is the first index whose relative drop (e_{r'-1}-e_{r'})/e_{r'-1}
// falls below threshold.  No flattening -> all of it.
int pick_component_count(const std::vector<double>& eigenvalues, double threshold);

// Applies the rule to each view's exact Gaussian Gram spectrum (median
// bandwidth, at most max_rows seeded subsampled rows) and takes the minimum.
int select_components(const std::vector<Matrix>& views, double threshold = 0.1,
                      int max_rows = 1000, std::uint64_t seed = 0);

// 300 above 1000 samples, else about half of n (at least 2).
int choose_feature_count(int n);

// Shared representation for new rows: Procrustes fit of sum_d Z_d A_d using
// the frozen per-view maps.  Standardization stored in the model is applied.
Matrix embed_target(const std::vector<Matrix>& views_target, const FittedModel& m);

struct Prediction {
  Matrix values;            // continuous/multi: predictions on the raw scale
  std::vector<int> labels;  // categorical: 1..K
  Matrix scores;            // categorical: G_target * Theta
};
Prediction predict(const std::vector<Matrix>& views_target, const FittedModel& m);

struct CvPlan {
  std::vector<std::vector<double>> rho_grid;  // per view
  int folds = 3;
  enum class Search { Grid, Random };
  Search search = Search::Grid;
  int random_draws = 0;  // used when search == Random
  std::uint64_t seed = 0;
};

struct CvCell {
  std::vector<double> rho;  // per view
  std::vector<double> fold_scores;
  double mean_score = 0.0;
  bool failed = false;
  std::string error;
};

struct CvResult {
  std::vector<CvCell> table;
  int best = -1;                 // index into table
  std::vector<double> best_rho;  // per view
};

// Fold id per row, depending only on (n, labels, folds, seed).  Categorical
// outcomes get stratified assignment: per-class counts across folds differ by
// at most one.
std::vector<int> cv_fold_assignment(const Outcome& outcome, int n, int folds,
                                    std::uint64_t seed);

// k-fold grid/random search over per-view rho combinations.  Score is
// held-out MSE (continuous) or misclassification rate (categorical, with
// stratified folds).  Ties prefer the larger total rho.
CvResult cross_validate(const std::vector<Matrix>& views, const Outcome& outcome,
                        const FitConfig& config, const CvPlan& plan);

// Versioned JSON on disk; numeric arrays are base64 little-endian float64
// with explicit shapes.  save(load(f)) reproduces f byte for byte.
void save_model(const FittedModel& m, const std::string& path);
FittedModel load_model(const std::string& path);

}  // namespace mvrff
