#pragma once

#include <cstdint>
#include <vector>

#include "mvrff/outcome.hpp"
#include "mvrff/prox.hpp"
#include "mvrff/randfeatures.hpp"
#include "mvrff/types.hpp"

namespace mvrff {

struct FitConfig {
  int feature_count = 0;  // features per view; 0 -> choose_feature_count(n)
  int components = 0;     // shared dimension r; 0 -> eigen-gap heuristic
  std::vector<double> lambda = {1.0};    // per view, single value broadcasts
  std::vector<PenaltySpec> penalty;      // per view, single value broadcasts,
                                         // empty -> simplex everywhere
  int max_outer_iter = 200;
  double outer_tol = 1e-5;   // relative objective change
  int fista_budget = 100;    // inner iterations per gamma subproblem
  FistaOptions fista;
  int restarts = 1;  // independent feature draws; the lowest-objective fit wins
  std::uint64_t seed = 0;
};

struct OutcomeMeta {
  OutcomeKind kind = OutcomeKind::Continuous;
  RowVector center;                      // column means removed from target
  std::vector<int> labels;               // training labels (categorical)
  std::vector<std::string> class_names;
};

// Centered target (continuous) or optimal-scoring code (categorical).
struct PreparedTarget {
  Matrix target;  // n x q'
  OutcomeMeta meta;
};
PreparedTarget prepare_target(const Outcome& outcome);

struct ModelState {
  std::vector<RandomFeatureMap> maps;  // per view; gamma lives here
  std::vector<Matrix> A;               // per view, M x r
  Matrix G;                            // n x r, G'G = I
  Matrix Theta;                        // r x q'
  OutcomeMeta outcome_meta;
  FitConfig resolved;                  // broadcast/auto fields filled in
  std::vector<double> objective_trace;  // [0] is the initial state
  std::vector<double> ortho_trace;      // max|G'G - I| after each cycle
  bool converged = false;
  int iterations = 0;
};

// Ridge solve (Z'Z/n + lambda I) A = Z'G/n.
Matrix update_loadings(const Matrix& Z, const Matrix& G, double lambda);

// Procrustes step: G = U V' from the thin SVD of target*Theta' + sum_d Z_d A_d.
Matrix update_shared(const Matrix& target, const Matrix& Theta,
                     const std::vector<Matrix>& ZA);

// Least squares Theta = (G'G)^{-1} G' target.
Matrix update_theta(const Matrix& G, const Matrix& target);

// (1/2n) ||G - Z(gamma) A||_F^2 and its gamma gradient, for one view.
double view_fit_value(const Matrix& X, const RandomFeatureMap& map,
                      const Vector& gamma, const Matrix& A, const Matrix& G);
Vector gamma_objective_grad(const Matrix& X, const RandomFeatureMap& map,
                            const Vector& gamma, const Matrix& A,
                            const Matrix& G);

// Full objective: association loss + view fit terms + ridge terms + penalties
// (simplex views contribute 1'gamma).
double objective(const std::vector<Matrix>& views, const Matrix& target,
                 const ModelState& state);

// State before the first block update: seeded maps, simplex-uniform gamma
// (group-weighted in group mode), A random with unit Frobenius norm, G from a
// seeded orthonormal draw, Theta zero.
ModelState initial_state(const std::vector<Matrix>& views, const Outcome& outcome,
                         const FitConfig& config);

// Block-coordinate fit: gamma (FISTA) -> A -> G -> Theta per cycle until the
// relative objective change drops below outer_tol.
ModelState fit(const std::vector<Matrix>& views, const Outcome& outcome,
               const FitConfig& config);

// Smallest rho (per view, bisected to ~0.1% and rounded up) at which the
// first proximal step of the gamma subproblem zeroes every group and zero is
// a fixed point of the initial subproblem.  Only meaningful for
// sparse-group views; simplex views get 0.
std::vector<double> rho_max_per_view(const std::vector<Matrix>& views,
                                     const Outcome& outcome,
                                     const FitConfig& config);

}  // namespace mvrff
