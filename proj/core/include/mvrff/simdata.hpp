#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvrff/types.hpp"

namespace mvrff {

// Two-view synthetic generators.  View 1 carries a curve-shaped signal in its
// first signal_count columns; view 2 is 5 * view 1 plus noise, so the views
// share structure and the informative variables are the same in both.
struct SimSpec {
  enum class Scenario { Binary, Continuous };
  Scenario scenario = Scenario::Binary;
  int n1 = 0, n2 = 0;  // binary class sizes, must be even
  int n = 0;           // continuous sample count, must be even
  int p = 50;          // variables per view
  int signal_count = 20;
  double sigma1 = 0.1;    // view-1 noise (class 1 / continuous)
  double sigma12 = 0.1;   // view-1 noise, class 2
  double sigma2 = 0.2;    // view-2 noise
  double sigma_y = 0.3;   // continuous outcome noise
  std::uint64_t seed = 0;
};

struct SimData {
  std::vector<Matrix> views;     // 2 of them
  Outcome outcome;
  std::vector<int> signal_vars;  // 0-based column indices, same in each view
  Vector theta_y;                // continuous scenario: outcome coefficients
};

SimData gen_binary(const SimSpec& spec);
SimData gen_continuous(const SimSpec& spec);

struct SelectionReport {
  int true_pos = 0, false_pos = 0, true_neg = 0, false_neg = 0;
  double tpr = 0.0, fpr = 0.0;
  std::vector<int> selected;  // 0-based
};

// Variables with |gamma_s| > threshold count as selected. Group-penalty fits
// use threshold 0, simplex fits 1/p.
SelectionReport selection_metrics(const Vector& gamma,
                                  std::span<const int> signal_vars,
                                  double threshold);

}  // namespace mvrff
