#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mvrff/types.hpp"

namespace mvrff {

// Non-overlapping, exhaustive grouping of variables 0..p-1.
struct GroupStructure {
  std::vector<int> group_of;            // per variable, 0-based group id
  std::vector<std::vector<int>> members;  // per group, variable indices

  int n_groups() const { return static_cast<int>(members.size()); }
  int n_vars() const { return static_cast<int>(group_of.size()); }
  int group_size(int g) const { return static_cast<int>(members[g].size()); }

  // Builds from a per-variable label vector; labels may be arbitrary ints and
  // are compacted to 0..G-1 in order of first appearance.
  static GroupStructure from_labels(std::span<const int> labels);
};

struct PenaltySpec {
  enum class Mode { Simplex, SparseGroup };
  Mode mode = Mode::Simplex;
  double rho = 0.0;
  double eta = 0.5;  // mixing: eta*rho on l1, (1-eta)*rho on group norms
  std::optional<GroupStructure> groups;  // required for SparseGroup

  double eta1() const { return eta * rho; }
  double eta2() const { return (1.0 - eta) * rho; }
  double value(const Vector& gamma) const;  // penalty evaluated at gamma
};

// Euclidean projection onto the probability simplex {x >= 0, sum x = 1}.
Vector project_simplex(const Vector& v);

Vector soft_threshold(const Vector& v, double t);

// Two-stage prox of eta1*||g||_1 + eta2 * sum_l sqrt(p_l) ||g_l||_2.
Vector prox_sparse_group(const Vector& v, double eta1, double eta2,
                         const GroupStructure& groups);

struct FistaOptions {
  double initial_step = 1.0;  // L0
  int max_iter = 500;
  double tol = 1e-6;          // sup-norm change between accepted iterates
  int max_backtracks = 60;
};

struct FistaResult {
  Vector x;
  double objective = 0.0;  // smooth + penalty at x
  int iterations = 0;
  bool converged = false;
  double step = 1.0;       // final accepted L
};

using SmoothValue = std::function<double(const Vector&)>;
using SmoothGrad = std::function<Vector(const Vector&)>;
// prox(v, 1/L): proximal map of the (step-scaled) penalty
using ProxOp = std::function<Vector(const Vector&, double)>;
using PenaltyValue = std::function<double(const Vector&)>;

// Accelerated proximal gradient with backtracking line search and a monotone
// safeguard: if the accelerated candidate would raise the composite
// objective, the plain proximal-gradient point from the current iterate is
// used instead, so accepted objectives never increase.
FistaResult fista(const SmoothValue& f, const SmoothGrad& grad,
                  const ProxOp& prox, const PenaltyValue& penalty,
                  Vector x0, const FistaOptions& opts = {});

}  // namespace mvrff
