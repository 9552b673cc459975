#include "mvrff/prox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mvrff {

GroupStructure GroupStructure::from_labels(std::span<const int> labels) {
  require(!labels.empty(), "InvalidArgument", "empty group labeling");
  GroupStructure g;
  g.group_of.resize(labels.size());
  std::vector<int> seen;  // label value per compacted id, in first-appearance order
  for (size_t i = 0; i < labels.size(); ++i) {
    auto it = std::find(seen.begin(), seen.end(), labels[i]);
    int id;
    if (it == seen.end()) {
      id = static_cast<int>(seen.size());
      seen.push_back(labels[i]);
      g.members.emplace_back();
    } else {
      id = static_cast<int>(it - seen.begin());
    }
    g.group_of[i] = id;
    g.members[id].push_back(static_cast<int>(i));
  }
  return g;
}

double PenaltySpec::value(const Vector& gamma) const {
  if (mode == Mode::Simplex) return gamma.sum();
  require(groups.has_value(), "GroupMismatch", "sparse-group penalty without groups");
  double v = eta1() * gamma.lpNorm<1>();
  for (const auto& mem : groups->members) {
    double ss = 0.0;
    for (int s : mem) ss += gamma[s] * gamma[s];
    v += eta2() * std::sqrt(static_cast<double>(mem.size())) * std::sqrt(ss);
  }
  return v;
}

Vector project_simplex(const Vector& v) {
  require(v.allFinite(), "NonFiniteInput", "simplex projection of non-finite vector");
  const int p = static_cast<int>(v.size());
  // sort-and-threshold: tau from the largest prefix whose entries stay positive
  std::vector<double> u(v.data(), v.data() + p);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, tau = u[0] - 1.0;
  for (int j = 0; j < p; ++j) {
    css += u[j];
    if (u[j] - (css - 1.0) / (j + 1) > 0.0) tau = (css - 1.0) / (j + 1);
  }
  return v.unaryExpr([tau](double x) { return std::max(x - tau, 0.0); });
}

Vector soft_threshold(const Vector& v, double t) {
  require(t >= 0.0, "InvalidArgument", "negative soft-threshold");
  return v.unaryExpr([t](double x) {
    double m = std::abs(x) - t;
    return m > 0.0 ? (x > 0.0 ? m : -m) : 0.0;
  });
}

Vector prox_sparse_group(const Vector& v, double eta1, double eta2,
                         const GroupStructure& groups) {
  require(groups.n_vars() == static_cast<int>(v.size()), "GroupMismatch",
          "group structure covers " + std::to_string(groups.n_vars()) +
              " variables, vector has " + std::to_string(v.size()));
  Vector out = soft_threshold(v, eta1);
  for (const auto& mem : groups.members) {
    double ss = 0.0;
    for (int s : mem) ss += out[s] * out[s];
    const double norm = std::sqrt(ss);
    const double thr = eta2 * std::sqrt(static_cast<double>(mem.size()));
    if (norm <= thr) {
      for (int s : mem) out[s] = 0.0;
    } else {
      const double scale = std::max(1.0 - thr / norm, 0.0);
      for (int s : mem) out[s] *= scale;
    }
  }
  return out;
}

namespace {

bool finite(double x) { return std::isfinite(x); }

// One backtracking search: doubles L until the Armijo–Goldstein bound holds,
// returns the prox point.  L only ever grows.
Vector backtracked_step(const SmoothValue& f, const Vector& base, double f_base,
                        const Vector& g_base, const ProxOp& prox, double& L,
                        int max_backtracks) {
  for (int bt = 0;; ++bt) {
    Vector cand = prox(base - g_base / L, 1.0 / L);
    double fc = f(cand);
    require(finite(fc) && cand.allFinite(), "NonFiniteObjective",
            "smooth objective became non-finite during line search");
    Vector d = cand - base;
    double bound = f_base + g_base.dot(d) + 0.5 * L * d.squaredNorm();
    if (fc <= bound + 1e-12 * std::max(1.0, std::abs(bound))) return cand;
    require(bt < max_backtracks, "BacktrackLimit",
            "no admissible step after " + std::to_string(max_backtracks) +
                " doublings");
    L *= 2.0;
  }
}

}  // namespace

FistaResult fista(const SmoothValue& f, const SmoothGrad& grad,
                  const ProxOp& prox, const PenaltyValue& penalty, Vector x0,
                  const FistaOptions& opts) {
  require(opts.initial_step > 0.0, "InvalidArgument", "L0 must be positive");
  Vector x_prev = x0, x_cur = x0;
  double t_prev = 1.0, t_cur = 1.0;  // beta^{t-2}, beta^{t-1}; alpha^1 = 0
  double L = opts.initial_step;

  double F_cur = f(x_cur) + penalty(x_cur);
  require(finite(F_cur), "NonFiniteObjective", "objective non-finite at start");

  FistaResult res;
  res.x = x_cur;
  res.objective = F_cur;

  for (int it = 1; it <= opts.max_iter; ++it) {
    const double alpha = (t_prev - 1.0) / t_cur;
    Vector y = x_cur + alpha * (x_cur - x_prev);
    double fy = f(y);
    Vector gy = grad(y);
    require(finite(fy) && gy.allFinite(), "NonFiniteObjective",
            "objective or gradient non-finite at extrapolated point");

    Vector cand = backtracked_step(f, y, fy, gy, prox, L, opts.max_backtracks);
    double F_cand = f(cand) + penalty(cand);

    if (!(F_cand <= F_cur + 1e-12 * std::max(1.0, std::abs(F_cur)))) {
      // accelerated point went uphill: plain proximal-gradient step instead,
      // which the descent lemma keeps non-increasing
      double fx = f(x_cur);
      Vector gx = grad(x_cur);
      require(finite(fx) && gx.allFinite(), "NonFiniteObjective",
              "objective or gradient non-finite at current iterate");
      cand = backtracked_step(f, x_cur, fx, gx, prox, L, opts.max_backtracks);
      F_cand = f(cand) + penalty(cand);
      require(finite(F_cand), "NonFiniteObjective", "composite objective non-finite");
    }

    const double change = (cand - x_cur).lpNorm<Eigen::Infinity>();
    x_prev = x_cur;
    x_cur = cand;
    F_cur = std::min(F_cur, F_cand);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_cur * t_cur));
    t_prev = t_cur;
    t_cur = t_next;
    res.iterations = it;
    if (change <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.x = x_cur;
  res.objective = F_cur;
  res.step = L;
  return res;
}

}  // namespace mvrff
