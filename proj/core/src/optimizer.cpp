#include "mvrff/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "mvrff/model.hpp"
#include "mvrff/rng.hpp"

namespace mvrff {

namespace {

// Shared machinery for the gamma subproblem of one view.  The expensive part
// of both the value and the gradient is arg = (X diag(gamma)) eps' + b, so a
// single-point cache keyed on gamma avoids recomputing it when FISTA asks for
// value and gradient at the same iterate.
struct GammaProblem {
  const Matrix& X;
  const RandomFeatureMap& map;
  const Matrix& A;
  const Matrix& G;
  bool add_linear;  // simplex mode: smooth part carries + 1'gamma
  double n;

  mutable Vector cached_gamma;
  mutable Matrix cached_arg;

  const Matrix& arg_at(const Vector& g) const {
    if (cached_gamma.size() == g.size() &&
        (cached_gamma.array() == g.array()).all())
      return cached_arg;
    cached_arg = (X * g.asDiagonal()) * map.eps.transpose();
    cached_arg.rowwise() += map.b.transpose();
    cached_gamma = g;
    return cached_arg;
  }

  double value(const Vector& g) const {
    const Matrix& arg = arg_at(g);
    Matrix Z = std::numbers::sqrt2 * arg.array().cos();
    double v = (G - Z * A).squaredNorm() / (2.0 * n);
    if (add_linear) v += g.sum();
    return v;
  }

  Vector grad(const Vector& g) const {
    const Matrix& arg = arg_at(g);
    Matrix Z = std::numbers::sqrt2 * arg.array().cos();
    Matrix S = std::numbers::sqrt2 * arg.array().sin();
    Matrix T = (G - Z * A) * A.transpose();  // n x M
    Matrix V = T.cwiseProduct(S) * map.eps;  // n x p
    Vector gr = X.cwiseProduct(V).colwise().sum().transpose() / n;
    if (add_linear) gr.array() += 1.0;
    return gr;
  }
};

FitConfig resolve_config(const FitConfig& cfg, int D, int n,
                         const std::vector<Matrix>& views) {
  FitConfig r = cfg;
  if (r.feature_count == 0) r.feature_count = choose_feature_count(n);
  if (r.components == 0) r.components = select_components(views, 0.1, 1000, cfg.seed);
  require(r.components >= 1, "InvalidArgument", "components must be >= 1");
  require(r.feature_count >= r.components, "InvalidArgument",
          "feature count must be at least the component count");
  require(r.max_outer_iter >= 1 && r.fista_budget >= 1, "InvalidArgument",
          "iteration budgets must be positive");

  if (r.lambda.size() == 1) r.lambda.assign(static_cast<size_t>(D), r.lambda[0]);
  require(static_cast<int>(r.lambda.size()) == D, "InvalidArgument",
          "lambda must have one value per view");
  for (double l : r.lambda)
    require(l >= 0.0 && std::isfinite(l), "InvalidArgument", "lambda must be >= 0");

  if (r.penalty.empty()) r.penalty.assign(static_cast<size_t>(D), PenaltySpec{});
  if (r.penalty.size() == 1 && D > 1)
    r.penalty.assign(static_cast<size_t>(D), r.penalty[0]);
  require(static_cast<int>(r.penalty.size()) == D, "InvalidArgument",
          "penalty must have one spec per view");
  for (int d = 0; d < D; ++d) {
    const PenaltySpec& ps = r.penalty[static_cast<size_t>(d)];
    require(ps.rho >= 0.0 && ps.eta >= 0.0 && ps.eta <= 1.0, "InvalidArgument",
            "need rho >= 0 and eta in [0,1]");
    if (ps.mode == PenaltySpec::Mode::SparseGroup) {
      require(ps.groups.has_value(), "GroupMismatch",
              "sparse-group penalty needs a group structure");
      require(ps.groups->n_vars() == static_cast<int>(views[static_cast<size_t>(d)].cols()),
              "GroupMismatch", "group structure does not cover view " + std::to_string(d + 1));
    }
  }
  return r;
}

Vector initial_gamma(int p, const PenaltySpec& ps) {
  Vector g = Vector::Constant(p, 1.0 / p);  // evenly on the simplex
  if (ps.mode == PenaltySpec::Mode::SparseGroup) {
    // group mode weights each block down by sqrt(p_l)
    for (const auto& mem : ps.groups->members) {
      const double w = std::sqrt(static_cast<double>(mem.size()));
      for (int s : mem) g[s] /= w;
    }
  }
  return g;
}

double max_ortho_error(const Matrix& G) {
  const int r = static_cast<int>(G.cols());
  return (G.transpose() * G - Matrix::Identity(r, r)).cwiseAbs().maxCoeff();
}

}  // namespace

PreparedTarget prepare_target(const Outcome& outcome) {
  PreparedTarget out;
  out.meta.kind = outcome.kind;
  if (outcome.kind == OutcomeKind::Categorical) {
    require(!outcome.labels.empty(), "InvalidArgument", "categorical outcome without labels");
    OptimalScoring s = build_optimal_scores(outcome.labels);
    out.target = s.Ybar;
    out.meta.labels = outcome.labels;
    out.meta.class_names = outcome.class_names;
    if (out.meta.class_names.empty())
      for (size_t k = 0; k < s.counts.size(); ++k)
        out.meta.class_names.push_back(std::to_string(k + 1));
  } else {
    require(outcome.values.size() > 0, "InvalidArgument", "empty outcome");
    require(outcome.values.allFinite(), "NonFiniteInput", "outcome has non-finite entries");
    out.meta.center = outcome.values.colwise().mean();
    out.target = outcome.values.rowwise() - out.meta.center;
  }
  return out;
}

Matrix update_loadings(const Matrix& Z, const Matrix& G, double lambda) {
  require(Z.rows() == G.rows(), "DimensionMismatch", "Z and G row counts differ");
  require(lambda >= 0.0, "InvalidArgument", "lambda must be >= 0");
  const double n = static_cast<double>(Z.rows());
  const int M = static_cast<int>(Z.cols());
  Matrix S = (Z.transpose() * Z) / n;
  S.diagonal().array() += lambda;
  Matrix rhs = Z.transpose() * G / n;
  Matrix A = S.ldlt().solve(rhs);
  const double rel =
      (S * A - rhs).norm() / std::max(1.0, rhs.norm());
  require(A.allFinite() && rel <= 1e-8, "SingularSystem",
          "ridge system not solvable (M=" + std::to_string(M) +
              ", lambda=" + std::to_string(lambda) + ")");
  return A;
}

Matrix update_shared(const Matrix& target, const Matrix& Theta,
                     const std::vector<Matrix>& ZA) {
  require(target.cols() == Theta.cols(), "DimensionMismatch",
          "target and Theta column counts differ");
  Matrix Mfull = target * Theta.transpose();
  for (const Matrix& za : ZA) {
    require(za.rows() == Mfull.rows() && za.cols() == Mfull.cols(),
            "DimensionMismatch", "Z A summand of wrong shape");
    Mfull += za;
  }
  require(Mfull.norm() > 0.0, "RankDeficient",
          "Procrustes input is identically zero");
  Eigen::JacobiSVD<Matrix> svd(Mfull, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

Matrix update_theta(const Matrix& G, const Matrix& target) {
  require(G.rows() == target.rows(), "DimensionMismatch", "G and target row counts differ");
  Matrix gram = G.transpose() * G;
  return gram.llt().solve(G.transpose() * target);
}

double view_fit_value(const Matrix& X, const RandomFeatureMap& map,
                      const Vector& gamma, const Matrix& A, const Matrix& G) {
  GammaProblem prob{X, map, A, G, false, static_cast<double>(X.rows()), {}, {}};
  return prob.value(gamma);
}

Vector gamma_objective_grad(const Matrix& X, const RandomFeatureMap& map,
                            const Vector& gamma, const Matrix& A,
                            const Matrix& G) {
  GammaProblem prob{X, map, A, G, false, static_cast<double>(X.rows()), {}, {}};
  return prob.grad(gamma);
}

double objective(const std::vector<Matrix>& views, const Matrix& target,
                 const ModelState& state) {
  const double n = static_cast<double>(target.rows());
  double obj = association_loss(target, state.G, state.Theta);
  for (size_t d = 0; d < views.size(); ++d) {
    Matrix Z = feature_map(views[d], state.maps[d]);
    obj += (state.G - Z * state.A[d]).squaredNorm() / (2.0 * n);
    obj += 0.5 * state.resolved.lambda[d] * state.A[d].squaredNorm();
    obj += state.resolved.penalty[d].value(state.maps[d].gamma);
  }
  return obj;
}

ModelState initial_state(const std::vector<Matrix>& views, const Outcome& outcome,
                         const FitConfig& config) {
  const int D = static_cast<int>(views.size());
  require(D >= 1, "InvalidArgument", "need at least one view");
  const int n = static_cast<int>(views[0].rows());
  require(n >= 2, "InvalidArgument", "need at least two samples");
  for (const Matrix& v : views) {
    require(static_cast<int>(v.rows()) == n, "DimensionMismatch",
            "views disagree on sample count");
    require(v.allFinite(), "NonFiniteInput", "view has non-finite entries");
  }
  require(outcome.n() == n, "DimensionMismatch", "outcome length differs from views");

  ModelState st;
  st.resolved = resolve_config(config, D, n, views);
  PreparedTarget pt = prepare_target(outcome);
  st.outcome_meta = pt.meta;

  const int M = st.resolved.feature_count;
  const int r = st.resolved.components;

  for (int d = 0; d < D; ++d) {
    const Matrix& X = views[static_cast<size_t>(d)];
    const int p = static_cast<int>(X.cols());
    // The map evaluates cos(eps'(gamma . x) + b), so the kernel the model
    // starts from acts on gamma0-scaled coordinates.  Take the median
    // heuristic on that geometry (fixed initial scaling, computed once);
    // against the raw view the uniform start would put every pairwise
    // kernel entry at ~1 and the first Gram would carry no information.
    const Vector g0 = initial_gamma(p, st.resolved.penalty[static_cast<size_t>(d)]);
    const double nu = median_heuristic_bandwidth(
        X * g0.asDiagonal(), 500000,
        derive_seed(config.seed, "bandwidth", static_cast<std::uint64_t>(d)));
    RandomFeatureMap map = sample_frequencies(
        p, M, nu, derive_seed(config.seed, "frequencies", static_cast<std::uint64_t>(d)));
    map.gamma = g0;
    st.maps.push_back(std::move(map));

    auto eng = make_engine(config.seed, "loadings", static_cast<std::uint64_t>(d));
    std::normal_distribution<double> N(0.0, 1.0);
    Matrix A(M, r);
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < M; ++i) A(i, j) = N(eng);
    A /= A.norm();
    st.A.push_back(std::move(A));
  }

  auto eng = make_engine(config.seed, "shared-init");
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix raw(n, r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < n; ++i) raw(i, j) = N(eng);
  Eigen::HouseholderQR<Matrix> qr(raw);
  st.G = qr.householderQ() * Matrix::Identity(n, r);
  st.Theta = Matrix::Zero(r, pt.target.cols());

  st.objective_trace.push_back(objective(views, pt.target, st));
  st.ortho_trace.push_back(max_ortho_error(st.G));
  return st;
}

namespace {

// One gamma subproblem solve (warm-started FISTA under the view's penalty).
Vector solve_gamma(const Matrix& X, const RandomFeatureMap& map, const Matrix& A,
                   const Matrix& G, const PenaltySpec& ps, const Vector& warm,
                   const FitConfig& cfg) {
  const bool simplex = ps.mode == PenaltySpec::Mode::Simplex;
  GammaProblem prob{X, map, A, G, simplex, static_cast<double>(X.rows()), {}, {}};
  SmoothValue f = [&prob](const Vector& g) { return prob.value(g); };
  SmoothGrad df = [&prob](const Vector& g) { return prob.grad(g); };
  ProxOp prox;
  PenaltyValue pen;
  if (simplex) {
    prox = [](const Vector& v, double) { return project_simplex(v); };
    pen = [](const Vector&) { return 0.0; };
  } else {
    const double e1 = ps.eta1(), e2 = ps.eta2();
    const GroupStructure& groups = *ps.groups;
    prox = [e1, e2, &groups](const Vector& v, double step) {
      return prox_sparse_group(v, e1 * step, e2 * step, groups);
    };
    pen = [&ps](const Vector& g) { return ps.value(g); };
  }
  FistaOptions opts = cfg.fista;
  opts.max_iter = cfg.fista_budget;
  return fista(f, df, prox, pen, warm, opts).x;
}

ModelState fit_single(const std::vector<Matrix>& views, const Outcome& outcome,
                      const FitConfig& config) {
  ModelState st = initial_state(views, outcome, config);
  PreparedTarget pt = prepare_target(outcome);
  const int D = static_cast<int>(views.size());
  const FitConfig& cfg = st.resolved;

  std::vector<Matrix> Z(static_cast<size_t>(D));
  for (int cycle = 1; cycle <= cfg.max_outer_iter; ++cycle) {
    for (int d = 0; d < D; ++d) {
      RandomFeatureMap& map = st.maps[static_cast<size_t>(d)];
      map.gamma = solve_gamma(views[static_cast<size_t>(d)], map,
                              st.A[static_cast<size_t>(d)], st.G,
                              cfg.penalty[static_cast<size_t>(d)], map.gamma, cfg);
      Z[static_cast<size_t>(d)] = feature_map(views[static_cast<size_t>(d)], map);
    }
    std::vector<Matrix> ZA(static_cast<size_t>(D));
    for (int d = 0; d < D; ++d) {
      st.A[static_cast<size_t>(d)] =
          update_loadings(Z[static_cast<size_t>(d)], st.G, cfg.lambda[static_cast<size_t>(d)]);
      ZA[static_cast<size_t>(d)] = Z[static_cast<size_t>(d)] * st.A[static_cast<size_t>(d)];
    }
    st.G = update_shared(pt.target, st.Theta, ZA);
    st.Theta = update_theta(st.G, pt.target);

    st.objective_trace.push_back(objective(views, pt.target, st));
    st.ortho_trace.push_back(max_ortho_error(st.G));
    st.iterations = cycle;

    const double prev = st.objective_trace[st.objective_trace.size() - 2];
    const double cur = st.objective_trace.back();
    if (std::abs(cur - prev) / std::max(1.0, std::abs(prev)) <= cfg.outer_tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

}  // namespace

// The alternating fit is nonconvex and an unlucky frequency draw can land in a
// poor basin; extra draws keep the penalty and data fixed, so final objectives
// are directly comparable.
ModelState fit(const std::vector<Matrix>& views, const Outcome& outcome,
               const FitConfig& config) {
  require(config.restarts >= 1, "InvalidConfig", "restarts must be at least 1");
  ModelState best = fit_single(views, outcome, config);
  for (int k = 1; k < config.restarts; ++k) {
    FitConfig alt = config;
    alt.seed = derive_seed(config.seed, "restart", static_cast<std::uint64_t>(k));
    ModelState st = fit_single(views, outcome, alt);
    if (st.objective_trace.back() < best.objective_trace.back()) best = std::move(st);
  }
  return best;
}

std::vector<double> rho_max_per_view(const std::vector<Matrix>& views,
                                     const Outcome& outcome,
                                     const FitConfig& config) {
  ModelState st = initial_state(views, outcome, config);
  const FitConfig& cfg = st.resolved;
  std::vector<double> out(views.size(), 0.0);

  for (size_t d = 0; d < views.size(); ++d) {
    const PenaltySpec& ps = cfg.penalty[d];
    if (ps.mode != PenaltySpec::Mode::SparseGroup) continue;
    const GroupStructure& groups = *ps.groups;
    const double eta = ps.eta;
    const double L0 = cfg.fista.initial_step;

    GammaProblem prob{views[d], st.maps[d], st.A[d], st.G, false,
                      static_cast<double>(views[d].rows()), {}, {}};
    const Vector g0 = st.maps[d].gamma;
    const Vector v_first = g0 - prob.grad(g0) / L0;  // first proximal argument
    const Vector v_zero = -prob.grad(Vector::Zero(g0.size()));  // step scale cancels

    auto zeroed = [&](const Vector& v, double rho, double step_scale) {
      Vector r = prox_sparse_group(v, eta * rho * step_scale,
                                   (1.0 - eta) * rho * step_scale, groups);
      return r.isZero(0.0);
    };
    auto smallest = [&](const Vector& v, double step_scale) {
      double hi = 1.0;
      while (!zeroed(v, hi, step_scale)) {
        hi *= 2.0;
        require(hi < 1e12, "InvalidArgument", "rho_max search diverged");
      }
      double lo = 0.0;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (zeroed(v, mid, step_scale) ? hi : lo) = mid;
      }
      return hi;
    };
    out[d] = std::max(smallest(v_first, 1.0 / L0), smallest(v_zero, 1.0)) *
             (1.0 + 1e-9);
  }
  return out;
}

}  // namespace mvrff
