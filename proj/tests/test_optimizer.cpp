#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mvrff/optimizer.hpp"
#include "mvrff/rng.hpp"
#include "oracles.hpp"

using namespace mvrff;

namespace {

Matrix randn(int r, int c, std::mt19937_64& eng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = N(eng);
  return m;
}

Outcome continuous_outcome(const Vector& y) {
  Outcome o;
  o.kind = OutcomeKind::Continuous;
  o.values = y;
  return o;
}

}  // namespace

TEST_CASE("update_loadings: identity features with no ridge reproduce G") {
  std::mt19937_64 eng(7);
  const int n = 6;
  Matrix G = randn(n, 2, eng);
  Matrix A = update_loadings(Matrix::Identity(n, n), G, 0.0);
  CHECK((A - G).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("update_loadings: stronger ridge shrinks the loadings") {
  std::mt19937_64 eng(11);
  Matrix Z = randn(12, 5, eng);
  Matrix G = randn(12, 2, eng);
  double prev = -1.0;
  for (double lambda : {0.1, 1.0, 10.0, 100.0}) {
    const double norm = update_loadings(Z, G, lambda).norm();
    if (prev >= 0.0) CHECK(norm < prev);
    prev = norm;
  }
}

TEST_CASE("update_loadings matches an independent QR ridge solve") {
  std::mt19937_64 eng(23);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix Z = randn(10, 4, eng);
    Matrix G = randn(10, 2, eng);
    Matrix A = update_loadings(Z, G, 1.0);
    Matrix ref = oracle::ridge_via_qr(Z, G, 1.0);
    CHECK((A - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("update_shared: orthonormal input passes through") {
  std::mt19937_64 eng(31);
  Matrix Q = oracle::random_orthonormal(9, 3, eng);
  Matrix G = update_shared(Q, Matrix::Identity(3, 3), {});
  CHECK((G - Q).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("update_shared is invariant to positive rescaling of its input") {
  std::mt19937_64 eng(37);
  Matrix W = randn(8, 2, eng);
  Matrix G1 = update_shared(W, Matrix::Identity(2, 2), {});
  Matrix G2 = update_shared(3.7 * W, Matrix::Identity(2, 2), {});
  CHECK((G1 - G2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("update_shared beats random orthonormal candidates on the trace") {
  std::mt19937_64 eng(41);
  Matrix W = randn(8, 2, eng);
  Matrix G = update_shared(W, Matrix::Identity(2, 2), {});
  CHECK((G.transpose() * G - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
  const double best = (W.transpose() * G).trace();
  for (int rep = 0; rep < 10000; ++rep) {
    Matrix Q = oracle::random_orthonormal(8, 2, eng);
    CHECK((W.transpose() * Q).trace() <= best + 1e-9);
  }
}

TEST_CASE("update_shared rejects an identically zero input") {
  CHECK_THROWS_AS(update_shared(Matrix::Zero(4, 2), Matrix::Identity(2, 2), {}),
                  Error);
}

TEST_CASE("update_theta recovers an exact factor and zeroes orthogonal targets") {
  std::mt19937_64 eng(43);
  Matrix G = oracle::random_orthonormal(10, 3, eng);
  Matrix Theta_true = randn(3, 2, eng);
  Matrix Theta = update_theta(G, G * Theta_true);
  CHECK((Theta - Theta_true).cwiseAbs().maxCoeff() < 1e-10);

  // component of the target orthogonal to span(G)
  Matrix raw = randn(10, 2, eng);
  Matrix perp = raw - G * (G.transpose() * raw);
  CHECK(update_theta(G, perp).cwiseAbs().maxCoeff() < 1e-10);

  // normal equations hold for a generic target
  Matrix target = randn(10, 2, eng);
  Matrix Th = update_theta(G, target);
  CHECK((G.transpose() * (target - G * Th)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gamma gradient vanishes when loadings are zero") {
  std::mt19937_64 eng(47);
  Matrix X = randn(5, 4, eng);
  RandomFeatureMap map = sample_frequencies(4, 6, 1.3, 99);
  Vector gamma = Vector::Constant(4, 0.25);
  Matrix A = Matrix::Zero(6, 2);
  Matrix G = randn(5, 2, eng);
  CHECK(gamma_objective_grad(X, map, gamma, A, G).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gamma gradient component for an all-zero variable is zero") {
  std::mt19937_64 eng(53);
  Matrix X = randn(5, 4, eng);
  X.col(2).setZero();
  RandomFeatureMap map = sample_frequencies(4, 6, 0.9, 17);
  Vector gamma(4);
  gamma << 0.4, 0.1, 0.3, 0.2;
  Matrix A = randn(6, 2, eng);
  Matrix G = randn(5, 2, eng);
  CHECK(gamma_objective_grad(X, map, gamma, A, G)[2] == 0.0);
}

TEST_CASE("gamma gradient agrees with central differences") {
  std::mt19937_64 eng(59);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix X = randn(5, 4, eng);
    RandomFeatureMap map =
        sample_frequencies(4, 6, 1.1, 1000 + static_cast<std::uint64_t>(rep));
    Matrix A = randn(6, 2, eng);
    Matrix G = randn(5, 2, eng);
    Vector gamma(4);
    for (int s = 0; s < 4; ++s) gamma[s] = 0.05 + std::abs(N(eng)) * 0.3;

    Vector g = gamma_objective_grad(X, map, gamma, A, G);
    Vector fd = oracle::central_differences(
        [&](const Vector& v) { return view_fit_value(X, map, v, A, G); }, gamma,
        1e-6);
    const double rel = (g - fd).norm() / std::max(1e-12, g.norm());
    CHECK(rel <= 1e-5);
  }
}

TEST_CASE("objective of the zeroed state is the centered target energy plus D*r/(2n)") {
  std::mt19937_64 eng(61);
  const int n = 12, p = 3, M = 5, r = 2, D = 2;
  std::vector<Matrix> views;
  ModelState st;
  for (int d = 0; d < D; ++d) {
    views.push_back(randn(n, p, eng));
    RandomFeatureMap map = sample_frequencies(p, M, 1.0, 5 + static_cast<std::uint64_t>(d));
    map.gamma = Vector::Zero(p);
    st.maps.push_back(map);
    st.A.push_back(Matrix::Zero(M, r));
  }
  st.G = oracle::random_orthonormal(n, r, eng);
  st.Theta = Matrix::Zero(r, 1);
  st.resolved.lambda = {1.0, 1.0};
  st.resolved.penalty = {PenaltySpec{}, PenaltySpec{}};

  Vector y = randn(n, 1, eng);
  Matrix target = y.array() - y.mean();
  const double expected =
      target.squaredNorm() / (2.0 * n) + static_cast<double>(D * r) / (2.0 * n);
  CHECK(objective(views, target, st) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("objective matches independent scalar arithmetic on a tiny instance") {
  // n=3, p=2, M=2, r=1, one view; every term recomputed with plain loops.
  Matrix X(3, 2);
  X << 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
  Matrix eps(2, 2);
  eps << 1.0, 2.0, -1.0, 0.5;
  Vector b(2);
  b << 0.3, 1.1;
  Vector gamma(2);
  gamma << 0.5, 0.25;
  Matrix A(2, 1);
  A << 0.7, -0.4;
  Vector G(3);
  G << 0.2, -0.1, 0.3;
  Vector target(3);
  target << 0.5, -0.2, -0.3;
  const double theta = 0.9, lambda = 0.8;

  ModelState st;
  RandomFeatureMap map;
  map.eps = eps;
  map.b = b;
  map.gamma = gamma;
  map.nu = 1.0;
  st.maps.push_back(map);
  st.A.push_back(A);
  st.G = G;
  st.Theta = Matrix::Constant(1, 1, theta);
  st.resolved.lambda = {lambda};
  st.resolved.penalty = {PenaltySpec{}};

  double loss = 0.0, viewfit = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double li = target[i] - G[i] * theta;
    loss += li * li;
    double za = 0.0;
    for (int m = 0; m < 2; ++m) {
      double arg = b[m];
      for (int s = 0; s < 2; ++s) arg += X(i, s) * gamma[s] * eps(m, s);
      za += std::sqrt(2.0) * std::cos(arg) * A(m, 0);
    }
    const double ri = G[i] - za;
    viewfit += ri * ri;
  }
  double expected = loss / 6.0 + viewfit / 6.0;
  expected += 0.5 * lambda * (0.7 * 0.7 + 0.4 * 0.4);
  expected += gamma[0] + gamma[1];  // simplex penalty reports 1'gamma

  CHECK(objective({X}, target, st) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fit recovers a shared linear signal and is deterministic") {
  std::mt19937_64 eng(101);
  const int n = 200, p = 20;
  Matrix X = randn(n, p, eng);
  Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinU);
  Matrix U3 = svd.matrixU().leftCols(3);
  Vector theta_y(3);
  theta_y << 3.0, -2.0, 1.5;
  Vector y = U3 * theta_y;

  std::vector<Matrix> views = {X, X};
  FitConfig cfg;
  cfg.feature_count = 100;
  cfg.components = 3;
  cfg.max_outer_iter = 60;
  cfg.seed = 5;

  ModelState st = fit(views, continuous_outcome(y), cfg);

  // shared objective trace never increases and G stays orthonormal
  for (size_t t = 1; t < st.objective_trace.size(); ++t)
    CHECK(st.objective_trace[t] <= st.objective_trace[t - 1] + 1e-8);
  for (double o : st.ortho_trace) CHECK(o <= 1e-8);

  // final gammas live on the simplex
  for (const auto& map : st.maps) {
    CHECK(map.gamma.minCoeff() >= 0.0);
    CHECK(std::abs(map.gamma.sum() - 1.0) <= 1e-10);
  }

  // training predictions capture at least 90% of the outcome variance
  const double mean_y = y.mean();
  Vector yhat = (st.G * st.Theta).col(0).array() + st.outcome_meta.center(0);
  const double mse = (yhat - y).squaredNorm() / n;
  const double var_y = (y.array() - mean_y).matrix().squaredNorm() / n;
  CHECK(mse <= 0.1 * var_y);

  // bitwise determinism under the same seed
  ModelState st2 = fit(views, continuous_outcome(y), cfg);
  REQUIRE(st2.objective_trace.size() == st.objective_trace.size());
  for (size_t t = 0; t < st.objective_trace.size(); ++t)
    CHECK(st2.objective_trace[t] == st.objective_trace[t]);
  for (size_t d = 0; d < st.maps.size(); ++d)
    CHECK((st2.maps[d].gamma.array() == st.maps[d].gamma.array()).all());
}

TEST_CASE("fitted loadings and regression block are perturbation-optimal") {
  std::mt19937_64 eng(103);
  const int n = 80, p = 10;
  Matrix X = randn(n, p, eng);
  Vector y = X.col(0) - 0.5 * X.col(3) + 0.1 * randn(n, 1, eng).col(0);
  std::vector<Matrix> views = {X};

  FitConfig cfg;
  cfg.feature_count = 40;
  cfg.components = 2;
  cfg.max_outer_iter = 25;
  cfg.seed = 9;
  ModelState st = fit(views, continuous_outcome(y), cfg);
  Matrix target = prepare_target(continuous_outcome(y)).target;
  const double base = objective(views, target, st);

  for (int rep = 0; rep < 50; ++rep) {
    ModelState probe = st;
    if (rep % 2 == 0) {
      Matrix delta = randn(40, 2, eng);
      probe.A[0] += 1e-3 * delta / delta.norm();
    } else {
      Matrix delta = randn(2, 1, eng);
      probe.Theta += 1e-3 * delta / delta.norm();
    }
    CHECK(objective(views, target, probe) >= base - 1e-12);
  }
}

TEST_CASE("rho at its computed maximum drives every gamma to zero") {
  std::mt19937_64 eng(107);
  const int n = 60, p = 12;
  Matrix X1 = randn(n, p, eng);
  Matrix X2 = randn(n, p, eng);
  Vector y = X1.col(1) + randn(n, 1, eng).col(0) * 0.2;
  std::vector<Matrix> views = {X1, X2};

  std::vector<int> labels(p);
  for (int s = 0; s < p; ++s) labels[s] = s / 4;  // three groups of four

  PenaltySpec ps;
  ps.mode = PenaltySpec::Mode::SparseGroup;
  ps.eta = 0.5;
  ps.groups = GroupStructure::from_labels(labels);

  FitConfig cfg;
  cfg.feature_count = 30;
  cfg.components = 2;
  cfg.max_outer_iter = 8;
  cfg.penalty = {ps, ps};
  cfg.seed = 13;

  std::vector<double> rho_max = rho_max_per_view(views, continuous_outcome(y), cfg);
  REQUIRE(rho_max.size() == 2);
  for (double r : rho_max) CHECK(r > 0.0);

  for (size_t d = 0; d < 2; ++d) cfg.penalty[d].rho = rho_max[d];
  ModelState st = fit(views, continuous_outcome(y), cfg);
  for (const auto& map : st.maps) CHECK(map.gamma.isZero(0.0));

  // rho_max is tight: the zeroing conditions fail slightly below it
  ModelState s0 = initial_state(views, continuous_outcome(y), cfg);
  for (size_t d = 0; d < 2; ++d) {
    const Matrix& X = views[d];
    const Vector& g0 = s0.maps[d].gamma;
    Vector v_first = g0 - gamma_objective_grad(X, s0.maps[d], g0, s0.A[d], s0.G);
    Vector v_zero = -gamma_objective_grad(X, s0.maps[d], Vector::Zero(p), s0.A[d], s0.G);
    auto zeroed = [&](const Vector& v, double rho) {
      return prox_sparse_group(v, 0.5 * rho, 0.5 * rho, *ps.groups).isZero(0.0);
    };
    CHECK(zeroed(v_first, rho_max[d]));
    CHECK(zeroed(v_zero, rho_max[d]));
    const double below = rho_max[d] / 1.05;
    CHECK((!zeroed(v_first, below) || !zeroed(v_zero, below)));
  }
}

TEST_CASE("categorical fit stays monotone with an orthonormal shared factor") {
  std::mt19937_64 eng(109);
  const int n_per = 30, p = 5;
  Matrix X1(2 * n_per, p), X2(2 * n_per, p);
  std::vector<int> labels(2 * n_per);
  for (int i = 0; i < 2 * n_per; ++i) {
    const double shift = i < n_per ? -2.0 : 2.0;
    labels[i] = i < n_per ? 1 : 2;
    X1.row(i) = randn(1, p, eng).array() + shift;
    X2.row(i) = randn(1, p, eng).array() + 0.5 * shift;
  }
  Outcome o;
  o.kind = OutcomeKind::Categorical;
  o.labels = labels;

  FitConfig cfg;
  cfg.feature_count = 30;
  cfg.components = 2;
  cfg.max_outer_iter = 30;
  cfg.seed = 21;
  ModelState st = fit({X1, X2}, o, cfg);

  for (size_t t = 1; t < st.objective_trace.size(); ++t)
    CHECK(st.objective_trace[t] <= st.objective_trace[t - 1] + 1e-8);
  for (double ortho : st.ortho_trace) CHECK(ortho <= 1e-8);
  CHECK(st.Theta.rows() == 2);
  CHECK(st.Theta.cols() == 1);  // K - 1 score columns for K = 2
  CHECK(st.objective_trace.back() < st.objective_trace.front());
}
