#include "mvrff/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvrff/rng.hpp"

namespace mvrff {

int choose_feature_count(int n) {
  require(n >= 2, "InvalidArgument", "need at least two samples");
  if (n > 1000) return 300;
  return std::max(2, n / 2);
}

int pick_component_count(const std::vector<double>& eigenvalues, double threshold) {
  const int m = static_cast<int>(eigenvalues.size());
  require(m >= 1, "InvalidArgument", "empty spectrum");
  require(threshold > 0.0, "InvalidArgument", "threshold must be positive");
  for (int i = 0; i + 1 < m; ++i)
    require(eigenvalues[static_cast<size_t>(i)] >=
                eigenvalues[static_cast<size_t>(i) + 1] - 1e-12,
            "InvalidArgument", "spectrum must be non-increasing");

  // Flat spectrum carries no elbow to cut at.
  if (eigenvalues.front() - eigenvalues.back() <=
      1e-12 * std::max(1.0, eigenvalues.front()))
    throw Error("DegenerateGram", "all eigenvalues equal; cannot pick a component count");

  // Walk the relative drops until they flatten out; keep everything strictly
  // before the first negligible drop.  A zero tail counts as flat.
  for (int rp = 2; rp <= m; ++rp) {
    const double prev = eigenvalues[static_cast<size_t>(rp) - 2];
    const double drop =
        prev > 0.0 ? (prev - eigenvalues[static_cast<size_t>(rp) - 1]) / prev : 0.0;
    if (drop < threshold) return std::max(1, rp - 1);
  }
  return m;  // never flattens: keep the whole spectrum
}

int select_components(const std::vector<Matrix>& views, double threshold,
                      int max_rows, std::uint64_t seed) {
  require(!views.empty(), "InvalidArgument", "need at least one view");
  int best = 0;
  for (size_t d = 0; d < views.size(); ++d) {
    const Matrix& X = views[d];
    const int n = static_cast<int>(X.rows());
    require(n >= 2, "InvalidArgument", "need at least two samples");

    Matrix sub;
    if (n > max_rows) {
      std::vector<int> idx(static_cast<size_t>(n));
      std::iota(idx.begin(), idx.end(), 0);
      auto eng = make_engine(seed, "component-rows", static_cast<std::uint64_t>(d));
      std::shuffle(idx.begin(), idx.end(), eng);
      sub.resize(max_rows, X.cols());
      std::sort(idx.begin(), idx.begin() + max_rows);
      for (int i = 0; i < max_rows; ++i) sub.row(i) = X.row(idx[static_cast<size_t>(i)]);
    } else {
      sub = X;
    }

    const double nu = median_heuristic_bandwidth(sub, 500000, seed);
    Matrix K = exact_gaussian_gram(sub, nu);
    Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
    Vector rev = es.eigenvalues().reverse();  // descending
    std::vector<double> ev(rev.data(), rev.data() + rev.size());

    int r_view;
    try {
      r_view = pick_component_count(ev, threshold);
    } catch (const Error& e) {
      if (std::string(e.kind()) == "DegenerateGram")
        r_view = 1;
      else
        throw;
    }
    best = (d == 0) ? r_view : std::min(best, r_view);
  }
  return std::max(1, best);
}

FittedModel make_model(ModelState state) {
  require(!state.maps.empty(), "UnfittedModel", "state has no feature maps");
  FittedModel m;
  m.U_train = state.G * state.Theta;
  m.state = std::move(state);
  return m;
}

namespace {

void check_target_views(const std::vector<Matrix>& views, const FittedModel& m) {
  require(!m.state.maps.empty(), "UnfittedModel", "model has no feature maps");
  require(views.size() == m.state.maps.size(), "DimensionMismatch",
          "expected " + std::to_string(m.state.maps.size()) + " views, got " +
              std::to_string(views.size()));
  const auto n = views[0].rows();
  for (size_t d = 0; d < views.size(); ++d) {
    require(views[d].rows() == n, "DimensionMismatch",
            "target views disagree on row count");
    require(static_cast<int>(views[d].cols()) == m.state.maps[d].n_vars(),
            "DimensionMismatch",
            "view " + std::to_string(d + 1) + " has " +
                std::to_string(views[d].cols()) + " variables, model expects " +
                std::to_string(m.state.maps[d].n_vars()));
  }
}

Matrix standardized(const Matrix& X, const FittedModel& m, size_t d) {
  if (m.view_center.empty()) return X;
  Matrix out = X.rowwise() - m.view_center[d];
  out.array().rowwise() /= m.view_scale[d].array();
  return out;
}

}  // namespace

Matrix embed_target(const std::vector<Matrix>& views_target, const FittedModel& m) {
  check_target_views(views_target, m);
  Matrix sum = Matrix::Zero(views_target[0].rows(), m.state.A[0].cols());
  for (size_t d = 0; d < views_target.size(); ++d) {
    Matrix Z = feature_map(standardized(views_target[d], m, d), m.state.maps[d]);
    sum += Z * m.state.A[d];
  }
  require(sum.norm() > 0.0, "RankDeficient", "target embedding input is zero");
  Eigen::JacobiSVD<Matrix> svd(sum, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

Prediction predict(const std::vector<Matrix>& views_target, const FittedModel& m) {
  Matrix G_t = embed_target(views_target, m);
  Prediction out;
  out.scores = G_t * m.state.Theta;
  const OutcomeMeta& meta = m.state.outcome_meta;
  if (meta.kind == OutcomeKind::Categorical) {
    require(!meta.labels.empty(), "UnfittedModel", "model lacks training labels");
    out.labels = nearest_centroid(out.scores, m.U_train, meta.labels);
  } else {
    out.values = out.scores.rowwise() + meta.center;
  }
  return out;
}

// Categorical outcomes are stratified per class so every fold keeps roughly
// the training class proportions.
std::vector<int> cv_fold_assignment(const Outcome& outcome, int n, int folds,
                                    std::uint64_t seed) {
  require(n >= 1 && folds >= 1, "InvalidArgument", "need positive n and folds");
  std::vector<int> fold_of(static_cast<size_t>(n), 0);
  auto eng = make_engine(seed, "cv-folds");
  if (outcome.kind == OutcomeKind::Categorical) {
    const int K = outcome.n_classes();
    for (int k = 1; k <= K; ++k) {
      std::vector<int> rows;
      for (int i = 0; i < n; ++i)
        if (outcome.labels[static_cast<size_t>(i)] == k) rows.push_back(i);
      std::shuffle(rows.begin(), rows.end(), eng);
      for (size_t j = 0; j < rows.size(); ++j)
        fold_of[static_cast<size_t>(rows[j])] = static_cast<int>(j) % folds;
    }
  } else {
    std::vector<int> rows(static_cast<size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), eng);
    for (size_t j = 0; j < rows.size(); ++j)
      fold_of[static_cast<size_t>(rows[j])] = static_cast<int>(j) % folds;
  }
  return fold_of;
}

namespace {

Matrix take_rows(const Matrix& X, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

Outcome take_outcome(const Outcome& o, const std::vector<int>& rows) {
  Outcome out;
  out.kind = o.kind;
  out.class_names = o.class_names;
  if (o.kind == OutcomeKind::Categorical) {
    out.labels.reserve(rows.size());
    for (int i : rows) out.labels.push_back(o.labels[static_cast<size_t>(i)]);
  } else {
    out.values = take_rows(o.values, rows);
  }
  return out;
}

double holdout_score(const Prediction& pred, const Outcome& truth) {
  if (truth.kind == OutcomeKind::Categorical) {
    int wrong = 0;
    for (size_t i = 0; i < truth.labels.size(); ++i)
      if (pred.labels[i] != truth.labels[i]) wrong++;
    return static_cast<double>(wrong) / static_cast<double>(truth.labels.size());
  }
  return (pred.values - truth.values).squaredNorm() /
         static_cast<double>(truth.values.size());
}

}  // namespace

CvResult cross_validate(const std::vector<Matrix>& views, const Outcome& outcome,
                        const FitConfig& config, const CvPlan& plan) {
  const int D = static_cast<int>(views.size());
  require(D >= 1, "InvalidArgument", "need at least one view");
  require(plan.folds >= 2, "InvalidArgument", "need at least two folds");
  require(static_cast<int>(plan.rho_grid.size()) == D, "InvalidArgument",
          "rho grid must cover every view");
  long total = 1;
  for (const auto& g : plan.rho_grid) {
    require(!g.empty(), "InvalidArgument", "empty rho grid for a view");
    for (double r : g)
      require(r >= 0.0 && std::isfinite(r), "InvalidArgument", "rho must be >= 0");
    total *= static_cast<long>(g.size());
  }

  // candidate combination indices, view 0 slowest
  std::vector<long> picks;
  if (plan.search == CvPlan::Search::Random) {
    require(plan.random_draws >= 1 && plan.random_draws <= total, "InvalidArgument",
            "random draw count must be in [1, total combinations]");
    std::vector<long> all(static_cast<size_t>(total));
    std::iota(all.begin(), all.end(), 0L);
    auto eng = make_engine(plan.seed, "cv-combos");
    std::sample(all.begin(), all.end(), std::back_inserter(picks),
                static_cast<size_t>(plan.random_draws), eng);
    std::sort(picks.begin(), picks.end());
  } else {
    picks.resize(static_cast<size_t>(total));
    std::iota(picks.begin(), picks.end(), 0L);
  }

  const int n = static_cast<int>(views[0].rows());
  std::vector<int> fold_of = cv_fold_assignment(outcome, n, plan.folds, plan.seed);

  CvResult res;
  for (long code : picks) {
    CvCell cell;
    long rest = code;
    cell.rho.resize(static_cast<size_t>(D));
    for (int d = D - 1; d >= 0; --d) {
      const auto& g = plan.rho_grid[static_cast<size_t>(d)];
      cell.rho[static_cast<size_t>(d)] = g[static_cast<size_t>(rest % static_cast<long>(g.size()))];
      rest /= static_cast<long>(g.size());
    }

    FitConfig cfg = config;
    if (cfg.penalty.empty())
      cfg.penalty.assign(static_cast<size_t>(D), PenaltySpec{});
    else if (cfg.penalty.size() == 1 && D > 1)
      cfg.penalty.assign(static_cast<size_t>(D), cfg.penalty[0]);
    require(cfg.penalty.size() == static_cast<size_t>(D), "InvalidArgument",
            "penalty must have one spec per view");
    for (int d = 0; d < D; ++d)
      cfg.penalty[static_cast<size_t>(d)].rho = cell.rho[static_cast<size_t>(d)];

    for (int f = 0; f < plan.folds && !cell.failed; ++f) {
      std::vector<int> train, test;
      for (int i = 0; i < n; ++i)
        (fold_of[static_cast<size_t>(i)] == f ? test : train).push_back(i);
      try {
        require(!test.empty() && !train.empty(), "InvalidArgument",
                "empty fold; reduce fold count");
        std::vector<Matrix> vtrain(static_cast<size_t>(D)), vtest(static_cast<size_t>(D));
        for (int d = 0; d < D; ++d) {
          vtrain[static_cast<size_t>(d)] = take_rows(views[static_cast<size_t>(d)], train);
          vtest[static_cast<size_t>(d)] = take_rows(views[static_cast<size_t>(d)], test);
        }
        FittedModel m = make_model(fit(vtrain, take_outcome(outcome, train), cfg));
        cell.fold_scores.push_back(
            holdout_score(predict(vtest, m), take_outcome(outcome, test)));
      } catch (const Error& e) {
        cell.failed = true;
        cell.error = e.what();
      }
    }
    if (!cell.failed) {
      double s = 0.0;
      for (double v : cell.fold_scores) s += v;
      cell.mean_score = s / static_cast<double>(cell.fold_scores.size());
    }
    res.table.push_back(std::move(cell));
  }

  for (size_t i = 0; i < res.table.size(); ++i) {
    const CvCell& c = res.table[i];
    if (c.failed) continue;
    if (res.best < 0) {
      res.best = static_cast<int>(i);
      continue;
    }
    const CvCell& b = res.table[static_cast<size_t>(res.best)];
    if (c.mean_score < b.mean_score - 1e-12) {
      res.best = static_cast<int>(i);
    } else if (std::abs(c.mean_score - b.mean_score) <= 1e-12) {
      // tie: prefer the sparser (larger total rho) candidate
      double sc = 0.0, sb = 0.0;
      for (double r : c.rho) sc += r;
      for (double r : b.rho) sb += r;
      if (sc > sb) res.best = static_cast<int>(i);
    }
  }
  require(res.best >= 0, "CvFailure", "every candidate combination failed");
  res.best_rho = res.table[static_cast<size_t>(res.best)].rho;
  return res;
}

}  // namespace mvrff
