#include "mvrff/simdata.hpp"

#include <algorithm>
#include <random>

#include "mvrff/rng.hpp"

namespace mvrff {

namespace {

void check_common(const SimSpec& spec) {
  require(spec.signal_count >= 1, "InvalidSpec", "signal_count must be positive");
  require(spec.p >= spec.signal_count, "InvalidSpec",
          "p must be at least the signal block size");
  for (double s : {spec.sigma1, spec.sigma12, spec.sigma2, spec.sigma_y})
    require(s >= 0.0 && std::isfinite(s), "InvalidSpec",
            "noise scales must be finite and non-negative");
}

Vector even_grid(double lo, double hi, int count) {
  Vector v(count);
  for (int i = 0; i < count; ++i)
    v[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
  return v;
}

// Column-major noise fill: growing p appends draws instead of reshuffling
// the existing columns.
Matrix noise(int rows, int cols, double sigma, std::mt19937_64&& eng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix E(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) E(i, j) = sigma * N(eng);
  return E;
}

// One class block: column 1 carries the duplicated parameter grid, the rest
// of the signal block repeats the two stacked curve halves.
Matrix curve_block(const Vector& theta, double shift, double second_coef,
                   int p, int signal_count) {
  const int half = static_cast<int>(theta.size());
  Matrix X = Matrix::Zero(2 * half, p);
  for (int i = 0; i < half; ++i) {
    const double th = theta[i];
    X(i, 0) = th;
    X(i + half, 0) = th;
    const double s_top = (th - 1.0) * (th - 1.0) + shift;
    const double s_bot = (th + 0.1) * (th + 0.1) -
                         second_coef * (th - 1.0) * (th - 1.0) + shift;
    for (int j = 1; j < signal_count; ++j) {
      X(i, j) = s_top;
      X(i + half, j) = s_bot;
    }
  }
  return X;
}

std::vector<int> signal_indices(int signal_count) {
  std::vector<int> idx(static_cast<size_t>(signal_count));
  for (int s = 0; s < signal_count; ++s) idx[static_cast<size_t>(s)] = s;
  return idx;
}

}  // namespace

SimData gen_binary(const SimSpec& spec) {
  check_common(spec);
  require(spec.n1 >= 2 && spec.n1 % 2 == 0, "InvalidSpec",
          "class-1 size must be even and positive");
  require(spec.n2 >= 2 && spec.n2 % 2 == 0, "InvalidSpec",
          "class-2 size must be even and positive");

  const int n = spec.n1 + spec.n2;
  Matrix X1(n, spec.p);
  X1.topRows(spec.n1) =
      curve_block(even_grid(0.6, 2.5, spec.n1 / 2), 0.0, 2.0, spec.p,
                  spec.signal_count) +
      noise(spec.n1, spec.p, spec.sigma1, make_engine(spec.seed, "noise-class1-view1"));
  X1.bottomRows(spec.n2) =
      curve_block(even_grid(0.96, 1.67, spec.n2 / 2), 0.25, 3.5, spec.p,
                  spec.signal_count) +
      noise(spec.n2, spec.p, spec.sigma12, make_engine(spec.seed, "noise-class2-view1"));

  SimData out;
  out.views.push_back(X1);
  out.views.push_back(5.0 * X1 +
                      noise(n, spec.p, spec.sigma2, make_engine(spec.seed, "noise-view2")));

  out.outcome.kind = OutcomeKind::Categorical;
  out.outcome.labels.assign(static_cast<size_t>(n), 1);
  std::fill(out.outcome.labels.begin() + spec.n1, out.outcome.labels.end(), 2);
  out.signal_vars = signal_indices(spec.signal_count);
  return out;
}

SimData gen_continuous(const SimSpec& spec) {
  check_common(spec);
  require(spec.n >= 2 && spec.n % 2 == 0, "InvalidSpec",
          "sample count must be even and positive");

  Matrix X1 = curve_block(even_grid(0.6, 2.5, spec.n / 2), 0.0, 2.0, spec.p,
                          spec.signal_count) +
              noise(spec.n, spec.p, spec.sigma1, make_engine(spec.seed, "noise-view1"));

  SimData out;
  out.views.push_back(X1);
  out.views.push_back(
      5.0 * X1 + noise(spec.n, spec.p, spec.sigma2, make_engine(spec.seed, "noise-view2")));

  auto theta_eng = make_engine(spec.seed, "theta-y");
  std::uniform_real_distribution<double> U(0.0, 1.0);
  out.theta_y.resize(3);
  for (int j = 0; j < 3; ++j) out.theta_y[j] = U(theta_eng);

  Matrix concat(spec.n, 2 * spec.p);
  concat << out.views[0], out.views[1];
  Eigen::BDCSVD<Matrix> svd(concat, Eigen::ComputeThinU);
  Matrix G = svd.matrixU().leftCols(3);

  Vector y = 5.0 * G * out.theta_y +
             noise(spec.n, 1, spec.sigma_y, make_engine(spec.seed, "noise-y")).col(0);

  out.outcome.kind = OutcomeKind::Continuous;
  out.outcome.values = y;
  out.signal_vars = signal_indices(spec.signal_count);
  return out;
}

SelectionReport selection_metrics(const Vector& gamma,
                                  std::span<const int> signal_vars,
                                  double threshold) {
  const int p = static_cast<int>(gamma.size());
  std::vector<bool> is_signal(static_cast<size_t>(p), false);
  for (int s : signal_vars) {
    require(s >= 0 && s < p, "InvalidArgument", "signal index out of range");
    is_signal[static_cast<size_t>(s)] = true;
  }

  SelectionReport r;
  for (int s = 0; s < p; ++s) {
    const bool sel = std::abs(gamma[s]) > threshold;
    if (sel) r.selected.push_back(s);
    if (sel && is_signal[static_cast<size_t>(s)]) r.true_pos++;
    if (sel && !is_signal[static_cast<size_t>(s)]) r.false_pos++;
    if (!sel && is_signal[static_cast<size_t>(s)]) r.false_neg++;
    if (!sel && !is_signal[static_cast<size_t>(s)]) r.true_neg++;
  }
  const int n_sig = r.true_pos + r.false_neg;
  const int n_noise = r.false_pos + r.true_neg;
  r.tpr = n_sig > 0 ? static_cast<double>(r.true_pos) / n_sig : 0.0;
  r.fpr = n_noise > 0 ? static_cast<double>(r.false_pos) / n_noise : 0.0;
  return r;
}

}  // namespace mvrff
