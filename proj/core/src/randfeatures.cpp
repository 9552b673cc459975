#include "mvrff/randfeatures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mvrff/rng.hpp"

namespace mvrff {

double median_heuristic_bandwidth(const Matrix& X, std::int64_t max_pairs,
                                  std::uint64_t seed) {
  require(X.allFinite(), "NonFiniteInput", "view contains non-finite entries");
  const std::int64_t n = X.rows();
  require(n >= 2, "InvalidArgument", "bandwidth needs at least two rows");
  require(max_pairs >= 1, "InvalidArgument", "max_pairs must be positive");

  std::vector<double> d;
  const std::int64_t total = n * (n - 1) / 2;
  if (total <= max_pairs) {
    d.reserve(static_cast<size_t>(total));
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = i + 1; j < n; ++j)
        d.push_back((X.row(i) - X.row(j)).norm());
  } else {
    auto eng = make_engine(seed, "bandwidth-pairs");
    std::uniform_int_distribution<std::int64_t> pick(0, n - 1);
    d.reserve(static_cast<size_t>(max_pairs));
    while (static_cast<std::int64_t>(d.size()) < max_pairs) {
      std::int64_t i = pick(eng), j = pick(eng);
      if (i == j) continue;
      d.push_back((X.row(i) - X.row(j)).norm());
    }
  }

  const size_t mid = (d.size() - 1) / 2;  // lower median
  std::nth_element(d.begin(), d.begin() + mid, d.end());
  double med = d[mid];
  if (med > 0.0) return med;

  double smallest_pos = std::numeric_limits<double>::infinity();
  for (double x : d)
    if (x > 0.0) smallest_pos = std::min(smallest_pos, x);
  require(std::isfinite(smallest_pos), "AllRowsIdentical",
          "every sampled pairwise distance is zero");
  return smallest_pos;
}

RandomFeatureMap sample_frequencies(int p, int M, double nu, std::uint64_t seed) {
  require(p >= 1 && M >= 1, "InvalidDimension",
          "need p >= 1 and M >= 1, got p=" + std::to_string(p) +
              " M=" + std::to_string(M));
  require(nu > 0.0 && std::isfinite(nu), "InvalidArgument", "bandwidth must be positive");

  RandomFeatureMap map;
  map.nu = nu;
  map.eps.resize(M, p);
  map.b.resize(M);
  map.gamma = Vector::Ones(p);

  auto eng = make_engine(seed, "rff-frequencies");
  std::normal_distribution<double> freq(0.0, 1.0 / nu);
  for (int m = 0; m < M; ++m)
    for (int j = 0; j < p; ++j) map.eps(m, j) = freq(eng);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (int m = 0; m < M; ++m) map.b[m] = phase(eng);
  return map;
}

Matrix feature_map(const Matrix& X, const RandomFeatureMap& map) {
  require(X.cols() == map.eps.cols(), "DimensionMismatch",
          "view has " + std::to_string(X.cols()) + " variables, map expects " +
              std::to_string(map.eps.cols()));
  require(X.allFinite() && map.gamma.allFinite(), "NonFiniteInput",
          "feature map inputs must be finite");
  Matrix arg = (X * map.gamma.asDiagonal()) * map.eps.transpose();
  arg.rowwise() += map.b.transpose();
  return std::numbers::sqrt2 * arg.array().cos();
}

Matrix exact_gaussian_gram(const Matrix& X, double nu) {
  require(nu > 0.0 && std::isfinite(nu), "InvalidArgument", "bandwidth must be positive");
  require(X.allFinite(), "NonFiniteInput", "gram of non-finite data");
  Vector sq = X.rowwise().squaredNorm();
  Matrix D2 = (-2.0 * X * X.transpose()).colwise() + sq;
  D2.rowwise() += sq.transpose();
  Matrix K = (D2.array().max(0.0) / (-2.0 * nu * nu)).exp();
  K = 0.5 * (K + K.transpose());
  K.diagonal().setConstant(1.0);
  return K;
}

}  // namespace mvrff
