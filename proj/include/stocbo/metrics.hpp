#pragma once

// Error functionals: 1D empirical Wasserstein distances, consensus RMSE, success rates,
// quantile bands and log-log rate fits.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "stocbo/ensemble.hpp"
#include "stocbo/errors.hpp"
#include "stocbo/seed.hpp"

namespace stocbo {

// Uniformly weighted point cloud (weights 1/n).
struct EmpiricalMeasure {
  std::vector<double> points;  // n x d, row-major
  std::size_t dim = 1;

  EmpiricalMeasure() = default;
  EmpiricalMeasure(std::vector<double> pts, std::size_t d = 1) : points(std::move(pts)), dim(d) {
    if (dim == 0 || points.empty() || points.size() % dim != 0)
      throw UsageError("EmpiricalMeasure: need n >= 1 points of dimension d >= 1");
    for (double v : points)
      if (!std::isfinite(v)) throw DataError("EmpiricalMeasure: non-finite coordinate");
  }
  explicit EmpiricalMeasure(const ParticleEnsemble& e)
      : EmpiricalMeasure(std::vector<double>(e.data().begin(), e.data().end()), e.dim()) {}

  std::size_t size() const noexcept { return points.size() / dim; }
};

namespace detail {

inline double power_mean(double sum_pow, std::size_t n, int p) {
  const double mean = sum_pow / static_cast<double>(n);
  return p == 1 ? mean : std::sqrt(mean);
}

inline void check_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, int p) {
  if (a.dim != 1 || b.dim != 1) throw UsageError("wasserstein_1d: only d = 1 measures are supported");
  if (p != 1 && p != 2) throw UsageError("wasserstein_1d: p must be 1 or 2");
}

}  // namespace detail

// W_p between equal-size 1D empirical measures via the sorted (order-statistics) coupling.
inline double wasserstein_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, int p) {
  detail::check_1d(a, b, p);
  if (a.size() != b.size()) {
    throw UsageError("wasserstein_1d: unequal point counts " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  std::vector<double> x = a.points, y = b.points;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = std::abs(x[i] - y[i]);
    sum += p == 1 ? d : d * d;
  }
  return detail::power_mean(sum, x.size(), p);
}

// W_p between 1D empirical measures of any sizes, integrating |F_a^-1(u) - F_b^-1(u)|^p over
// the merged quantile breakpoints.
inline double wasserstein_1d_quantile(const EmpiricalMeasure& a, const EmpiricalMeasure& b, int p) {
  detail::check_1d(a, b, p);
  std::vector<double> x = a.points, y = b.points;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, sum = 0.0;
  while (i < x.size() && j < y.size()) {
    const double next_a = static_cast<double>(i + 1) / n;
    const double next_b = static_cast<double>(j + 1) / m;
    const double next = std::min(next_a, next_b);
    const double d = std::abs(x[i] - y[j]);
    sum += (next - u) * (p == 1 ? d : d * d);
    u = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return p == 1 ? sum : std::sqrt(sum);
}

// Equal-size coupling: the larger measure is replaced by a uniform subsample (without
// replacement) of the smaller one's size, then the sorted coupling applies.
inline double wasserstein_1d_subsampled(const EmpiricalMeasure& a, const EmpiricalMeasure& b, int p,
                                        Engine& engine) {
  if (a.size() == b.size()) return wasserstein_1d(a, b, p);
  const bool a_larger = a.size() > b.size();
  const EmpiricalMeasure& big = a_larger ? a : b;
  const EmpiricalMeasure& small = a_larger ? b : a;
  std::vector<double> picked;
  picked.reserve(small.size());
  std::sample(big.points.begin(), big.points.end(), std::back_inserter(picked), small.size(), engine);
  return wasserstein_1d(EmpiricalMeasure(std::move(picked)), small, p);
}

// One (approximate, exact) consensus pair x_hat^(u), x^(u).
struct ConsensusPair {
  std::vector<double> approx;
  std::vector<double> exact;
};

// sqrt( mean_j || mean_u (x_hat_j^(u) - x^(u)) ||^2 ): the outer list runs over Y samples j, the
// inner over CBO realizations u.
inline double consensus_rmse(const std::vector<std::vector<ConsensusPair>>& pairs) {
  if (pairs.empty()) throw UsageError("consensus_rmse: no samples");
  double total = 0.0;
  for (const auto& inner : pairs) {
    if (inner.empty()) throw UsageError("consensus_rmse: empty inner list");
    const std::size_t dim = inner.front().approx.size();
    std::vector<double> mean(dim, 0.0);
    for (const auto& pair : inner) {
      if (pair.approx.size() != dim || pair.exact.size() != dim)
        throw UsageError("consensus_rmse: dimension mismatch");
      for (std::size_t l = 0; l < dim; ++l) mean[l] += pair.approx[l] - pair.exact[l];
    }
    double sq = 0.0;
    for (double m : mean) {
      const double avg = m / static_cast<double>(inner.size());
      sq += avg * avg;
    }
    total += sq;
  }
  return std::sqrt(total / static_cast<double>(pairs.size()));
}

// Open max-norm ball of radius thr around x_star.
struct SuccessCriterion {
  double thr = 0.1;
  std::vector<double> x_star;

  bool contains(std::span<const double> x) const {
    if (x.size() != x_star.size()) throw UsageError("SuccessCriterion: dimension mismatch");
    double dist = 0.0;
    for (std::size_t l = 0; l < x.size(); ++l) dist = std::max(dist, std::abs(x[l] - x_star[l]));
    return dist < thr;
  }
};

inline double success_rate(const std::vector<std::vector<double>>& candidates, const SuccessCriterion& crit) {
  if (candidates.empty()) throw UsageError("success_rate: no candidates");
  if (!(crit.thr > 0.0)) throw UsageError("success_rate: thr must be > 0");
  std::size_t hits = 0;
  for (const auto& c : candidates) hits += crit.contains(c) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(candidates.size());
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;  // natural log of the error at scale 1
  std::vector<std::pair<double, double>> points;

  double constant() const { return std::exp(intercept); }
};

// Ordinary least squares of log(error) on log(scale).
inline RateFit loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw UsageError("loglog_slope: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (const auto& [scale, error] : points) {
    if (!(scale > 0.0) || !(error > 0.0) || !std::isfinite(scale) || !std::isfinite(error))
      throw DataError("loglog_slope: scales and errors must be positive and finite");
    mx += std::log(scale);
    my += std::log(error);
  }
  const double n = static_cast<double>(points.size());
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [scale, error] : points) {
    const double dx = std::log(scale) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(error) - my);
  }
  if (!(sxx > 0.0)) throw UsageError("loglog_slope: need at least 2 distinct scales");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = points;
  return fit;
}

// Empirical quantile with linear interpolation between order statistics (rank q (n - 1)).
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw UsageError("quantile: level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto below = static_cast<std::size_t>(std::floor(rank));
  const std::size_t above = std::min(below + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(below);
  return values[below] + frac * (values[above] - values[below]);
}

inline std::pair<double, double> quantile_band(const std::vector<double>& values, double lo = 0.15,
                                               double hi = 0.85) {
  if (lo > hi) throw UsageError("quantile_band: lo > hi");
  return {quantile(values, lo), quantile(values, hi)};
}

}  // namespace stocbo
