#pragma once

// Stochastic test objectives F(x, Y), their expectations and known minimizers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stocbo/errors.hpp"
#include "stocbo/seed.hpp"

namespace stocbo {

enum class LawKind { UniformBox, StdNormal };

// Law of the random vector Y in R^k: i.i.d. uniform components on [lo, hi], or i.i.d. N(0, 1).
struct RandomLawSpec {
  LawKind kind = LawKind::UniformBox;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t k = 1;

  static RandomLawSpec uniform_box(double lo, double hi, std::size_t k) {
    RandomLawSpec law{LawKind::UniformBox, lo, hi, k};
    law.validate();
    return law;
  }
  static RandomLawSpec std_normal(std::size_t k) {
    RandomLawSpec law{LawKind::StdNormal, 0.0, 0.0, k};
    law.validate();
    return law;
  }

  void validate() const {
    if (k == 0) throw ConfigError("random law: k must be >= 1");
    if (kind == LawKind::UniformBox && !(lo < hi)) throw ConfigError("random law: requires lo < hi");
  }

  // Constant (1/(hi-lo))^k on the box for the uniform law.
  double density(std::span<const double> y) const {
    if (kind == LawKind::UniformBox) {
      for (double v : y)
        if (v < lo || v > hi) return 0.0;
      return std::pow(1.0 / (hi - lo), static_cast<double>(k));
    }
    double q = 0.0;
    for (double v : y) q += v * v;
    return std::exp(-0.5 * q) / std::pow(2.0 * std::numbers::pi, 0.5 * static_cast<double>(k));
  }

  double mean() const { return kind == LawKind::UniformBox ? 0.5 * (lo + hi) : 0.0; }

  // Fills one k-vector draw.
  void draw(Engine& engine, std::span<double> out) const {
    if (kind == LawKind::UniformBox) {
      std::uniform_real_distribution<double> u(lo, hi);
      for (double& v : out) v = u(engine);
    } else {
      std::normal_distribution<double> z(0.0, 1.0);
      for (double& v : out) v = z(engine);
    }
  }
};

// A finite node set with weights: y^j (row-major count x k) and w_j. Both SAA samples (w = 1/M)
// and quadrature grids (w = cell weight * density) reduce F to sum_j w_j F(x, y^j).
struct WeightedNodes {
  std::size_t k = 1;
  std::vector<double> points;   // count x k, row-major
  std::vector<double> weights;  // count
  std::vector<double> by_axis;  // k x count, axis-major copy of `points`

  WeightedNodes() = default;
  WeightedNodes(std::size_t k_, std::vector<double> pts, std::vector<double> w)
      : k(k_), points(std::move(pts)), weights(std::move(w)) {
    if (k == 0 || points.size() != weights.size() * k) throw UsageError("WeightedNodes: shape mismatch");
    const std::size_t n = weights.size();
    by_axis.resize(points.size());
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < k; ++l) by_axis[l * n + j] = points[j * k + l];
  }

  std::size_t count() const noexcept { return weights.size(); }
  std::span<const double> node(std::size_t j) const { return {points.data() + j * k, k}; }
  std::span<const double> axis(std::size_t l) const { return {by_axis.data() + l * count(), count()}; }
};

// F(x, y) = sum_r g_r(x) h_r(y). Lets a weighted node sum collapse to a few precomputed moments.
struct SeparableForm {
  std::size_t terms = 0;
  std::function<void(std::span<const double> x, std::span<double> g)> x_factors;
  std::function<void(std::span<const double> y, std::span<double> h)> y_factors;
};

struct StochasticObjective {
  std::string id;
  std::size_t dim = 1;
  RandomLawSpec law;
  std::function<double(std::span<const double> x, std::span<const double> y)> eval_F;
  std::function<double(std::span<const double> x)> closed_form_f;  // empty when unknown
  std::optional<std::vector<double>> minimizer;
  std::optional<double> min_value;
  std::optional<SeparableForm> separable;
  // Optional specialised evaluation of sum_j w_j F(x, y^j).
  std::function<double(std::span<const double> x, const WeightedNodes& nodes)> node_sum;

  std::size_t k() const noexcept { return law.k; }
  bool has_closed_form() const noexcept { return static_cast<bool>(closed_form_f); }
};

// phi(t) = max_j (v_j + s_j t) with strictly increasing slopes.
class PiecewiseLinear {
 public:
  PiecewiseLinear(std::vector<double> slopes, std::vector<double> intercepts)
      : slopes_(std::move(slopes)), intercepts_(std::move(intercepts)) {
    if (slopes_.empty() || slopes_.size() != intercepts_.size())
      throw ConfigError("PiecewiseLinear: need matching, non-empty slopes and intercepts");
    for (std::size_t j = 1; j < slopes_.size(); ++j) {
      if (!(slopes_[j] > slopes_[j - 1])) throw ConfigError("PiecewiseLinear: slopes must increase strictly");
      breakpoints_.push_back((intercepts_[j - 1] - intercepts_[j]) / (slopes_[j] - slopes_[j - 1]));
    }
    // Every piece must be active somewhere, i.e. breakpoints strictly ordered.
    for (std::size_t j = 1; j < breakpoints_.size(); ++j) {
      if (!(breakpoints_[j] > breakpoints_[j - 1]))
        throw ConfigError("PiecewiseLinear: a piece is never active (unordered breakpoints)");
    }
  }

  std::size_t pieces() const noexcept { return slopes_.size(); }
  const std::vector<double>& slopes() const noexcept { return slopes_; }
  const std::vector<double>& intercepts() const noexcept { return intercepts_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }

  double operator()(double t) const {
    double m = intercepts_[0] + slopes_[0] * t;
    for (std::size_t j = 1; j < slopes_.size(); ++j) m = std::max(m, intercepts_[j] + slopes_[j] * t);
    return m;
  }

 private:
  std::vector<double> slopes_;
  std::vector<double> intercepts_;
  std::vector<double> breakpoints_;
};

// b = 4 pieces, s = (-2, -1, 1/2, 1), v = (0, 2, 0, -1); breakpoints (-2, 4/3, 2).
inline PiecewiseLinear make_phi() { return PiecewiseLinear({-2.0, -1.0, 0.5, 1.0}, {0.0, 2.0, 0.0, -1.0}); }

// E[phi(Z)] for Z ~ N(mu, s^2), exactly, by integrating each affine piece over its interval.
inline double gaussian_piecewise_expectation(double mu, double s, const PiecewiseLinear& phi) {
  if (!(s >= 0.0)) throw UsageError("gaussian_piecewise_expectation: s must be >= 0");
  if (s == 0.0) return phi(mu);
  const auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
  const auto pdf = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); };
  const auto& br = phi.breakpoints();
  double total = 0.0;
  double a = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < phi.pieces(); ++j) {
    const double b = j < br.size() ? br[j] : std::numeric_limits<double>::infinity();
    const double za = (a - mu) / s;
    const double zb = (b - mu) / s;
    const double mass = cdf(zb) - cdf(za);
    const double dens = (std::isinf(zb) ? 0.0 : pdf(zb)) - (std::isinf(za) ? 0.0 : pdf(za));
    // E[(v + s_j Z) 1{a < Z < b}] = v P + s_j (mu P - s (pdf(zb) - pdf(za)))
    total += phi.intercepts()[j] * mass + phi.slopes()[j] * (mu * mass - s * dens);
    a = b;
  }
  return total;
}

// Minimizer of the Y-free part of the Ackley-like objective, which is the value usually quoted
// for this test function. The catalog minimizer below is the one of the expectation f.
inline constexpr double kAckleyReportedMinimizer = -1.119;

inline StochasticObjective make_ackley_like() {
  const double c = std::exp(-0.2);
  auto deterministic = [c](double x) { return c * (std::abs(x) + 3.0 * (std::cos(2.0 * x) + std::sin(2.0 * x))); };
  auto far_field = [](double x) { return std::atan(std::abs(x)) - std::numbers::pi / 2.0; };

  StochasticObjective obj;
  obj.id = "ackley-like";
  obj.dim = 1;
  obj.law = RandomLawSpec::uniform_box(0.1, 1.9, 1);
  obj.eval_F = [=](std::span<const double> x, std::span<const double> y) {
    return deterministic(x[0]) + y[0] * far_field(x[0]);
  };
  const double mean_y = obj.law.mean();
  obj.closed_form_f = [=](std::span<const double> x) { return deterministic(x[0]) + mean_y * far_field(x[0]); };
  obj.separable = SeparableForm{
      2,
      [=](std::span<const double> x, std::span<double> g) {
        g[0] = deterministic(x[0]);
        g[1] = far_field(x[0]);
      },
      [](std::span<const double> y, std::span<double> h) {
        h[0] = 1.0;
        h[1] = y[0];
      }};
  obj.minimizer = std::vector<double>{-1.0856084920785678};
  obj.min_value = obj.closed_form_f(*obj.minimizer);
  return obj;
}

// Least-squares inspired family with Y_l ~ U[0, 2] independent (E[U] = 1, E[U^2] = 4/3).
inline StochasticObjective make_lls_family(int k) {
  StochasticObjective obj;
  obj.dim = 1;
  switch (k) {
    case 1:
      obj.eval_F = [](std::span<const double> x, std::span<const double> y) { return (y[0] * x[0]) * (y[0] * x[0]); };
      obj.closed_form_f = [](std::span<const double> x) { return 4.0 / 3.0 * x[0] * x[0]; };
      obj.separable = SeparableForm{
          1, [](std::span<const double> x, std::span<double> g) { g[0] = x[0] * x[0]; },
          [](std::span<const double> y, std::span<double> h) { h[0] = y[0] * y[0]; }};
      obj.minimizer = std::vector<double>{0.0};
      obj.min_value = 0.0;
      break;
    case 2:
      obj.eval_F = [](std::span<const double> x, std::span<const double> y) {
        const double r = y[0] * x[0] - y[1];
        return r * r;
      };
      obj.closed_form_f = [](std::span<const double> x) { return 4.0 / 3.0 * x[0] * x[0] - 2.0 * x[0] + 4.0 / 3.0; };
      obj.separable = SeparableForm{3,
                                    [](std::span<const double> x, std::span<double> g) {
                                      g[0] = x[0] * x[0];
                                      g[1] = x[0];
                                      g[2] = 1.0;
                                    },
                                    [](std::span<const double> y, std::span<double> h) {
                                      h[0] = y[0] * y[0];
                                      h[1] = -2.0 * y[0] * y[1];
                                      h[2] = y[1] * y[1];
                                    }};
      obj.minimizer = std::vector<double>{0.75};
      obj.min_value = 7.0 / 12.0;
      break;
    case 3:
      obj.eval_F = [](std::span<const double> x, std::span<const double> y) {
        return y[0] * x[0] * x[0] + y[1] * x[0] + y[2];
      };
      obj.closed_form_f = [](std::span<const double> x) { return x[0] * x[0] + x[0] + 1.0; };
      obj.separable = SeparableForm{3,
                                    [](std::span<const double> x, std::span<double> g) {
                                      g[0] = x[0] * x[0];
                                      g[1] = x[0];
                                      g[2] = 1.0;
                                    },
                                    [](std::span<const double> y, std::span<double> h) {
                                      h[0] = y[0];
                                      h[1] = y[1];
                                      h[2] = y[2];
                                    }};
      obj.minimizer = std::vector<double>{-0.5};
      obj.min_value = 0.75;
      break;
    default:
      throw UsageError("make_lls_family: k must be 1, 2 or 3 (got " + std::to_string(k) + ")");
  }
  obj.id = "lls-k" + std::to_string(k);
  obj.law = RandomLawSpec::uniform_box(0.0, 2.0, static_cast<std::size_t>(k));
  return obj;
}

namespace detail {

// sum_j w_j phi(base + x.y^j) over axis-major node storage for K random axes and P pieces.
// One fused pass; the reduction is vectorized when OpenMP SIMD pragmas are enabled.
template <std::size_t K, std::size_t P>
double utility_node_sum(std::span<const double> x, double base, const PiecewiseLinear& phi,
                        const WeightedNodes& nodes) {
  const std::size_t count = nodes.count();
  double xs[K], sl[P], iv[P];
  for (std::size_t l = 0; l < K; ++l) xs[l] = x[l];
  for (std::size_t p = 0; p < P; ++p) {
    sl[p] = phi.slopes()[p];
    iv[p] = phi.intercepts()[p];
  }
  const double* __restrict w = nodes.weights.data();
  const double* __restrict y = nodes.by_axis.data();
  double sum = 0.0;
#pragma omp simd reduction(+ : sum)
  for (std::size_t j = 0; j < count; ++j) {
    double t = base;
    for (std::size_t l = 0; l < K; ++l) t += xs[l] * y[l * count + j];
    double m = iv[0] + sl[0] * t;
    for (std::size_t p = 1; p < P; ++p) m = std::max(m, iv[p] + sl[p] * t);
    sum += w[j] * m;
  }
  return sum;
}

}  // namespace detail

// Stochastic utility problem F(x, Y) = phi(x . (a + Y)), a_l = l/d, Y ~ N(0, I_d).
inline StochasticObjective make_stochastic_utility(std::size_t d) {
  if (d == 0) throw UsageError("make_stochastic_utility: d must be >= 1");
  std::vector<double> a(d);
  for (std::size_t l = 0; l < d; ++l) a[l] = static_cast<double>(l + 1) / static_cast<double>(d);
  const PiecewiseLinear phi = make_phi();

  StochasticObjective obj;
  obj.id = "utility-d" + std::to_string(d);
  obj.dim = d;
  obj.law = RandomLawSpec::std_normal(d);
  obj.eval_F = [a, phi](std::span<const double> x, std::span<const double> y) {
    double t = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) t += x[l] * (a[l] + y[l]);
    return phi(t);
  };
  obj.closed_form_f = [a, phi](std::span<const double> x) {
    double mu = 0.0, norm2 = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) {
      mu += x[l] * a[l];
      norm2 += x[l] * x[l];
    }
    return gaussian_piecewise_expectation(mu, std::sqrt(norm2), phi);
  };
  obj.node_sum = [a, phi](std::span<const double> x, const WeightedNodes& nodes) {
    double base = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) base += x[l] * a[l];
    if (phi.pieces() == 4) {
      switch (a.size()) {
        case 1:
          return detail::utility_node_sum<1, 4>(x, base, phi, nodes);
        case 2:
          return detail::utility_node_sum<2, 4>(x, base, phi, nodes);
        case 3:
          return detail::utility_node_sum<3, 4>(x, base, phi, nodes);
        default:
          break;
      }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < nodes.count(); ++j) {
      double t = base;
      for (std::size_t l = 0; l < a.size(); ++l) t += x[l] * nodes.by_axis[l * nodes.count() + j];
      sum += nodes.weights[j] * phi(t);
    }
    return sum;
  };
  switch (d) {
    case 1:
      obj.minimizer = std::vector<double>{0.82058};
      obj.min_value = 1.3927;
      break;
    case 2:
      obj.minimizer = std::vector<double>{0.35536, 0.71572};
      obj.min_value = 1.3407;
      break;
    case 3:
      obj.minimizer = std::vector<double>{0.20578, 0.40601, 0.61735};
      obj.min_value = 1.2895;
      break;
    default:
      break;
  }
  return obj;
}

inline const std::vector<std::string>& catalog_ids() {
  static const std::vector<std::string> ids{"ackley-like", "lls-k1",     "lls-k2",    "lls-k3",
                                            "utility-d1",  "utility-d2", "utility-d3"};
  return ids;
}

inline StochasticObjective make_objective(std::string_view id) {
  if (id == "ackley-like") return make_ackley_like();
  if (id == "lls-k1") return make_lls_family(1);
  if (id == "lls-k2") return make_lls_family(2);
  if (id == "lls-k3") return make_lls_family(3);
  if (id == "utility-d1") return make_stochastic_utility(1);
  if (id == "utility-d2") return make_stochastic_utility(2);
  if (id == "utility-d3") return make_stochastic_utility(3);
  throw UsageError("unknown objective '" + std::string(id) + "'");
}

}  // namespace stocbo
