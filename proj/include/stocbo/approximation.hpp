#pragma once

// Reduction of a stochastic objective to a deterministic one, by sample average approximation
// (SAA) or by a composite midpoint quadrature over the density of Y.

#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "stocbo/dynamics.hpp"
#include "stocbo/errors.hpp"
#include "stocbo/objectives.hpp"
#include "stocbo/seed.hpp"

namespace stocbo {

struct SaaSample {
  std::vector<double> draws;  // m x k, row-major
  std::size_t m = 0;
  RandomLawSpec law;
  RunSeed seed;

  std::size_t k() const noexcept { return law.k; }
  std::span<const double> draw(std::size_t j) const { return {draws.data() + j * law.k, law.k}; }

  WeightedNodes as_nodes() const {
    return WeightedNodes(law.k, draws, std::vector<double>(m, 1.0 / static_cast<double>(m)));
  }
};

// M i.i.d. draws of Y from the Observations stream of `seed`. Draws are taken one k-vector at a
// time, so a sample of size M is a prefix of any larger sample with the same seed.
inline SaaSample draw_saa_sample(const RandomLawSpec& law, std::size_t m, const RunSeed& seed) {
  law.validate();
  if (m == 0) throw UsageError("draw_saa_sample: m must be >= 1");
  SaaSample sample{std::vector<double>(m * law.k), m, law, seed};
  Engine engine = make_engine(seed, StreamDomain::Observations);
  for (std::size_t j = 0; j < m; ++j) law.draw(engine, {sample.draws.data() + j * law.k, law.k});
  return sample;
}

enum class GridDensity { Uniform, TruncatedNormal };

// Q^k midpoint nodes on [lo, hi]^k with a single running index j = r_1 + Q r_2 + Q^2 r_3 + ...
// (axis 1 fastest).
struct QuadratureGrid {
  std::vector<double> nodes;  // Q^k x k, row-major
  std::size_t q = 0;
  std::size_t k = 0;
  double lo = 0.0;
  double hi = 0.0;
  double cell_weight = 0.0;  // ((hi - lo) / Q)^k
  std::vector<double> density_at_nodes;
  GridDensity density = GridDensity::Uniform;

  std::size_t size() const noexcept { return density_at_nodes.size(); }
  std::span<const double> node(std::size_t j) const { return {nodes.data() + j * k, k}; }

  // Quadrature of the density itself; 1 for the uniform law, < 1 on a truncated normal box.
  double mass() const {
    return cell_weight * std::accumulate(density_at_nodes.begin(), density_at_nodes.end(), 0.0);
  }
  double mass_deficit() const { return 1.0 - mass(); }

  WeightedNodes as_nodes() const {
    std::vector<double> w(size());
    for (std::size_t j = 0; j < size(); ++j) w[j] = cell_weight * density_at_nodes[j];
    return WeightedNodes(k, nodes, std::move(w));
  }
};

inline constexpr std::size_t kMaxQuadratureNodes = 100'000'000;

namespace detail {

inline QuadratureGrid midpoint_grid(double lo, double hi, std::size_t q, std::size_t k) {
  if (!(lo < hi)) throw ConfigError("midpoint_nodes: requires e_lo < e_hi");
  if (q == 0 || k == 0) throw ConfigError("midpoint_nodes: q and k must be >= 1");
  std::size_t count = 1;
  for (std::size_t l = 0; l < k; ++l) {
    if (count > kMaxQuadratureNodes / q) {
      throw ResourceError("midpoint_nodes: Q^k exceeds " + std::to_string(kMaxQuadratureNodes) + " nodes");
    }
    count *= q;
  }
  QuadratureGrid grid;
  grid.q = q;
  grid.k = k;
  grid.lo = lo;
  grid.hi = hi;
  const double width = hi - lo;
  grid.cell_weight = std::pow(width / static_cast<double>(q), static_cast<double>(k));

  std::vector<double> axis(q);
  for (std::size_t r = 1; r <= q; ++r) {
    axis[r - 1] = lo + width / (2.0 * static_cast<double>(q)) * (2.0 * static_cast<double>(r) - 1.0);
  }
  grid.nodes.resize(count * k);
  for (std::size_t j = 0; j < count; ++j) {
    std::size_t rest = j;
    for (std::size_t l = 0; l < k; ++l) {
      grid.nodes[j * k + l] = axis[rest % q];
      rest /= q;
    }
  }
  grid.density_at_nodes.resize(count);
  return grid;
}

}  // namespace detail

// Composite midpoint grid for the uniform law on [e_lo, e_hi]^k.
inline QuadratureGrid midpoint_nodes(double e_lo, double e_hi, std::size_t q, std::size_t k) {
  QuadratureGrid grid = detail::midpoint_grid(e_lo, e_hi, q, k);
  const RandomLawSpec law = RandomLawSpec::uniform_box(e_lo, e_hi, k);
  for (std::size_t j = 0; j < grid.size(); ++j) grid.density_at_nodes[j] = law.density(grid.node(j));
  grid.density = GridDensity::Uniform;
  return grid;
}

// Midpoint grid on [-h, h]^k carrying the standard normal density. The weights are not
// renormalized; mass_deficit() reports the truncated probability.
inline QuadratureGrid truncated_normal_grid(std::size_t k, std::size_t q, double half_width) {
  if (!(half_width > 0.0)) throw ConfigError("truncated_normal_grid: half_width must be > 0");
  QuadratureGrid grid = detail::midpoint_grid(-half_width, half_width, q, k);
  const RandomLawSpec law = RandomLawSpec::std_normal(k);
  for (std::size_t j = 0; j < grid.size(); ++j) grid.density_at_nodes[j] = law.density(grid.node(j));
  grid.density = GridDensity::TruncatedNormal;
  return grid;
}

// The grid matching an objective's law: uniform box grid, or truncated normal box.
inline QuadratureGrid quadrature_grid_for(const StochasticObjective& obj, std::size_t q, double half_width = 4.0) {
  if (obj.law.kind == LawKind::UniformBox) return midpoint_nodes(obj.law.lo, obj.law.hi, q, obj.k());
  return truncated_normal_grid(obj.k(), q, half_width);
}

enum class ReductionPath {
  Auto,     // use the objective's separable form or node kernel when present
  Generic,  // always sum eval_F over the nodes
};

// x -> sum_j w_j F(x, y^j).
inline Objective reduce_over_nodes(const StochasticObjective& obj, WeightedNodes nodes,
                                   ReductionPath path = ReductionPath::Auto) {
  if (nodes.k != obj.k()) {
    throw UsageError("objective '" + obj.id + "' expects k = " + std::to_string(obj.k()) +
                     ", nodes have k = " + std::to_string(nodes.k));
  }
  auto shared = std::make_shared<const WeightedNodes>(std::move(nodes));

  if (path == ReductionPath::Auto && obj.separable) {
    const SeparableForm form = *obj.separable;
    std::vector<double> moments(form.terms, 0.0);
    std::vector<double> h(form.terms);
    for (std::size_t j = 0; j < shared->count(); ++j) {
      form.y_factors(shared->node(j), h);
      for (std::size_t r = 0; r < form.terms; ++r) moments[r] += shared->weights[j] * h[r];
    }
    return [form, moments](std::span<const double> x) {
      thread_local std::vector<double> g;
      g.resize(form.terms);
      form.x_factors(x, g);
      double sum = 0.0;
      for (std::size_t r = 0; r < form.terms; ++r) sum += g[r] * moments[r];
      return sum;
    };
  }
  if (path == ReductionPath::Auto && obj.node_sum) {
    return [kernel = obj.node_sum, shared](std::span<const double> x) { return kernel(x, *shared); };
  }
  return [F = obj.eval_F, shared](std::span<const double> x) {
    double sum = 0.0;
    for (std::size_t j = 0; j < shared->count(); ++j) sum += shared->weights[j] * F(x, shared->node(j));
    return sum;
  };
}

// f_hat_M(x) = (1/M) sum_j F(x, y^(j)).
inline Objective saa_objective(const StochasticObjective& obj, const SaaSample& sample,
                               ReductionPath path = ReductionPath::Auto) {
  if (sample.k() != obj.k()) {
    throw UsageError("saa_objective: sample has k = " + std::to_string(sample.k()) + ", objective '" +
                     obj.id + "' needs k = " + std::to_string(obj.k()));
  }
  return reduce_over_nodes(obj, sample.as_nodes(), path);
}

// f_tilde(x) = (l/Q)^k sum_j F(x, y^j) theta_Y(y^j).
inline Objective quadrature_objective(const StochasticObjective& obj, const QuadratureGrid& grid,
                                      ReductionPath path = ReductionPath::Auto) {
  if (grid.k != obj.k()) {
    throw UsageError("quadrature_objective: grid has k = " + std::to_string(grid.k) + ", objective '" +
                     obj.id + "' needs k = " + std::to_string(obj.k()));
  }
  if (obj.law.kind == LawKind::StdNormal && grid.density != GridDensity::TruncatedNormal) {
    throw UnsupportedLaw("quadrature_objective: the normal law of '" + obj.id +
                         "' has no density on a bounded box; use truncated_normal_grid");
  }
  if (obj.law.kind == LawKind::UniformBox) {
    if (grid.density != GridDensity::Uniform)
      throw UnsupportedLaw("quadrature_objective: uniform law needs a uniform-density grid");
    const double tol = 1e-12 * std::max(1.0, std::abs(obj.law.hi - obj.law.lo));
    if (std::abs(grid.lo - obj.law.lo) > tol || std::abs(grid.hi - obj.law.hi) > tol)
      throw UsageError("quadrature_objective: grid box differs from the support of Y");
  }
  return reduce_over_nodes(obj, grid.as_nodes(), path);
}

}  // namespace stocbo
