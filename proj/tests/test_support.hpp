#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "stocbo/objectives.hpp"

namespace stocbo::testing {

// F(x, y) = g(x) for every y, with a uniform law on [lo, hi].
inline StochasticObjective y_free(std::function<double(double)> g, double lo = 0.0, double hi = 2.0) {
  StochasticObjective obj;
  obj.id = "y-free";
  obj.dim = 1;
  obj.law = RandomLawSpec::uniform_box(lo, hi, 1);
  obj.eval_F = [g](std::span<const double> x, std::span<const double>) { return g(x[0]); };
  obj.closed_form_f = [g](std::span<const double> x) { return g(x[0]); };
  obj.minimizer = std::vector<double>{0.0};
  return obj;
}

// F(x, y) = y x^2 on Uniform[lo, hi]; no separable form, so every reduction is generic.
inline StochasticObjective y_times_square(double lo = 0.0, double hi = 2.0) {
  StochasticObjective obj;
  obj.id = "y-x2";
  obj.dim = 1;
  obj.law = RandomLawSpec::uniform_box(lo, hi, 1);
  obj.eval_F = [](std::span<const double> x, std::span<const double> y) { return y[0] * x[0] * x[0]; };
  const double mean = obj.law.mean();
  obj.closed_form_f = [mean](std::span<const double> x) { return mean * x[0] * x[0]; };
  return obj;
}

inline double square_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace stocbo::testing
