#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include "stocbo/errors.hpp"

namespace stocbo {

enum class DiffusionKind { Isotropic, Anisotropic };

inline const char* to_string(DiffusionKind kind) {
  return kind == DiffusionKind::Isotropic ? "iso" : "aniso";
}

// Constants of the CBO particle system and of its Euler-Maruyama discretization.
// The time grid has n_it nodes t_h = h * dt, h = 0..n_it-1, so the horizon is dt * (n_it - 1).
struct CboParams {
  double lambda = 1.0;
  double sigma = 0.5;
  double alpha = 40.0;
  double dt = 0.1;
  std::size_t n_it = 101;
  DiffusionKind diffusion = DiffusionKind::Isotropic;
  std::optional<std::size_t> batch_size;

  double horizon() const { return dt * static_cast<double>(n_it - 1); }

  // Builds the time grid for horizon T; T must be an integer multiple of dt up to roundoff.
  static CboParams with_horizon(double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon >= 0.0)) throw ConfigError("horizon must be >= 0 and dt > 0");
    const double steps = horizon / dt;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
      throw ConfigError("horizon " + std::to_string(horizon) + " is not a multiple of dt " +
                        std::to_string(dt));
    }
    CboParams p;
    p.dt = dt;
    p.n_it = static_cast<std::size_t>(rounded) + 1;
    return p;
  }

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
    if (n_it < 1) throw ConfigError("n_it must be >= 1");
    if (batch_size && *batch_size == 0) throw ConfigError("batch size must be >= 1");
  }

  // 2*lambda > d*sigma^2 (isotropic) or 2*lambda > sigma^2 (anisotropic).
  bool well_posed(std::size_t dim) const {
    const double factor = diffusion == DiffusionKind::Isotropic ? static_cast<double>(dim) : 1.0;
    return 2.0 * lambda > factor * sigma * sigma;
  }
};

// mu_0 = uniform law on the box [lo, hi]^d.
struct InitDistribution {
  double lo = -3.0;
  double hi = 3.0;

  void validate() const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw ConfigError("initial box requires finite lo < hi, got [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    }
  }
};

}  // namespace stocbo
