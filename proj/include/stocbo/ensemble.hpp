#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "stocbo/errors.hpp"

namespace stocbo {

// N particles in R^d, stored row-major (particle i occupies [i*d, (i+1)*d)).
class ParticleEnsemble {
 public:
  ParticleEnsemble() = default;

  ParticleEnsemble(std::size_t n, std::size_t dim) : n_(n), dim_(dim), positions_(n * dim, 0.0) {
    check_shape();
  }

  ParticleEnsemble(std::size_t n, std::size_t dim, std::vector<double> positions)
      : n_(n), dim_(dim), positions_(std::move(positions)) {
    check_shape();
    if (positions_.size() != n_ * dim_) {
      throw UsageError("ParticleEnsemble: expected " + std::to_string(n_ * dim_) +
                       " coordinates, got " + std::to_string(positions_.size()));
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> particle(std::size_t i) const { return {positions_.data() + i * dim_, dim_}; }
  std::span<double> particle(std::size_t i) { return {positions_.data() + i * dim_, dim_}; }

  double operator()(std::size_t i, std::size_t l) const { return positions_[i * dim_ + l]; }
  double& operator()(std::size_t i, std::size_t l) { return positions_[i * dim_ + l]; }

  std::span<const double> data() const noexcept { return positions_; }
  std::span<double> data() noexcept { return positions_; }

  // Coordinate l of every particle, in particle order.
  std::vector<double> coordinate(std::size_t l) const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = positions_[i * dim_ + l];
    return out;
  }

  bool all_finite() const {
    for (double v : positions_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const ParticleEnsemble&, const ParticleEnsemble&) = default;

 private:
  void check_shape() const {
    if (n_ == 0) throw UsageError("ParticleEnsemble: particle count must be >= 1");
    if (dim_ == 0) throw UsageError("ParticleEnsemble: dimension must be >= 1");
  }

  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> positions_;
};

}  // namespace stocbo
