#pragma once

// Consensus-based optimization (CBO) particle dynamics: initialization, the Laplace-weighted
// consensus point, the explicit Euler-Maruyama update and complete seeded runs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include "stocbo/ensemble.hpp"
#include "stocbo/errors.hpp"
#include "stocbo/params.hpp"
#include "stocbo/seed.hpp"

namespace stocbo {

// Deterministic objective x -> value on R^d.
using Objective = std::function<double(std::span<const double>)>;

inline ParticleEnsemble sample_initial(const InitDistribution& init, std::size_t n, std::size_t dim,
                                       Engine& engine) {
  init.validate();
  if (n == 0 || dim == 0) throw UsageError("sample_initial: n and dim must be >= 1");
  ParticleEnsemble ensemble(n, dim);
  std::uniform_real_distribution<double> uniform(init.lo, init.hi);
  for (double& x : ensemble.data()) x = uniform(engine);
  return ensemble;
}

// i.i.d. draws from mu_0; the same seed always yields the same ensemble.
inline ParticleEnsemble sample_initial(const InitDistribution& init, std::size_t n, std::size_t dim,
                                       const RunSeed& seed) {
  Engine engine = make_engine(seed, StreamDomain::Particles);
  return sample_initial(init, n, dim, engine);
}

namespace detail {

inline void check_values(const ParticleEnsemble& ensemble, std::span<const double> values) {
  if (ensemble.size() == 0) throw UsageError("consensus_point: empty ensemble");
  if (values.size() != ensemble.size()) {
    throw UsageError("consensus_point: " + std::to_string(values.size()) + " values for " +
                     std::to_string(ensemble.size()) + " particles");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("consensus_point: non-finite objective value at particle " + std::to_string(i));
    }
  }
}

// Weighted mean over `indices` with weights exp(-alpha (v_i - min v)). The largest weight is
// exactly 1, so the denominator is >= 1. The result is clamped to the coordinate-wise hull to
// absorb the last-ulp excursions of the floating-point mean.
template <class IndexRange>
std::vector<double> weighted_consensus(const ParticleEnsemble& ensemble, std::span<const double> values,
                                       double alpha, const IndexRange& indices) {
  const std::size_t dim = ensemble.dim();
  double v_min = std::numeric_limits<double>::infinity();
  for (std::size_t i : indices) v_min = std::min(v_min, values[i]);

  std::vector<double> num(dim, 0.0);
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  double den = 0.0;
  for (std::size_t i : indices) {
    const double w = std::exp(-alpha * (values[i] - v_min));
    den += w;
    const auto x = ensemble.particle(i);
    for (std::size_t l = 0; l < dim; ++l) {
      num[l] += w * x[l];
      lo[l] = std::min(lo[l], x[l]);
      hi[l] = std::max(hi[l], x[l]);
    }
  }
  for (std::size_t l = 0; l < dim; ++l) num[l] = std::clamp(num[l] / den, lo[l], hi[l]);
  return num;
}

struct IotaRange {
  std::size_t n;
  struct iterator {
    std::size_t i;
    std::size_t operator*() const { return i; }
    iterator& operator++() {
      ++i;
      return *this;
    }
    bool operator!=(const iterator& o) const { return i != o.i; }
  };
  iterator begin() const { return {0}; }
  iterator end() const { return {n}; }
};

}  // namespace detail

// sum_i X^i exp(-alpha v_i) / sum_i exp(-alpha v_i), evaluated with the min-shift.
inline std::vector<double> consensus_point(const ParticleEnsemble& ensemble,
                                           std::span<const double> values, double alpha) {
  detail::check_values(ensemble, values);
  if (!(alpha > 0.0)) throw UsageError("consensus_point: alpha must be > 0");
  return detail::weighted_consensus(ensemble, values, alpha, detail::IotaRange{ensemble.size()});
}

// Consensus over a uniformly drawn subset of batch_size particles (without replacement).
inline std::vector<double> consensus_point_batch(const ParticleEnsemble& ensemble,
                                                 std::span<const double> values, double alpha,
                                                 std::size_t batch_size, Engine& engine) {
  detail::check_values(ensemble, values);
  if (!(alpha > 0.0)) throw UsageError("consensus_point_batch: alpha must be > 0");
  if (batch_size == 0 || batch_size > ensemble.size()) {
    throw UsageError("consensus_point_batch: batch size " + std::to_string(batch_size) +
                     " outside [1, " + std::to_string(ensemble.size()) + "]");
  }
  if (batch_size == ensemble.size()) {
    return detail::weighted_consensus(ensemble, values, alpha, detail::IotaRange{ensemble.size()});
  }
  std::vector<std::size_t> all(ensemble.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> chosen;
  chosen.reserve(batch_size);
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), batch_size, engine);
  return detail::weighted_consensus(ensemble, values, alpha, chosen);
}

inline std::vector<double> consensus_point_batch(const ParticleEnsemble& ensemble,
                                                 std::span<const double> values, double alpha,
                                                 std::size_t batch_size, const RunSeed& seed) {
  Engine engine = make_engine(seed, StreamDomain::MiniBatch);
  return consensus_point_batch(ensemble, values, alpha, batch_size, engine);
}

// One Euler-Maruyama step in place:
//   X <- X - lambda (X - x*) dt + sigma D sqrt(dt) Z
// with D = |X - x*| I (isotropic) or diag(|X_l - x*_l|) (anisotropic).
// `step` only labels the blow-up error.
inline void em_step_inplace(ParticleEnsemble& ensemble, std::span<const double> consensus,
                            const CboParams& params, std::span<const double> noise,
                            std::size_t step = 0) {
  const std::size_t n = ensemble.size();
  const std::size_t dim = ensemble.dim();
  if (consensus.size() != dim) throw UsageError("em_step: consensus dimension mismatch");
  if (noise.size() != n * dim) throw UsageError("em_step: noise shape does not match the ensemble");

  const double drift = params.lambda * params.dt;
  const double diffusion = params.sigma * std::sqrt(params.dt);
  const bool isotropic = params.diffusion == DiffusionKind::Isotropic && dim > 1;

  for (std::size_t i = 0; i < n; ++i) {
    auto x = ensemble.particle(i);
    const double* z = noise.data() + i * dim;
    double radius = 0.0;
    if (isotropic) {
      for (std::size_t l = 0; l < dim; ++l) radius += (x[l] - consensus[l]) * (x[l] - consensus[l]);
      radius = std::sqrt(radius);
    }
    for (std::size_t l = 0; l < dim; ++l) {
      const double diff = x[l] - consensus[l];
      const double scale = isotropic ? radius : std::abs(diff);
      x[l] = x[l] - drift * diff + diffusion * scale * z[l];
    }
    for (std::size_t l = 0; l < dim; ++l) {
      if (!std::isfinite(x[l])) throw NumericalBlowup(step, i);
    }
  }
}

inline ParticleEnsemble em_step(const ParticleEnsemble& ensemble, std::span<const double> consensus,
                                const CboParams& params, std::span<const double> noise,
                                std::size_t step = 0) {
  ParticleEnsemble next = ensemble;
  em_step_inplace(next, consensus, params, noise, step);
  return next;
}

// Which full ensembles a run keeps. Consensus points are always kept at every node.
struct RecordPolicy {
  std::size_t ensemble_stride = 0;  // keep nodes h with h % stride == 0; 0 disables
  bool final_ensemble = true;

  static RecordPolicy final_only() { return {}; }
  static RecordPolicy consensus_only() { return {0, false}; }
  static RecordPolicy every(std::size_t stride) { return {stride, true}; }

  bool keeps(std::size_t node, std::size_t n_it) const {
    if (final_ensemble && node + 1 == n_it) return true;
    return ensemble_stride > 0 && node % ensemble_stride == 0;
  }
};

struct Snapshot {
  std::size_t node = 0;
  double time = 0.0;
  ParticleEnsemble ensemble;
};

class Trajectory {
 public:
  Trajectory(std::size_t dim, double dt, std::size_t n_it) : dim_(dim), dt_(dt) {
    consensus_.reserve(dim * n_it);
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nodes() const noexcept { return consensus_.size() / dim_; }
  double time(std::size_t node) const { return dt_ * static_cast<double>(node); }

  std::span<const double> consensus(std::size_t node) const {
    return {consensus_.data() + node * dim_, dim_};
  }
  std::span<const double> final_consensus() const { return consensus(nodes() - 1); }

  const std::vector<Snapshot>& snapshots() const noexcept { return snapshots_; }

  const ParticleEnsemble* ensemble_at(std::size_t node) const {
    for (const auto& s : snapshots_)
      if (s.node == node) return &s.ensemble;
    return nullptr;
  }
  const ParticleEnsemble& final_ensemble() const {
    const auto* e = ensemble_at(nodes() - 1);
    if (e == nullptr) throw UsageError("trajectory did not record the final ensemble");
    return *e;
  }

  void push_consensus(std::span<const double> c) { consensus_.insert(consensus_.end(), c.begin(), c.end()); }
  void push_snapshot(std::size_t node, const ParticleEnsemble& e) {
    snapshots_.push_back({node, time(node), e});
  }

  friend bool operator==(const Trajectory& a, const Trajectory& b) {
    if (a.dim_ != b.dim_ || a.consensus_ != b.consensus_ || a.snapshots_.size() != b.snapshots_.size())
      return false;
    for (std::size_t s = 0; s < a.snapshots_.size(); ++s) {
      if (a.snapshots_[s].node != b.snapshots_[s].node ||
          !(a.snapshots_[s].ensemble == b.snapshots_[s].ensemble))
        return false;
    }
    return true;
  }

 private:
  std::size_t dim_;
  double dt_;
  std::vector<double> consensus_;
  std::vector<Snapshot> snapshots_;
};

// Evaluates the objective at every particle; a non-finite value is a data error naming x.
inline void evaluate(const Objective& objective, const ParticleEnsemble& ensemble, std::span<double> out) {
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto x = ensemble.particle(i);
    out[i] = objective(x);
    if (!std::isfinite(out[i])) {
      std::ostringstream msg;
      msg << "objective is not finite at x = (";
      for (std::size_t l = 0; l < x.size(); ++l) msg << (l ? ", " : "") << x[l];
      msg << ")";
      throw DataError(msg.str());
    }
  }
}

// Full seeded CBO run. Initial positions and the N x d Brownian increments of every step come from
// one Particles stream (particles in index order, coordinates in index order); mini-batches use a
// separate stream so switching batching on does not change the noise.
inline Trajectory run_cbo(const Objective& objective, const CboParams& params, const InitDistribution& init,
                          std::size_t n, std::size_t dim, const RunSeed& seed,
                          RecordPolicy record = RecordPolicy::final_only()) {
  params.validate();
  if (params.batch_size && *params.batch_size > n) {
    throw UsageError("run_cbo: batch size " + std::to_string(*params.batch_size) + " exceeds N = " +
                     std::to_string(n));
  }
  Engine engine = make_engine(seed, StreamDomain::Particles);
  Engine batch_engine = make_engine(seed, StreamDomain::MiniBatch);
  ParticleEnsemble ensemble = sample_initial(init, n, dim, engine);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(n);
  std::vector<double> noise(n * dim);
  Trajectory trajectory(dim, params.dt, params.n_it);

  for (std::size_t h = 0; h < params.n_it; ++h) {
    evaluate(objective, ensemble, values);
    const auto consensus =
        params.batch_size
            ? consensus_point_batch(ensemble, values, params.alpha, *params.batch_size, batch_engine)
            : consensus_point(ensemble, values, params.alpha);
    trajectory.push_consensus(consensus);
    if (record.keeps(h, params.n_it)) trajectory.push_snapshot(h, ensemble);
    if (h + 1 == params.n_it) break;
    for (double& z : noise) z = normal(engine);
    em_step_inplace(ensemble, consensus, params, noise, h + 1);
  }
  return trajectory;
}

// Large-N reference run standing in for the mean-field limit; identical to run_cbo with n = n_ref.
inline Trajectory run_meanfield_surrogate(const Objective& objective, const CboParams& params,
                                          const InitDistribution& init, std::size_t n_ref, std::size_t dim,
                                          const RunSeed& seed,
                                          RecordPolicy record = RecordPolicy::final_only()) {
  return run_cbo(objective, params, init, n_ref, dim, seed, record);
}

}  // namespace stocbo
