#pragma once

// Replication drivers for the convergence-rate and success-rate studies. Every driver is a pure
// function of (config, master seed): Y samples, particle noise and coupling subsamples come from
// disjoint stream domains, and per-cell results are written into fixed slots before any
// aggregation, so the output does not depend on the number of worker threads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stocbo/approximation.hpp"
#include "stocbo/dynamics.hpp"
#include "stocbo/metrics.hpp"
#include "stocbo/objectives.hpp"
#include "stocbo/parallel.hpp"
#include "stocbo/params.hpp"
#include "stocbo/report.hpp"

namespace stocbo {

enum class Pipeline { Saa, Quadrature, ExactF };

inline const char* to_string(Pipeline p) {
  switch (p) {
    case Pipeline::Saa:
      return "SAA";
    case Pipeline::Quadrature:
      return "Quadrature";
    case Pipeline::ExactF:
      return "Exact-f";
  }
  return "?";
}

// How two 1D ensembles of different sizes are compared.
enum class Coupling {
  Subsample,  // random equal-size subsample of the larger one, then sorted coupling
  Quantile,   // exact W_p between the unequal-size empirical measures
};

enum class ExperimentKind { Test1Saa, Test1MeanField, Test2, Test3, Test4, SingleRun };

struct ExperimentConfig {
  std::string objective;  // empty: the experiment's default catalog entries
  Pipeline pipeline = Pipeline::Saa;
  CboParams cbo;
  InitDistribution init;
  std::vector<std::size_t> n_grid;
  std::vector<std::size_t> m_grid;  // M (SAA) or Q (quadrature) values
  std::size_t n_ref = 10'000;
  std::size_t n_samples_cbo = 10;
  std::size_t n_samples_y = 50;
  std::vector<double> thresholds{0.50, 0.25, 0.10};
  std::uint64_t seed = 20240501;
  double trunc_half_width = 4.0;
  std::size_t record_stride = 10;  // time nodes reported besides the final one
  Coupling coupling = Coupling::Subsample;
  // Reference runs normally draw independent particle noise; sharing the finite-N stream makes
  // a run at N = N_ref reproduce its reference exactly.
  bool shared_reference_noise = false;
  unsigned threads = 0;
  std::string output_path;

  void validate() const {
    cbo.validate();
    init.validate();
    auto check_grid = [](const std::vector<std::size_t>& g, const char* name) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] == 0) throw ConfigError(std::string(name) + " grid values must be >= 1");
        if (i > 0 && g[i] <= g[i - 1]) throw ConfigError(std::string(name) + " grid must be strictly increasing");
      }
    };
    check_grid(n_grid, "N");
    check_grid(m_grid, "M/Q");
    if (n_samples_cbo == 0 || n_samples_y == 0) throw ConfigError("sample counts must be >= 1");
    if (n_ref == 0) throw ConfigError("N_ref must be >= 1");
    for (double thr : thresholds)
      if (!(thr > 0.0)) throw ConfigError("thresholds must be > 0");
  }
};

// Desk-scale defaults; `paper_scale` restores the original replication counts and grids.
inline ExperimentConfig default_config(ExperimentKind kind, bool paper_scale = false) {
  ExperimentConfig cfg;
  const std::vector<std::size_t> log_grid{100, 316, 1000, 3162, 10000};
  std::vector<std::size_t> linear_grid;
  for (std::size_t v = 100; v <= 10000; v += 500) linear_grid.push_back(v);
  linear_grid.push_back(10000);
  const auto& rate_grid = paper_scale ? linear_grid : log_grid;

  switch (kind) {
    case ExperimentKind::Test1Saa:
      cfg.objective = "ackley-like";
      cfg.n_grid = {5000};
      cfg.m_grid = rate_grid;
      cfg.n_samples_y = paper_scale ? 200 : 50;
      cfg.n_samples_cbo = 10;
      break;
    case ExperimentKind::Test1MeanField:
      cfg.objective = "ackley-like";
      cfg.m_grid = {100};
      cfg.n_grid = rate_grid;
      cfg.n_ref = paper_scale ? 100'000 : 10'000;
      cfg.n_samples_y = paper_scale ? 200 : 50;
      cfg.n_samples_cbo = 10;
      break;
    case ExperimentKind::Test2:
      cfg.objective = "ackley-like";
      cfg.pipeline = Pipeline::Quadrature;
      cfg.n_grid = rate_grid;
      cfg.n_ref = paper_scale ? 100'000 : 10'000;
      cfg.n_samples_cbo = 10;
      break;
    case ExperimentKind::Test3:
      cfg.pipeline = Pipeline::Quadrature;
      cfg.cbo = CboParams::with_horizon(7.0, 1.0);
      cfg.n_grid = paper_scale ? std::vector<std::size_t>{50, 100, 200, 400, 600, 800, 1000}
                               : std::vector<std::size_t>{64, 256, 1024};
      cfg.n_ref = 1000;
      cfg.n_samples_cbo = paper_scale ? 10 : 10000;
      cfg.record_stride = 1;
      break;
    case ExperimentKind::Test4:
      cfg.cbo.diffusion = DiffusionKind::Anisotropic;
      cfg.n_grid = paper_scale ? std::vector<std::size_t>{100, 500, 1000} : std::vector<std::size_t>{100, 1000};
      cfg.n_samples_cbo = 100;
      cfg.n_samples_y = 100;
      cfg.record_stride = 0;
      break;
    case ExperimentKind::SingleRun:
      cfg.objective = "ackley-like";
      cfg.pipeline = Pipeline::ExactF;
      cfg.n_grid = {1000};
      cfg.m_grid = {1000};
      cfg.n_samples_cbo = 1;
      cfg.n_samples_y = 1;
      break;
  }
  return cfg;
}

// Largest Q with Q^k <= n.
inline std::size_t integer_root(std::size_t n, std::size_t k) {
  if (k == 0) throw UsageError("integer_root: k must be >= 1");
  auto pow_le = [&](std::size_t q) {
    std::size_t p = 1;
    for (std::size_t l = 0; l < k; ++l) {
      if (p > n / q) return false;
      p *= q;
    }
    return p <= n;
  };
  std::size_t q = static_cast<std::size_t>(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(k)));
  q = std::max<std::size_t>(q, 1);
  while (q > 1 && !pow_le(q)) --q;
  while (pow_le(q + 1)) ++q;
  return q;
}

inline std::size_t integer_power(std::size_t q, std::size_t k) {
  std::size_t p = 1;
  for (std::size_t l = 0; l < k; ++l) p *= q;
  return p;
}

namespace detail {

inline std::vector<std::size_t> reported_nodes(const CboParams& cbo, std::size_t stride) {
  std::vector<std::size_t> nodes;
  for (std::size_t h = 0; h < cbo.n_it; ++h)
    if ((stride > 0 && h % stride == 0) || h + 1 == cbo.n_it) nodes.push_back(h);
  return nodes;
}

inline std::uint64_t reference_lane(const ExperimentConfig& cfg, std::uint64_t lane) {
  return cfg.shared_reference_noise ? 0 : lane;
}

inline RecordPolicy snapshot_policy(std::size_t stride) {
  return stride > 0 ? RecordPolicy::every(stride) : RecordPolicy::final_only();
}

// Runs body() and re-raises library errors with the replication cell prepended.
template <class Body>
void with_context(const std::string& context, Body&& body) {
  try {
    body();
  } catch (const ConfigError& e) {
    throw ConfigError(context + ": " + e.what());
  } catch (const UsageError& e) {
    throw UsageError(context + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(context + ": " + e.what());
  } catch (const ResourceError& e) {
    throw ResourceError(context + ": " + e.what());
  } catch (const UnsupportedLaw& e) {
    throw UnsupportedLaw(context + ": " + e.what());
  } catch (const Error& e) {
    throw Error(context + ": " + e.what());
  }
}

// parallel_for whose failures name the replication cell they came from.
template <class Name, class Body>
void for_cells(std::size_t count, unsigned threads, Name&& name, Body&& body) {
  parallel_for(count, threads, [&](std::size_t i) { with_context(name(i), [&] { body(i); }); });
}

inline std::string cell_name(std::initializer_list<std::pair<const char*, std::size_t>> parts) {
  std::string out;
  for (const auto& [name, value] : parts) {
    if (!out.empty()) out += ", ";
    out += std::string(name) + "=" + std::to_string(value);
  }
  return out;
}

inline Objective exact_objective(const StochasticObjective& obj) {
  if (!obj.has_closed_form()) throw UsageError("objective '" + obj.id + "' has no closed-form expectation");
  return obj.closed_form_f;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double coupled_distance(const ParticleEnsemble& a, const ParticleEnsemble& b, int p, Coupling coupling,
                               Engine& engine) {
  const EmpiricalMeasure ma(a), mb(b);
  if (coupling == Coupling::Quantile) return wasserstein_1d_quantile(ma, mb, p);
  return wasserstein_1d_subsampled(ma, mb, p, engine);
}

inline void require_1d(const StochasticObjective& obj) {
  if (obj.dim != 1) throw UsageError("Wasserstein-based experiments need d = 1; '" + obj.id + "' has d = " +
                                     std::to_string(obj.dim));
}

// Adds one row per (scale, reported node) and a summary row per node where every scale has a
// positive error. values[s][t] holds the per-replication errors; the row error is their mean
// unless `means` supplies it. The band is widened to contain the row error when a skewed
// sample pushes the mean outside the [0.15, 0.85] quantiles.
struct CurveSpec {
  std::string experiment;
  std::string objective;
  std::string pipeline;
  std::string scale_name;
  std::optional<double> p_or_thr;
  std::string fit_label;  // label of the final-time fit; empty: none
};

inline void append_curve(ExperimentReport& report, const CurveSpec& spec, const CboParams& cbo,
                         const std::vector<std::size_t>& nodes, const std::vector<double>& scales,
                         const std::vector<std::vector<std::vector<double>>>& values,
                         const std::vector<std::vector<double>>* means = nullptr) {
  std::vector<std::vector<double>> row_error(scales.size(), std::vector<double>(nodes.size(), 0.0));
  for (std::size_t s = 0; s < scales.size(); ++s) {
    for (std::size_t t = 0; t < nodes.size(); ++t) {
      const auto& reps = values[s][t];
      const double m = means ? (*means)[s][t] : mean(reps);
      row_error[s][t] = m;
      const auto [q15, q85] = quantile_band(reps);
      report.rows.push_back({spec.experiment, spec.objective, spec.pipeline, cbo.dt * static_cast<double>(nodes[t]),
                             spec.scale_name, scales[s], spec.p_or_thr, m, std::min(q15, m), std::max(q85, m),
                             std::nullopt});
    }
  }
  if (scales.size() < 2) return;
  for (std::size_t t = 0; t < nodes.size(); ++t) {
    std::vector<std::pair<double, double>> pts;
    bool positive = true;
    for (std::size_t s = 0; s < scales.size(); ++s) {
      positive = positive && row_error[s][t] > 0.0;
      pts.emplace_back(scales[s], row_error[s][t]);
    }
    if (!positive) continue;
    const RateFit fit = loglog_slope(pts);
    report.rows.push_back({spec.experiment, spec.objective, spec.pipeline, cbo.dt * static_cast<double>(nodes[t]),
                           spec.scale_name + "_fit", std::nullopt, spec.p_or_thr, fit.constant(), std::nullopt,
                           std::nullopt, fit.slope});
    if (t + 1 == nodes.size() && !spec.fit_label.empty()) report.fits.push_back({spec.fit_label, fit});
  }
}

}  // namespace detail

// SAA error  sqrt(E_P[(x_hat_M(t) - x(t))^2])  as a function of M for fixed N. The exact-f run
// and every SAA run of replication u share the same particle stream (common random numbers).
inline ExperimentReport test1_saa_rate(const ExperimentConfig& cfg, const StochasticObjective& obj) {
  cfg.validate();
  if (cfg.n_grid.size() != 1) throw ConfigError("test1-saa needs exactly one N");
  if (cfg.m_grid.empty()) throw ConfigError("test1-saa needs an M grid");
  const Objective exact = detail::exact_objective(obj);
  const std::size_t n = cfg.n_grid.front();
  const std::size_t dim = obj.dim;
  const std::size_t n_cbo = cfg.n_samples_cbo, n_y = cfg.n_samples_y, n_m = cfg.m_grid.size();
  const auto nodes = detail::reported_nodes(cfg.cbo, cfg.record_stride);

  std::vector<Trajectory> exact_runs(n_cbo, Trajectory(dim, cfg.cbo.dt, 0));
  detail::for_cells(n_cbo, cfg.threads, [](std::size_t u) { return detail::cell_name({{"exact u", u}}); },
                    [&](std::size_t u) {
    exact_runs[u] =
        run_cbo(exact, cfg.cbo, cfg.init, n, dim, RunSeed{cfg.seed, u, 0, 0}, RecordPolicy::consensus_only());
  });

  // diff[m][j][u][t]: d-vector difference of consensus points, flattened per cell
  std::vector<std::vector<double>> diff(n_m * n_y);
  detail::for_cells(
      n_m * n_y, cfg.threads,
      [&](std::size_t cell) { return detail::cell_name({{"M", cfg.m_grid[cell / n_y]}, {"j", cell % n_y}}); },
      [&](std::size_t cell) {
    const std::size_t mi = cell / n_y, j = cell % n_y;
    const SaaSample sample = draw_saa_sample(obj.law, cfg.m_grid[mi], RunSeed{cfg.seed, 0, j, 0});
    const Objective approx = saa_objective(obj, sample);
    auto& out = diff[cell];
    out.assign(n_cbo * nodes.size() * dim, 0.0);
    for (std::size_t u = 0; u < n_cbo; ++u) {
      const Trajectory run =
          run_cbo(approx, cfg.cbo, cfg.init, n, dim, RunSeed{cfg.seed, u, 0, 0}, RecordPolicy::consensus_only());
      for (std::size_t t = 0; t < nodes.size(); ++t) {
        const auto a = run.consensus(nodes[t]);
        const auto b = exact_runs[u].consensus(nodes[t]);
        for (std::size_t l = 0; l < dim; ++l) out[(u * nodes.size() + t) * dim + l] = a[l] - b[l];
      }
    }
  });

  ExperimentReport report;
  report.cells = n_m * n_y * n_cbo;
  std::vector<double> scales(cfg.m_grid.begin(), cfg.m_grid.end());
  // Per (m, t): rows carry consensus_rmse over j; the band is over the per-j magnitudes of the
  // inner mean difference.
  std::vector<std::vector<double>> rmse(n_m, std::vector<double>(nodes.size()));
  std::vector<std::vector<std::vector<double>>> per_j(n_m, std::vector<std::vector<double>>(nodes.size()));
  for (std::size_t mi = 0; mi < n_m; ++mi) {
    for (std::size_t t = 0; t < nodes.size(); ++t) {
      std::vector<std::vector<ConsensusPair>> pairs(n_y);
      for (std::size_t j = 0; j < n_y; ++j) {
        const auto& cell = diff[mi * n_y + j];
        for (std::size_t u = 0; u < n_cbo; ++u) {
          const auto* first = cell.data() + (u * nodes.size() + t) * dim;
          pairs[j].push_back({std::vector<double>(first, first + dim), std::vector<double>(dim, 0.0)});
        }
        per_j[mi][t].push_back(consensus_rmse({pairs[j]}));
      }
      rmse[mi][t] = consensus_rmse(pairs);
    }
  }
  detail::append_curve(report, {"test1-saa", obj.id, to_string(Pipeline::Saa), "M", std::nullopt, "final"}, cfg.cbo,
                       nodes, scales, per_j, &rmse);
  return report;
}

inline ExperimentReport test1_saa_rate(const ExperimentConfig& cfg) {
  return test1_saa_rate(cfg, make_objective(cfg.objective.empty() ? "ackley-like" : cfg.objective));
}

// Mean-field error E_P[W_p(mu^N, mu^N_ref)] at fixed M, p = 1 and 2. Finite and reference runs of
// cell (j, u) use the same f_hat_M and independent particle streams.
inline ExperimentReport test1_meanfield_rate(const ExperimentConfig& cfg, const StochasticObjective& obj) {
  cfg.validate();
  detail::require_1d(obj);
  if (cfg.m_grid.size() != 1) throw ConfigError("test1-mf needs exactly one M");
  if (cfg.n_grid.empty()) throw ConfigError("test1-mf needs an N grid");
  const std::size_t m = cfg.m_grid.front();
  const std::size_t n_cbo = cfg.n_samples_cbo, n_y = cfg.n_samples_y, n_n = cfg.n_grid.size();
  const auto nodes = detail::reported_nodes(cfg.cbo, cfg.record_stride);
  const std::size_t n_t = nodes.size();

  // w[cell][(ni * n_t + t) * 2 + (p - 1)]
  std::vector<std::vector<double>> w(n_y * n_cbo);
  std::vector<std::size_t> violations(n_y * n_cbo, 0);
  std::vector<Objective> approx(n_y);
  for (std::size_t j = 0; j < n_y; ++j)
    approx[j] = saa_objective(obj, draw_saa_sample(obj.law, m, RunSeed{cfg.seed, 0, j, 0}));

  detail::for_cells(
      n_y * n_cbo, cfg.threads,
      [&](std::size_t cell) { return detail::cell_name({{"j", cell / n_cbo}, {"u", cell % n_cbo}}); },
      [&](std::size_t cell) {
    const std::size_t j = cell / n_cbo, u = cell % n_cbo;
    const RunSeed ref_seed{cfg.seed, u, j, detail::reference_lane(cfg, 1)};
    const Trajectory ref = run_meanfield_surrogate(approx[j], cfg.cbo, cfg.init, cfg.n_ref, 1, ref_seed,
                                                   detail::snapshot_policy(cfg.record_stride));
    auto& out = w[cell];
    out.assign(n_n * n_t * 2, 0.0);
    for (std::size_t ni = 0; ni < n_n; ++ni) {
      const Trajectory fin = run_cbo(approx[j], cfg.cbo, cfg.init, cfg.n_grid[ni], 1, RunSeed{cfg.seed, u, j, 0},
                                     detail::snapshot_policy(cfg.record_stride));
      for (std::size_t t = 0; t < n_t; ++t) {
        const auto& a = *fin.ensemble_at(nodes[t]);
        const auto& b = *ref.ensemble_at(nodes[t]);
        Engine e1 = make_engine(RunSeed{cfg.seed, u, j, 2 + ni * n_t + t}, StreamDomain::Subsample);
        Engine e2 = e1;  // same subsample for both p
        const double w1 = detail::coupled_distance(a, b, 1, cfg.coupling, e1);
        const double w2 = detail::coupled_distance(a, b, 2, cfg.coupling, e2);
        out[(ni * n_t + t) * 2 + 0] = w1;
        out[(ni * n_t + t) * 2 + 1] = w2;
        if (w1 > w2 * (1.0 + 1e-12)) ++violations[cell];
      }
    }
  });

  ExperimentReport report;
  report.cells = n_y * n_cbo * n_n * n_t;
  for (std::size_t v : violations) report.ordering_violations += v;
  std::vector<double> scales(cfg.n_grid.begin(), cfg.n_grid.end());
  for (int p = 1; p <= 2; ++p) {
    std::vector<std::vector<std::vector<double>>> values(n_n, std::vector<std::vector<double>>(n_t));
    for (std::size_t ni = 0; ni < n_n; ++ni) {
      for (std::size_t t = 0; t < n_t; ++t) {
        auto& reps = values[ni][t];
        reps.resize(n_y);
        for (std::size_t j = 0; j < n_y; ++j) {
          double s = 0.0;
          for (std::size_t u = 0; u < n_cbo; ++u) s += w[j * n_cbo + u][(ni * n_t + t) * 2 + (p - 1)];
          reps[j] = s / static_cast<double>(n_cbo);
        }
      }
    }
    detail::append_curve(report,
                         {"test1-mf", obj.id, to_string(Pipeline::Saa), "N", static_cast<double>(p),
                          "W" + std::to_string(p)},
                         cfg.cbo, nodes, scales, values);
  }
  return report;
}

inline ExperimentReport test1_meanfield_rate(const ExperimentConfig& cfg) {
  return test1_meanfield_rate(cfg, make_objective(cfg.objective.empty() ? "ackley-like" : cfg.objective));
}

// Joint-limit error W_1(mu^{N, f_tilde_N}, mu_ref^f) with Q^k = N nodes, plus the two terms of
// its triangle-inequality split: the mean-field error against an N_ref run on f_tilde_{N_ref},
// and the N-independent gap between the two reference runs.
inline ExperimentReport test2_joint_rate(const ExperimentConfig& cfg, const StochasticObjective& obj) {
  cfg.validate();
  detail::require_1d(obj);
  if (cfg.n_grid.empty()) throw ConfigError("test2 needs an N grid");
  const Objective exact = detail::exact_objective(obj);
  const std::size_t k = obj.k();
  const std::size_t n_cbo = cfg.n_samples_cbo, n_n = cfg.n_grid.size();
  const auto nodes = detail::reported_nodes(cfg.cbo, cfg.record_stride);
  const std::size_t n_t = nodes.size();

  std::vector<std::size_t> particles(n_n);
  std::vector<Objective> approx(n_n);
  for (std::size_t ni = 0; ni < n_n; ++ni) {
    const std::size_t q = integer_root(cfg.n_grid[ni], k);
    particles[ni] = integer_power(q, k);
    approx[ni] = quadrature_objective(obj, quadrature_grid_for(obj, q, cfg.trunc_half_width));
  }
  const std::size_t q_ref = integer_root(cfg.n_ref, k);
  const Objective approx_ref = quadrature_objective(obj, quadrature_grid_for(obj, q_ref, cfg.trunc_half_width));

  // out[u][((which * n_n + ni) * n_t + t)], which: 0 joint, 1 mean-field, 2 reference gap
  std::vector<std::vector<double>> out(n_cbo);
  detail::for_cells(n_cbo, cfg.threads, [](std::size_t u) { return detail::cell_name({{"u", u}}); },
                    [&](std::size_t u) {
    const RecordPolicy policy = detail::snapshot_policy(cfg.record_stride);
    const Trajectory ref_f = run_meanfield_surrogate(exact, cfg.cbo, cfg.init, cfg.n_ref, 1,
                                                     RunSeed{cfg.seed, u, 0, detail::reference_lane(cfg, 1)}, policy);
    const Trajectory ref_q = run_meanfield_surrogate(approx_ref, cfg.cbo, cfg.init, q_ref, 1,
                                                     RunSeed{cfg.seed, u, 0, detail::reference_lane(cfg, 2)}, policy);
    auto& o = out[u];
    o.assign(3 * n_n * n_t, 0.0);
    for (std::size_t ni = 0; ni < n_n; ++ni) {
      const Trajectory fin = run_cbo(approx[ni], cfg.cbo, cfg.init, particles[ni], 1, RunSeed{cfg.seed, u, 0, 0},
                                     detail::snapshot_policy(cfg.record_stride));
      for (std::size_t t = 0; t < n_t; ++t) {
        const auto& a = *fin.ensemble_at(nodes[t]);
        const auto& bf = *ref_f.ensemble_at(nodes[t]);
        const auto& bq = *ref_q.ensemble_at(nodes[t]);
        const std::uint64_t base = 3 + 3 * (ni * n_t + t);
        Engine e0 = make_engine(RunSeed{cfg.seed, u, 0, base}, StreamDomain::Subsample);
        Engine e1 = make_engine(RunSeed{cfg.seed, u, 0, base + 1}, StreamDomain::Subsample);
        Engine e2 = make_engine(RunSeed{cfg.seed, u, 0, base + 2}, StreamDomain::Subsample);
        o[(0 * n_n + ni) * n_t + t] = detail::coupled_distance(a, bf, 1, cfg.coupling, e0);
        o[(1 * n_n + ni) * n_t + t] = detail::coupled_distance(a, bq, 1, cfg.coupling, e1);
        o[(2 * n_n + ni) * n_t + t] = detail::coupled_distance(bq, bf, 1, cfg.coupling, e2);
      }
    }
  });

  ExperimentReport report;
  report.cells = n_cbo * n_n;
  std::vector<double> scales(particles.begin(), particles.end());
  const char* names[3] = {"test2", "test2/meanfield", "test2/reference-gap"};
  const char* labels[3] = {"joint", "meanfield", ""};
  for (std::size_t which = 0; which < 3; ++which) {
    std::vector<std::vector<std::vector<double>>> values(n_n, std::vector<std::vector<double>>(n_t));
    for (std::size_t ni = 0; ni < n_n; ++ni)
      for (std::size_t t = 0; t < n_t; ++t)
        for (std::size_t u = 0; u < n_cbo; ++u) values[ni][t].push_back(out[u][(which * n_n + ni) * n_t + t]);
    detail::append_curve(report, {names[which], obj.id, to_string(Pipeline::Quadrature), "N", 1.0, labels[which]},
                         cfg.cbo, nodes, scales, values);
  }
  return report;
}

inline ExperimentReport test2_joint_rate(const ExperimentConfig& cfg) {
  return test2_joint_rate(cfg, make_objective(cfg.objective.empty() ? "ackley-like" : cfg.objective));
}

// Joint-limit error for random dimensions k = 1, 2, 3 (least-squares family). For each N the
// grid uses Q = floor(N^(1/k)) nodes per axis and Q^k particles; Q^k is the reported scale.
inline ExperimentReport test3_dimension_sweep(const ExperimentConfig& cfg,
                                              const std::vector<StochasticObjective>& objectives) {
  cfg.validate();
  if (cfg.n_grid.empty()) throw ConfigError("test3 needs an N grid");
  const std::size_t n_cbo = cfg.n_samples_cbo;
  const auto nodes = detail::reported_nodes(cfg.cbo, cfg.record_stride);
  const std::size_t n_t = nodes.size();

  ExperimentReport report;
  for (const auto& obj : objectives) {
    detail::require_1d(obj);
    const Objective exact = detail::exact_objective(obj);
    const std::size_t k = obj.k();
    std::vector<std::size_t> particles;
    std::vector<Objective> approx;
    for (std::size_t n : cfg.n_grid) {
      const std::size_t q = integer_root(n, k);
      const std::size_t p = integer_power(q, k);
      if (!particles.empty() && particles.back() == p) continue;
      particles.push_back(p);
      approx.push_back(quadrature_objective(obj, quadrature_grid_for(obj, q, cfg.trunc_half_width)));
    }
    const std::size_t n_n = particles.size();

    std::vector<std::vector<double>> out(n_cbo);
    detail::for_cells(n_cbo, cfg.threads, [](std::size_t u) { return detail::cell_name({{"u", u}}); },
                    [&](std::size_t u) {
      const Trajectory ref = run_meanfield_surrogate(exact, cfg.cbo, cfg.init, cfg.n_ref, 1,
                                                     RunSeed{cfg.seed, u, 0, detail::reference_lane(cfg, 1)},
                                                     detail::snapshot_policy(cfg.record_stride));
      auto& o = out[u];
      o.assign(n_n * n_t, 0.0);
      for (std::size_t ni = 0; ni < n_n; ++ni) {
        const Trajectory fin = run_cbo(approx[ni], cfg.cbo, cfg.init, particles[ni], 1, RunSeed{cfg.seed, u, 0, 0},
                                       detail::snapshot_policy(cfg.record_stride));
        for (std::size_t t = 0; t < n_t; ++t) {
          Engine e = make_engine(RunSeed{cfg.seed, u, 0, 2 + ni * n_t + t}, StreamDomain::Subsample);
          o[ni * n_t + t] =
              detail::coupled_distance(*fin.ensemble_at(nodes[t]), *ref.ensemble_at(nodes[t]), 1, cfg.coupling, e);
        }
      }
    });
    report.cells += n_cbo * n_n;

    std::vector<std::vector<std::vector<double>>> values(n_n, std::vector<std::vector<double>>(n_t));
    for (std::size_t ni = 0; ni < n_n; ++ni)
      for (std::size_t t = 0; t < n_t; ++t)
        for (std::size_t u = 0; u < n_cbo; ++u) values[ni][t].push_back(out[u][ni * n_t + t]);
    std::vector<double> scales(particles.begin(), particles.end());
    detail::append_curve(report, {"test3", obj.id, to_string(Pipeline::Quadrature), "N", 1.0, obj.id}, cfg.cbo, nodes,
                         scales, values);
  }
  return report;
}

inline ExperimentReport test3_dimension_sweep(const ExperimentConfig& cfg) {
  std::vector<StochasticObjective> objectives;
  if (cfg.objective.empty()) {
    for (int k = 1; k <= 3; ++k) objectives.push_back(make_lls_family(k));
  } else {
    objectives.push_back(make_objective(cfg.objective));
  }
  return test3_dimension_sweep(cfg, objectives);
}

// Success rates with N = M = Q^k. The SAA candidate of replication u is the average over the
// n_samples_y Y samples of the final consensus points (all with particle stream u); the
// quadrature candidate is the final consensus on the truncated-normal grid with
// Q = floor(N^(1/k)).
inline ExperimentReport test4_success_rates(const ExperimentConfig& cfg,
                                            const std::vector<StochasticObjective>& objectives) {
  cfg.validate();
  if (cfg.n_grid.empty()) throw ConfigError("test4 needs an N grid");
  const std::size_t n_cbo = cfg.n_samples_cbo, n_y = cfg.n_samples_y;
  const double horizon = cfg.cbo.horizon();

  ExperimentReport report;
  for (const auto& obj : objectives) {
    if (!obj.minimizer) throw UsageError("test4: objective '" + obj.id + "' has no known minimizer");
    const std::size_t dim = obj.dim;
    for (std::size_t n : cfg.n_grid) {
      // SAA: final[j][u]
      std::vector<std::vector<double>> saa_final(n_y);
      detail::for_cells(
          n_y, cfg.threads, [&](std::size_t j) { return detail::cell_name({{"N", n}, {"j", j}}); },
          [&](std::size_t j) {
        const Objective approx = saa_objective(obj, draw_saa_sample(obj.law, n, RunSeed{cfg.seed, 0, j, 0}));
        auto& o = saa_final[j];
        o.assign(n_cbo * dim, 0.0);
        for (std::size_t u = 0; u < n_cbo; ++u) {
          const Trajectory run =
              run_cbo(approx, cfg.cbo, cfg.init, n, dim, RunSeed{cfg.seed, u, 0, 0}, RecordPolicy::consensus_only());
          const auto c = run.final_consensus();
          std::copy(c.begin(), c.end(), o.begin() + static_cast<std::ptrdiff_t>(u * dim));
        }
      });
      std::vector<std::vector<double>> saa_candidates(n_cbo, std::vector<double>(dim, 0.0));
      for (std::size_t u = 0; u < n_cbo; ++u) {
        for (std::size_t j = 0; j < n_y; ++j)
          for (std::size_t l = 0; l < dim; ++l) saa_candidates[u][l] += saa_final[j][u * dim + l];
        for (double& v : saa_candidates[u]) v /= static_cast<double>(n_y);
      }

      const std::size_t q = integer_root(n, obj.k());
      const Objective quad = quadrature_objective(obj, quadrature_grid_for(obj, q, cfg.trunc_half_width));
      std::vector<std::vector<double>> quad_candidates(n_cbo);
      detail::for_cells(n_cbo, cfg.threads, [](std::size_t u) { return detail::cell_name({{"u", u}}); },
                    [&](std::size_t u) {
        const Trajectory run =
            run_cbo(quad, cfg.cbo, cfg.init, n, dim, RunSeed{cfg.seed, u, 0, 0}, RecordPolicy::consensus_only());
        const auto c = run.final_consensus();
        quad_candidates[u].assign(c.begin(), c.end());
      });
      report.cells += n_cbo * (n_y + 1);

      for (const auto& [pipeline, candidates] :
           {std::pair{Pipeline::Saa, &saa_candidates}, std::pair{Pipeline::Quadrature, &quad_candidates}}) {
        for (double thr : cfg.thresholds) {
          const double rate = success_rate(*candidates, SuccessCriterion{thr, *obj.minimizer});
          report.success.push_back({obj.id, to_string(pipeline), n, thr, rate});
          report.rows.push_back({"test4", obj.id, to_string(pipeline), horizon, "N", static_cast<double>(n), thr, rate,
                                 std::nullopt, std::nullopt, std::nullopt});
        }
      }
    }
  }
  return report;
}

inline ExperimentReport test4_success_rates(const ExperimentConfig& cfg) {
  std::vector<StochasticObjective> objectives;
  if (cfg.objective.empty()) {
    for (std::size_t d = 1; d <= 3; ++d) objectives.push_back(make_stochastic_utility(d));
  } else {
    objectives.push_back(make_objective(cfg.objective));
  }
  return test4_success_rates(cfg, objectives);
}

// One CBO run with the configured pipeline. Rows report the max-norm distance of the consensus
// point to the known minimizer (empty when no minimizer is known).
inline ExperimentReport single_run(const ExperimentConfig& cfg, const StochasticObjective& obj) {
  cfg.validate();
  if (cfg.n_grid.empty()) throw ConfigError("run needs --n");
  const std::size_t n = cfg.n_grid.front();
  Objective objective;
  std::string scale_name = "N";
  switch (cfg.pipeline) {
    case Pipeline::ExactF:
      objective = detail::exact_objective(obj);
      break;
    case Pipeline::Saa: {
      const std::size_t m = cfg.m_grid.empty() ? n : cfg.m_grid.front();
      objective = saa_objective(obj, draw_saa_sample(obj.law, m, RunSeed{cfg.seed, 0, 0, 0}));
      break;
    }
    case Pipeline::Quadrature: {
      const std::size_t q = cfg.m_grid.empty() ? integer_root(n, obj.k()) : cfg.m_grid.front();
      objective = quadrature_objective(obj, quadrature_grid_for(obj, q, cfg.trunc_half_width));
      break;
    }
  }
  const Trajectory run =
      run_cbo(objective, cfg.cbo, cfg.init, n, obj.dim, RunSeed{cfg.seed, 0, 0, 0}, RecordPolicy::final_only());
  ExperimentReport report;
  report.cells = 1;
  const auto final_c = run.final_consensus();
  report.final_consensus.assign(final_c.begin(), final_c.end());
  for (std::size_t h : detail::reported_nodes(cfg.cbo, cfg.record_stride)) {
    std::optional<double> err;
    if (obj.minimizer) {
      const auto c = run.consensus(h);
      double d = 0.0;
      for (std::size_t l = 0; l < c.size(); ++l) d = std::max(d, std::abs(c[l] - (*obj.minimizer)[l]));
      err = d;
    }
    report.rows.push_back({"run", obj.id, to_string(cfg.pipeline), cfg.cbo.dt * static_cast<double>(h), scale_name,
                           static_cast<double>(n), std::nullopt, err, std::nullopt, std::nullopt, std::nullopt});
  }
  return report;
}

inline ExperimentReport single_run(const ExperimentConfig& cfg) {
  return single_run(cfg, make_objective(cfg.objective.empty() ? "ackley-like" : cfg.objective));
}

}  // namespace stocbo
