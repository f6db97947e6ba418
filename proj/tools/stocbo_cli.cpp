// Command-line driver for the replication experiments.
//
//   stocbo test1-saa --m 100,1000,10000 --out saa.csv
//   stocbo --config desk.ini test3 --n 64,256
//
// Every flag can also be given in a key=value configuration file (--config); flags on the
// command line override file values.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stocbo/stocbo.hpp"

namespace {

struct Options {
  std::string objective;
  std::string pipeline;
  std::vector<std::size_t> n;
  std::vector<std::size_t> m;
  std::vector<std::size_t> q;
  std::optional<std::size_t> n_ref;
  std::optional<std::size_t> samples_cbo;
  std::optional<std::size_t> samples_y;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> t_final;
  std::optional<double> lambda;
  std::optional<double> sigma;
  std::optional<double> alpha;
  std::string diffusion;
  std::optional<std::size_t> batch_size;
  std::optional<double> trunc_half_width;
  std::optional<double> init_lo;
  std::optional<double> init_hi;
  std::vector<double> thresholds;
  std::optional<std::size_t> record_stride;
  std::string coupling;
  bool paper_scale = false;
  std::string out;
  unsigned threads = 0;
};

stocbo::ExperimentConfig build_config(stocbo::ExperimentKind kind, const Options& o) {
  using namespace stocbo;
  ExperimentConfig cfg = default_config(kind, o.paper_scale);
  if (!o.objective.empty()) cfg.objective = o.objective;
  if (!o.pipeline.empty()) {
    static const std::map<std::string, Pipeline> pipelines{
        {"saa", Pipeline::Saa}, {"quadrature", Pipeline::Quadrature}, {"exact", Pipeline::ExactF}};
    cfg.pipeline = pipelines.at(o.pipeline);
  }
  if (!o.n.empty()) cfg.n_grid = o.n;
  if (!o.m.empty() && !o.q.empty()) throw ConfigError("--m and --q are mutually exclusive");
  if (!o.m.empty()) cfg.m_grid = o.m;
  if (!o.q.empty()) cfg.m_grid = o.q;
  if (o.n_ref) cfg.n_ref = *o.n_ref;
  if (o.samples_cbo) cfg.n_samples_cbo = *o.samples_cbo;
  if (o.samples_y) cfg.n_samples_y = *o.samples_y;
  if (o.seed) cfg.seed = *o.seed;

  if (o.dt || o.t_final) {
    const double dt = o.dt.value_or(cfg.cbo.dt);
    const double horizon = o.t_final.value_or(cfg.cbo.horizon());
    const CboParams grid = CboParams::with_horizon(horizon, dt);
    cfg.cbo.dt = grid.dt;
    cfg.cbo.n_it = grid.n_it;
  }
  if (o.lambda) cfg.cbo.lambda = *o.lambda;
  if (o.sigma) cfg.cbo.sigma = *o.sigma;
  if (o.alpha) cfg.cbo.alpha = *o.alpha;
  if (!o.diffusion.empty())
    cfg.cbo.diffusion = o.diffusion == "aniso" ? DiffusionKind::Anisotropic : DiffusionKind::Isotropic;
  if (o.batch_size) cfg.cbo.batch_size = *o.batch_size;
  if (o.trunc_half_width) cfg.trunc_half_width = *o.trunc_half_width;
  if (o.init_lo) cfg.init.lo = *o.init_lo;
  if (o.init_hi) cfg.init.hi = *o.init_hi;
  if (!o.thresholds.empty()) cfg.thresholds = o.thresholds;
  if (o.record_stride) cfg.record_stride = *o.record_stride;
  if (!o.coupling.empty()) cfg.coupling = o.coupling == "quantile" ? Coupling::Quantile : Coupling::Subsample;
  cfg.threads = o.threads;
  cfg.output_path = o.out;
  return cfg;
}

stocbo::ExperimentReport run(stocbo::ExperimentKind kind, const stocbo::ExperimentConfig& cfg) {
  using stocbo::ExperimentKind;
  switch (kind) {
    case ExperimentKind::Test1Saa:
      return stocbo::test1_saa_rate(cfg);
    case ExperimentKind::Test1MeanField:
      return stocbo::test1_meanfield_rate(cfg);
    case ExperimentKind::Test2:
      return stocbo::test2_joint_rate(cfg);
    case ExperimentKind::Test3:
      return stocbo::test3_dimension_sweep(cfg);
    case ExperimentKind::Test4:
      return stocbo::test4_success_rates(cfg);
    case ExperimentKind::SingleRun:
      return stocbo::single_run(cfg);
  }
  return {};
}

void print_summary(const stocbo::ExperimentReport& report) {
  for (const auto& f : report.fits)
    std::cerr << "fit " << f.label << ": slope " << f.fit.slope << ", intercept " << f.fit.intercept << '\n';
  for (const auto& c : report.success)
    std::cerr << "success " << c.objective << ' ' << c.pipeline << " N=" << c.n << " thr=" << c.thr << ": "
              << c.rate << '\n';
  if (report.ordering_violations > 0)
    std::cerr << "W1 > W2 in " << report.ordering_violations << " of " << report.cells << " cells\n";
  if (!report.final_consensus.empty()) {
    std::cerr << "final consensus:";
    for (double v : report.final_consensus) std::cerr << ' ' << v;
    std::cerr << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consensus-based optimization for stochastic problems: replication experiments"};
  app.set_config("--config", "", "Read options from a key=value file");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  Options o;
  std::string objective_help = "Catalog objective:";
  for (const auto& id : stocbo::catalog_ids()) objective_help += " " + id;
  app.add_option("--objective", o.objective, objective_help)
      ->check(CLI::IsMember(stocbo::catalog_ids()));
  app.add_option("--pipeline", o.pipeline, "Approximation of E[F(x,Y)] for `run`")
      ->check(CLI::IsMember({"saa", "quadrature", "exact"}));
  app.add_option("--n", o.n, "Particle counts (comma list)")->delimiter(',');
  app.add_option("--m", o.m, "SAA sample sizes M (comma list)")->delimiter(',');
  app.add_option("--q", o.q, "Quadrature nodes per axis Q (comma list)")->delimiter(',');
  app.add_option("--n-ref", o.n_ref, "Particles in the mean-field reference run");
  app.add_option("--samples-cbo", o.samples_cbo, "CBO realizations per cell");
  app.add_option("--samples-y", o.samples_y, "Y-sample realizations");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--dt", o.dt, "Time step");
  app.add_option("--t-final", o.t_final, "Horizon T (a multiple of dt)");
  app.add_option("--lambda", o.lambda, "Drift rate");
  app.add_option("--sigma", o.sigma, "Diffusion strength");
  app.add_option("--alpha", o.alpha, "Consensus weight parameter");
  app.add_option("--diffusion", o.diffusion, "Diffusion kind")->check(CLI::IsMember({"iso", "aniso"}));
  app.add_option("--batch-size", o.batch_size, "Random mini-batch size for the consensus point");
  app.add_option("--trunc-half-width", o.trunc_half_width, "Half-width of the truncated normal quadrature box");
  app.add_option("--init-lo", o.init_lo, "Lower corner of the initial uniform box");
  app.add_option("--init-hi", o.init_hi, "Upper corner of the initial uniform box");
  app.add_option("--thresholds", o.thresholds, "Success-ball radii (comma list)")->delimiter(',');
  app.add_option("--record-stride", o.record_stride, "Report every k-th time node besides the final one");
  app.add_option("--coupling", o.coupling, "Coupling of unequal-size ensembles")
      ->check(CLI::IsMember({"subsample", "quantile"}));
  app.add_flag("--paper-scale", o.paper_scale, "Use the original replication counts and grids");
  app.add_option("--out", o.out, "CSV output path (default: standard output)");
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)");

  const std::vector<std::pair<std::string, std::pair<stocbo::ExperimentKind, std::string>>> commands{
      {"test1-saa", {stocbo::ExperimentKind::Test1Saa, "SAA error rate in M"}},
      {"test1-mf", {stocbo::ExperimentKind::Test1MeanField, "Mean-field error rate in N at fixed M"}},
      {"test2", {stocbo::ExperimentKind::Test2, "Joint-limit rate of the quadrature pipeline"}},
      {"test3", {stocbo::ExperimentKind::Test3, "Joint-limit rate for random dimensions k = 1, 2, 3"}},
      {"test4", {stocbo::ExperimentKind::Test4, "Success rates of both pipelines"}},
      {"run", {stocbo::ExperimentKind::SingleRun, "A single CBO run"}},
  };
  std::optional<stocbo::ExperimentKind> chosen;
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.second);
    sub->fallthrough();
    const auto kind = entry.first;
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const stocbo::ExperimentConfig cfg = build_config(*chosen, o);
    const stocbo::ExperimentReport report = run(*chosen, cfg);
    if (cfg.output_path.empty()) {
      stocbo::write_csv(report, std::cout);
    } else {
      stocbo::emit_csv(report, cfg.output_path);
    }
    print_summary(report);
  } catch (const stocbo::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const stocbo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
