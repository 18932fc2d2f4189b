#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mps/cli.hpp"

int main(int argc, char** argv) {
  // Config file first; flags parsed afterwards override its values.
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) {
      config_path = argv[i + 1];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    }
  }
  mps::RunConfig rc;
  if (!config_path.empty()) {
    try {
      rc = mps::RunConfig::from_file(config_path);
    } catch (const std::exception& e) {
      std::cerr << "config: " << e.what() << "\n";
      return 1;
    }
  }

  CLI::App app{"Dirichlet-process mixture of probit IRT models (MPS)"};
  app.require_subcommand(1);
  std::string config_sink;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic data set");
  auto* fit = app.add_subcommand("fit", "Run the Gibbs sampler and keep the MAP state");
  auto* analyze =
      app.add_subcommand("analyze", "Post-fit graph, gap, communities, regression");
  auto* report = app.add_subcommand("report", "Collate run artifacts into report.md");

  for (auto* cmd : {sim, fit, analyze, report}) {
    cmd->add_option("--config", config_sink, "key=value config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", rc.out, "Output directory");
    cmd->add_option("--seed", rc.seed, "RNG seed");
    cmd->add_option("--workers", rc.workers, "Worker thread count")
        ->envname("MPS_WORKERS");
  }

  sim->add_option("--units", rc.sim_units, "Number of units N");
  sim->add_option("--items", rc.sim_items, "Number of items J");
  sim->add_option("--dim", rc.dim, "Latent dimension D");
  sim->add_option("--probs", rc.sim_probs, "Comma-separated cluster probabilities");
  sim->add_option("--missing-rate", rc.missing_rate, "Uniform missingness rate");

  for (auto* cmd : {fit, analyze}) {
    cmd->add_option("--responses", rc.responses, "responses.csv path");
  }
  fit->add_option("--dim", rc.dim, "Latent dimension D");
  fit->add_option("--truncation", rc.truncation, "Stick-breaking truncation K");
  fit->add_option("--iters", rc.iters, "MCMC iterations");
  fit->add_option("--burnin", rc.burnin, "Burn-in iterations (default iters/2)");
  fit->add_option("--constraints", rc.constraints, "CSV of pinned unit memberships");
  fit->add_option("--alpha", rc.alpha_fixed, "Fix the DP concentration")
      ->each([&rc](const std::string&) { rc.alpha_is_fixed = true; });
  fit->add_option("--alpha-a0", rc.alpha_a0, "Gamma hyper-prior shape");
  fit->add_option("--alpha-b0", rc.alpha_b0, "Gamma hyper-prior rate");
  fit->add_option("--init", rc.init_mode, "kmeans | fixed-partition");
  fit->add_option("--init-partition", rc.init_partition,
                  "CSV of starting memberships for fixed-partition init");
  fit->add_option("--kmeans-k", rc.kmeans_k, "k-means cluster count (default K)");
  fit->add_option("--thin-assign", rc.thin_assign, "Assignment snapshot interval");

  analyze->add_option("--truth", rc.truth, "truth.json for cross-tabulation");
  analyze->add_option("--covariates", rc.covariates, "covariates.csv for regression");
  analyze->add_option("--min-size", rc.min_size, "Minimum occupancy for graph nodes");
  analyze->add_option("--gap-kmax", rc.gap_kmax, "Largest community count to score");
  analyze->add_option("--gap-nnull", rc.gap_nnull, "Null replicates for the gap curve");
  analyze->add_option("--reference-cluster", rc.reference_cluster,
                      "1-based cluster whose community defines membership");
  analyze->add_option("--reg-iters", rc.reg_iters, "Regression MCMC iterations");
  analyze->add_option("--reg-burnin", rc.reg_burnin, "Regression burn-in");
  analyze->add_flag_callback("--no-graph", [&rc] { rc.graph = false; },
                             "Skip the correlation graph");
  analyze->add_flag_callback("--no-gap", [&rc] { rc.gap = false; },
                             "Skip the gap statistic");
  analyze->add_flag_callback("--no-communities", [&rc] { rc.communities = false; },
                             "Skip community detection");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) return mps::cmd_simulate(rc);
  if (fit->parsed()) return mps::cmd_fit(rc);
  if (analyze->parsed()) return mps::cmd_analyze(rc);
  if (report->parsed()) return mps::cmd_report(rc);
  return 1;
}
