#pragma once

#include <cstdint>
#include <string>

namespace mps {

// Flat key=value run configuration; CLI flags override file values.
struct RunConfig {
  // paths
  std::string responses;
  std::string constraints;
  std::string covariates;
  std::string truth;
  std::string out = ".";
  std::string init_partition;
  // sampler
  int dim = 1;
  int truncation = 10;
  int iters = 1000;
  int burnin = -1;  // -1 = half of iters
  std::uint64_t seed = 1;
  bool alpha_is_fixed = false;
  double alpha_fixed = 1.0;
  double alpha_a0 = 1.0;
  double alpha_b0 = 1.0;
  int workers = 1;
  int thin_assign = 100;
  // initialization
  std::string init_mode = "kmeans";  // kmeans | fixed-partition
  int kmeans_k = 0;
  // post-processing
  bool graph = true;
  bool gap = true;
  bool communities = true;
  int min_size = 1;
  int gap_kmax = 6;
  int gap_nnull = 100;
  int reference_cluster = 1;  // 1-based
  int reg_iters = 10000;
  int reg_burnin = 1000;
  // simulation
  int sim_units = 1000;
  int sim_items = 200;
  std::string sim_probs = "0.5,0.2,0.3";
  double missing_rate = 0.0;

  static RunConfig from_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  int effective_burnin() const { return burnin < 0 ? iters / 2 : burnin; }
};

// Subcommand bodies; return a process exit code and print diagnostics to
// stderr on failure.
int cmd_simulate(const RunConfig& rc);
int cmd_fit(const RunConfig& rc);
int cmd_analyze(const RunConfig& rc);
int cmd_report(const RunConfig& rc);

}  // namespace mps
