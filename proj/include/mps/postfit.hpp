#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mps/types.hpp"

namespace mps {

// Weighted graph over occupied sub-clusters; weights are |Pearson r|
// between per-cluster item discrimination vectors (D = 1 only).
struct ClusterGraph {
  std::vector<int> nodes;      // 0-based cluster ids with occupancy >= min_size
  Eigen::MatrixXd weights;     // |r|, symmetric, zero diagonal
  Eigen::MatrixXd raw_corr;    // signed r
  Eigen::MatrixXd fisher_se;   // (1 - r^2) / sqrt(J - 3)
  int n_items = 0;
};

struct GapCurve {
  std::vector<int> k_values;
  std::vector<double> gap;
  std::vector<double> se;
  std::vector<double> log_dbar;
  std::vector<double> null_mean;
  int k_star = 1;
};

struct CrossTab {
  std::vector<int> est_labels;
  std::vector<int> true_labels;
  std::vector<std::vector<long long>> table;  // est x true counts
  double purity = 0.0;
};

// MAP fit statistics; occupied_truncation switches the parameter count
// from the truncation level K to the number of occupied clusters.
MapEstimate fit_statistics(const ResponseMatrix& y, const MpsState& map_state,
                           const MpsConfig& cfg, bool occupied_truncation = false);

ClusterGraph discrimination_correlations(const MpsState& map_state,
                                         int min_size = 1);

// Deterministic PAM (greedy build + swap) on a dissimilarity matrix.
std::vector<int> k_medoids(const Eigen::MatrixXd& diss, int k);

// Gap(k) = E_H0[log Dbar_k] - log Dbar_k on dissimilarity 1 - weight,
// with the null expectation estimated from n_null graphs whose edge
// weights are iid Uniform[0,1]. k_star maximizes the curve.
GapCurve gap_statistic(const ClusterGraph& graph, int k_max, int n_null,
                       std::uint64_t seed, int workers = 1);

// Greedy agglomerative modularity maximization; returns a community id
// per graph node (ids are the smallest member node index).
std::vector<int> detect_communities(const ClusterGraph& graph);

double modularity(const Eigen::MatrixXd& weights, std::span<const int> community);

CrossTab crosstab_clusters(std::span<const int> est, std::span<const int> truth);

// Negates beta and member thetas of clusters whose discrimination vector
// correlates negatively with the reference cluster (D = 1). Leaves the
// likelihood unchanged.
MpsState align_signs(const MpsState& map_state, int reference_cluster);

}  // namespace mps
