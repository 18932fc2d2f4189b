#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mps/types.hpp"

namespace mps {

struct InitSpec {
  enum class Mode { kKMeans, kFixedPartition };
  Mode mode = Mode::kKMeans;
  std::vector<int> fixed_partition;  // size N, 0-based, when mode is kFixedPartition
  int kmeans_k = 0;                  // 0 means use the truncation level
  int probit_max_iter = 100;
  double probit_ridge = 1e-4;
};

// Lloyd's algorithm with k-means++ seeding on rows of the response matrix;
// missing cells are imputed to the item mean for distances only.
std::vector<int> init_kmeans(const ResponseMatrix& y, int k, std::uint64_t seed);

// Per-cluster principal component scores (top D right singular vectors of
// the column-centered, mean-imputed submatrix), standardized to unit
// variance. Degenerate clusters or dimensions fall back to prior draws.
std::vector<double> init_theta_pca(const ResponseMatrix& y,
                                   std::span<const int> partition, int dim,
                                   std::uint64_t seed);

// Ridge-penalized probit regression of each item's observed responses on
// [theta, -1] within each cluster, via Fisher-scoring Newton steps. Items
// with constant responses or non-converged fits fall back to beta = 0,
// gamma = -Phi^-1(clamped mean response); unobserved pairs get zeros.
void init_items_probit(const ResponseMatrix& y, std::span<const double> theta0,
                       std::span<const int> partition, int n_clusters, int dim,
                       double ridge, int max_iter, std::vector<double>& beta_out,
                       std::vector<double>& gamma_out);

// Composes the starting state: partition (k-means or fixed), PCA ideal
// points, probit item parameters; prior draws for clusters the partition
// never uses; moment-matched sticks; truncated-mean latents.
MpsState build_initial_state(const ResponseMatrix& y, const MpsConfig& cfg,
                             const InitSpec& spec);

}  // namespace mps
