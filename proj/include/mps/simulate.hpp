#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mps/types.hpp"

namespace mps {

// Ground truth retained from a synthetic draw, for recovery scoring.
struct SimTruth {
  int n_units = 0;
  int n_items = 0;
  int dim = 1;
  int n_clusters = 1;
  std::vector<int> assign_true;      // N, 0-based
  std::vector<double> theta_true;    // N*D
  std::vector<double> beta_true;     // C*J*D
  std::vector<double> gamma_true;    // C*J
  std::vector<double> cluster_probs; // C
  std::uint64_t seed = 0;
};

// Draws assignments ~ Categorical(cluster_probs), theta/beta/gamma iid
// standard normal, responses ~ Bernoulli(Phi(beta' theta - gamma)).
// Byte-identical output for a fixed seed. missing_rate > 0 blanks cells
// uniformly at random but never leaves a unit with zero observed responses.
std::pair<ResponseMatrix, SimTruth> simulate_dataset(
    int n_units, int n_items, int dim, std::span<const double> cluster_probs,
    std::uint64_t seed, double missing_rate = 0.0);

}  // namespace mps
