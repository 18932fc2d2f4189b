#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mps/types.hpp"

namespace mps {

// Identifies the draw site: streams are keyed (seed, step, iteration, entity).
struct RngContext {
  std::uint64_t seed = 1;
  std::uint64_t iteration = 0;
};

// Step 1: pi_k ~ Beta(1 + N_k, alpha + sum_{l>k} N_l) for k = 1..K-1.
std::vector<double> sample_stick_weights(std::span<const int> counts, double alpha,
                                         const RngContext& rng);

// Step 2: categorical draw per free unit, proportional to
// p_k * prod_{j observed} N(ystar_ij | beta_kj' theta_i - gamma_kj, 1),
// computed in log space with max subtraction. Constrained units keep their
// pinned cluster.
std::vector<int> sample_assignments(const ResponseMatrix& y, const MpsState& s,
                                    std::span<const int> constraints,
                                    const RngContext& rng, int workers = 1);

// Step 3: ystar at observed cells from the sign-truncated unit normal
// around the linear predictor; missing cells are never touched.
void sample_latent_responses(const ResponseMatrix& y, MpsState& s,
                             const RngContext& rng, int workers = 1);

// Conditional moments of (beta_kj, gamma_kj): precision M = X'X + Omega and
// mean mu = M^-1 X' ystar over cluster members with the cell observed.
void item_conditional(const ResponseMatrix& y, const MpsState& s,
                      const MpsConfig& cfg, int k, int j, Eigen::VectorXd& mu,
                      Eigen::MatrixXd& prec);

// Step 4: draw every (cluster, item) pair; empty pairs draw from the prior.
void sample_item_parameters(const ResponseMatrix& y, MpsState& s,
                            const MpsConfig& cfg, const RngContext& rng,
                            int workers = 1);

// Conditional moments of theta_i: precision B'B + Lambda, mean from
// regressing (ystar_i + gamma_k) on the cluster's discriminations.
void ideal_conditional(const ResponseMatrix& y, const MpsState& s,
                       const MpsConfig& cfg, int i, Eigen::VectorXd& nu,
                       Eigen::MatrixXd& prec);

// Step 5: draw all ideal points.
void sample_ideal_points(const ResponseMatrix& y, MpsState& s,
                         const MpsConfig& cfg, const RngContext& rng,
                         int workers = 1);

// Step 6: alpha ~ Gamma(a0 + K - 1, b0 - sum_k log(1 - pi_k)).
double sample_alpha(std::span<const double> pi, const MpsConfig& cfg,
                    const RngContext& rng);

struct ScalarRecord {
  int iter = 0;
  double log_post = 0.0;
  double log_lik = 0.0;
  double alpha = 0.0;
  int occupied = 0;
};

struct ChainTrace {
  MapEstimate map;
  std::vector<ScalarRecord> scalar_trace;
  int thin_assign = 0;
  std::vector<std::pair<int, std::vector<int>>> assign_snapshots;
};

// Runs the blocked sampler in step order 1..6, records the scalar trace
// every iteration, and retains the highest-log-posterior state seen after
// burn-in. Bit-reproducible for a fixed seed at any worker count.
ChainTrace run_chain(const ResponseMatrix& y, const MpsConfig& cfg,
                     const MpsState& init, int workers = 1, int thin_assign = 0);

}  // namespace mps
