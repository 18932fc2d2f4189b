#pragma once

#include <span>
#include <vector>

#include "mps/types.hpp"

namespace mps {

// Bernoulli-probit response probability Phi(beta' theta - gamma).
double irf_prob(std::span<const double> beta, std::span<const double> theta,
                double gamma);
double irf_prob(double beta, double theta, double gamma);

// Stick-breaking weights: p_k = pi_k * prod_{l<k} (1 - pi_l); the last
// cluster takes the leftover stick. Output has pi.size() + 1 entries.
std::vector<double> stick_to_probs(std::span<const double> pi);

// Sum of y log Phi + (1-y) log(1-Phi) over observed cells, with Phi clamped
// to [1e-300, 1-1e-16] before the log. Deterministic for any worker count.
double log_likelihood(const ResponseMatrix& y, const MpsState& s, int workers = 1);

// Log prior density of (theta, items, assignments, sticks, alpha).
// The augmented latents are intentionally not part of the score.
double log_prior_density(const MpsState& s, const MpsConfig& cfg);

double log_joint_posterior(const ResponseMatrix& y, const MpsState& s,
                           const MpsConfig& cfg, int workers = 1);

double bic_value(double log_lik, long long n_params, long long n_obs);
double aic_value(double log_lik, long long n_params);

// N*D + (D+1)*J*K, the truncation-level parameter count.
long long parameter_count(int n_units, int n_items, int dim, int n_clusters);

// Fit statistics for a retained state. With occupied_truncation the
// parameter count uses the number of occupied clusters instead of K.
MapEstimate make_map_estimate(const ResponseMatrix& y, const MpsState& s,
                              const MpsConfig& cfg,
                              bool occupied_truncation = false, int workers = 1);

}  // namespace mps
