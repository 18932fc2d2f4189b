#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mps {

// N x J matrix of binary responses with missing cells.
struct ResponseMatrix {
  static constexpr std::int8_t kMissing = -1;

  int n_units = 0;
  int n_items = 0;
  std::vector<std::string> unit_ids;
  std::vector<std::string> item_ids;
  std::vector<std::int8_t> cells;  // row-major, values in {0, 1, kMissing}

  std::int8_t cell(int i, int j) const {
    return cells[static_cast<std::size_t>(i) * n_items + j];
  }
  bool observed(int i, int j) const { return cell(i, j) != kMissing; }
  long long observed_count() const;

  // Throws std::invalid_argument on duplicate ids, bad cell values, or
  // units with no observed responses (those are rejected at load).
  void validate() const;
};

// Builds a matrix with generated ids u1..uN / i1..iJ.
ResponseMatrix make_response_matrix(int n_units, int n_items,
                                    std::vector<std::int8_t> cells);

struct MpsConfig {
  int dim = 1;         // D
  int truncation = 10; // K, stick-breaking truncation level
  Eigen::MatrixXd lambda;  // D x D prior precision of theta; must be identity
  Eigen::MatrixXd omega;   // (D+1) x (D+1) prior precision of (beta, gamma)
  std::optional<double> alpha_fixed;  // set => alpha held fixed, no hyper-prior
  double alpha_a0 = 1.0;  // Gamma(a0, b0) hyper-prior on alpha (rate b0)
  double alpha_b0 = 1.0;
  int n_iter = 1000;
  int burn_in = 500;
  std::uint64_t seed = 1;
  // Per-unit fixed memberships: empty, or size n_units with -1 for free
  // units and a 0-based cluster index for pinned ones.
  std::vector<int> constraints;

  static MpsConfig defaults(int dim, int truncation);

  double alpha_init() const {
    return alpha_fixed ? *alpha_fixed : alpha_a0 / alpha_b0;
  }
  bool constrained(int i) const {
    return !constraints.empty() && constraints[static_cast<std::size_t>(i)] >= 0;
  }
  void validate(int n_units) const;
};

// One full Gibbs state.
struct MpsState {
  int n_units = 0;
  int n_items = 0;
  int dim = 1;
  int truncation = 2;
  std::vector<double> theta;  // N*D
  std::vector<double> beta;   // K*J*D
  std::vector<double> gamma;  // K*J
  std::vector<int> assign;    // N, 0-based cluster per unit
  std::vector<double> pi;     // K-1 stick fractions, each in (0,1)
  double alpha = 1.0;
  std::vector<double> ystar;  // N*J; meaningful at observed cells only
  double log_post = -std::numeric_limits<double>::infinity();

  double theta_at(int i, int d) const {
    return theta[static_cast<std::size_t>(i) * dim + d];
  }
  double& theta_at(int i, int d) {
    return theta[static_cast<std::size_t>(i) * dim + d];
  }
  double beta_at(int k, int j, int d) const {
    return beta[(static_cast<std::size_t>(k) * n_items + j) * dim + d];
  }
  double& beta_at(int k, int j, int d) {
    return beta[(static_cast<std::size_t>(k) * n_items + j) * dim + d];
  }
  double gamma_at(int k, int j) const {
    return gamma[static_cast<std::size_t>(k) * n_items + j];
  }
  double& gamma_at(int k, int j) {
    return gamma[static_cast<std::size_t>(k) * n_items + j];
  }
  double ystar_at(int i, int j) const {
    return ystar[static_cast<std::size_t>(i) * n_items + j];
  }
  double& ystar_at(int i, int j) {
    return ystar[static_cast<std::size_t>(i) * n_items + j];
  }
  // Linear predictor beta_kj' theta_i - gamma_kj.
  double predictor(int k, int i, int j) const {
    double m = 0.0;
    for (int d = 0; d < dim; ++d) m += beta_at(k, j, d) * theta_at(i, d);
    return m - gamma_at(k, j);
  }

  std::vector<int> occupancy() const;
  int occupied_count() const;

  static MpsState zeros(int n_units, int n_items, int dim, int truncation);

  // Dimension, range, stick, sign-consistency and constraint checks.
  void validate(const ResponseMatrix& y, const MpsConfig& cfg) const;
};

// The retained highest-log-posterior state plus fit statistics.
struct MapEstimate {
  MpsState state;
  double log_lik = 0.0;
  double bic = 0.0;
  double aic = 0.0;
  std::vector<int> occupancy;
  long long n_params = 0;
  long long n_obs = 0;
  int iteration = -1;
};

}  // namespace mps
