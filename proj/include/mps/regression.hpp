#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mps {

// Design matrix with an intercept column and a binary outcome.
struct CovariateMatrix {
  std::vector<std::string> col_names;
  Eigen::MatrixXd x;       // n x p, first column all ones
  Eigen::VectorXi outcome; // n, values in {0, 1}

  void validate() const;
};

struct ProbitSummary {
  std::vector<std::string> names;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::VectorXd lo90;  // 5th percentile of posterior draws
  Eigen::VectorXd hi90;  // 95th percentile
  int n_draws = 0;
};

// Albert-Chib Gibbs sampler for binary probit under the flat prior:
// z ~ sign-truncated normals around X b, b ~ N((X'X)^-1 X'z, (X'X)^-1).
// A 1e-8 ridge stabilizes the solve only. Bit-identical output for a
// fixed seed at any worker count.
ProbitSummary fit_bayes_probit(const CovariateMatrix& data, int n_iter = 10000,
                               int burn_in = 1000, std::uint64_t seed = 1,
                               int workers = 1);

}  // namespace mps
