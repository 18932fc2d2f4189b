#include "mps/model.hpp"

#include <cmath>
#include <stdexcept>

#include "mps/normal.hpp"
#include "mps/util.hpp"

namespace mps {

namespace {

constexpr double kProbFloor = 1e-300;
constexpr double kProbCeil = 1.0 - 1e-16;

double clamped_log_cdf(double x) {
  double p = norm_cdf(x);
  if (p < kProbFloor) p = kProbFloor;
  if (p > kProbCeil) p = kProbCeil;
  return std::log(p);
}

}  // namespace

double irf_prob(std::span<const double> beta, std::span<const double> theta,
                double gamma) {
  if (beta.size() != theta.size()) {
    throw std::invalid_argument("irf_prob: beta/theta dimension mismatch");
  }
  double m = -gamma;
  for (std::size_t d = 0; d < beta.size(); ++d) m += beta[d] * theta[d];
  if (!std::isfinite(m)) throw std::invalid_argument("irf_prob: non-finite input");
  return norm_cdf(m);
}

double irf_prob(double beta, double theta, double gamma) {
  const double m = beta * theta - gamma;
  if (!std::isfinite(m)) throw std::invalid_argument("irf_prob: non-finite input");
  return norm_cdf(m);
}

std::vector<double> stick_to_probs(std::span<const double> pi) {
  std::vector<double> probs(pi.size() + 1);
  double remaining = 1.0;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    if (!(pi[k] > 0.0 && pi[k] < 1.0)) {
      throw std::invalid_argument("stick fraction outside (0,1)");
    }
    probs[k] = pi[k] * remaining;
    remaining *= 1.0 - pi[k];
  }
  probs.back() = remaining;
  return probs;
}

double log_likelihood(const ResponseMatrix& y, const MpsState& s, int workers) {
  if (s.n_units != y.n_units || s.n_items != y.n_items) {
    throw std::invalid_argument("log_likelihood: dimension mismatch");
  }
  std::vector<double> partial(static_cast<std::size_t>(y.n_units), 0.0);
  parallel_for(y.n_units, workers, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const int k = s.assign[i];
      double acc = 0.0;
      for (int j = 0; j < y.n_items; ++j) {
        const auto c = y.cell(i, j);
        if (c == ResponseMatrix::kMissing) continue;
        const double m = s.predictor(k, i, j);
        acc += clamped_log_cdf(c == 1 ? m : -m);
      }
      partial[static_cast<std::size_t>(i)] = acc;
    }
  });
  NeumaierSum total;
  for (const double v : partial) total.add(v);
  return total.value();
}

double log_prior_density(const MpsState& s, const MpsConfig& cfg) {
  const int dim = s.dim;
  const int K = s.truncation;
  NeumaierSum total;

  // theta_i ~ N(0, Lambda^-1); Lambda is the identity.
  const double theta_const = -0.5 * dim * kLogTwoPi;
  for (int i = 0; i < s.n_units; ++i) {
    double quad = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double v = s.theta_at(i, d);
      quad += v * v;
    }
    total.add(theta_const - 0.5 * quad);
  }

  // (beta_kj, gamma_kj) ~ N(0, Omega^-1) for every cluster-item pair.
  Eigen::LLT<Eigen::MatrixXd> llt(cfg.omega);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("omega must be positive definite");
  }
  double logdet_omega = 0.0;
  for (int d = 0; d < dim + 1; ++d) {
    logdet_omega += 2.0 * std::log(llt.matrixL()(d, d));
  }
  const double item_const = -0.5 * (dim + 1) * kLogTwoPi + 0.5 * logdet_omega;
  Eigen::VectorXd v(dim + 1);
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < s.n_items; ++j) {
      for (int d = 0; d < dim; ++d) v(d) = s.beta_at(k, j, d);
      v(dim) = s.gamma_at(k, j);
      total.add(item_const - 0.5 * v.dot(cfg.omega * v));
    }
  }

  // Categorical assignment mass under the current stick weights.
  const auto probs = stick_to_probs(s.pi);
  for (int i = 0; i < s.n_units; ++i) {
    total.add(std::log(probs[static_cast<std::size_t>(s.assign[i])]));
  }

  // pi_k ~ Beta(1, alpha).
  for (const double p : s.pi) {
    total.add(std::log(s.alpha) + (s.alpha - 1.0) * std::log1p(-p));
  }

  // alpha ~ Gamma(a0, b0), rate parameterization; omitted when fixed.
  if (!cfg.alpha_fixed) {
    total.add(cfg.alpha_a0 * std::log(cfg.alpha_b0) - std::lgamma(cfg.alpha_a0) +
              (cfg.alpha_a0 - 1.0) * std::log(s.alpha) - cfg.alpha_b0 * s.alpha);
  }
  return total.value();
}

double log_joint_posterior(const ResponseMatrix& y, const MpsState& s,
                           const MpsConfig& cfg, int workers) {
  return log_likelihood(y, s, workers) + log_prior_density(s, cfg);
}

double bic_value(double log_lik, long long n_params, long long n_obs) {
  if (n_params == 0) return -2.0 * log_lik;
  if (n_obs <= 0) throw std::invalid_argument("bic_value: n_obs must be positive");
  return -2.0 * log_lik +
         static_cast<double>(n_params) * std::log(static_cast<double>(n_obs));
}

double aic_value(double log_lik, long long n_params) {
  return 2.0 * static_cast<double>(n_params) - 2.0 * log_lik;
}

long long parameter_count(int n_units, int n_items, int dim, int n_clusters) {
  return static_cast<long long>(n_units) * dim +
         static_cast<long long>(dim + 1) * n_items * n_clusters;
}

MapEstimate make_map_estimate(const ResponseMatrix& y, const MpsState& s,
                              const MpsConfig& cfg, bool occupied_truncation,
                              int workers) {
  MapEstimate est;
  est.state = s;
  est.occupancy = s.occupancy();
  const int k_eff = occupied_truncation ? s.occupied_count() : s.truncation;
  est.n_params = parameter_count(y.n_units, y.n_items, s.dim, k_eff);
  est.n_obs = y.observed_count();
  est.log_lik = log_likelihood(y, s, workers);
  est.bic = bic_value(est.log_lik, est.n_params, est.n_obs);
  est.aic = aic_value(est.log_lik, est.n_params);
  return est;
}

}  // namespace mps
