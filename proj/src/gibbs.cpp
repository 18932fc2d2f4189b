#include "mps/gibbs.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mps/model.hpp"
#include "mps/normal.hpp"
#include "mps/rng.hpp"
#include "mps/util.hpp"

namespace mps {

using rng::Stream;
using rng::SubStream;

std::vector<double> sample_stick_weights(std::span<const int> counts, double alpha,
                                         const RngContext& rng) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("sample_stick_weights: alpha must be positive");
  }
  const int K = static_cast<int>(counts.size());
  std::vector<double> pi(static_cast<std::size_t>(K > 0 ? K - 1 : 0));
  long long tail = 0;
  for (int k = 1; k < K; ++k) tail += counts[static_cast<std::size_t>(k)];
  for (int k = 0; k + 1 < K; ++k) {
    SubStream st(rng.seed, Stream::kStickWeights, rng.iteration,
                 static_cast<rng::u64>(k));
    const double a = 1.0 + counts[static_cast<std::size_t>(k)];
    const double b = alpha + static_cast<double>(tail);
    // Keep the draw strictly inside (0,1) so downstream logs stay finite.
    pi[static_cast<std::size_t>(k)] =
        std::clamp(st.beta(a, b), 1e-14, 1.0 - 1e-14);
    tail -= counts[static_cast<std::size_t>(k + 1)];
  }
  return pi;
}

std::vector<int> sample_assignments(const ResponseMatrix& y, const MpsState& s,
                                    std::span<const int> constraints,
                                    const RngContext& rng, int workers) {
  const int n = y.n_units;
  const int p = y.n_items;
  const int K = s.truncation;
  const int dim = s.dim;
  const auto probs = stick_to_probs(s.pi);
  std::vector<double> log_p(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    log_p[static_cast<std::size_t>(k)] = std::log(probs[static_cast<std::size_t>(k)]);
  }

  std::vector<int> out(static_cast<std::size_t>(n));
  parallel_for(n, workers, [&](int begin, int end) {
    std::vector<double> logits(static_cast<std::size_t>(K));
    std::vector<double> th(static_cast<std::size_t>(dim));
    for (int i = begin; i < end; ++i) {
      if (!constraints.empty() && constraints[static_cast<std::size_t>(i)] >= 0) {
        out[static_cast<std::size_t>(i)] = constraints[static_cast<std::size_t>(i)];
        continue;
      }
      for (int d = 0; d < dim; ++d) th[static_cast<std::size_t>(d)] = s.theta_at(i, d);
      double best = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) {
        double ss = 0.0;
        const double* beta_k = s.beta.data() + static_cast<std::size_t>(k) * p * dim;
        const double* gamma_k = s.gamma.data() + static_cast<std::size_t>(k) * p;
        const double* ys = s.ystar.data() + static_cast<std::size_t>(i) * p;
        for (int j = 0; j < p; ++j) {
          if (!y.observed(i, j)) continue;
          double m = -gamma_k[j];
          for (int d = 0; d < dim; ++d) {
            m += beta_k[static_cast<std::size_t>(j) * dim + d] *
                 th[static_cast<std::size_t>(d)];
          }
          const double r = ys[j] - m;
          ss += r * r;
        }
        const double v = log_p[static_cast<std::size_t>(k)] - 0.5 * ss;
        logits[static_cast<std::size_t>(k)] = v;
        if (v > best) best = v;
      }
      if (!std::isfinite(best)) {
        throw std::runtime_error("assignment probabilities degenerate for unit " +
                                 y.unit_ids[static_cast<std::size_t>(i)]);
      }
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        logits[static_cast<std::size_t>(k)] =
            std::exp(logits[static_cast<std::size_t>(k)] - best);
        total += logits[static_cast<std::size_t>(k)];
      }
      SubStream st(rng.seed, Stream::kAssignments, rng.iteration,
                   static_cast<rng::u64>(i));
      const double target = st.uniform() * total;
      double cum = 0.0;
      int pick = K - 1;
      for (int k = 0; k < K; ++k) {
        cum += logits[static_cast<std::size_t>(k)];
        if (target < cum) {
          pick = k;
          break;
        }
      }
      out[static_cast<std::size_t>(i)] = pick;
    }
  });
  return out;
}

void sample_latent_responses(const ResponseMatrix& y, MpsState& s,
                             const RngContext& rng, int workers) {
  const int p = y.n_items;
  parallel_for(y.n_units, workers, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const int k = s.assign[static_cast<std::size_t>(i)];
      for (int j = 0; j < p; ++j) {
        if (!y.observed(i, j)) continue;
        const double m = s.predictor(k, i, j);
        SubStream st(rng.seed, Stream::kLatents, rng.iteration,
                     static_cast<rng::u64>(i) * p + j);
        double v;
        if (y.cell(i, j) == 1) {
          v = m + st.trunc_std_normal_lower(-m);
          if (v < 0.0) v = 0.0;
        } else {
          v = m - st.trunc_std_normal_lower(m);
          if (v >= 0.0) v = -std::numeric_limits<double>::min();
        }
        s.ystar_at(i, j) = v;
      }
    }
  });
}

void item_conditional(const ResponseMatrix& y, const MpsState& s,
                      const MpsConfig& cfg, int k, int j, Eigen::VectorXd& mu,
                      Eigen::MatrixXd& prec) {
  const int dim = s.dim;
  const int q = dim + 1;
  prec = cfg.omega;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd x(q);
  for (int i = 0; i < y.n_units; ++i) {
    if (s.assign[static_cast<std::size_t>(i)] != k || !y.observed(i, j)) continue;
    for (int d = 0; d < dim; ++d) x(d) = s.theta_at(i, d);
    x(dim) = -1.0;
    prec.noalias() += x * x.transpose();
    b.noalias() += x * s.ystar_at(i, j);
  }
  mu = prec.llt().solve(b);
}

void sample_item_parameters(const ResponseMatrix& y, MpsState& s,
                            const MpsConfig& cfg, const RngContext& rng,
                            int workers) {
  const int n = y.n_units;
  const int p = y.n_items;
  const int K = s.truncation;
  const int dim = s.dim;
  const int q = dim + 1;

  parallel_for(p, workers, [&](int begin, int end) {
    std::vector<Eigen::MatrixXd> prec(static_cast<std::size_t>(K));
    std::vector<Eigen::VectorXd> rhs(static_cast<std::size_t>(K));
    Eigen::VectorXd x(q), z(q);
    for (int j = begin; j < end; ++j) {
      for (int k = 0; k < K; ++k) {
        prec[static_cast<std::size_t>(k)] = cfg.omega;
        rhs[static_cast<std::size_t>(k)] = Eigen::VectorXd::Zero(q);
      }
      for (int i = 0; i < n; ++i) {
        if (!y.observed(i, j)) continue;
        const int k = s.assign[static_cast<std::size_t>(i)];
        for (int d = 0; d < dim; ++d) x(d) = s.theta_at(i, d);
        x(dim) = -1.0;
        prec[static_cast<std::size_t>(k)].noalias() += x * x.transpose();
        rhs[static_cast<std::size_t>(k)].noalias() += x * s.ystar_at(i, j);
      }
      for (int k = 0; k < K; ++k) {
        const Eigen::LLT<Eigen::MatrixXd> llt(prec[static_cast<std::size_t>(k)]);
        if (llt.info() != Eigen::Success) {
          throw std::runtime_error("item update: non-SPD precision at cluster " +
                                   std::to_string(k + 1) + ", item " +
                                   y.item_ids[static_cast<std::size_t>(j)]);
        }
        const Eigen::VectorXd mu = llt.solve(rhs[static_cast<std::size_t>(k)]);
        SubStream st(rng.seed, Stream::kItemParams, rng.iteration,
                     static_cast<rng::u64>(k) * p + j);
        for (int d = 0; d < q; ++d) z(d) = st.normal();
        const Eigen::VectorXd draw =
            mu + llt.matrixU().solve(z);
        for (int d = 0; d < dim; ++d) s.beta_at(k, j, d) = draw(d);
        s.gamma_at(k, j) = draw(dim);
      }
    }
  });
}

void ideal_conditional(const ResponseMatrix& y, const MpsState& s,
                       const MpsConfig& cfg, int i, Eigen::VectorXd& nu,
                       Eigen::MatrixXd& prec) {
  const int dim = s.dim;
  const int k = s.assign[static_cast<std::size_t>(i)];
  prec = cfg.lambda;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd beta(dim);
  for (int j = 0; j < y.n_items; ++j) {
    if (!y.observed(i, j)) continue;
    for (int d = 0; d < dim; ++d) beta(d) = s.beta_at(k, j, d);
    prec.noalias() += beta * beta.transpose();
    b.noalias() += beta * (s.ystar_at(i, j) + s.gamma_at(k, j));
  }
  nu = prec.llt().solve(b);
}

void sample_ideal_points(const ResponseMatrix& y, MpsState& s,
                         const MpsConfig& cfg, const RngContext& rng,
                         int workers) {
  const int p = y.n_items;
  const int dim = s.dim;
  parallel_for(y.n_units, workers, [&](int begin, int end) {
    Eigen::MatrixXd prec(dim, dim);
    Eigen::VectorXd b(dim), beta(dim), z(dim);
    for (int i = begin; i < end; ++i) {
      const int k = s.assign[static_cast<std::size_t>(i)];
      prec = cfg.lambda;
      b.setZero();
      const double* beta_k = s.beta.data() + static_cast<std::size_t>(k) * p * dim;
      const double* gamma_k = s.gamma.data() + static_cast<std::size_t>(k) * p;
      for (int j = 0; j < p; ++j) {
        if (!y.observed(i, j)) continue;
        for (int d = 0; d < dim; ++d) {
          beta(d) = beta_k[static_cast<std::size_t>(j) * dim + d];
        }
        prec.noalias() += beta * beta.transpose();
        b.noalias() += beta * (s.ystar_at(i, j) + gamma_k[j]);
      }
      const Eigen::LLT<Eigen::MatrixXd> llt(prec);
      const Eigen::VectorXd nu = llt.solve(b);
      SubStream st(rng.seed, Stream::kIdealPoints, rng.iteration,
                   static_cast<rng::u64>(i));
      for (int d = 0; d < dim; ++d) z(d) = st.normal();
      const Eigen::VectorXd draw =
          nu + llt.matrixU().solve(z);
      for (int d = 0; d < dim; ++d) s.theta_at(i, d) = draw(d);
    }
  });
}

double sample_alpha(std::span<const double> pi, const MpsConfig& cfg,
                    const RngContext& rng) {
  if (cfg.alpha_fixed) {
    throw std::invalid_argument("sample_alpha: alpha is fixed in the config");
  }
  // Truncation bounds the sum at K-1 stick weights.
  double rate = cfg.alpha_b0;
  for (const double p : pi) rate -= std::log1p(-p);
  if (!(rate > 0.0)) {
    throw std::runtime_error("sample_alpha: nonpositive rate");
  }
  const double shape = cfg.alpha_a0 + static_cast<double>(pi.size());
  SubStream st(rng.seed, Stream::kAlpha, rng.iteration, 0);
  return st.gamma(shape) / rate;
}

ChainTrace run_chain(const ResponseMatrix& y, const MpsConfig& cfg,
                     const MpsState& init, int workers, int thin_assign) {
  cfg.validate(y.n_units);
  init.validate(y, cfg);

  ChainTrace trace;
  trace.thin_assign = thin_assign;
  trace.scalar_trace.reserve(static_cast<std::size_t>(cfg.n_iter));

  MpsState state = init;
  MpsState best_state;
  double best_lp = -std::numeric_limits<double>::infinity();
  double best_ll = 0.0;
  int best_iter = -1;

  for (int iter = 1; iter <= cfg.n_iter; ++iter) {
    const RngContext ctx{cfg.seed, static_cast<std::uint64_t>(iter)};
    try {
      const auto counts = state.occupancy();
      state.pi = sample_stick_weights(counts, state.alpha, ctx);
      state.assign = sample_assignments(y, state, cfg.constraints, ctx, workers);
      sample_latent_responses(y, state, ctx, workers);
      sample_item_parameters(y, state, cfg, ctx, workers);
      sample_ideal_points(y, state, cfg, ctx, workers);
      if (!cfg.alpha_fixed) state.alpha = sample_alpha(state.pi, cfg, ctx);
    } catch (const std::exception& e) {
      throw std::runtime_error("gibbs iteration " + std::to_string(iter) + ": " +
                               e.what());
    }
    const double ll = log_likelihood(y, state, workers);
    const double lp = ll + log_prior_density(state, cfg);
    state.log_post = lp;
    trace.scalar_trace.push_back(
        {iter, lp, ll, state.alpha, state.occupied_count()});
    if (iter > cfg.burn_in && lp > best_lp) {
      best_lp = lp;
      best_ll = ll;
      best_iter = iter;
      best_state = state;
    }
    if (thin_assign > 0 && iter % thin_assign == 0) {
      trace.assign_snapshots.emplace_back(iter, state.assign);
    }
  }

  trace.map.state = std::move(best_state);
  trace.map.log_lik = best_ll;
  trace.map.iteration = best_iter;
  trace.map.occupancy = trace.map.state.occupancy();
  trace.map.n_params =
      parameter_count(y.n_units, y.n_items, cfg.dim, cfg.truncation);
  trace.map.n_obs = y.observed_count();
  trace.map.bic = bic_value(best_ll, trace.map.n_params, trace.map.n_obs);
  trace.map.aic = aic_value(best_ll, trace.map.n_params);
  return trace;
}

}  // namespace mps
