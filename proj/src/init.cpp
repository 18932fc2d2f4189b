#include "mps/init.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mps/model.hpp"
#include "mps/normal.hpp"
#include "mps/rng.hpp"

namespace mps {

using rng::Stream;
using rng::SubStream;

namespace {

// Rows of the response matrix with missing cells imputed to item means.
Eigen::MatrixXd imputed_rows(const ResponseMatrix& y) {
  Eigen::MatrixXd x(y.n_units, y.n_items);
  for (int j = 0; j < y.n_items; ++j) {
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < y.n_units; ++i) {
      if (y.observed(i, j)) {
        sum += y.cell(i, j);
        ++n;
      }
    }
    const double mean = n > 0 ? sum / n : 0.5;
    for (int i = 0; i < y.n_units; ++i) {
      x(i, j) = y.observed(i, j) ? static_cast<double>(y.cell(i, j)) : mean;
    }
  }
  return x;
}

}  // namespace

std::vector<int> init_kmeans(const ResponseMatrix& y, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("init_kmeans: k must be >= 1");
  if (k > y.n_units) throw std::invalid_argument("init_kmeans: k exceeds unit count");
  const int n = y.n_units;
  const int p = y.n_items;
  const Eigen::MatrixXd x = imputed_rows(y);

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  if (k == 1) return assign;

  // k-means++ seeding.
  SubStream st(seed, Stream::kKMeans, 0, 0);
  Eigen::MatrixXd centers(k, p);
  centers.row(0) = x.row(static_cast<int>(st.uniform_int(static_cast<rng::u64>(n))));
  Eigen::VectorXd best_d2 =
      (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = best_d2.sum();
    int pick = 0;
    if (total > 0.0) {
      const double target = st.uniform() * total;
      double cum = 0.0;
      for (int i = 0; i < n; ++i) {
        cum += best_d2(i);
        if (target < cum) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = static_cast<int>(st.uniform_int(static_cast<rng::u64>(n)));
    }
    centers.row(c) = x.row(pick);
    best_d2 = best_d2.cwiseMin(
        (x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  // Lloyd iterations.
  for (int round = 0; round < 100; ++round) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = assign[static_cast<std::size_t>(i)];
      double best_v = (x.row(i) - centers.row(best)).squaredNorm();
      for (int c = 0; c < k; ++c) {
        const double v = (x.row(i) - centers.row(c)).squaredNorm();
        if (v < best_v) {
          best_v = v;
          best = c;
        }
      }
      if (best != assign[static_cast<std::size_t>(i)]) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed && round > 0) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, p);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
      counts(assign[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0.0) centers.row(c) = sums.row(c) / counts(c);
      // Empty clusters keep their previous center.
    }
    if (!changed) break;
  }
  return assign;
}

std::vector<double> init_theta_pca(const ResponseMatrix& y,
                                   std::span<const int> partition, int dim,
                                   std::uint64_t seed) {
  if (partition.size() != static_cast<std::size_t>(y.n_units)) {
    throw std::invalid_argument("init_theta_pca: partition size mismatch");
  }
  const int n = y.n_units;
  const int p = y.n_items;
  std::vector<double> theta(static_cast<std::size_t>(n) * dim, 0.0);

  int max_label = 0;
  for (const int c : partition) max_label = std::max(max_label, c);

  auto prior_fill = [&](int unit, int d) {
    SubStream st(seed, Stream::kPcaFallback, static_cast<rng::u64>(d),
                 static_cast<rng::u64>(unit));
    theta[static_cast<std::size_t>(unit) * dim + d] = st.normal();
  };

  for (int c = 0; c <= max_label; ++c) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i) {
      if (partition[static_cast<std::size_t>(i)] == c) members.push_back(i);
    }
    if (members.empty()) continue;
    const int m = static_cast<int>(members.size());
    if (m < dim + 1) {
      for (const int i : members)
        for (int d = 0; d < dim; ++d) prior_fill(i, d);
      continue;
    }
    // Column-centered submatrix; missing cells sit at the column mean.
    Eigen::MatrixXd a(m, p);
    for (int j = 0; j < p; ++j) {
      double sum = 0.0;
      int cnt = 0;
      for (int r = 0; r < m; ++r) {
        if (y.observed(members[static_cast<std::size_t>(r)], j)) {
          sum += y.cell(members[static_cast<std::size_t>(r)], j);
          ++cnt;
        }
      }
      const double mean = cnt > 0 ? sum / cnt : 0.0;
      for (int r = 0; r < m; ++r) {
        const int i = members[static_cast<std::size_t>(r)];
        a(r, j) = y.observed(i, j) ? y.cell(i, j) - mean : 0.0;
      }
    }
    const Eigen::MatrixXd gram = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) {
      for (const int i : members)
        for (int d = 0; d < dim; ++d) prior_fill(i, d);
      continue;
    }
    // Eigenvalues come back ascending; take the top dim.
    for (int d = 0; d < dim; ++d) {
      const Eigen::VectorXd v = eig.eigenvectors().col(p - 1 - d);
      Eigen::VectorXd scores = a * v;
      const double mean = scores.mean();
      const double sd =
          std::sqrt((scores.array() - mean).square().sum() / std::max(1, m - 1));
      if (sd < 1e-12) {
        for (const int i : members) prior_fill(i, d);
        continue;
      }
      for (int r = 0; r < m; ++r) {
        theta[static_cast<std::size_t>(members[static_cast<std::size_t>(r)]) * dim +
              d] = (scores(r) - mean) / sd;
      }
    }
  }
  return theta;
}

void init_items_probit(const ResponseMatrix& y, std::span<const double> theta0,
                       std::span<const int> partition, int n_clusters, int dim,
                       double ridge, int max_iter, std::vector<double>& beta_out,
                       std::vector<double>& gamma_out) {
  const int n = y.n_units;
  const int p = y.n_items;
  beta_out.assign(static_cast<std::size_t>(n_clusters) * p * dim, 0.0);
  gamma_out.assign(static_cast<std::size_t>(n_clusters) * p, 0.0);
  for (const double v : theta0) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("init_items_probit: non-finite theta start");
    }
  }

  std::vector<std::vector<int>> members(static_cast<std::size_t>(n_clusters));
  for (int i = 0; i < n; ++i) {
    const int c = partition[static_cast<std::size_t>(i)];
    if (c >= 0 && c < n_clusters) members[static_cast<std::size_t>(c)].push_back(i);
  }

  const int q = dim + 1;
  for (int c = 0; c < n_clusters; ++c) {
    for (int j = 0; j < p; ++j) {
      std::vector<int> rows;
      int ones = 0;
      for (const int i : members[static_cast<std::size_t>(c)]) {
        if (y.observed(i, j)) {
          rows.push_back(i);
          ones += y.cell(i, j);
        }
      }
      if (rows.empty()) continue;  // zeros
      const int nr = static_cast<int>(rows.size());

      auto fallback = [&] {
        const double lo = 1.0 / (nr + 1.0);
        const double hi = nr / (nr + 1.0);
        const double pbar =
            std::clamp(static_cast<double>(ones) / nr, lo, hi);
        gamma_out[static_cast<std::size_t>(c) * p + j] = -norm_quantile(pbar);
      };
      if (ones == 0 || ones == nr) {
        fallback();  // perfectly separated by the intercept
        continue;
      }

      Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
      Eigen::VectorXd xi(q);
      bool converged = false;
      for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd h = ridge * Eigen::MatrixXd::Identity(q, q);
        Eigen::VectorXd g = -ridge * b;
        for (const int i : rows) {
          for (int d = 0; d < dim; ++d) {
            xi(d) = theta0[static_cast<std::size_t>(i) * dim + d];
          }
          xi(dim) = -1.0;
          const double eta = xi.dot(b);
          // score: hazard of the matching tail; weight: Fisher information
          const double lam = y.cell(i, j) == 1 ? norm_hazard(-eta) : -norm_hazard(eta);
          const double w = norm_hazard(-eta) * norm_hazard(eta);
          g += lam * xi;
          h += w * xi * xi.transpose();
        }
        const Eigen::VectorXd step = h.ldlt().solve(g);
        b += step;
        if (!b.allFinite() || b.norm() > 50.0) break;
        if (step.lpNorm<Eigen::Infinity>() < 1e-8) {
          converged = true;
          break;
        }
      }
      if (!converged || !b.allFinite()) {
        fallback();
        continue;
      }
      for (int d = 0; d < dim; ++d) {
        beta_out[(static_cast<std::size_t>(c) * p + j) * dim + d] = b(d);
      }
      gamma_out[static_cast<std::size_t>(c) * p + j] = b(dim);
    }
  }
}

MpsState build_initial_state(const ResponseMatrix& y, const MpsConfig& cfg,
                             const InitSpec& spec) {
  cfg.validate(y.n_units);
  const int n = y.n_units;
  const int K = cfg.truncation;

  std::vector<int> partition;
  if (spec.mode == InitSpec::Mode::kFixedPartition) {
    if (spec.fixed_partition.size() != static_cast<std::size_t>(n)) {
      throw std::invalid_argument("fixed partition must cover all units");
    }
    for (const int c : spec.fixed_partition) {
      if (c < 0 || c >= K) {
        throw std::invalid_argument("fixed partition cluster out of range 1..K");
      }
    }
    partition = spec.fixed_partition;
  } else {
    const int k = spec.kmeans_k > 0 ? spec.kmeans_k : K;
    if (k > K) throw std::invalid_argument("kmeans_k must be <= truncation");
    partition = init_kmeans(y, std::min(k, n), cfg.seed);
  }
  if (!cfg.constraints.empty()) {
    for (int i = 0; i < n; ++i) {
      if (cfg.constrained(i)) partition[static_cast<std::size_t>(i)] = cfg.constraints[i];
    }
  }

  MpsState s = MpsState::zeros(n, y.n_items, cfg.dim, K);
  s.assign = partition;
  s.theta = init_theta_pca(y, partition, cfg.dim, cfg.seed);
  init_items_probit(y, s.theta, partition, K, cfg.dim, spec.probit_ridge,
                    spec.probit_max_iter, s.beta, s.gamma);

  // Clusters the partition never touched start at prior item draws.
  std::vector<bool> used(static_cast<std::size_t>(K), false);
  for (const int c : partition) used[static_cast<std::size_t>(c)] = true;
  Eigen::LLT<Eigen::MatrixXd> llt(cfg.omega);
  const Eigen::MatrixXd upper = llt.matrixU();
  for (int k = 0; k < K; ++k) {
    if (used[static_cast<std::size_t>(k)]) continue;
    for (int j = 0; j < y.n_items; ++j) {
      SubStream st(cfg.seed, Stream::kInitState, 0,
                   static_cast<rng::u64>(k) * y.n_items + j);
      Eigen::VectorXd z(cfg.dim + 1);
      for (int d = 0; d <= cfg.dim; ++d) z(d) = st.normal();
      const Eigen::VectorXd v = upper.triangularView<Eigen::Upper>().solve(z);
      for (int d = 0; d < cfg.dim; ++d) s.beta_at(k, j, d) = v(d);
      s.gamma_at(k, j) = v(cfg.dim);
    }
  }

  // Moment-matched sticks from the starting occupancy.
  s.alpha = cfg.alpha_init();
  const auto counts = s.occupancy();
  double tail = 0.0;
  for (int k = 1; k < K; ++k) tail += counts[static_cast<std::size_t>(k)];
  for (int k = 0; k + 1 < K; ++k) {
    const double a = 1.0 + counts[static_cast<std::size_t>(k)];
    const double b = s.alpha + tail;
    s.pi[static_cast<std::size_t>(k)] = std::clamp(a / (a + b), 1e-9, 1.0 - 1e-9);
    if (k + 1 < K) tail -= counts[static_cast<std::size_t>(k + 1)];
  }

  // Latents start at their truncated-normal means.
  for (int i = 0; i < n; ++i) {
    const int k = s.assign[static_cast<std::size_t>(i)];
    for (int j = 0; j < y.n_items; ++j) {
      if (!y.observed(i, j)) continue;
      const double m = s.predictor(k, i, j);
      double v;
      if (y.cell(i, j) == 1) {
        v = m + norm_hazard(-m);
        if (v < 0.0) v = 0.0;
      } else {
        v = m - norm_hazard(m);
        if (v >= 0.0) v = -std::numeric_limits<double>::min();
      }
      s.ystar_at(i, j) = v;
    }
  }
  s.log_post = log_joint_posterior(y, s, cfg);
  return s;
}

}  // namespace mps
