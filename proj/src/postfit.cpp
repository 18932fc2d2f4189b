#include "mps/postfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mps/model.hpp"
#include "mps/rng.hpp"
#include "mps/util.hpp"

namespace mps {

using rng::Stream;
using rng::SubStream;

namespace {

constexpr double kDbarFloor = 1e-12;

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma;
  const Eigen::ArrayXd db = b.array() - mb;
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  return denom > 0.0 ? (da * db).sum() / denom : 0.0;
}

// Pooled mean dissimilarity over within-community pairs.
double mean_within(const Eigen::MatrixXd& diss, const std::vector<int>& labels) {
  double sum = 0.0;
  long long pairs = 0;
  const int n = static_cast<int>(labels.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        sum += diss(i, j);
        ++pairs;
      }
    }
  }
  return pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
}

double partition_cost(const Eigen::MatrixXd& diss, const std::vector<int>& medoids) {
  double cost = 0.0;
  const int n = static_cast<int>(diss.rows());
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const int m : medoids) best = std::min(best, diss(i, m));
    cost += best;
  }
  return cost;
}

}  // namespace

MapEstimate fit_statistics(const ResponseMatrix& y, const MpsState& map_state,
                           const MpsConfig& cfg, bool occupied_truncation) {
  return make_map_estimate(y, map_state, cfg, occupied_truncation);
}

ClusterGraph discrimination_correlations(const MpsState& map_state, int min_size) {
  if (map_state.dim != 1) {
    throw std::invalid_argument(
        "discrimination_correlations: only D = 1 is supported");
  }
  const auto counts = map_state.occupancy();
  ClusterGraph g;
  g.n_items = map_state.n_items;
  for (int k = 0; k < map_state.truncation; ++k) {
    if (counts[static_cast<std::size_t>(k)] >= std::max(1, min_size)) {
      g.nodes.push_back(k);
    }
  }
  const int n = static_cast<int>(g.nodes.size());
  if (n < 2) {
    throw std::invalid_argument(
        "discrimination_correlations: need at least 2 occupied clusters");
  }
  const int J = map_state.n_items;
  Eigen::MatrixXd b(J, n);
  for (int c = 0; c < n; ++c) {
    for (int j = 0; j < J; ++j) {
      b(j, c) = map_state.beta_at(g.nodes[static_cast<std::size_t>(c)], j, 0);
    }
    const double sd = (b.col(c).array() - b.col(c).mean()).square().sum();
    if (sd <= 0.0) {
      throw std::runtime_error(
          "discrimination_correlations: zero-variance discriminations in cluster " +
          std::to_string(g.nodes[static_cast<std::size_t>(c)] + 1));
    }
  }
  g.raw_corr = Eigen::MatrixXd::Zero(n, n);
  g.weights = Eigen::MatrixXd::Zero(n, n);
  g.fisher_se = Eigen::MatrixXd::Zero(n, n);
  const double se_denom =
      J > 3 ? std::sqrt(static_cast<double>(J - 3)) : std::numeric_limits<double>::quiet_NaN();
  for (int a = 0; a < n; ++a) {
    for (int c = a + 1; c < n; ++c) {
      const double r = pearson(b.col(a), b.col(c));
      g.raw_corr(a, c) = g.raw_corr(c, a) = r;
      g.weights(a, c) = g.weights(c, a) = std::abs(r);
      const double se = (1.0 - r * r) / se_denom;
      g.fisher_se(a, c) = g.fisher_se(c, a) = se;
    }
  }
  return g;
}

std::vector<int> k_medoids(const Eigen::MatrixXd& diss, int k) {
  const int n = static_cast<int>(diss.rows());
  if (k < 1 || k > n) throw std::invalid_argument("k_medoids: k out of range");

  // BUILD: greedy cost-minimizing medoid additions, ties to lowest index.
  std::vector<int> medoids;
  std::vector<bool> is_medoid(static_cast<std::size_t>(n), false);
  while (static_cast<int>(medoids.size()) < k) {
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n; ++c) {
      if (is_medoid[static_cast<std::size_t>(c)]) continue;
      medoids.push_back(c);
      const double cost = partition_cost(diss, medoids);
      medoids.pop_back();
      if (cost < best_cost) {
        best_cost = cost;
        best = c;
      }
    }
    medoids.push_back(best);
    is_medoid[static_cast<std::size_t>(best)] = true;
  }

  // SWAP until no strictly improving exchange remains.
  double cost = partition_cost(diss, medoids);
  for (;;) {
    int swap_pos = -1, swap_with = -1;
    double swap_cost = cost;
    for (std::size_t mpos = 0; mpos < medoids.size(); ++mpos) {
      const int saved = medoids[mpos];
      for (int h = 0; h < n; ++h) {
        if (is_medoid[static_cast<std::size_t>(h)]) continue;
        medoids[mpos] = h;
        const double c2 = partition_cost(diss, medoids);
        if (c2 < swap_cost - 1e-15) {
          swap_cost = c2;
          swap_pos = static_cast<int>(mpos);
          swap_with = h;
        }
      }
      medoids[mpos] = saved;
    }
    if (swap_pos < 0) break;
    is_medoid[static_cast<std::size_t>(medoids[static_cast<std::size_t>(swap_pos)])] =
        false;
    is_medoid[static_cast<std::size_t>(swap_with)] = true;
    medoids[static_cast<std::size_t>(swap_pos)] = swap_with;
    cost = swap_cost;
  }

  std::sort(medoids.begin(), medoids.end());
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int lab = 0;
    for (std::size_t m = 0; m < medoids.size(); ++m) {
      const double d = diss(i, medoids[m]);
      if (d < best) {
        best = d;
        lab = static_cast<int>(m);
      }
    }
    labels[static_cast<std::size_t>(i)] = lab;
  }
  return labels;
}

GapCurve gap_statistic(const ClusterGraph& graph, int k_max, int n_null,
                       std::uint64_t seed, int workers) {
  const int n = static_cast<int>(graph.nodes.size());
  if (n < 2) throw std::invalid_argument("gap_statistic: degenerate graph");
  if (k_max < 1 || k_max > n) {
    throw std::invalid_argument("gap_statistic: k_max must be in 1..node count");
  }
  if (n_null < 2) throw std::invalid_argument("gap_statistic: n_null must be >= 2");

  const Eigen::MatrixXd diss =
      (Eigen::MatrixXd::Ones(n, n) - graph.weights).cwiseMax(0.0) -
      Eigen::MatrixXd::Identity(n, n);

  GapCurve curve;
  for (int k = 1; k <= k_max; ++k) {
    curve.k_values.push_back(k);
    const auto labels = k_medoids(diss, k);
    curve.log_dbar.push_back(std::log(std::max(mean_within(diss, labels), kDbarFloor)));
  }

  // Null reference: edge weights iid Uniform[0,1] on the same node set.
  std::vector<std::vector<double>> null_log(
      static_cast<std::size_t>(n_null), std::vector<double>(static_cast<std::size_t>(k_max)));
  parallel_for(n_null, workers, [&](int begin, int end) {
    for (int r = begin; r < end; ++r) {
      SubStream st(seed, Stream::kGapNull, 0, static_cast<rng::u64>(r));
      Eigen::MatrixXd d0 = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const double w = st.uniform();
          d0(i, j) = d0(j, i) = 1.0 - w;
        }
      }
      for (int k = 1; k <= k_max; ++k) {
        const auto labels = k_medoids(d0, k);
        null_log[static_cast<std::size_t>(r)][static_cast<std::size_t>(k - 1)] =
            std::log(std::max(mean_within(d0, labels), kDbarFloor));
      }
    }
  });

  for (int k = 1; k <= k_max; ++k) {
    NeumaierSum mean;
    for (int r = 0; r < n_null; ++r) {
      mean.add(null_log[static_cast<std::size_t>(r)][static_cast<std::size_t>(k - 1)]);
    }
    const double mu = mean.value() / n_null;
    NeumaierSum var;
    for (int r = 0; r < n_null; ++r) {
      const double d =
          null_log[static_cast<std::size_t>(r)][static_cast<std::size_t>(k - 1)] - mu;
      var.add(d * d);
    }
    const double sd = std::sqrt(var.value() / n_null);
    curve.null_mean.push_back(mu);
    curve.gap.push_back(mu - curve.log_dbar[static_cast<std::size_t>(k - 1)]);
    curve.se.push_back(sd * std::sqrt(1.0 + 1.0 / n_null));
  }

  curve.k_star = 1;
  for (int k = 2; k <= k_max; ++k) {
    if (curve.gap[static_cast<std::size_t>(k - 1)] >
        curve.gap[static_cast<std::size_t>(curve.k_star - 1)]) {
      curve.k_star = k;
    }
  }
  return curve;
}

std::vector<int> detect_communities(const ClusterGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  if (n < 1) throw std::invalid_argument("detect_communities: empty graph");
  std::vector<int> parent(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  const double m2 = graph.weights.sum();
  if (m2 > 0.0) {
    // E(c,d): total ordered weight between communities; deg = row sums.
    Eigen::MatrixXd e = graph.weights;
    Eigen::VectorXd deg = graph.weights.rowwise().sum();
    std::vector<bool> active(static_cast<std::size_t>(n), true);
    for (;;) {
      int bc = -1, bd = -1;
      double best_gain = 0.0;
      for (int c = 0; c < n; ++c) {
        if (!active[static_cast<std::size_t>(c)]) continue;
        for (int d = c + 1; d < n; ++d) {
          if (!active[static_cast<std::size_t>(d)]) continue;
          const double gain = 2.0 * (e(c, d) / m2 - deg(c) * deg(d) / (m2 * m2));
          if (gain > best_gain + 1e-15) {
            best_gain = gain;
            bc = c;
            bd = d;
          }
        }
      }
      if (bc < 0) break;
      // Merge bd into bc.
      for (int x = 0; x < n; ++x) {
        if (!active[static_cast<std::size_t>(x)] || x == bc || x == bd) continue;
        e(bc, x) += e(bd, x);
        e(x, bc) += e(x, bd);
      }
      e(bc, bc) += e(bd, bd) + e(bc, bd) + e(bd, bc);
      deg(bc) += deg(bd);
      active[static_cast<std::size_t>(bd)] = false;
      for (int i = 0; i < n; ++i) {
        if (parent[static_cast<std::size_t>(i)] == bd) {
          parent[static_cast<std::size_t>(i)] = bc;
        }
      }
    }
  }
  // Compact community ids in order of first appearance.
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<int> seen;
  for (int i = 0; i < n; ++i) {
    const int root = parent[static_cast<std::size_t>(i)];
    int id = -1;
    for (std::size_t s = 0; s < seen.size(); ++s) {
      if (seen[s] == root) {
        id = static_cast<int>(s);
        break;
      }
    }
    if (id < 0) {
      id = static_cast<int>(seen.size());
      seen.push_back(root);
    }
    labels[static_cast<std::size_t>(i)] = id;
  }
  return labels;
}

double modularity(const Eigen::MatrixXd& weights, std::span<const int> community) {
  const int n = static_cast<int>(weights.rows());
  const double m2 = weights.sum();
  if (m2 <= 0.0) return 0.0;
  const Eigen::VectorXd deg = weights.rowwise().sum();
  double q = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (community[static_cast<std::size_t>(i)] != community[static_cast<std::size_t>(j)])
        continue;
      q += weights(i, j) / m2 - deg(i) * deg(j) / (m2 * m2);
    }
  }
  return q;
}

CrossTab crosstab_clusters(std::span<const int> est, std::span<const int> truth) {
  if (est.size() != truth.size() || est.empty()) {
    throw std::invalid_argument("crosstab_clusters: unit sets do not match");
  }
  CrossTab ct;
  auto uniq = [](std::span<const int> v) {
    std::vector<int> u(v.begin(), v.end());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
  };
  ct.est_labels = uniq(est);
  ct.true_labels = uniq(truth);
  ct.table.assign(ct.est_labels.size(),
                  std::vector<long long>(ct.true_labels.size(), 0));
  auto index_of = [](const std::vector<int>& v, int x) {
    return static_cast<std::size_t>(
        std::lower_bound(v.begin(), v.end(), x) - v.begin());
  };
  for (std::size_t i = 0; i < est.size(); ++i) {
    ++ct.table[index_of(ct.est_labels, est[i])][index_of(ct.true_labels, truth[i])];
  }
  long long agree = 0;
  for (const auto& row : ct.table) {
    agree += *std::max_element(row.begin(), row.end());
  }
  ct.purity = static_cast<double>(agree) / static_cast<double>(est.size());
  return ct;
}

MpsState align_signs(const MpsState& map_state, int reference_cluster) {
  if (map_state.dim != 1) {
    throw std::invalid_argument("align_signs: only D = 1 is supported");
  }
  if (reference_cluster < 0 || reference_cluster >= map_state.truncation) {
    throw std::invalid_argument("align_signs: reference cluster out of range");
  }
  const int J = map_state.n_items;
  MpsState out = map_state;
  Eigen::VectorXd ref(J);
  for (int j = 0; j < J; ++j) ref(j) = map_state.beta_at(reference_cluster, j, 0);
  Eigen::VectorXd bk(J);
  for (int k = 0; k < map_state.truncation; ++k) {
    if (k == reference_cluster) continue;
    for (int j = 0; j < J; ++j) bk(j) = map_state.beta_at(k, j, 0);
    if (pearson(bk, ref) >= 0.0) continue;
    for (int j = 0; j < J; ++j) out.beta_at(k, j, 0) = -bk(j);
    for (int i = 0; i < map_state.n_units; ++i) {
      if (out.assign[static_cast<std::size_t>(i)] == k) {
        out.theta_at(i, 0) = -out.theta_at(i, 0);
      }
    }
  }
  return out;
}

}  // namespace mps
